#pragma once

// JSON experiment configuration and report serialization.
//
// The benchmark section is generated from the desk preset unless explicit
// `domains`, `pretrain_domain` or `class_prototypes` are given, which then
// replace the generated parts. Unknown keys are rejected everywhere.

#include "duct/experiment.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace duct {

using nlohmann::json;

namespace cfg_detail {

inline void only_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

inline double real(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
    return v;
}

inline std::uint64_t count(const json& j, const std::string& where) {
    if (!j.is_number_unsigned()) throw ConfigError(where + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected a string");
    return j.get<std::string>();
}

inline std::vector<double> reals(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(real(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline Matrix matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(reals(j[i], where + "[" + std::to_string(i) + "]"));
    try {
        return Matrix::from_rows(rows);
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

inline json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

}  // namespace cfg_detail

inline DomainSpec domain_from_json(const json& j, const std::string& where) {
    using namespace cfg_detail;
    only_keys(j, where, {"rotation_seed", "rotation_angle", "scale", "shift", "noise_sigma"});
    DomainSpec d;
    if (j.contains("rotation_seed")) d.rotation_seed = count(j["rotation_seed"], where + ".rotation_seed");
    if (j.contains("rotation_angle")) d.rotation_angle = real(j["rotation_angle"], where + ".rotation_angle");
    if (j.contains("scale")) d.scale = real(j["scale"], where + ".scale");
    if (j.contains("shift")) d.shift = reals(j["shift"], where + ".shift");
    if (j.contains("noise_sigma")) d.noise_sigma = real(j["noise_sigma"], where + ".noise_sigma");
    return d;
}

inline json domain_to_json(const DomainSpec& d) {
    return {{"rotation_seed", d.rotation_seed},
            {"rotation_angle", d.rotation_angle},
            {"scale", d.scale},
            {"shift", d.shift},
            {"noise_sigma", d.noise_sigma}};
}

inline BenchmarkSpec benchmark_from_json(const json& j) {
    using namespace cfg_detail;
    only_keys(j, "benchmark",
              {"seed", "num_classes", "input_dim", "num_domains", "train_per_class", "test_per_class", "noise_sigma",
               "prototype_radius", "min_prototype_distance", "scale_lo", "scale_hi", "rotation_angle", "shift_sigma",
               "common_shift_sigma", "domains", "pretrain_domain", "class_prototypes"});
    DeskPreset p;
    std::uint64_t seed = 0;
    auto opt_count = [&](const char* k, std::size_t& dst) {
        if (j.contains(k)) dst = count(j[k], std::string("benchmark.") + k);
    };
    auto opt_real = [&](const char* k, double& dst) {
        if (j.contains(k)) dst = real(j[k], std::string("benchmark.") + k);
    };
    if (j.contains("seed")) seed = count(j["seed"], "benchmark.seed");
    opt_count("num_classes", p.num_classes);
    opt_count("input_dim", p.input_dim);
    opt_count("num_domains", p.num_domains);
    opt_count("train_per_class", p.train_per_class);
    opt_count("test_per_class", p.test_per_class);
    opt_real("noise_sigma", p.noise_sigma);
    opt_real("prototype_radius", p.prototype_radius);
    opt_real("min_prototype_distance", p.min_prototype_distance);
    opt_real("scale_lo", p.scale_lo);
    opt_real("scale_hi", p.scale_hi);
    opt_real("rotation_angle", p.rotation_angle);
    opt_real("shift_sigma", p.shift_sigma);
    opt_real("common_shift_sigma", p.common_shift_sigma);
    if (p.num_classes < 1 || p.input_dim < 1) throw ConfigError("benchmark: num_classes and input_dim must be >= 1");
    if (!(p.scale_lo > 0.0 && p.scale_lo <= p.scale_hi)) throw ConfigError("benchmark: need 0 < scale_lo <= scale_hi");
    if (p.noise_sigma < 0.0 || p.shift_sigma < 0.0 || p.common_shift_sigma < 0.0 || p.rotation_angle < 0.0)
        throw ConfigError("benchmark: noise, shift and rotation magnitudes must be non-negative");

    BenchmarkSpec spec;
    if (j.contains("class_prototypes")) {
        // explicit prototypes: skip the rejection sampler entirely
        DeskPreset q = p;
        q.min_prototype_distance = 0.0;
        spec = desk_benchmark(seed, q);
        spec.class_prototypes = matrix(j["class_prototypes"], "benchmark.class_prototypes");
    } else {
        try {
            spec = desk_benchmark(seed, p);
        } catch (const Error& e) {
            throw ConfigError(std::string("benchmark: ") + e.what());
        }
    }
    if (j.contains("domains")) {
        const json& ds = j["domains"];
        if (!ds.is_array()) throw ConfigError("benchmark.domains: expected an array");
        spec.domains.clear();
        for (std::size_t i = 0; i < ds.size(); ++i)
            spec.domains.push_back(domain_from_json(ds[i], "benchmark.domains[" + std::to_string(i) + "]"));
    }
    if (j.contains("pretrain_domain")) spec.pretrain_domain = domain_from_json(j["pretrain_domain"], "benchmark.pretrain_domain");
    try {
        spec.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

// Fully explicit form: parsing it back yields the same spec.
inline json benchmark_to_json(const BenchmarkSpec& s) {
    json domains = json::array();
    for (const auto& d : s.domains) domains.push_back(domain_to_json(d));
    return {{"seed", s.seed},
            {"num_classes", s.num_classes},
            {"input_dim", s.input_dim},
            {"train_per_class", s.train_per_class},
            {"test_per_class", s.test_per_class},
            {"domains", domains},
            {"pretrain_domain", domain_to_json(s.pretrain_domain)},
            {"class_prototypes", cfg_detail::matrix_json(s.class_prototypes)}};
}

inline TrainConfig train_from_json(const json& j, const std::string& where, TrainConfig fallback) {
    using namespace cfg_detail;
    only_keys(j, where, {"preset", "learning_rate", "batch_size", "epochs", "seed"});
    TrainConfig t = fallback;
    if (j.contains("preset")) {
        const std::string p = text(j["preset"], where + ".preset");
        if (p == "desk") t = TrainConfig::desk(t.seed);
        else if (p == "reference") t = TrainConfig::reference(t.seed);
        else throw ConfigError(where + ".preset: expected 'desk' or 'reference', got '" + p + "'");
    }
    if (j.contains("learning_rate")) t.learning_rate = real(j["learning_rate"], where + ".learning_rate");
    if (j.contains("batch_size")) t.batch_size = count(j["batch_size"], where + ".batch_size");
    if (j.contains("epochs")) t.epochs = count(j["epochs"], where + ".epochs");
    if (j.contains("seed")) t.seed = count(j["seed"], where + ".seed");
    return t;
}

inline json train_to_json(const TrainConfig& t) {
    return {{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size}, {"epochs", t.epochs}, {"seed", t.seed}};
}

inline ExperimentConfig config_from_json(const json& j) {
    using namespace cfg_detail;
    only_keys(j, "config",
              {"benchmark", "method", "alpha_phi", "alpha_w", "train", "pretrain", "embed_dim", "logit_scale",
               "sinkhorn", "task_order", "finetune_init", "output_dir"});
    ExperimentConfig c;
    c.benchmark = benchmark_from_json(j.contains("benchmark") ? j["benchmark"] : json::object());
    if (j.contains("method")) c.method = parse_method(text(j["method"], "method"));
    if (j.contains("alpha_phi")) c.alpha_phi = real(j["alpha_phi"], "alpha_phi");
    if (j.contains("alpha_w")) c.alpha_w = real(j["alpha_w"], "alpha_w");
    if (j.contains("train")) c.train = train_from_json(j["train"], "train", c.train);
    if (j.contains("pretrain")) c.pretrain = train_from_json(j["pretrain"], "pretrain", c.pretrain);
    if (j.contains("embed_dim")) c.embed_dim = count(j["embed_dim"], "embed_dim");
    if (j.contains("logit_scale")) c.logit_scale = real(j["logit_scale"], "logit_scale");
    if (j.contains("sinkhorn")) {
        const json& s = j["sinkhorn"];
        only_keys(s, "sinkhorn", {"epsilon_scale", "max_iters", "tol"});
        if (s.contains("epsilon_scale")) c.sinkhorn.epsilon_scale = real(s["epsilon_scale"], "sinkhorn.epsilon_scale");
        if (s.contains("max_iters")) c.sinkhorn.max_iters = count(s["max_iters"], "sinkhorn.max_iters");
        if (s.contains("tol")) c.sinkhorn.tol = real(s["tol"], "sinkhorn.tol");
    }
    if (j.contains("task_order")) {
        const json& o = j["task_order"];
        if (!o.is_array()) throw ConfigError("task_order: expected an array");
        for (std::size_t i = 0; i < o.size(); ++i)
            c.task_order.push_back(count(o[i], "task_order[" + std::to_string(i) + "]"));
    }
    if (j.contains("finetune_init")) {
        const std::string v = text(j["finetune_init"], "finetune_init");
        if (v == "base") c.finetune_init = FinetuneInit::base;
        else if (v == "merged") c.finetune_init = FinetuneInit::merged;
        else throw ConfigError("finetune_init: expected 'base' or 'merged', got '" + v + "'");
    }
    if (j.contains("output_dir")) c.output_dir = text(j["output_dir"], "output_dir");
    c.validate();
    return c;
}

inline json config_to_json(const ExperimentConfig& c) {
    return {{"benchmark", benchmark_to_json(c.benchmark)},
            {"method", method_name(c.method)},
            {"alpha_phi", c.alpha_phi},
            {"alpha_w", c.alpha_w},
            {"train", train_to_json(c.train)},
            {"pretrain", train_to_json(c.pretrain)},
            {"embed_dim", c.embed_dim},
            {"logit_scale", c.logit_scale},
            {"sinkhorn",
             {{"epsilon_scale", c.sinkhorn.epsilon_scale}, {"max_iters", c.sinkhorn.max_iters}, {"tol", c.sinkhorn.tol}}},
            {"task_order", c.resolved_order()},
            {"finetune_init", c.finetune_init == FinetuneInit::base ? "base" : "merged"},
            {"output_dir", c.output_dir}};
}

inline ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

inline json stage_to_json(const StageRecord& r) {
    json j{{"stage", r.stage},
           {"domain", r.domain},
           {"steps", r.steps},
           {"wall_seconds", r.wall_seconds},
           {"notes", r.notes}};
    j["similarity"] = r.similarity ? json(*r.similarity) : json(nullptr);
    if (r.sinkhorn) {
        const auto& s = *r.sinkhorn;
        j["sinkhorn"] = {{"iterations_used", s.iterations_used}, {"converged", s.converged},
                         {"row_residual", s.row_residual},       {"col_residual", s.col_residual},
                         {"transport_cost", s.transport_cost},   {"epsilon", s.epsilon}};
    } else {
        j["sinkhorn"] = nullptr;
    }
    return j;
}

// `timings` = false drops wall-clock fields, leaving only deterministic content.
inline json report_to_json(const RunReport& r, bool timings = true) {
    json stages = json::array();
    for (const auto& s : r.stages) {
        json js = stage_to_json(s);
        if (!timings) js.erase("wall_seconds");
        stages.push_back(std::move(js));
    }
    return {{"method", method_name(r.method)},
            {"task_order", r.task_order},
            {"metrics", r.metrics},
            {"accuracy_matrix", r.accuracy.rows()},
            {"stages", stages},
            {"exemplar_free", r.exemplar_free},
            {"pretrain_accuracy", r.pretrain_accuracy}};
}

inline json summary_to_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

inline json orders_to_json(const OrdersReport& o, bool timings = true) {
    json runs = json::array();
    for (const auto& r : o.runs) runs.push_back(report_to_json(r, timings));
    return {{"average_accuracy", summary_to_json(o.average_accuracy)},
            {"last_accuracy", summary_to_json(o.last_accuracy)},
            {"forgetting", o.forgetting ? summary_to_json(*o.forgetting) : json(nullptr)},
            {"runs", runs}};
}

}  // namespace duct
