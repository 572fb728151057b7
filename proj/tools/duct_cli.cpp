// duct: command-line front end for the incremental-learning engine.
//
//   duct gen-data spec.json data/
//   duct run      config.json [--out runs/a] [--resume runs/a/checkpoint.duct] [--stop-after 2]
//   duct ablate   config.json [--out runs/ablation]
//   duct orders   config.json orders.json [--out runs/orders]
//   duct orders   config.json --random 5 --order-seed 7
//   duct report   runs/a
//
// Exit codes: 0 success, 2 configuration error, 3 runtime or numeric error.

#include "duct/config.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace duct;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("config", c.config, "experiment config (JSON)")->required();
    app->add_option("-o,--out", c.out, "output directory (overrides output_dir)");
    app->add_option("--seed", c.seed, "seed for benchmark, pretraining and training");
    app->add_option("-m,--method", c.method, "finetune|baseline_centers|variation1|variation2|variation3|duct");
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

ExperimentConfig resolve(const Common& c) {
    json raw = read_json(c.config);
    if (!raw.is_object()) throw ConfigError("config: expected an object");
    if (c.seed) {
        raw["benchmark"]["seed"] = *c.seed;
        raw["train"]["seed"] = *c.seed;
        raw["pretrain"]["seed"] = *c.seed;
    }
    if (c.method) raw["method"] = *c.method;
    if (!c.out.empty()) raw["output_dir"] = c.out;
    ExperimentConfig cfg = config_from_json(raw);
    if (cfg.output_dir.empty()) cfg.output_dir = "duct_out";
    return cfg;
}

void write_text(const fs::path& p, const std::string& s) {
    io::write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void print_metrics(const std::string& label, const MetricsReport& m) {
    std::printf("%-18s Abar %.4f  A_B %.4f  F %s\n", label.c_str(), m.average_accuracy, m.last_accuracy,
                m.forgetting ? std::to_string(*m.forgetting).c_str() : "n/a");
}

// Accepts a bare benchmark object or a full config carrying one.
int cmd_gen_data(const std::string& spec_path, const std::string& out_dir) {
    const json raw = read_json(spec_path);
    const BenchmarkSpec spec = raw.is_object() && raw.contains("benchmark") ? config_from_json(raw).benchmark
                                                                           : benchmark_from_json(raw);
    const fs::path dir = out_dir;
    const auto domains = generate(spec);
    for (const auto& d : domains) save_dataset(dir / ("domain" + std::to_string(d.domain_index)), d, spec.num_classes);
    save_dataset(dir / "pretrain", generate_pretrain(spec), spec.num_classes);
    write_json(dir / "benchmark.json", benchmark_to_json(spec));
    std::printf("wrote %zu domains and the pretraining domain to %s\n", domains.size(), dir.string().c_str());
    return 0;
}

int cmd_run(const Common& c, const std::string& resume_from, std::optional<std::size_t> stop_after) {
    const ExperimentConfig cfg = resolve(c);
    const fs::path dir = cfg.output_dir;
    Experiment exp = resume_from.empty() ? Experiment(cfg) : Experiment::resume(cfg, load_tensors(resume_from));
    write_json(dir / "config.json", config_to_json(cfg));
    while (!exp.finished() && (!stop_after || exp.stages_done() < *stop_after)) {
        exp.step();
        save_tensors(dir / "checkpoint.duct", exp.checkpoint());
        const auto& rec = exp.stage_records().back();
        std::printf("stage %zu (domain %zu): mean accuracy %.4f\n", rec.stage, rec.domain,
                    summarize(exp.accuracy()).per_stage_accuracy.back());
    }
    const RunReport r = exp.report();
    json j = report_to_json(r);
    j["config"] = config_to_json(cfg);
    j["complete"] = exp.finished();
    write_json(dir / "report.json", j);
    if (exp.accuracy().stages() > 0) write_text(dir / "accuracy_matrix.csv", r.accuracy.to_csv());
    if (exp.accuracy().stages() > 0) print_metrics(std::string(method_name(cfg.method)), r.metrics);
    if (!r.exemplar_free) {
        std::fprintf(stderr, "error: exemplar-free audit failed\n");
        return kExitRuntime;
    }
    return 0;
}

int cmd_ablate(const Common& c) {
    const ExperimentConfig cfg = resolve(c);
    const auto ws = prepare(cfg);
    json out = json::object();
    out["config"] = config_to_json(cfg);
    json methods = json::object();
    for (Method m : kAllMethods) {
        ExperimentConfig mc = cfg;
        mc.method = m;
        const RunReport r = run_experiment(mc, ws);
        methods[std::string(method_name(m))] = report_to_json(r);
        print_metrics(std::string(method_name(m)), r.metrics);
    }
    out["methods"] = methods;
    write_json(fs::path(cfg.output_dir) / "ablation.json", out);
    return 0;
}

std::vector<std::vector<std::size_t>> read_orders(const std::string& path) {
    const json j = read_json(path);
    if (!j.is_array() || j.empty()) throw ConfigError("orders file: expected a non-empty array of permutations");
    std::vector<std::vector<std::size_t>> out;
    for (const auto& o : j) {
        if (!o.is_array()) throw ConfigError("orders file: every entry must be an array");
        std::vector<std::size_t> order;
        for (const auto& v : o) {
            if (!v.is_number_unsigned()) throw ConfigError("orders file: indices must be non-negative integers");
            order.push_back(v.get<std::size_t>());
        }
        out.push_back(std::move(order));
    }
    return out;
}

int cmd_orders(const Common& c, const std::string& orders_path, std::optional<std::size_t> random_count,
               std::uint64_t order_seed) {
    const ExperimentConfig cfg = resolve(c);
    std::vector<std::vector<std::size_t>> orders;
    if (!orders_path.empty()) orders = read_orders(orders_path);
    else if (random_count && *random_count >= 1) orders = random_orders(cfg.benchmark.domains.size(), *random_count, order_seed);
    else throw ConfigError("give an orders file or --random N");
    for (const auto& o : orders) {
        ExperimentConfig check = cfg;
        check.task_order = o;
        check.validate();
    }
    const auto ws = prepare(cfg);
    json out = json::object();
    out["config"] = config_to_json(cfg);
    out["orders"] = orders;
    json methods = json::object();
    for (Method m : {Method::finetune, cfg.method}) {
        ExperimentConfig mc = cfg;
        mc.method = m;
        const OrdersReport rep = run_orders(mc, orders, ws);
        methods[std::string(method_name(m))] = orders_to_json(rep);
        std::printf("%-18s A_B %.4f +- %.4f  Abar %.4f +- %.4f\n", std::string(method_name(m)).c_str(),
                    rep.last_accuracy.mean, rep.last_accuracy.stddev, rep.average_accuracy.mean,
                    rep.average_accuracy.stddev);
    }
    out["methods"] = methods;
    write_json(fs::path(cfg.output_dir) / "orders.json", out);
    return 0;
}

// Re-renders the summary of a run, ablation or orders directory; for single
// runs the CSV is regenerated from report.json.
int cmd_report(const std::string& dir_arg) {
    const fs::path dir = dir_arg;
    fs::path path;
    for (const char* name : {"report.json", "ablation.json", "orders.json"})
        if (fs::exists(dir / name)) {
            path = dir / name;
            break;
        }
    if (path.empty()) throw ConfigError("no report.json, ablation.json or orders.json in '" + dir_arg + "'");
    const json j = read_json(path.string());
    if (path.filename() == "report.json" && !j.at("accuracy_matrix").empty()) {
        std::vector<std::vector<double>> rows = j.at("accuracy_matrix").get<std::vector<std::vector<double>>>();
        write_text(dir / "accuracy_matrix.csv", AccuracyMatrix(std::move(rows)).to_csv());
    }
    auto show = [](const std::string& name, const json& r) {
        const json& m = r.at("metrics");
        std::printf("%-18s Abar %.4f  A_B %.4f  F %s\n", name.c_str(), m.at("average_accuracy").get<double>(),
                    m.at("last_accuracy").get<double>(),
                    m.at("forgetting").is_null() ? "n/a" : std::to_string(m.at("forgetting").get<double>()).c_str());
        for (const auto& row : r.at("accuracy_matrix")) {
            std::printf("   ");
            for (const auto& v : row) std::printf(" %.3f", v.get<double>());
            std::printf("\n");
        }
    };
    if (j.contains("methods")) {
        for (const auto& [name, r] : j.at("methods").items()) {
            if (r.contains("runs")) {
                std::printf("%-18s A_B %.4f +- %.4f over %zu orders\n", name.c_str(),
                            r["last_accuracy"]["mean"].get<double>(), r["last_accuracy"]["std"].get<double>(),
                            r["runs"].size());
            } else {
                show(name, r);
            }
        }
    } else {
        show(j.at("method").get<std::string>(), j);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain-incremental learning with dual consolidation"};
    app.require_subcommand(1);

    Common common;
    std::string spec_path, data_dir, resume_from, orders_path, report_dir;
    std::optional<std::size_t> stop_after, random_count;
    std::uint64_t order_seed = 0;

    auto* gen = app.add_subcommand("gen-data", "write the benchmark domains as dataset files");
    gen->add_option("spec", spec_path, "benchmark spec (JSON)")->required();
    gen->add_option("dir", data_dir, "output directory")->required();
    auto* run = app.add_subcommand("run", "run one method over all domains");
    add_common(run, common);
    run->add_option("--resume", resume_from, "checkpoint to continue from");
    run->add_option("--stop-after", stop_after, "stop once this many stages are complete");
    auto* ablate = app.add_subcommand("ablate", "run every method on the same data");
    add_common(ablate, common);
    auto* orders = app.add_subcommand("orders", "repeat finetune and the configured method over task orders");
    add_common(orders, common);
    orders->add_option("orders", orders_path, "JSON array of domain permutations");
    orders->add_option("--random", random_count, "draw this many random orders instead");
    orders->add_option("--order-seed", order_seed, "seed for --random");
    auto* report = app.add_subcommand("report", "re-render the summary of a run directory");
    report->add_option("dir", report_dir, "directory holding report.json, ablation.json or orders.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(spec_path, data_dir);
        if (run->parsed()) return cmd_run(common, resume_from, stop_after);
        if (ablate->parsed()) return cmd_ablate(common);
        if (orders->parsed()) return cmd_orders(common, orders_path, random_count, order_seed);
        if (report->parsed()) return cmd_report(report_dir);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return 0;
}
