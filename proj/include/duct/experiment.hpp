#pragma once

// Incremental experiment driver. One stage per domain in task order:
//   extract phi0 class centers -> fine-tune -> merge task vector ->
//   retrain newest classifier block -> solve OT -> consolidate old blocks ->
//   evaluate on every seen domain.
// The ablation methods run prefixes of that pipeline; "finetune" is the
// sequential baseline and "baseline_centers" never trains.

#include "duct/checkpoint.hpp"
#include "duct/consolidate.hpp"
#include "duct/data.hpp"
#include "duct/eval.hpp"
#include "duct/model.hpp"
#include "duct/train.hpp"
#include "duct/transport.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace duct {

enum class Method { finetune, baseline_centers, variation1, variation2, variation3, duct };

inline constexpr std::array<Method, 6> kAllMethods = {Method::finetune,   Method::baseline_centers,
                                                      Method::variation1, Method::variation2,
                                                      Method::variation3, Method::duct};

// Ablation ladder, weakest first.
inline constexpr std::array<Method, 5> kAblationMethods = {Method::baseline_centers, Method::variation1,
                                                           Method::variation2, Method::variation3, Method::duct};

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::finetune: return "finetune";
        case Method::baseline_centers: return "baseline_centers";
        case Method::variation1: return "variation1";
        case Method::variation2: return "variation2";
        case Method::variation3: return "variation3";
        case Method::duct: return "duct";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    for (Method m : kAllMethods)
        if (method_name(m) == s) return m;
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

enum class FinetuneInit { base, merged };

struct ExperimentConfig {
    BenchmarkSpec benchmark = desk_benchmark(0);
    Method method = Method::duct;
    double alpha_phi = 0.5;
    double alpha_w = 0.5;
    TrainConfig train = TrainConfig::desk();
    TrainConfig pretrain = TrainConfig::desk();
    std::size_t embed_dim = kDefaultEmbedDim;
    double logit_scale = kDefaultLogitScale;
    SinkhornOptions sinkhorn;
    std::vector<std::size_t> task_order;  // empty => natural order
    FinetuneInit finetune_init = FinetuneInit::merged;
    std::string output_dir;

    std::vector<std::size_t> resolved_order() const {
        if (!task_order.empty()) return task_order;
        std::vector<std::size_t> o(benchmark.domains.size());
        std::iota(o.begin(), o.end(), std::size_t{0});
        return o;
    }

    void validate() const {
        try {
            benchmark.validate();
            train.validate();
            pretrain.validate();
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        if (benchmark.domains.empty()) throw ConfigError("benchmark has no incremental domains");
        if (!(alpha_phi >= 0.0 && alpha_phi <= 1.0)) throw ConfigError("alpha_phi must lie in [0, 1]");
        if (!(alpha_w >= 0.0 && alpha_w <= 1.0)) throw ConfigError("alpha_w must lie in [0, 1]");
        if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
        if (!(logit_scale > 0.0)) throw ConfigError("logit_scale must be positive");
        if (!(sinkhorn.epsilon_scale > 0.0) || sinkhorn.max_iters < 1 || !(sinkhorn.tol > 0.0))
            throw ConfigError("invalid sinkhorn options");
        if (!task_order.empty()) {
            std::vector<std::size_t> sorted = task_order;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t i = 0; i < sorted.size(); ++i)
                if (sorted[i] != i || sorted.size() != benchmark.domains.size())
                    throw ConfigError("task_order must be a permutation of the domain indices");
        }
    }
};

// Generated data and the pre-trained backbone; shareable between runs on the same benchmark.
struct Workspace {
    std::vector<DomainDataset> domains;
    PretrainResult pretrained;
};

inline std::shared_ptr<const Workspace> prepare(const ExperimentConfig& cfg) {
    auto ws = std::make_shared<Workspace>();
    ws->domains = generate(cfg.benchmark);
    ws->pretrained = pretrain_backbone(cfg.benchmark, cfg.pretrain, cfg.embed_dim);
    return ws;
}

enum class Split { train, test };

struct DataAccess {
    std::size_t stage = 0;
    std::size_t domain = 0;
    Split split = Split::train;
};

// Every read of a domain split goes through here, so runs can be audited.
class DomainStore {
  public:
    explicit DomainStore(std::shared_ptr<const Workspace> ws) : ws_(std::move(ws)) {}

    const LabeledBatch& train(std::size_t stage, std::size_t domain) {
        log_.push_back({stage, domain, Split::train});
        return ws_->domains.at(domain).train;
    }

    const LabeledBatch& test(std::size_t stage, std::size_t domain) {
        log_.push_back({stage, domain, Split::test});
        return ws_->domains.at(domain).test;
    }

    const std::vector<DataAccess>& log() const noexcept { return log_; }

  private:
    std::shared_ptr<const Workspace> ws_;
    std::vector<DataAccess> log_;
};

// True iff every training-data read at stage s targeted the domain learned at s.
inline bool exemplar_free(std::span<const DataAccess> log, std::span<const std::size_t> order) {
    return std::all_of(log.begin(), log.end(), [&](const DataAccess& a) {
        return a.split != Split::train || (a.stage < order.size() && order[a.stage] == a.domain);
    });
}

// Step names recorded by the pipeline.
namespace step {
inline constexpr std::string_view extract_centers = "extract_centers";
inline constexpr std::string_view optimize = "optimize";
inline constexpr std::string_view consolidate_representation = "consolidate_representation";
inline constexpr std::string_view assign_centers = "assign_centers";
inline constexpr std::string_view retrain_new_classifier = "retrain_new_classifier";
inline constexpr std::string_view solve_ot = "solve_ot";
inline constexpr std::string_view consolidate_old_classifiers = "consolidate_old_classifiers";
inline constexpr std::string_view evaluate = "evaluate";
}  // namespace step

// Steps a stage of `m` performs; the stage with no old classes skips transport.
inline std::vector<std::string> planned_steps(Method m, std::size_t stage) {
    std::vector<std::string> s{std::string(step::extract_centers)};
    switch (m) {
        case Method::finetune: s.emplace_back(step::optimize); break;
        case Method::baseline_centers: s.emplace_back(step::assign_centers); break;
        case Method::variation1:
        case Method::variation2:
            s.emplace_back(step::optimize);
            s.emplace_back(step::consolidate_representation);
            s.emplace_back(step::assign_centers);
            break;
        case Method::variation3:
        case Method::duct:
            s.emplace_back(step::optimize);
            s.emplace_back(step::consolidate_representation);
            s.emplace_back(step::retrain_new_classifier);
            if (m == Method::duct && stage > 0) {
                s.emplace_back(step::solve_ot);
                s.emplace_back(step::consolidate_old_classifiers);
            }
            break;
    }
    s.emplace_back(step::evaluate);
    return s;
}

struct SinkhornDiagnostics {
    std::size_t iterations_used = 0;
    bool converged = false;
    double row_residual = 0.0;
    double col_residual = 0.0;
    double transport_cost = 0.0;
    double epsilon = 0.0;

    friend bool operator==(const SinkhornDiagnostics&, const SinkhornDiagnostics&) = default;
};

// Notes attached to a stage; derived from the stage outcome so a restored run reproduces them.
inline std::vector<std::string> stage_notes(Method m, std::size_t stage, const std::optional<SinkhornDiagnostics>& ot) {
    std::vector<std::string> notes;
    if (m == Method::duct && stage == 0) notes.emplace_back("transport skipped: no old classes at the first stage");
    if (ot && !ot->converged) notes.emplace_back("sinkhorn stopped at max_iters before reaching tol");
    return notes;
}

struct StageRecord {
    std::size_t stage = 0;
    std::size_t domain = 0;
    std::vector<std::string> steps;
    std::optional<double> similarity;
    std::optional<SinkhornDiagnostics> sinkhorn;
    double wall_seconds = 0.0;
    std::vector<std::string> notes;
};

struct RunReport {
    Method method = Method::duct;
    std::vector<std::size_t> task_order;
    AccuracyMatrix accuracy;
    MetricsReport metrics;
    std::vector<StageRecord> stages;
    bool exemplar_free = true;
    double pretrain_accuracy = 0.0;
};

class Experiment {
  public:
    explicit Experiment(ExperimentConfig cfg, std::shared_ptr<const Workspace> ws = nullptr)
        : cfg_(std::move(cfg)), order_(cfg_.resolved_order()), ws_(init_workspace(cfg_, std::move(ws))),
          store_(ws_), rng_(derive_seed(cfg_.train.seed, 0x5EED)) {
        base_ = ws_->pretrained.backbone;
        current_ = base_;
        classifier_ = CosineClassifier::empty(cfg_.embed_dim, cfg_.benchmark.num_classes, cfg_.logit_scale);
    }

    // Restores a run from checkpoint tensors written by checkpoint().
    static Experiment resume(ExperimentConfig cfg, const WeightMap& ckpt, std::shared_ptr<const Workspace> ws = nullptr) {
        Experiment e(std::move(cfg), std::move(ws));
        e.restore(ckpt);
        return e;
    }

    bool finished() const noexcept { return stages_done_ >= order_.size(); }
    std::size_t stages_done() const noexcept { return stages_done_; }
    const ExperimentConfig& config() const noexcept { return cfg_; }
    const Backbone& base() const noexcept { return base_; }
    const Backbone& evaluation_backbone() const noexcept { return current_; }
    const CosineClassifier& classifier() const noexcept { return classifier_; }
    const AccuracyMatrix& accuracy() const noexcept { return accuracy_; }
    const std::vector<ClassCenterTable>& phi0_centers() const noexcept { return phi0_centers_; }
    const std::vector<DataAccess>& access_log() const noexcept { return store_.log(); }
    const std::vector<StageRecord>& stage_records() const noexcept { return records_; }

    // Runs remaining stages, stopping early once `stop_after` stages are complete.
    RunReport run(std::optional<std::size_t> stop_after = std::nullopt) {
        while (!finished() && (!stop_after || stages_done_ < *stop_after)) step();
        return report();
    }

    void step() {
        if (finished()) throw PreconditionError("experiment already finished");
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t s = stages_done_;
        const std::size_t domain = order_[s];
        const std::size_t classes = cfg_.benchmark.num_classes;
        StageRecord rec;
        rec.stage = s;
        rec.domain = domain;
        const std::uint64_t finetune_seed = rng_.fork();
        const std::uint64_t retrain_seed = rng_.fork();
        auto mark = [&](std::string_view name) { rec.steps.emplace_back(name); };

        const LabeledBatch& train = store_.train(s, domain);

        mark(step::extract_centers);
        ClassCenterTable c0 = class_centers(base_, train, classes, "phi0", domain);

        TrainConfig stage_cfg = cfg_.train;
        stage_cfg.seed = finetune_seed;

        switch (cfg_.method) {
            case Method::finetune: {
                mark(step::optimize);
                const auto init = class_centers(current_, train, classes);
                auto ft = finetune(current_, expand_classifier(classifier_, transpose(init.centers)), train, stage_cfg);
                current_ = std::move(ft.backbone);
                classifier_ = std::move(ft.classifier);
                break;
            }
            case Method::baseline_centers: {
                mark(step::assign_centers);
                classifier_ = expand_classifier(classifier_, transpose(c0.centers));
                break;
            }
            case Method::variation1:
            case Method::variation2:
            case Method::variation3:
            case Method::duct: {
                mark(step::optimize);
                const Backbone& start = cfg_.finetune_init == FinetuneInit::merged ? current_ : base_;
                const auto init = class_centers(start, train, classes);
                const CosineClassifier head = expand_classifier(
                    CosineClassifier::empty(cfg_.embed_dim, classes, cfg_.logit_scale), transpose(init.centers));
                const auto ft = finetune(start, head, train, stage_cfg);

                mark(step::consolidate_representation);
                const TaskVector tv = task_vector(ft.backbone.weights(), base_.weights(), domain);
                MergeState state{base_.weights(), current_.weights(), cfg_.alpha_phi, similarities_};
                if (cfg_.method == Method::variation1) {
                    state = merge_unweighted(state, tv);
                } else {
                    const double sim = task_similarity(c0, class_centers(ft.backbone, train, classes, "phi_i", domain));
                    state = merge_incremental(state, tv, sim);
                }
                similarities_ = state.applied_similarities;
                rec.similarity = similarities_.back();
                current_ = Backbone(std::move(state.merged));

                const auto merged_centers = class_centers(current_, train, classes, "phi_m", domain);
                classifier_ = expand_classifier(classifier_, transpose(merged_centers.centers));
                if (cfg_.method == Method::variation1 || cfg_.method == Method::variation2) {
                    mark(step::assign_centers);
                    break;
                }

                mark(step::retrain_new_classifier);
                TrainConfig retrain_cfg = cfg_.train;
                retrain_cfg.seed = retrain_seed;
                classifier_ = retrain_new_classifier(current_, classifier_, train, retrain_cfg);

                if (cfg_.method == Method::duct) {
                    if (s == 0) break;
                    mark(step::solve_ot);
                    const CostMatrix cost = build_cost(c0, phi0_centers_);
                    const TransportPlan plan = sinkhorn(cost, cfg_.sinkhorn);
                    rec.sinkhorn = SinkhornDiagnostics{plan.iterations_used, plan.converged, plan.row_residual,
                                                       plan.col_residual, plan.cost(cost.q), plan.epsilon};

                    mark(step::consolidate_old_classifiers);
                    const std::size_t old_cols = s * classes;
                    const Matrix w_new = classifier_.columns(old_cols, classes);
                    const Matrix w_hat = transport_classifier(w_new, barycentric_project(plan));
                    const Matrix w_old = classifier_.columns(0, old_cols);
                    const auto merged_old = consolidate_old(w_old, w_hat, cfg_.alpha_w);
                    classifier_ = replace_columns(classifier_, 0, merged_old.weights);
                }
                break;
            }
        }

        rec.notes = stage_notes(cfg_.method, s, rec.sinkhorn);
        mark(step::evaluate);
        std::vector<const LabeledBatch*> tests;
        for (std::size_t j = 0; j <= s; ++j) tests.push_back(&store_.test(s, order_[j]));
        accuracy_.add_row(evaluate_stage(current_, classifier_, tests));

        phi0_centers_.push_back(std::move(c0));
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        records_.push_back(std::move(rec));
        ++stages_done_;
    }

    RunReport report() const {
        RunReport r;
        r.method = cfg_.method;
        r.task_order = order_;
        r.accuracy = accuracy_;
        if (accuracy_.stages() > 0) r.metrics = summarize(accuracy_);
        r.stages = records_;
        r.exemplar_free = exemplar_free(store_.log(), order_);
        r.pretrain_accuracy = ws_->pretrained.test_accuracy;
        return r;
    }

    // base and current backbone (the only two full weight sets), classifier,
    // per-stage phi0 centers, similarities, RNG state and evaluation history.
    WeightMap checkpoint() const {
        WeightMap w;
        const std::uint64_t rs = rng_.state();
        w.add("state/meta", Matrix(1, 6,
                                   {static_cast<double>(stages_done_), static_cast<double>(rs >> 32),
                                    static_cast<double>(rs & 0xFFFFFFFFULL), static_cast<double>(method_index()),
                                    static_cast<double>(cfg_.benchmark.num_classes), cfg_.logit_scale}));
        std::vector<double> order(order_.begin(), order_.end());
        w.add("state/task_order", Matrix(1, order_.size(), std::move(order)));
        append_prefixed(w, "base/", base_.weights());
        append_prefixed(w, "merged/", current_.weights());
        w.add("classifier/weights", classifier_.weights());
        for (const auto& t : phi0_centers_) {
            const std::string name = "centers/phi0/domain" + std::to_string(t.domain_index);
            w.add(name, t.centers);
            std::vector<double> counts(t.counts.begin(), t.counts.end());
            w.add(name + "/counts", Matrix(1, t.counts.size(), std::move(counts)));
        }
        w.add("merge/similarities", Matrix(1, similarities_.size(), similarities_));
        Matrix acc(stages_done_, stages_done_);
        for (std::size_t k = 0; k < stages_done_; ++k)
            for (std::size_t j = 0; j <= k; ++j) acc(k, j) = accuracy_.at(k, j);
        w.add("eval/accuracy", std::move(acc));
        // per stage: has_similarity, similarity, has_ot, iterations, converged, row_res, col_res, cost, epsilon, seconds
        Matrix diag(records_.size(), 10);
        for (std::size_t k = 0; k < records_.size(); ++k) {
            const auto& rec = records_[k];
            diag(k, 0) = rec.similarity ? 1.0 : 0.0;
            diag(k, 1) = rec.similarity.value_or(0.0);
            if (rec.sinkhorn) {
                diag(k, 2) = 1.0;
                diag(k, 3) = static_cast<double>(rec.sinkhorn->iterations_used);
                diag(k, 4) = rec.sinkhorn->converged ? 1.0 : 0.0;
                diag(k, 5) = rec.sinkhorn->row_residual;
                diag(k, 6) = rec.sinkhorn->col_residual;
                diag(k, 7) = rec.sinkhorn->transport_cost;
                diag(k, 8) = rec.sinkhorn->epsilon;
            }
            diag(k, 9) = rec.wall_seconds;
        }
        w.add("diag/stages", std::move(diag));
        return w;
    }

  private:
    static std::shared_ptr<const Workspace> init_workspace(const ExperimentConfig& cfg,
                                                           std::shared_ptr<const Workspace> ws) {
        cfg.validate();
        return ws ? std::move(ws) : prepare(cfg);
    }

    std::size_t method_index() const {
        return static_cast<std::size_t>(std::find(kAllMethods.begin(), kAllMethods.end(), cfg_.method) -
                                        kAllMethods.begin());
    }

    void restore(const WeightMap& w) {
        try {
            const Matrix& meta = w.at("state/meta");
            if (meta.cols() != 6) throw FormatError("checkpoint meta has wrong width", 0);
            const auto done = static_cast<std::size_t>(meta(0, 0));
            if (static_cast<std::size_t>(meta(0, 3)) != method_index())
                throw ConfigError("checkpoint was written by a different method");
            if (static_cast<std::size_t>(meta(0, 4)) != cfg_.benchmark.num_classes || meta(0, 5) != cfg_.logit_scale)
                throw ConfigError("checkpoint classifier layout does not match the config");
            const Matrix& order = w.at("state/task_order");
            if (order.size() != order_.size()) throw ConfigError("checkpoint task order length differs");
            for (std::size_t i = 0; i < order_.size(); ++i)
                if (static_cast<std::size_t>(order.data()[i]) != order_[i])
                    throw ConfigError("checkpoint task order differs from the config");
            if (done > order_.size()) throw FormatError("checkpoint claims more stages than domains", 0);

            base_ = Backbone(extract_prefixed(w, "base/"));
            current_ = Backbone(extract_prefixed(w, "merged/"));
            classifier_ = CosineClassifier(w.at("classifier/weights"), cfg_.benchmark.num_classes, cfg_.logit_scale);
            if (classifier_.num_domains() != done) throw FormatError("checkpoint classifier block count", 0);
            rng_ = Rng::from_state((static_cast<std::uint64_t>(meta(0, 1)) << 32) |
                                   static_cast<std::uint64_t>(meta(0, 2)));
            phi0_centers_.clear();
            for (std::size_t k = 0; k < done; ++k) {
                const std::string name = "centers/phi0/domain" + std::to_string(order_[k]);
                ClassCenterTable t;
                t.centers = w.at(name);
                for (double c : w.at(name + "/counts").data()) t.counts.push_back(static_cast<std::size_t>(c));
                t.backbone_tag = "phi0";
                t.domain_index = order_[k];
                phi0_centers_.push_back(std::move(t));
            }
            const Matrix& sims = w.at("merge/similarities");
            similarities_.assign(sims.data().begin(), sims.data().end());
            const Matrix& acc = w.at("eval/accuracy");
            const Matrix& diag = w.at("diag/stages");
            if (acc.rows() != done || diag.rows() != done) throw FormatError("checkpoint history length", 0);
            accuracy_ = AccuracyMatrix{};
            records_.clear();
            for (std::size_t k = 0; k < done; ++k) {
                accuracy_.add_row(std::vector<double>(acc.row(k).begin(), acc.row(k).begin() + static_cast<std::ptrdiff_t>(k + 1)));
                StageRecord rec;
                rec.stage = k;
                rec.domain = order_[k];
                rec.steps = planned_steps(cfg_.method, k);
                if (diag(k, 0) != 0.0) rec.similarity = diag(k, 1);
                if (diag(k, 2) != 0.0)
                    rec.sinkhorn = SinkhornDiagnostics{static_cast<std::size_t>(diag(k, 3)), diag(k, 4) != 0.0,
                                                       diag(k, 5), diag(k, 6), diag(k, 7), diag(k, 8)};
                rec.wall_seconds = diag(k, 9);
                rec.notes = stage_notes(cfg_.method, k, rec.sinkhorn);
                records_.push_back(std::move(rec));
            }
            stages_done_ = done;
        } catch (const PreconditionError& e) {
            throw FormatError(std::string("corrupt checkpoint: ") + e.what(), 0);
        } catch (const ShapeError& e) {
            throw FormatError(std::string("corrupt checkpoint: ") + e.what(), 0);
        }
    }

    ExperimentConfig cfg_;
    std::vector<std::size_t> order_;
    std::shared_ptr<const Workspace> ws_;
    DomainStore store_;
    Rng rng_;
    std::size_t stages_done_ = 0;
    Backbone base_;
    Backbone current_;
    CosineClassifier classifier_;
    std::vector<ClassCenterTable> phi0_centers_;
    std::vector<double> similarities_;
    AccuracyMatrix accuracy_;
    std::vector<StageRecord> records_;
};

inline RunReport run_experiment(const ExperimentConfig& cfg, std::shared_ptr<const Workspace> ws = nullptr) {
    return Experiment(cfg, std::move(ws)).run();
}

// Every ablation method on identical data, pre-trained weights and seeds.
inline std::vector<RunReport> run_ablation(const ExperimentConfig& base, std::shared_ptr<const Workspace> ws = nullptr) {
    base.validate();
    if (!ws) ws = prepare(base);
    std::vector<RunReport> out;
    for (Method m : kAblationMethods) {
        ExperimentConfig cfg = base;
        cfg.method = m;
        out.push_back(run_experiment(cfg, ws));
    }
    return out;
}

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
};

inline Summary summarize_values(std::span<const double> v) {
    if (v.empty()) return {};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

struct OrdersReport {
    std::vector<RunReport> runs;  // in the order the task orders were given
    Summary average_accuracy;
    Summary last_accuracy;
    std::optional<Summary> forgetting;
};

inline OrdersReport aggregate_orders(std::vector<RunReport> runs) {
    OrdersReport rep;
    std::vector<double> avg, last, forget;
    for (const auto& r : runs) {
        avg.push_back(r.metrics.average_accuracy);
        last.push_back(r.metrics.last_accuracy);
        if (r.metrics.forgetting) forget.push_back(*r.metrics.forgetting);
    }
    rep.average_accuracy = summarize_values(avg);
    rep.last_accuracy = summarize_values(last);
    if (!forget.empty() && forget.size() == runs.size()) rep.forgetting = summarize_values(forget);
    rep.runs = std::move(runs);
    return rep;
}

inline OrdersReport run_orders(const ExperimentConfig& base, const std::vector<std::vector<std::size_t>>& orders,
                               std::shared_ptr<const Workspace> ws = nullptr) {
    base.validate();
    if (orders.empty()) throw ConfigError("no task orders given");
    if (!ws) ws = prepare(base);
    std::vector<RunReport> runs;
    for (const auto& order : orders) {
        ExperimentConfig cfg = base;
        cfg.task_order = order;
        runs.push_back(run_experiment(cfg, ws));
    }
    return aggregate_orders(std::move(runs));
}

// Seeded random permutations of n domains.
inline std::vector<std::vector<std::size_t>> random_orders(std::size_t n, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<std::size_t> o(n);
        std::iota(o.begin(), o.end(), std::size_t{0});
        rng.shuffle(std::span(o));
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace duct
