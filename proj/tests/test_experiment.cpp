#include "duct/checkpoint.hpp"
#include "duct/config.hpp"
#include "duct/experiment.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace duct;

namespace {

ExperimentConfig small_config(Method m, std::size_t domains = 3, std::uint64_t seed = 1) {
    DeskPreset p;
    p.num_domains = domains;
    p.train_per_class = 30;
    p.test_per_class = 20;
    ExperimentConfig c;
    c.benchmark = desk_benchmark(seed, p);
    c.method = m;
    c.train = TrainConfig::desk(seed);
    c.train.epochs = 4;
    c.pretrain = TrainConfig::desk(seed);
    c.pretrain.epochs = 10;
    return c;
}

std::shared_ptr<const Workspace> shared_workspace() {
    static const auto ws = prepare(small_config(Method::duct));
    return ws;
}

std::vector<std::string> strings(std::initializer_list<std::string_view> names) {
    return {names.begin(), names.end()};
}

}  // namespace

TEST(Pipeline, StepsFollowThePlanForEveryMethod) {
    for (Method m : kAllMethods) {
        const RunReport r = run_experiment(small_config(m), shared_workspace());
        ASSERT_EQ(r.stages.size(), 3u);
        for (const auto& s : r.stages) EXPECT_EQ(s.steps, planned_steps(m, s.stage)) << method_name(m);
    }
    using namespace step;
    EXPECT_EQ(planned_steps(Method::duct, 1),
              strings({extract_centers, optimize, consolidate_representation, step::retrain_new_classifier, solve_ot,
                       consolidate_old_classifiers, evaluate}));
    EXPECT_EQ(planned_steps(Method::duct, 0),
              strings({extract_centers, optimize, consolidate_representation, step::retrain_new_classifier, evaluate}));
    EXPECT_EQ(planned_steps(Method::variation2, 2),
              strings({extract_centers, optimize, consolidate_representation, assign_centers, evaluate}));
    EXPECT_EQ(planned_steps(Method::baseline_centers, 2), strings({extract_centers, assign_centers, evaluate}));
    EXPECT_EQ(planned_steps(Method::finetune, 2), strings({extract_centers, optimize, evaluate}));
}

TEST(Pipeline, SingleDomainRunSkipsTransportWithANote) {
    const RunReport r = run_experiment(small_config(Method::duct, 1));
    ASSERT_EQ(r.stages.size(), 1u);
    EXPECT_FALSE(r.stages[0].sinkhorn.has_value());
    ASSERT_EQ(r.stages[0].notes.size(), 1u);
    EXPECT_NE(r.stages[0].notes[0].find("transport skipped"), std::string::npos);
    EXPECT_FALSE(r.metrics.forgetting.has_value());
}

TEST(Pipeline, DuctRecordsConvergedTransportAfterTheFirstStage) {
    const RunReport r = run_experiment(small_config(Method::duct), shared_workspace());
    for (std::size_t k = 1; k < r.stages.size(); ++k) {
        ASSERT_TRUE(r.stages[k].sinkhorn.has_value());
        EXPECT_TRUE(r.stages[k].sinkhorn->converged);
        EXPECT_LE(r.stages[k].sinkhorn->row_residual, 1e-9);
        EXPECT_GT(r.stages[k].sinkhorn->epsilon, 0.0);
        ASSERT_TRUE(r.stages[k].similarity.has_value());
    }
}

TEST(Pipeline, DeterministicGivenSeeds) {
    const ExperimentConfig c = small_config(Method::duct);
    Experiment a(c, shared_workspace()), b(c, shared_workspace());
    a.run();
    b.run();
    EXPECT_EQ(a.accuracy(), b.accuracy());
    EXPECT_EQ(a.classifier(), b.classifier());
    EXPECT_EQ(a.evaluation_backbone(), b.evaluation_backbone());
    EXPECT_EQ(report_to_json(a.report(), false), report_to_json(b.report(), false));
}

TEST(Pipeline, FreshWorkspaceMatchesSharedOne) {
    const ExperimentConfig c = small_config(Method::variation3);
    EXPECT_EQ(run_experiment(c).accuracy, run_experiment(c, shared_workspace()).accuracy);
}

TEST(Pipeline, ResumeReproducesTheUninterruptedRun) {
    for (Method m : {Method::duct, Method::finetune, Method::variation2}) {
        const ExperimentConfig c = small_config(m);
        Experiment full(c, shared_workspace());
        full.run();

        Experiment first(c, shared_workspace());
        first.run(1);
        const WeightMap ckpt = decode_tensors(encode_tensors(first.checkpoint()));
        Experiment rest = Experiment::resume(c, ckpt, shared_workspace());
        EXPECT_EQ(rest.stages_done(), 1u);
        rest.run();

        EXPECT_EQ(rest.accuracy(), full.accuracy()) << method_name(m);
        EXPECT_EQ(rest.classifier(), full.classifier());
        EXPECT_EQ(rest.evaluation_backbone(), full.evaluation_backbone());
        EXPECT_EQ(rest.report().metrics, full.report().metrics);
        EXPECT_EQ(rest.stage_records().back().sinkhorn, full.stage_records().back().sinkhorn);
        EXPECT_EQ(report_to_json(rest.report(), false), report_to_json(full.report(), false));
    }
}

TEST(Pipeline, ResumeRejectsAMismatchedConfig) {
    Experiment e(small_config(Method::duct), shared_workspace());
    e.run(1);
    const WeightMap ckpt = e.checkpoint();
    EXPECT_THROW(Experiment::resume(small_config(Method::variation3), ckpt, shared_workspace()), ConfigError);
    ExperimentConfig reordered = small_config(Method::duct);
    reordered.task_order = {2, 1, 0};
    EXPECT_THROW(Experiment::resume(reordered, ckpt, shared_workspace()), ConfigError);
    WeightMap broken;
    for (const auto& [name, t] : ckpt.entries())
        if (name != "classifier/weights") broken.add(name, t);
    EXPECT_THROW(Experiment::resume(small_config(Method::duct), broken, shared_workspace()), Error);
}

TEST(Pipeline, EveryMethodIsExemplarFree) {
    for (Method m : kAllMethods) {
        ExperimentConfig c = small_config(m);
        c.task_order = {1, 2, 0};
        Experiment e(c, shared_workspace());
        e.run();
        EXPECT_TRUE(e.report().exemplar_free) << method_name(m);
        for (const auto& a : e.access_log()) {
            if (a.split == Split::train) {
                EXPECT_EQ(a.domain, c.task_order[a.stage]);
            }
        }
    }
}

TEST(Pipeline, ExemplarAuditFlagsOldTrainingReads) {
    const std::vector<std::size_t> order{0, 1};
    const std::vector<DataAccess> ok{{0, 0, Split::train}, {1, 1, Split::train}, {1, 0, Split::test}};
    EXPECT_TRUE(exemplar_free(ok, order));
    const std::vector<DataAccess> bad{{0, 0, Split::train}, {1, 0, Split::train}};
    EXPECT_FALSE(exemplar_free(bad, order));
}

TEST(Pipeline, BaselineNeverTrains) {
    Experiment e(small_config(Method::baseline_centers), shared_workspace());
    e.run();
    EXPECT_EQ(e.evaluation_backbone(), e.base());
    EXPECT_EQ(e.evaluation_backbone(), shared_workspace()->pretrained.backbone);
    EXPECT_EQ(e.classifier().num_domains(), 3u);
    for (const auto& r : e.stage_records()) EXPECT_FALSE(r.similarity.has_value());
}

TEST(Pipeline, FinetuneMovesTheBackbone) {
    Experiment e(small_config(Method::finetune), shared_workspace());
    e.run();
    EXPECT_FALSE(e.evaluation_backbone() == e.base());
}

TEST(Pipeline, WeightedMergeMatchesUnweightedWhenSimilarityIsOne) {
    // learning rate 0 leaves every fine-tuned backbone at its start, so Sim = 1
    ExperimentConfig v1 = small_config(Method::variation1);
    v1.train.learning_rate = 0.0;
    v1.finetune_init = FinetuneInit::base;
    ExperimentConfig v2 = v1;
    v2.method = Method::variation2;
    Experiment a(v1, shared_workspace()), b(v2, shared_workspace());
    a.run();
    b.run();
    for (const auto& r : b.stage_records()) {
        ASSERT_TRUE(r.similarity.has_value());
        EXPECT_NEAR(*r.similarity, 1.0, 1e-12);
    }
    EXPECT_EQ(a.accuracy(), b.accuracy());
    EXPECT_EQ(a.classifier(), b.classifier());
}

TEST(Orders, IdenticalOrdersHaveZeroSpread) {
    const ExperimentConfig c = small_config(Method::variation3);
    const OrdersReport r = run_orders(c, {{2, 0, 1}, {2, 0, 1}, {2, 0, 1}}, shared_workspace());
    EXPECT_EQ(r.runs.size(), 3u);
    EXPECT_EQ(r.last_accuracy.stddev, 0.0);
    EXPECT_EQ(r.average_accuracy.stddev, 0.0);
    ASSERT_TRUE(r.forgetting);
    EXPECT_EQ(r.forgetting->stddev, 0.0);
    EXPECT_EQ(r.runs[0].task_order, (std::vector<std::size_t>{2, 0, 1}));
}

TEST(Orders, RandomOrdersArePermutationsAndSeeded) {
    const auto a = random_orders(5, 8, 3);
    EXPECT_EQ(a, random_orders(5, 8, 3));
    EXPECT_NE(a, random_orders(5, 8, 4));
    for (const auto& o : a) EXPECT_EQ(std::set<std::size_t>(o.begin(), o.end()).size(), 5u);
}

TEST(Orders, PopulationStandardDeviation) {
    const std::vector<double> v{1.0, 3.0};
    const Summary s = summarize_values(v);
    EXPECT_EQ(s.mean, 2.0);
    EXPECT_EQ(s.stddev, 1.0);
}

TEST(Config, InvalidValuesAreConfigErrors) {
    ExperimentConfig c = small_config(Method::duct);
    c.task_order = {0, 0, 1};
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config(Method::duct);
    c.alpha_phi = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config(Method::duct);
    c.train.batch_size = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(parse_method("var9"), ConfigError);
}

TEST(CheckpointGrowth, OnlyTwoWeightSetsAndLinearGrowthPerDomain) {
    Experiment e(small_config(Method::duct, 3), shared_workspace());
    std::vector<std::size_t> sizes;
    std::size_t backbone_params = 0;
    while (!e.finished()) {
        e.step();
        const WeightMap ck = e.checkpoint();
        sizes.push_back(encode_tensors(ck).size());
        const std::size_t params =
            extract_prefixed(ck, "base/").parameter_count() + extract_prefixed(ck, "merged/").parameter_count();
        if (backbone_params == 0) backbone_params = params;
        EXPECT_EQ(params, backbone_params);
        EXPECT_EQ(params, 2 * e.base().weights().parameter_count());
    }
    const std::size_t classes = 10, d = kDefaultEmbedDim;
    // classifier block and phi0 centers, plus per-stage bookkeeping
    const std::size_t per_domain_bound = 2 * classes * d * 8 + 1024;
    for (std::size_t k = 1; k < sizes.size(); ++k) {
        EXPECT_GT(sizes[k], sizes[k - 1]);
        EXPECT_LE(sizes[k] - sizes[k - 1], per_domain_bound);
    }
}
