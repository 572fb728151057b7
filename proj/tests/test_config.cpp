#include "duct/config.hpp"

#include <gtest/gtest.h>

using namespace duct;

TEST(ConfigJson, EmptyObjectGivesDefaults) {
    const ExperimentConfig c = config_from_json(json::object());
    EXPECT_EQ(c.method, Method::duct);
    EXPECT_EQ(c.alpha_phi, 0.5);
    EXPECT_EQ(c.alpha_w, 0.5);
    EXPECT_EQ(c.benchmark.domains.size(), 5u);
    EXPECT_EQ(c.train.learning_rate, 0.01);
    EXPECT_EQ(c.sinkhorn.epsilon_scale, 0.05);
    EXPECT_EQ(c.finetune_init, FinetuneInit::merged);
}

TEST(ConfigJson, RoundTripPreservesEverything) {
    const ExperimentConfig c = parse_config(R"({
        "benchmark": {"seed": 7, "num_domains": 3, "train_per_class": 20, "rotation_angle": 0.3},
        "method": "variation3", "alpha_phi": 0.25, "alpha_w": 0.75,
        "train": {"preset": "reference", "epochs": 3}, "pretrain": {"learning_rate": 0.02},
        "sinkhorn": {"epsilon_scale": 0.1, "max_iters": 100, "tol": 1e-7},
        "task_order": [2, 0, 1], "finetune_init": "base", "output_dir": "out"})");
    EXPECT_EQ(c.method, Method::variation3);
    EXPECT_EQ(c.train.learning_rate, 0.001);
    EXPECT_EQ(c.train.batch_size, 128u);
    EXPECT_EQ(c.train.epochs, 3u);
    EXPECT_EQ(c.pretrain.learning_rate, 0.02);
    EXPECT_EQ(c.benchmark.domains.size(), 3u);
    EXPECT_EQ(c.task_order, (std::vector<std::size_t>{2, 0, 1}));

    const json once = config_to_json(c);
    const ExperimentConfig back = config_from_json(once);
    EXPECT_EQ(config_to_json(back), once);
    EXPECT_EQ(back.benchmark.class_prototypes, c.benchmark.class_prototypes);
    EXPECT_EQ(generate(back.benchmark)[1].train.inputs, generate(c.benchmark)[1].train.inputs);
}

TEST(ConfigJson, ExplicitBenchmarkOverridesSeededDefaults) {
    const BenchmarkSpec s = benchmark_from_json(json::parse(R"({
        "seed": 1, "num_classes": 2, "input_dim": 2,
        "class_prototypes": [[1, 0], [0, 1]],
        "pretrain_domain": {"scale": 1, "rotation_seed": 0, "rotation_angle": 0, "shift": [0, 0], "noise_sigma": 0},
        "domains": [{"scale": 2, "rotation_seed": 0, "rotation_angle": 0, "shift": [1, 1], "noise_sigma": 0}]})"));
    EXPECT_EQ(s.domains.size(), 1u);
    const auto ds = generate(s);
    for (std::size_t i = 0; i < ds[0].train.size(); ++i) {
        const std::size_t y = ds[0].train.labels[i];
        EXPECT_EQ(ds[0].train.inputs(i, 0), 1.0 + 2.0 * (y == 0));
        EXPECT_EQ(ds[0].train.inputs(i, 1), 1.0 + 2.0 * (y == 1));
    }
}

TEST(ConfigJson, UnknownKeysAreRejected) {
    EXPECT_THROW(parse_config(R"({"alpha": 0.5})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"train": {"lr": 0.1}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"sinkhorn": {"eps": 0.1}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"benchmark": {"sead": 1}})"), ConfigError);
}

TEST(ConfigJson, WrongTypesAndRangesAreRejected) {
    EXPECT_THROW(parse_config(R"({"alpha_w": "high"})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"alpha_w": 2})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"embed_dim": -3})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"method": "magic"})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"task_order": [0, 1]})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"finetune_init": "random"})"), ConfigError);
    EXPECT_THROW(parse_config("{not json"), ConfigError);
    EXPECT_THROW(parse_config(R"({"train": {"preset": "huge"}})"), ConfigError);
}

TEST(ConfigJson, ReportWithoutTimingsIsStable) {
    RunReport r;
    r.method = Method::finetune;
    r.task_order = {0};
    r.accuracy = AccuracyMatrix(std::vector<std::vector<double>>{{0.5}});
    r.metrics = summarize(r.accuracy);
    StageRecord s;
    s.wall_seconds = 1.5;
    s.steps = {"evaluate"};
    r.stages.push_back(s);
    const json with = report_to_json(r), without = report_to_json(r, false);
    EXPECT_TRUE(with["stages"][0].contains("wall_seconds"));
    EXPECT_FALSE(without["stages"][0].contains("wall_seconds"));
    EXPECT_TRUE(without["metrics"]["forgetting"].is_null());
    EXPECT_EQ(without["method"], "finetune");
}
