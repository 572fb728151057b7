#include "duct/config.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "duct_cli_test";

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DUCT_CLI_PATH) + " " + args + " > " + (kRoot / "stdout.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write(const std::string& name, const std::string& text) {
    fs::create_directories(kRoot);
    const fs::path p = kRoot / name;
    std::ofstream(p) << text;
    return p;
}

const char* kSmall = R"({
  "benchmark": {"seed": 2, "num_domains": 2, "train_per_class": 20, "test_per_class": 10},
  "train": {"epochs": 2}, "pretrain": {"epochs": 5}})";

}  // namespace

TEST(Cli, RunWritesArtifactsAndResumes) {
    const fs::path cfg = write("small.json", kSmall);
    const fs::path out = kRoot / "run";
    fs::remove_all(out);
    ASSERT_EQ(run_cli("run " + cfg.string() + " -o " + out.string()), 0);
    for (const char* f : {"config.json", "report.json", "accuracy_matrix.csv", "checkpoint.duct"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const duct::json full = duct::json::parse(std::ifstream(out / "report.json"));
    EXPECT_TRUE(full["complete"].get<bool>());

    const fs::path part = kRoot / "part";
    fs::remove_all(part);
    ASSERT_EQ(run_cli("run " + cfg.string() + " -o " + part.string() + " --stop-after 1"), 0);
    EXPECT_FALSE(duct::json::parse(std::ifstream(part / "report.json"))["complete"].get<bool>());
    ASSERT_EQ(run_cli("run " + cfg.string() + " -o " + part.string() + " --resume " + (part / "checkpoint.duct").string()), 0);
    const duct::json resumed = duct::json::parse(std::ifstream(part / "report.json"));
    EXPECT_EQ(resumed["accuracy_matrix"], full["accuracy_matrix"]);

    ASSERT_EQ(run_cli("report " + out.string()), 0);
}

TEST(Cli, GenDataWritesReadableDatasets) {
    const fs::path cfg = write("small_gen.json", kSmall);
    const fs::path out = kRoot / "data";
    fs::remove_all(out);
    ASSERT_EQ(run_cli("gen-data " + cfg.string() + " " + out.string()), 0);
    const auto d1 = duct::load_dataset(out / "domain1", 1);
    EXPECT_EQ(d1.train.size(), 200u);
    EXPECT_EQ(d1.test.size(), 100u);
    EXPECT_TRUE(fs::exists(out / "pretrain.train.ductds"));
    const auto spec = duct::benchmark_from_json(duct::json::parse(std::ifstream(out / "benchmark.json")));
    EXPECT_EQ(duct::generate(spec)[1].train.inputs, d1.train.inputs);
}

TEST(Cli, ConfigErrorsExitWithTwo) {
    EXPECT_EQ(run_cli("run " + write("unknown.json", R"({"alpha": 1})").string()), 2);
    EXPECT_EQ(run_cli("run " + write("range.json", R"({"alpha_w": 2})").string()), 2);
    EXPECT_EQ(run_cli("run " + write("broken.json", "{").string()), 2);
    EXPECT_EQ(run_cli("run " + (kRoot / "missing.json").string()), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    const fs::path cfg = write("small_orders.json", kSmall);
    EXPECT_EQ(run_cli("orders " + cfg.string() + " " + write("orders.json", "[[0, 0]]").string()), 2);
}

TEST(Cli, CorruptCheckpointExitsWithThree) {
    const fs::path cfg = write("small_corrupt.json", kSmall);
    const fs::path bad = write("bad.duct", "DUCT\x01");
    EXPECT_EQ(run_cli("run " + cfg.string() + " -o " + (kRoot / "corrupt").string() + " --resume " + bad.string()), 3);
}
