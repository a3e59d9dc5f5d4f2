#include "aware/aware.h"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string output;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("aware_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Result run(const std::string& args) const {
    const fs::path log = dir_ / "cli.log";
    const std::string cmd = std::string("cd '") + dir_.string() + "' && '" + AWARE_CLI + "' " + args + " > '" +
                            log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
  }

  void expect_ok(const std::string& args) const {
    const Result r = run(args);
    ASSERT_EQ(r.code, 0) << args << "\n" << r.output;
  }

  void make_data(const std::string& stem, int rows, int informative, int noise, std::uint64_t seed,
                 double ir = 1.0) const {
    expect_ok("synth --rows " + std::to_string(rows) + " --informative " + std::to_string(informative) + " --noise " +
              std::to_string(noise) + " --ir " + std::to_string(ir) + " --seed " + std::to_string(seed) + " --out " +
              stem + ".csv");
  }

  void train_small(const std::string& model, const std::string& data, std::uint64_t seed) const {
    expect_ok("train-encoder --data " + data + " --out " + model + " --trace " + model + ".trace.csv --epochs 2 " +
              "--ensemble 2 --embed-dim 8 --seed " + std::to_string(seed));
  }

  fs::path dir_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

const char* kStressSmall = " --test-size 200 --k 64 --ensemble 2 --epochs 2 --seeds 1";

}  // namespace

TEST_F(Cli, HelpListsDefaults) {
  Result r = run("train-encoder --help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("--epochs INT [50]"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("--lr FLOAT [0.001]"), std::string::npos);
  EXPECT_NE(r.output.find("--ensemble INT [5]"), std::string::npos);
  r = run("predict --help");
  EXPECT_NE(r.output.find("--k UINT [1024]"), std::string::npos) << r.output;
  r = run("train-adapter --help");
  EXPECT_NE(r.output.find("--epochs INT [5]"), std::string::npos) << r.output;
  r = run("stress --help");
  EXPECT_NE(r.output.find("--seeds INT [3]"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("--ir FLOAT [5,10,20,50,100,200,500]"), std::string::npos);
}

TEST_F(Cli, PipelineRerunsAreByteIdentical) {
  make_data("train", 600, 3, 5, 1, 3.0);
  make_data("query", 50, 3, 5, 2, 3.0);
  for (const std::string run_id : {"a", "b"}) {
    train_small("model_" + run_id + ".json", "train.csv", 7);
    expect_ok("build-index --model model_" + run_id + ".json --data train.csv --out index_" + run_id + ".json");
    expect_ok("train-adapter --model model_" + run_id + ".json --index index_" + run_id + ".json --out adapter_" +
              run_id + ".json --epochs 1 --context 64 --prompts 40 --trace adapter_" + run_id + ".trace.csv");
    expect_ok("predict --model model_" + run_id + ".json --index index_" + run_id + ".json --adapter adapter_" +
              run_id + ".json --data query.csv --k 64 --out pred_" + run_id + ".csv");
  }
  for (const std::string f : {"model_%.json", "model_%.json.trace.csv", "index_%.json", "adapter_%.json",
                              "adapter_%.trace.csv", "pred_%.csv"}) {
    std::string a = f, b = f;
    a.replace(a.find('%'), 1, "a");
    b.replace(b.find('%'), 1, "b");
    ASSERT_TRUE(fs::exists(path(a))) << a;
    EXPECT_EQ(slurp(path(a)), slurp(path(b))) << f;
  }
}

TEST_F(Cli, PredictionsAreDistributionsOnePerQuery) {
  make_data("train", 400, 2, 3, 3);
  make_data("query", 37, 2, 3, 4);
  train_small("model.json", "train.csv", 0);
  expect_ok("build-index --model model.json --data train.csv --out index.json");
  expect_ok("predict --model model.json --index index.json --data query.csv --k 50 --out pred.csv");
  const auto rows = read_csv(slurp(path("pred.csv")));
  ASSERT_EQ(rows.size(), 38u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"row_id", "p_0", "p_1"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 1; c < rows[i].size(); ++c) sum += std::stod(rows[i][c]);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST_F(Cli, IdentityAdapterFileEqualsNoAdapter) {
  make_data("train", 400, 2, 3, 5);
  make_data("query", 30, 2, 3, 6);
  train_small("model.json", "train.csv", 0);
  expect_ok("build-index --model model.json --data train.csv --out index.json");
  aware_index* index = nullptr;
  ASSERT_EQ(aware_index_load(path("index.json").c_str(), &index), AWARE_OK);
  std::size_t rows = 0, dim = 0;
  ASSERT_EQ(aware_index_shape(index, &rows, &dim), AWARE_OK);
  aware_index_free(index);
  aware_adapter* identity = nullptr;
  ASSERT_EQ(aware_adapter_identity(dim, &identity), AWARE_OK);
  ASSERT_EQ(aware_adapter_save(identity, path("identity.json").c_str()), AWARE_OK);
  aware_adapter_free(identity);
  expect_ok("predict --model model.json --index index.json --data query.csv --k 64 --out plain.csv");
  expect_ok("predict --model model.json --index index.json --adapter identity.json --data query.csv --k 64 --out "
            "adapted.csv");
  EXPECT_EQ(slurp(path("plain.csv")), slurp(path("adapted.csv")));
}

TEST_F(Cli, MissingLabelColumnExitsTwoNamingIt) {
  std::ofstream(path("nolabel.csv")) << "a,b\n1,2\n3,4\n";
  std::ofstream(path("nolabel.manifest.json")) << R"({"label_column": "outcome", "task": "binary"})";
  const Result r = run("train-encoder --data nolabel.csv --out model.json");
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("outcome"), std::string::npos) << r.output;
}

TEST_F(Cli, DimensionMismatchExitsThree) {
  make_data("train", 300, 2, 1, 7);
  make_data("wide", 30, 2, 6, 8);
  train_small("model.json", "train.csv", 0);
  expect_ok("build-index --model model.json --data train.csv --out index.json");
  const Result r = run("predict --model model.json --index index.json --data wide.csv --k 32");
  EXPECT_EQ(r.code, 3) << r.output;
}

TEST_F(Cli, InvalidProtocolExitsTwoListingAllowedSet) {
  const Result r = run("stress --protocol bogus --out report");
  EXPECT_EQ(r.code, 2) << r.output;
  for (const char* name : {"data_scale", "heterogeneity", "rarity", "ablation", "single"}) {
    EXPECT_NE(r.output.find(name), std::string::npos) << r.output;
  }
}

TEST_F(Cli, SweepFlagOfAnotherProtocolIsUsageError) {
  const Result r = run("stress --protocol rarity --sizes 100 --out report");
  EXPECT_EQ(r.code, 2) << r.output;
}

TEST_F(Cli, NonEmptyOutputWithoutForceExitsTwo) {
  fs::create_directories(path("report"));
  std::ofstream(path("report/keep.txt")) << "x";
  make_data("pool", 800, 2, 3, 9);
  const std::string args =
      "stress --protocol single --data pool.csv --variants baseline_raw_knn --out report" + std::string(kStressSmall);
  const Result r = run(args);
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_TRUE(fs::exists(path("report/keep.txt")));
  expect_ok(args + " --force");
  EXPECT_TRUE(fs::exists(path("report/rows.csv")));
}

TEST_F(Cli, RarityReportHasExactlyRequestedRatios) {
  make_data("pool", 3000, 3, 3, 10);
  expect_ok("stress --protocol rarity --ir 5,50,500 --data pool.csv --train-size 600 --variants baseline_raw_knn "
            "--out report" +
            std::string(kStressSmall));
  const auto rows = read_csv(slurp(path("report/rows.csv")));
  ASSERT_GT(rows.size(), 1u);
  ASSERT_EQ(rows[0][1], "sweep_value");
  std::set<std::string> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) seen.insert(rows[i][1]);
  EXPECT_EQ(seen, (std::set<std::string>{"5", "50", "500"}));
}

TEST_F(Cli, PartialFailureExitsFourWithManifest) {
  make_data("pool", 1200, 3, 3, 11);
  const Result r = run("stress --protocol data_scale --sizes 2,300 --data pool.csv --variants +ensemble --out report" +
                       std::string(kStressSmall));
  EXPECT_EQ(r.code, 4) << r.output;
  EXPECT_TRUE(fs::exists(path("report/failures.json")));
  const auto rows = read_csv(slurp(path("report/rows.csv")));
  ASSERT_GT(rows.size(), 1u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][1], "300");
}

TEST_F(Cli, StressRerunsAreByteIdentical) {
  make_data("pool", 1200, 3, 5, 12, 4.0);
  const std::string base = "stress --protocol data_scale --sizes 200,400 --data pool.csv --variants "
                           "baseline_raw_knn,+balanced --seeds 2 --test-size 200 --k 64 --epochs 2";
  expect_ok(base + " --out r1");
  expect_ok(base + " --jobs 3 --out r2");
  for (const char* f : {"rows.csv", "aggregates.csv", "provenance.json", "summary.txt"}) {
    EXPECT_EQ(slurp(path("r1") / f), slurp(path("r2") / f)) << f;
  }
}

TEST_F(Cli, OutputRootFromEnvironment) {
  make_data("pool", 800, 2, 3, 13);
  const std::string env = "AWARE_OUTPUT_ROOT='" + path("root").string() + "' ";
  const std::string cmd = "cd '" + dir_.string() + "' && " + env + "'" + AWARE_CLI +
                          "' stress --protocol single --data pool.csv --variants baseline_raw_knn" + kStressSmall +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_TRUE(fs::exists(path("root/single/rows.csv")));
}

TEST_F(Cli, InspectDescribesArtifacts) {
  make_data("train", 300, 2, 2, 14);
  train_small("model.json", "train.csv", 0);
  const Result r = run("inspect model.json");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("aware-encoder"), std::string::npos) << r.output;
  EXPECT_EQ(run("inspect missing.json").code, 3);
}
