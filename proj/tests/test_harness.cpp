#include "harness.hpp"
#include "serialization.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

using namespace aware;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(Protocol protocol) {
  ExperimentConfig c;
  c.protocol = protocol;
  SyntheticSpec s;
  s.n_rows = 1200;
  s.n_informative = 5;
  s.n_noise = 15;
  s.class_sep = 3.0;
  s.imbalance_ratio = 4.0;
  c.source.synthetic = s;
  c.seeds = 2;
  c.k = 64;
  c.test_size = 200;
  c.ensemble_k = 2;
  c.train.epochs = 3;
  c.adapter.epochs = 1;
  c.adapter.context_size = 64;
  c.adapter.prompts_per_epoch = 50;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("aware_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Ladder, StagesAreCumulative) {
  const auto& stages = ladder();
  ASSERT_EQ(stages.size(), 6u);
  EXPECT_EQ(stage_flags(stages.front()), StageFlags{});
  auto count = [](const StageFlags& f) { return f.attention + f.snnl + f.balanced + f.ensemble + f.adapter; };
  for (std::size_t i = 1; i < stages.size(); ++i) {
    const StageFlags prev = stage_flags(stages[i - 1]);
    const StageFlags cur = stage_flags(stages[i]);
    EXPECT_EQ(count(cur), count(prev) + 1);
    EXPECT_TRUE(!prev.attention || cur.attention);
    EXPECT_TRUE(!prev.snnl || cur.snnl);
    EXPECT_TRUE(!prev.balanced || cur.balanced);
    EXPECT_TRUE(!prev.ensemble || cur.ensemble);
  }
  for (Variant v : stages) EXPECT_EQ(variant_from_string(to_string(v)), v);
}

TEST(Protocol, UnknownNameListsAllowedSet) {
  try {
    protocol_from_string("bogus");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    for (const auto& name : protocol_names()) EXPECT_NE(std::string(e.what()).find(name), std::string::npos);
  }
}

TEST(Config, JsonRoundTripAndHashIgnoresExecutionSettings) {
  ExperimentConfig c = small_config(Protocol::rarity);
  c.sweep = {5, 50};
  const ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(c));
  EXPECT_EQ(experiment_config_to_json(back), experiment_config_to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  ExperimentConfig other = c;
  other.jobs = 8;
  other.output_dir = "/elsewhere";
  other.record_timings = true;
  EXPECT_EQ(config_hash(other), config_hash(c));
  other.seed = 1;
  EXPECT_NE(config_hash(other), config_hash(c));
}

TEST(Config, RejectsInvalidValues) {
  ExperimentConfig c = small_config(Protocol::data_scale);
  c.sweep = {300, 200};
  EXPECT_THROW(c.validate(), Error);
  c.sweep = {300};
  c.seeds = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(experiment_config_from_json("{\"protocol\": \"rarity\", \"sweep\": [0.5]}"), Error);
  EXPECT_THROW(experiment_config_from_json("not json"), Error);
}

TEST(Config, DefaultsFollowTheProtocols) {
  EXPECT_EQ(ExperimentConfig{}.k, 1024u);
  EXPECT_EQ(ExperimentConfig{}.ensemble_k, 5);
  ExperimentConfig rarity;
  rarity.protocol = Protocol::rarity;
  EXPECT_EQ(rarity.effective_train_size(), 10000u);
  EXPECT_EQ(default_sweep(Protocol::rarity).front(), 5.0);
  EXPECT_EQ(default_sweep(Protocol::rarity).back(), 500.0);
  EXPECT_EQ(default_variants(Protocol::ablation), ladder());
}

TEST(StratifiedSubsample, ExactSizeAndProportions) {
  std::vector<int> classes;
  for (int i = 0; i < 900; ++i) classes.push_back(0);
  for (int i = 0; i < 100; ++i) classes.push_back(1);
  const auto picked = stratified_subsample(classes, 250, 3);
  ASSERT_EQ(picked.size(), 250u);
  EXPECT_TRUE(std::is_sorted(picked.begin(), picked.end()));
  std::size_t minority = 0;
  for (auto p : picked) minority += classes[p] == 1;
  EXPECT_EQ(minority, 25u);
  EXPECT_EQ(picked, stratified_subsample(classes, 250, 3));
}

TEST(DataScale, RowCountsFollowSweepVariantsSeedsMetrics) {
  ExperimentConfig c = small_config(Protocol::data_scale);
  c.sweep = {300};
  c.variants = {Variant::baseline_raw_knn};
  c.seeds = 3;
  const StressReport r = run_experiment(c);
  ASSERT_TRUE(r.complete());
  EXPECT_EQ(r.rows.size(), 1u * 1u * 3u * metric_names(2).size());
  for (const auto& m : metric_names(2)) EXPECT_EQ(r.values(300, "baseline_raw_knn", m).size(), 3u);
}

TEST(DataScale, TestSetIndependentOfSweep) {
  ExperimentConfig a = small_config(Protocol::data_scale);
  a.sweep = {300};
  a.variants = {Variant::baseline_raw_knn};
  a.seeds = 1;
  ExperimentConfig b = a;
  b.sweep = {200, 300};
  const StressReport ra = run_experiment(a);
  const StressReport rb = run_experiment(b);
  EXPECT_EQ(ra.test_hash, rb.test_hash);
  EXPECT_EQ(ra.values(300, "baseline_raw_knn", "auprc"), rb.values(300, "baseline_raw_knn", "auprc"));
}

TEST(DataScale, InfeasibleSweepReportsPrefix) {
  ExperimentConfig c = small_config(Protocol::data_scale);
  c.sweep = {300, 5000};
  try {
    run_experiment(c);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("{300}"), std::string::npos) << e.what();
  }
}

TEST(DataScale, FailedJobsAreReportedNotFatal) {
  ExperimentConfig c = small_config(Protocol::data_scale);
  c.sweep = {2, 300};
  c.variants = {Variant::ensemble};
  c.seeds = 1;
  const StressReport r = run_experiment(c);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].sweep_value, 2.0);
  EXPECT_FALSE(r.complete());
  EXPECT_TRUE(r.values(2, "+ensemble", "auprc").empty());
  EXPECT_EQ(r.values(300, "+ensemble", "auprc").size(), 1u);
}

TEST(Rarity, RowsExactlyForRequestedRatios) {
  ExperimentConfig c = small_config(Protocol::rarity);
  c.sweep = {5, 50};
  c.train_size = 500;
  c.variants = {Variant::baseline_raw_knn};
  c.seeds = 1;
  const StressReport r = run_experiment(c);
  std::set<double> seen;
  for (const auto& row : r.rows) seen.insert(row.sweep_value);
  EXPECT_EQ(seen, (std::set<double>{5, 50}));
}

TEST(Heterogeneity, ClampsOversizedFeatureCounts) {
  ExperimentConfig c = small_config(Protocol::heterogeneity);
  c.sweep = {10, 100};
  c.train_size = 400;
  c.variants = {Variant::baseline_raw_knn};
  c.seeds = 1;
  const StressReport r = run_experiment(c);
  ASSERT_TRUE(r.complete());
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("clamped"), std::string::npos);
}

TEST(Ablation, BaselineIsItsOwnReferenceAndStagesOffIsBaseline) {
  ExperimentConfig c = small_config(Protocol::ablation);
  c.train_size = 500;
  c.seeds = 1;
  const StressReport full = run_experiment(c);
  ASSERT_TRUE(full.complete()) << full.failures.front().error;
  EXPECT_EQ(full.variant_order.size(), 6u);
  for (const auto& a : full.aggregates()) {
    if (a.variant == "baseline_raw_knn") {
      EXPECT_EQ(a.pct_change_vs_baseline, 0.0);
    }
  }
  ExperimentConfig only = c;
  only.variants = {Variant::baseline_raw_knn};
  const StressReport base = run_experiment(only);
  for (const auto& m : base.metric_order) {
    EXPECT_EQ(base.values(0, "baseline_raw_knn", m), full.values(0, "baseline_raw_knn", m)) << m;
  }
}

TEST(Report, ByteIdenticalAcrossRunsAndThreadCounts) {
  ExperimentConfig c = small_config(Protocol::data_scale);
  c.sweep = {200, 300};
  c.variants = {Variant::baseline_raw_knn, Variant::balanced};
  const StressReport a = run_experiment(c);
  c.jobs = 3;
  const StressReport b = run_experiment(c);
  EXPECT_EQ(rows_csv(a), rows_csv(b));
  EXPECT_EQ(aggregates_csv(a), aggregates_csv(b));
  EXPECT_EQ(provenance_json(a), provenance_json(b));
  EXPECT_EQ(summary_text(a), summary_text(b));
  EXPECT_EQ(rows_csv(a).find("wall_time"), std::string::npos);
}

TEST(Report, TimingsOnlyWhenRequested) {
  ExperimentConfig c = small_config(Protocol::data_scale);
  c.sweep = {200};
  c.variants = {Variant::baseline_raw_knn};
  c.seeds = 1;
  c.record_timings = true;
  EXPECT_NE(rows_csv(run_experiment(c)).find("wall_time"), std::string::npos);
}

TEST(Report, AggregatesUsePopulationStd) {
  StressReport r;
  r.protocol = "single";
  r.variant_order = {"baseline_raw_knn"};
  r.metric_order = {"auprc"};
  r.rows = {{"single", 0, "baseline_raw_knn", 0, "auprc", 0.2, 0},
            {"single", 0, "baseline_raw_knn", 1, "auprc", 0.4, 0}};
  const auto agg = r.aggregates();
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_NEAR(agg[0].mean, 0.3, 1e-15);
  EXPECT_NEAR(agg[0].std, 0.1, 1e-15);
  EXPECT_EQ(agg[0].n, 2u);
}

TEST(OutputDir, RefusesNonEmptyWithoutForce) {
  const fs::path dir = fresh_dir("refuse");
  prepare_output_dir(dir.string(), false);
  write_text_file((dir / "x.txt").string(), "x");
  try {
    prepare_output_dir(dir.string(), false);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
  EXPECT_NO_THROW(prepare_output_dir(dir.string(), true));
  fs::remove_all(dir);
}

TEST(OutputDir, EmitsReportFilesAndFailureManifest) {
  ExperimentConfig c = small_config(Protocol::data_scale);
  c.sweep = {2, 300};
  c.variants = {Variant::ensemble};
  c.seeds = 1;
  const fs::path dir = fresh_dir("emit");
  emit_report(run_experiment(c), dir.string());
  for (const char* f : {"rows.csv", "aggregates.csv", "provenance.json", "summary.txt", "failures.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  c.sweep = {300};
  emit_report(run_experiment(c), dir.string());
  EXPECT_FALSE(fs::exists(dir / "failures.json"));
  fs::remove_all(dir);
}
