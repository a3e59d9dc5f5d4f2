#pragma once

#include "adapter.hpp"
#include "dataset.hpp"
#include "training.hpp"

#include <optional>
#include <string>
#include <vector>

namespace aware {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum class Protocol { data_scale, heterogeneity, rarity, ablation, single };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& name);
std::vector<std::string> protocol_names();

// The cumulative ablation ladder. Each stage keeps every flag of the stages
// before it.
enum class Variant { baseline_raw_knn, attention, snnl, balanced, ensemble, adapter };

struct StageFlags {
  bool attention = false;
  bool snnl = false;
  bool balanced = false;
  bool ensemble = false;
  bool adapter = false;

  bool operator==(const StageFlags&) const = default;
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);
StageFlags stage_flags(Variant v);
const std::vector<Variant>& ladder();

struct DataSource {
  std::string csv_path;       // empty: synthetic
  std::string manifest_path;
  std::optional<SyntheticSpec> synthetic;  // unset: protocol default
};

SyntheticSpec default_synthetic(Protocol p);
std::vector<double> default_sweep(Protocol p);
std::vector<Variant> default_variants(Protocol p);

struct ExperimentConfig {
  Protocol protocol = Protocol::single;
  DataSource source;
  std::vector<double> sweep;      // empty: protocol default
  std::vector<Variant> variants;  // empty: protocol default
  int seeds = 3;
  std::uint64_t seed = 0;
  std::size_t k = kDefaultContextSize;
  std::size_t test_size = 2000;
  std::size_t train_size = 0;  // 0: 10000 for rarity, the whole pool otherwise
  int ensemble_k = 5;
  TrainConfig train;
  AdapterConfig adapter;
  VoteConfig vote;
  // Execution settings; they do not change results and are not hashed.
  unsigned jobs = 1;
  std::string output_dir;
  bool record_timings = false;

  void validate() const;
  std::vector<double> effective_sweep() const;
  std::vector<Variant> effective_variants() const;
  SyntheticSpec effective_synthetic() const;
  std::size_t effective_train_size() const;
};

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);
// FNV-1a over the canonical JSON of every result-affecting field.
std::uint64_t config_hash(const ExperimentConfig& config);

struct ReportRow {
  std::string protocol;
  double sweep_value = 0.0;
  std::string variant;
  int seed = 0;
  std::string metric;
  double value = 0.0;
  double wall_time = 0.0;
};

struct AggregateRow {
  std::string protocol;
  double sweep_value = 0.0;
  std::string variant;
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;                     // population std over seeds
  double pct_change_vs_baseline = 0.0;  // NaN when the baseline was not run
};

struct JobFailure {
  double sweep_value = 0.0;
  int seed = 0;
  std::string error;
};

struct StressReport {
  std::string protocol;
  std::vector<ReportRow> rows;
  std::vector<JobFailure> failures;
  std::vector<std::string> warnings;
  std::vector<std::uint64_t> seeds;  // per-seed job seeds
  std::uint64_t config_hash = 0;
  std::uint64_t test_hash = 0;
  std::string config_json;
  std::vector<std::string> variant_order;
  std::vector<std::string> metric_order;
  bool record_timings = false;

  bool complete() const { return failures.empty(); }
  std::vector<AggregateRow> aggregates() const;
  std::vector<double> values(double sweep_value, const std::string& variant, const std::string& metric) const;
};

StressReport run_data_scale(const ExperimentConfig& config);
StressReport run_heterogeneity(const ExperimentConfig& config);
StressReport run_rarity(const ExperimentConfig& config);
StressReport run_ablation(const ExperimentConfig& config);
StressReport run_experiment(const ExperimentConfig& config);

std::string rows_csv(const StressReport& report);
std::string aggregates_csv(const StressReport& report);
std::string provenance_json(const StressReport& report);
std::string summary_text(const StressReport& report);
std::string failures_json(const StressReport& report);

// Writes rows.csv, aggregates.csv, provenance.json, summary.txt and, when jobs
// failed, failures.json.
void emit_report(const StressReport& report, const std::string& dir);

// Creates `dir` if needed; refuses a non-empty directory unless `force`.
void prepare_output_dir(const std::string& dir, bool force);

// Exactly n positions drawn per class in proportion to class sizes (largest
// remainder), returned sorted.
std::vector<std::size_t> stratified_subsample(const std::vector<int>& classes, std::size_t n, std::uint64_t seed);

// Metrics reported for a classification task with C classes.
std::vector<std::string> metric_names(int n_classes);

// Scores the predictions of one variant on a test set.
std::vector<double> score_predictions(const std::vector<BackboneOutput>& outputs, const std::vector<double>& labels,
                                      const std::vector<double>& precision_at_10, int n_classes);

}  // namespace aware
