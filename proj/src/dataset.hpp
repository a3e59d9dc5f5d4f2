#pragma once

#include "common.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aware {

enum class TaskKind { binary, multiclass, regression };

struct Task {
  TaskKind kind = TaskKind::binary;
  int n_classes = 2;  // 0 for regression

  bool is_classification() const { return kind != TaskKind::regression; }
  static Task binary() { return {TaskKind::binary, 2}; }
  static Task multiclass(int c) { return {TaskKind::multiclass, c}; }
  static Task regression() { return {TaskKind::regression, 0}; }
};

std::string to_string(const Task& task);

enum class ColumnKind { numerical, categorical };

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::numerical;
  double train_mean = 0.0;
  double train_std = 1.0;
  double train_mode = 0.0;
  bool normalized = false;               // set once train statistics have been applied
  std::vector<std::string> categories;   // categorical columns: code -> original token
  std::string warning;
};

// Feature matrix plus labels. Missing feature values are NaN until preprocess()
// has run. Class labels are stored as exact small integers in `labels`.
struct TabularDataset {
  Matrix features;
  std::vector<double> labels;
  std::vector<ColumnMeta> column_meta;
  Task task;
  std::vector<std::int64_t> group_ids;  // empty when absent
  std::vector<std::size_t> row_ids;     // original row index of each row
  std::vector<ColumnMeta> dropped_columns;
  std::string label_name = "label";

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  int class_of(std::size_t row) const { return static_cast<int>(labels[row]); }
  std::vector<int> class_labels() const;
  std::vector<bool> missing_mask(std::size_t col) const;
  std::vector<std::size_t> class_counts() const;

  // Throws ErrorKind::data on any invariant violation. `allow_missing` skips the
  // finiteness check for raw (not yet preprocessed) data.
  void validate(bool allow_missing = true) const;
};

TabularDataset select_rows(const TabularDataset& ds, const std::vector<std::size_t>& rows);
TabularDataset select_columns(const TabularDataset& ds, const std::vector<std::size_t>& cols);
std::vector<std::size_t> all_rows(const TabularDataset& ds);

struct Manifest {
  std::string label_column;
  Task task;
  std::optional<std::string> group_column;
  std::vector<std::string> categorical_columns;
};

Manifest parse_manifest(const std::string& json_text);
Manifest load_manifest(const std::string& path);
std::string manifest_to_json(const Manifest& m);

// When `require_label` is false the label column may be absent (query files);
// labels are then filled with zeros.
TabularDataset load_csv(const std::string& path, const Manifest& schema, bool require_label = true);
TabularDataset parse_csv(const std::string& text, const Manifest& schema, bool require_label = true);
void write_csv(const TabularDataset& ds, const std::string& path);

TabularDataset preprocess(const TabularDataset& ds, const std::vector<std::size_t>& train_idx);

struct FilterOptions {
  std::size_t max_features = 500;
  double min_variance = 1e-8;
  double min_prevalence = 1e-3;
};

// Runs on raw (unnormalized) features; NaNs are ignored when computing train
// statistics. An empty train_idx means every row.
TabularDataset filter_features(const TabularDataset& ds, const std::vector<std::size_t>& train_idx,
                               const FilterOptions& options = {});

// Column names + train statistics needed to replay filter_features/preprocess
// on new files (queries, index references).
struct FeatureTransform {
  std::vector<std::string> input_columns;
  std::vector<std::size_t> kept;  // indices into input_columns
  std::vector<ColumnMeta> meta;   // one per kept column, statistics from training

  TabularDataset apply(const TabularDataset& raw) const;
  std::size_t output_dim() const { return kept.size(); }
};

FeatureTransform make_transform(const TabularDataset& raw, const TabularDataset& processed);

struct Observation {
  double time = 0.0;
  double value = 0.0;
};

// Per variable (in input order): mean, min, max, population std over
// observations with window_begin <= time < window_end. Empty -> four NaNs.
std::vector<double> aggregate_series(const std::vector<std::vector<Observation>>& series,
                                     double window_begin, double window_end);

struct SplitSpec {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> valid_idx;
  std::vector<std::size_t> test_idx;
  std::uint64_t seed = 0;
};

// fractions: 2 (train, test) or 3 (train, valid, test) entries summing to 1.
SplitSpec stratified_split(const TabularDataset& ds, const std::vector<double>& fractions,
                           std::uint64_t seed);

// K stratified folds over `rows`; returns the fold index of each entry of rows.
std::vector<int> stratified_folds(const std::vector<int>& strata, int k, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n_rows = 1000;
  std::size_t n_informative = 2;
  std::size_t n_noise = 8;
  int n_classes = 2;
  double class_sep = 1.0;
  double imbalance_ratio = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  TabularDataset data;
  std::vector<std::size_t> informative_columns;  // ascending
  std::vector<std::string> warnings;
};

SyntheticDataset make_synthetic(const SyntheticSpec& spec);

// Minority count under the rarity rule: round(n / (imbalance + classes - 1)), at least 1.
std::size_t minority_count(std::size_t n, double imbalance_ratio, int n_classes = 2);

// Samples exactly train_size rows (class 1 is the minority for binary tasks)
// without replacement from the pool.
TabularDataset apply_rarity(const TabularDataset& pool, std::size_t train_size, double imbalance_ratio,
                            std::uint64_t seed);

TabularDataset apply_heterogeneity(const TabularDataset& ds, std::size_t n_features,
                                   const std::vector<std::size_t>& importance_order,
                                   std::vector<std::string>* warnings = nullptr);

struct FeatureImportance {
  std::vector<std::size_t> order;  // descending importance
  std::vector<double> importance;  // per original column
};

FeatureImportance rank_feature_importance(const TabularDataset& ds, std::uint64_t seed);

// Quantile bins used when a regression target must be treated as classes.
std::vector<int> quantile_bins(const std::vector<double>& values, int n_bins);

// FNV-1a over row ids, labels and feature bytes.
std::uint64_t dataset_hash(const TabularDataset& ds);

}  // namespace aware
