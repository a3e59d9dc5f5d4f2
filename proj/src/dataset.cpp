#include "dataset.hpp"

#include "metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace aware {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one CSV record; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

std::optional<double> parse_real(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

Task parse_task(const nlohmann::json& j) {
  const std::string name = j.at("task").get<std::string>();
  if (name == "binary") return Task::binary();
  if (name == "regression") return Task::regression();
  if (name.rfind("multiclass", 0) == 0) {
    int c = 0;
    if (j.contains("n_classes")) c = j.at("n_classes").get<int>();
    const auto open = name.find('(');
    if (open != std::string::npos) c = std::stoi(name.substr(open + 1));
    return Task::multiclass(c);  // c == 0 means "infer from labels"
  }
  fail(ErrorKind::config, "unknown task '" + name + "' (expected binary, multiclass or regression)");
}

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n == 0 ? 0.0 : m2 / static_cast<double>(n); }
};

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::string to_string(const Task& task) {
  switch (task.kind) {
    case TaskKind::binary:
      return "binary";
    case TaskKind::multiclass:
      return "multiclass";
    case TaskKind::regression:
      return "regression";
  }
  return "unknown";
}

std::vector<int> TabularDataset::class_labels() const {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = static_cast<int>(labels[i]);
  return out;
}

std::vector<bool> TabularDataset::missing_mask(std::size_t col) const {
  std::vector<bool> mask(rows());
  for (std::size_t r = 0; r < rows(); ++r) mask[r] = std::isnan(features(r, col));
  return mask;
}

std::vector<std::size_t> TabularDataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(task.n_classes, 0)), 0);
  if (!task.is_classification()) return counts;
  for (double y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

void TabularDataset::validate(bool allow_missing) const {
  if (labels.size() != rows()) fail(ErrorKind::data, "label count does not match feature rows");
  if (column_meta.size() != cols()) fail(ErrorKind::data, "column metadata does not match feature columns");
  if (!row_ids.empty() && row_ids.size() != rows()) fail(ErrorKind::data, "row id count does not match rows");
  if (!group_ids.empty() && group_ids.size() != rows()) fail(ErrorKind::data, "group id count does not match rows");
  if (task.is_classification()) {
    for (double y : labels) {
      if (y < 0 || y >= task.n_classes || y != std::floor(y)) {
        fail(ErrorKind::data, "class label outside [0, " + std::to_string(task.n_classes) + ")");
      }
    }
  } else {
    for (double y : labels) {
      if (!std::isfinite(y)) fail(ErrorKind::data, "non-finite regression target");
    }
  }
  if (!allow_missing && !features.allFinite()) fail(ErrorKind::data, "non-finite feature value after preprocessing");
}

TabularDataset select_rows(const TabularDataset& ds, const std::vector<std::size_t>& rows) {
  TabularDataset out;
  out.task = ds.task;
  out.column_meta = ds.column_meta;
  out.dropped_columns = ds.dropped_columns;
  out.label_name = ds.label_name;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
  out.labels.resize(rows.size());
  out.row_ids.resize(rows.size());
  if (!ds.group_ids.empty()) out.group_ids.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    require(r < ds.rows(), "row index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(r));
    out.labels[i] = ds.labels[r];
    out.row_ids[i] = ds.row_ids.empty() ? r : ds.row_ids[r];
    if (!ds.group_ids.empty()) out.group_ids[i] = ds.group_ids[r];
  }
  return out;
}

TabularDataset select_columns(const TabularDataset& ds, const std::vector<std::size_t>& cols) {
  TabularDataset out = ds;
  out.features.resize(ds.features.rows(), static_cast<Eigen::Index>(cols.size()));
  out.column_meta.clear();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    require(cols[j] < ds.cols(), "column index out of range");
    out.features.col(static_cast<Eigen::Index>(j)) = ds.features.col(static_cast<Eigen::Index>(cols[j]));
    out.column_meta.push_back(ds.column_meta[cols[j]]);
  }
  return out;
}

std::vector<std::size_t> all_rows(const TabularDataset& ds) {
  std::vector<std::size_t> idx(ds.rows());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

Manifest parse_manifest(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("manifest is not valid JSON: ") + e.what());
  }
  Manifest m;
  try {
    m.label_column = j.at("label_column").get<std::string>();
    m.task = parse_task(j);
    if (j.contains("group_column") && !j.at("group_column").is_null()) {
      m.group_column = j.at("group_column").get<std::string>();
    }
    if (j.contains("categorical_columns")) {
      m.categorical_columns = j.at("categorical_columns").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("manifest field error: ") + e.what());
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open manifest " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string manifest_to_json(const Manifest& m) {
  nlohmann::json j;
  j["label_column"] = m.label_column;
  j["task"] = to_string(m.task);
  if (m.task.kind == TaskKind::multiclass) j["n_classes"] = m.task.n_classes;
  if (m.group_column) j["group_column"] = *m.group_column;
  j["categorical_columns"] = m.categorical_columns;
  return j.dump(2);
}

TabularDataset parse_csv(const std::string& text, const Manifest& schema, bool require_label) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_record(line);
      break;
    }
  }
  if (header.empty()) fail(ErrorKind::data, "empty dataset: no header row");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto label_col = find_col(schema.label_column);
  if (!label_col && require_label) {
    fail(ErrorKind::config, "label column '" + schema.label_column + "' not found in header");
  }
  std::optional<std::size_t> group_col;
  if (schema.group_column) {
    group_col = find_col(*schema.group_column);
    if (!group_col) fail(ErrorKind::config, "group column '" + *schema.group_column + "' not found in header");
  }
  const std::set<std::string> categorical(schema.categorical_columns.begin(), schema.categorical_columns.end());
  for (const auto& name : categorical) {
    if (!find_col(name)) fail(ErrorKind::config, "categorical column '" + name + "' not found in header");
  }

  std::vector<std::size_t> feature_cols;
  std::vector<ColumnMeta> meta;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if ((label_col && c == *label_col) || (group_col && c == *group_col)) continue;
    feature_cols.push_back(c);
    ColumnMeta cm;
    cm.name = header[c];
    cm.kind = categorical.count(header[c]) ? ColumnKind::categorical : ColumnKind::numerical;
    meta.push_back(cm);
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::vector<std::int64_t> groups;
  std::vector<std::unordered_map<std::string, int>> cat_codes(feature_cols.size());
  std::unordered_map<std::string, std::int64_t> group_codes;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_record(line);
    if (fields.size() != header.size()) {
      fail(ErrorKind::data, "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(feature_cols.size(), kNaN);
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string& tok = fields[feature_cols[j]];
      if (is_missing_token(tok)) continue;
      if (meta[j].kind == ColumnKind::categorical) {
        auto [it, inserted] = cat_codes[j].emplace(tok, static_cast<int>(meta[j].categories.size()));
        if (inserted) meta[j].categories.push_back(tok);
        row[j] = it->second;
      } else {
        const auto v = parse_real(tok);
        if (!v) {
          fail(ErrorKind::data, "line " + std::to_string(line_no) + ": column '" + meta[j].name +
                                    "' has non-numeric value '" + tok + "'");
        }
        row[j] = *v;
      }
    }
    double y = 0.0;
    if (label_col) {
      const std::string& tok = fields[*label_col];
      const auto v = is_missing_token(tok) ? std::nullopt : parse_real(tok);
      if (!v) fail(ErrorKind::data, "line " + std::to_string(line_no) + ": missing or non-numeric label '" + tok + "'");
      y = *v;
      if (schema.task.is_classification() && (y < 0 || y != std::floor(y))) {
        fail(ErrorKind::data, "line " + std::to_string(line_no) + ": class label must be a non-negative integer");
      }
    }
    if (group_col) {
      auto [it, inserted] = group_codes.emplace(fields[*group_col], static_cast<std::int64_t>(group_codes.size()));
      groups.push_back(it->second);
    }
    rows.push_back(std::move(row));
    labels.push_back(y);
  }
  if (rows.empty()) fail(ErrorKind::data, "empty dataset: no data rows");

  TabularDataset ds;
  ds.task = schema.task;
  ds.label_name = schema.label_column;
  if (ds.task.kind == TaskKind::multiclass && ds.task.n_classes <= 0) {
    ds.task.n_classes = static_cast<int>(*std::max_element(labels.begin(), labels.end())) + 1;
  }
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
    }
  }
  ds.labels = std::move(labels);
  ds.column_meta = std::move(meta);
  ds.group_ids = std::move(groups);
  ds.row_ids = all_rows(ds);
  ds.validate(true);
  return ds;
}

TabularDataset load_csv(const std::string& path, const Manifest& schema, bool require_label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, require_label);
}

void write_csv(const TabularDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  for (std::size_t j = 0; j < ds.cols(); ++j) out << ds.column_meta[j].name << ',';
  out << ds.label_name << '\n';
  char buf[64];
  auto put = [&](double v) {
    if (std::isnan(v)) {
      out << "NA";
      return;
    }
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
  };
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t j = 0; j < ds.cols(); ++j) {
      const double v = ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
      const auto& cm = ds.column_meta[j];
      if (cm.kind == ColumnKind::categorical && !cm.categories.empty() && !std::isnan(v) &&
          static_cast<std::size_t>(v) < cm.categories.size()) {
        out << cm.categories[static_cast<std::size_t>(v)];
      } else {
        put(v);
      }
      out << ',';
    }
    put(ds.labels[r]);
    out << '\n';
  }
  if (!out) fail(ErrorKind::io, "write failed for " + path);
}

TabularDataset preprocess(const TabularDataset& ds, const std::vector<std::size_t>& train_idx) {
  require(!train_idx.empty(), "preprocess requires a non-empty training split");
  TabularDataset out = ds;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    ColumnMeta& cm = out.column_meta[j];
    auto col = out.features.col(static_cast<Eigen::Index>(j));
    if (cm.normalized) {
      keep.push_back(j);
      continue;
    }
    Welford stats;
    std::map<double, std::size_t> freq;
    for (std::size_t r : train_idx) {
      require(r < ds.rows(), "train index out of range");
      const double v = col(static_cast<Eigen::Index>(r));
      if (std::isnan(v)) continue;
      stats.add(v);
      ++freq[v];
    }
    if (stats.n == 0) {
      cm.warning = "dropped: column entirely missing on the training split";
      out.dropped_columns.push_back(cm);
      continue;
    }
    if (cm.kind == ColumnKind::categorical) {
      double mode = freq.begin()->first;
      std::size_t best = 0;
      for (const auto& [value, count] : freq) {
        if (count > best) {
          best = count;
          mode = value;
        }
      }
      cm.train_mode = mode;
      cm.train_mean = stats.mean;
      cm.train_std = std::sqrt(stats.variance());
      for (Eigen::Index r = 0; r < col.size(); ++r) {
        if (std::isnan(col(r))) col(r) = mode;
      }
    } else {
      cm.train_mean = stats.mean;
      cm.train_std = std::sqrt(stats.variance());
      cm.train_mode = freq.rbegin()->first;
      const double scale = cm.train_std > 0.0 ? cm.train_std : 1.0;
      for (Eigen::Index r = 0; r < col.size(); ++r) {
        const double v = std::isnan(col(r)) ? cm.train_mean : col(r);
        col(r) = (v - cm.train_mean) / scale;
      }
    }
    cm.normalized = true;
    keep.push_back(j);
  }
  if (keep.size() != ds.cols()) {
    std::vector<ColumnMeta> dropped = out.dropped_columns;
    out = select_columns(out, keep);
    out.dropped_columns = std::move(dropped);
  }
  if (out.cols() == 0) fail(ErrorKind::data, "preprocessing removed every column");
  out.validate(false);
  return out;
}

TabularDataset filter_features(const TabularDataset& ds, const std::vector<std::size_t>& train_idx,
                               const FilterOptions& options) {
  require(options.max_features >= 1, "max_features must be at least 1");
  const std::vector<std::size_t> rows = train_idx.empty() ? all_rows(ds) : train_idx;
  struct Candidate {
    std::size_t col;
    double variance;
  };
  std::vector<Candidate> survivors;
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    Welford stats;
    std::set<double> distinct;
    std::size_t nonzero = 0;
    for (std::size_t r : rows) {
      const double v = ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
      if (std::isnan(v)) continue;
      stats.add(v);
      if (distinct.size() <= 2) distinct.insert(v);
      if (v != 0.0) ++nonzero;
    }
    if (stats.n == 0) continue;
    const double var = stats.variance();
    if (var < options.min_variance) continue;
    const bool binary = distinct.size() <= 2 && distinct.count(0.0) == 1;
    if (binary && static_cast<double>(nonzero) / static_cast<double>(stats.n) < options.min_prevalence) continue;
    survivors.push_back({j, var});
  }
  if (survivors.empty()) fail(ErrorKind::data, "feature filtering removed every column");
  if (survivors.size() > options.max_features) {
    std::stable_sort(survivors.begin(), survivors.end(),
                     [](const Candidate& a, const Candidate& b) { return a.variance > b.variance; });
    survivors.resize(options.max_features);
  }
  std::vector<std::size_t> keep;
  for (const auto& c : survivors) keep.push_back(c.col);
  std::sort(keep.begin(), keep.end());
  return select_columns(ds, keep);
}

TabularDataset FeatureTransform::apply(const TabularDataset& raw) const {
  if (raw.cols() != input_columns.size()) {
    fail(ErrorKind::data, "input has " + std::to_string(raw.cols()) + " feature columns, model expects " +
                              std::to_string(input_columns.size()));
  }
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < raw.cols(); ++j) position[raw.column_meta[j].name] = j;
  TabularDataset out = raw;
  out.features.resize(raw.features.rows(), static_cast<Eigen::Index>(kept.size()));
  out.column_meta = meta;
  out.dropped_columns.clear();
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const ColumnMeta& cm = meta[k];
    auto it = position.find(cm.name);
    if (it == position.end()) fail(ErrorKind::data, "input is missing feature column '" + cm.name + "'");
    const auto& src_meta = raw.column_meta[it->second];
    auto src = raw.features.col(static_cast<Eigen::Index>(it->second));
    auto dst = out.features.col(static_cast<Eigen::Index>(k));
    if (cm.kind == ColumnKind::categorical) {
      std::unordered_map<std::string, int> code;
      for (std::size_t c = 0; c < cm.categories.size(); ++c) code[cm.categories[c]] = static_cast<int>(c);
      for (Eigen::Index r = 0; r < src.size(); ++r) {
        double v = src(r);
        if (!std::isnan(v) && !src_meta.categories.empty()) {
          const auto found = code.find(src_meta.categories[static_cast<std::size_t>(v)]);
          v = found == code.end() ? kNaN : found->second;
        }
        dst(r) = std::isnan(v) ? cm.train_mode : v;
      }
    } else {
      const double scale = cm.train_std > 0.0 ? cm.train_std : 1.0;
      for (Eigen::Index r = 0; r < src.size(); ++r) {
        const double v = std::isnan(src(r)) ? cm.train_mean : src(r);
        dst(r) = (v - cm.train_mean) / scale;
      }
    }
  }
  out.validate(false);
  return out;
}

FeatureTransform make_transform(const TabularDataset& raw, const TabularDataset& processed) {
  FeatureTransform t;
  for (const auto& cm : raw.column_meta) t.input_columns.push_back(cm.name);
  for (const auto& cm : processed.column_meta) {
    auto it = std::find(t.input_columns.begin(), t.input_columns.end(), cm.name);
    require(it != t.input_columns.end(), "processed column '" + cm.name + "' not present in raw data");
    t.kept.push_back(static_cast<std::size_t>(it - t.input_columns.begin()));
    t.meta.push_back(cm);
  }
  return t;
}

std::vector<double> aggregate_series(const std::vector<std::vector<Observation>>& series, double window_begin,
                                     double window_end) {
  std::vector<double> out;
  out.reserve(series.size() * 4);
  for (const auto& variable : series) {
    Welford stats;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& obs : variable) {
      if (obs.time < window_begin || obs.time >= window_end || std::isnan(obs.value)) continue;
      stats.add(obs.value);
      lo = std::min(lo, obs.value);
      hi = std::max(hi, obs.value);
    }
    if (stats.n == 0) {
      out.insert(out.end(), {kNaN, kNaN, kNaN, kNaN});
    } else {
      out.insert(out.end(), {stats.mean, lo, hi, std::sqrt(stats.variance())});
    }
  }
  return out;
}

namespace {

// Largest-remainder allocation of n units over fractions; every partition with
// a positive fraction receives at least one unit when n allows it.
std::vector<std::size_t> allocate(std::size_t n, const std::vector<double>& fractions) {
  const std::size_t p = fractions.size();
  std::vector<std::size_t> counts(p);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t i = 0; i < p; ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    used += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < n; ++i, ++used) ++counts[remainders[i % p].second];
  for (std::size_t i = 0; i < p; ++i) {
    if (fractions[i] > 0.0 && counts[i] == 0) {
      const auto donor = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      if (counts[donor] > 1) {
        --counts[donor];
        ++counts[i];
      }
    }
  }
  return counts;
}

}  // namespace

SplitSpec stratified_split(const TabularDataset& ds, const std::vector<double>& fractions, std::uint64_t seed) {
  require(fractions.size() == 2 || fractions.size() == 3, "split needs 2 or 3 fractions");
  const double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  require(std::abs(total - 1.0) <= 1e-9, "split fractions must sum to 1");
  for (double f : fractions) require(f >= 0.0, "split fractions must be non-negative");
  const std::size_t active = static_cast<std::size_t>(std::count_if(fractions.begin(), fractions.end(),
                                                                     [](double f) { return f > 0.0; }));

  // Units are rows, or groups when group ids are present.
  std::vector<std::vector<std::size_t>> unit_rows;
  std::vector<int> unit_class;
  if (ds.group_ids.empty()) {
    unit_rows.resize(ds.rows());
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      unit_rows[r] = {r};
      unit_class.push_back(ds.task.is_classification() ? ds.class_of(r) : 0);
    }
  } else {
    std::map<std::int64_t, std::size_t> unit_of;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      auto [it, inserted] = unit_of.emplace(ds.group_ids[r], unit_rows.size());
      if (inserted) {
        unit_rows.emplace_back();
        unit_class.push_back(0);
      }
      unit_rows[it->second].push_back(r);
      if (ds.task.is_classification()) unit_class[it->second] = std::max(unit_class[it->second], ds.class_of(r));
    }
  }

  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t u = 0; u < unit_rows.size(); ++u) strata[unit_class[u]].push_back(u);

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> parts(fractions.size());
  for (auto& [cls, units] : strata) {
    if (units.size() < active) {
      fail(ErrorKind::data, "class " + std::to_string(cls) + " has " + std::to_string(units.size()) +
                                " units, fewer than the " + std::to_string(active) + " partitions requested");
    }
    std::shuffle(units.begin(), units.end(), rng);
    const auto counts = allocate(units.size(), fractions);
    std::size_t pos = 0;
    for (std::size_t p = 0; p < counts.size(); ++p) {
      for (std::size_t t = 0; t < counts[p]; ++t, ++pos) {
        for (std::size_t r : unit_rows[units[pos]]) parts[p].push_back(r);
      }
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  SplitSpec split;
  split.seed = seed;
  split.train_idx = std::move(parts[0]);
  if (fractions.size() == 3) {
    split.valid_idx = std::move(parts[1]);
    split.test_idx = std::move(parts[2]);
  } else {
    split.test_idx = std::move(parts[1]);
  }
  return split;
}

std::vector<int> stratified_folds(const std::vector<int>& strata, int k, std::uint64_t seed) {
  require(k >= 1, "fold count must be at least 1");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < strata.size(); ++i) by_class[strata[i]].push_back(i);
  Rng rng(seed);
  std::vector<int> fold(strata.size(), 0);
  std::size_t next = 0;
  for (auto& [cls, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) fold[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return fold;
}

std::size_t minority_count(std::size_t n, double imbalance_ratio, int n_classes) {
  require(imbalance_ratio >= 1.0, "imbalance ratio must be >= 1");
  require(n_classes >= 2, "rarity needs at least two classes");
  const double share = static_cast<double>(n) / (imbalance_ratio + static_cast<double>(n_classes - 1));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(share)));
}

SyntheticDataset make_synthetic(const SyntheticSpec& spec) {
  require(spec.n_informative >= 1, "synthetic data needs at least one informative column");
  require(spec.n_classes >= 2, "synthetic data needs at least two classes");
  require(spec.class_sep >= 0.0, "class_sep must be non-negative");
  require(spec.imbalance_ratio >= 1.0, "imbalance ratio must be >= 1");
  require(spec.n_rows >= static_cast<std::size_t>(spec.n_classes), "too few rows for the class count");

  SyntheticDataset out;
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = spec.n_informative + spec.n_noise;
  const int C = spec.n_classes;

  std::vector<std::size_t> columns(d);
  std::iota(columns.begin(), columns.end(), 0);
  std::shuffle(columns.begin(), columns.end(), rng);
  out.informative_columns.assign(columns.begin(), columns.begin() + static_cast<std::ptrdiff_t>(spec.n_informative));
  std::sort(out.informative_columns.begin(), out.informative_columns.end());

  // Class means sit evenly spaced along a diagonal of the informative columns
  // (random sign per column) so that adjacent means are class_sep apart.
  std::vector<double> sign(spec.n_informative);
  std::bernoulli_distribution coin(0.5);
  for (auto& s : sign) s = coin(rng) ? 1.0 : -1.0;

  const double raw_minor = static_cast<double>(spec.n_rows) / (spec.imbalance_ratio + (C - 1));
  if (std::llround(raw_minor) < 1) out.warnings.push_back("minority count rounded to 0; clamped to 1");
  const std::size_t n_minor = minority_count(spec.n_rows, spec.imbalance_ratio, C);
  require(n_minor * static_cast<std::size_t>(C - 1) < spec.n_rows, "imbalance leaves no majority rows");
  std::vector<double> labels;
  labels.reserve(spec.n_rows);
  for (int c = 1; c < C; ++c) labels.insert(labels.end(), n_minor, static_cast<double>(c));
  labels.insert(labels.begin(), spec.n_rows - labels.size(), 0.0);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<int> informative_slot(d, -1);
  for (std::size_t i = 0; i < out.informative_columns.size(); ++i) {
    informative_slot[out.informative_columns[i]] = static_cast<int>(i);
  }

  TabularDataset& ds = out.data;
  ds.task = C == 2 ? Task::binary() : Task::multiclass(C);
  ds.features.resize(static_cast<Eigen::Index>(spec.n_rows), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < spec.n_rows; ++r) {
    const double offset = (labels[r] - 0.5 * (C - 1)) / std::sqrt(static_cast<double>(spec.n_informative));
    for (std::size_t j = 0; j < d; ++j) {
      double v = normal(rng);
      if (informative_slot[j] >= 0) v += spec.class_sep * offset * sign[static_cast<std::size_t>(informative_slot[j])];
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
    }
  }
  ds.labels = std::move(labels);
  for (std::size_t j = 0; j < d; ++j) {
    ColumnMeta cm;
    cm.name = "x" + std::to_string(j);
    ds.column_meta.push_back(cm);
  }
  ds.row_ids = all_rows(ds);
  ds.validate(true);
  return out;
}

TabularDataset apply_rarity(const TabularDataset& pool, std::size_t train_size, double imbalance_ratio,
                            std::uint64_t seed) {
  require(pool.task.is_classification(), "rarity protocol needs a classification task");
  const int C = pool.task.n_classes;
  const std::size_t n_minor = minority_count(train_size, imbalance_ratio, C);
  require(n_minor * static_cast<std::size_t>(C - 1) < train_size, "imbalance leaves no majority rows");
  std::vector<std::size_t> need(static_cast<std::size_t>(C), n_minor);
  need[0] = train_size - n_minor * static_cast<std::size_t>(C - 1);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(C));
  for (std::size_t r = 0; r < pool.rows(); ++r) by_class[static_cast<std::size_t>(pool.class_of(r))].push_back(r);
  for (int c = 0; c < C; ++c) {
    const auto& have = by_class[static_cast<std::size_t>(c)];
    if (have.size() < need[static_cast<std::size_t>(c)]) {
      fail(ErrorKind::data, "insufficient rows of class " + std::to_string(c) + ": required " +
                                std::to_string(need[static_cast<std::size_t>(c)]) + ", available " +
                                std::to_string(have.size()));
    }
  }
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(train_size);
  for (int c = 0; c < C; ++c) {
    auto& rows = by_class[static_cast<std::size_t>(c)];
    std::shuffle(rows.begin(), rows.end(), rng);
    chosen.insert(chosen.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(need[static_cast<std::size_t>(c)]));
  }
  std::sort(chosen.begin(), chosen.end());
  return select_rows(pool, chosen);
}

TabularDataset apply_heterogeneity(const TabularDataset& ds, std::size_t n_features,
                                   const std::vector<std::size_t>& importance_order,
                                   std::vector<std::string>* warnings) {
  require(importance_order.size() == ds.cols(), "importance order must cover every column");
  std::vector<bool> seen(ds.cols(), false);
  for (std::size_t c : importance_order) {
    require(c < ds.cols() && !seen[c], "importance order is not a permutation of the columns");
    seen[c] = true;
  }
  if (n_features > ds.cols()) {
    if (warnings) {
      warnings->push_back("requested " + std::to_string(n_features) + " features but only " +
                          std::to_string(ds.cols()) + " exist; clamped");
    }
    n_features = ds.cols();
  }
  require(n_features >= 1, "n_features must be at least 1");
  std::vector<std::size_t> kept(importance_order.begin(), importance_order.begin() + static_cast<std::ptrdiff_t>(n_features));
  std::sort(kept.begin(), kept.end());
  return select_columns(ds, kept);
}

namespace {

// Scores of a raw-space 10-NN vote for every validation row, given the full
// validation x fit squared distance matrix.
void knn_vote_scores(const Matrix& dist, const std::vector<int>& fit_labels, int n_classes, std::size_t k,
                     std::vector<double>& probs) {
  const Eigen::Index nv = dist.rows();
  const Eigen::Index nf = dist.cols();
  probs.assign(static_cast<std::size_t>(nv) * static_cast<std::size_t>(n_classes), 0.0);
  std::vector<std::pair<double, Eigen::Index>> best;
  for (Eigen::Index i = 0; i < nv; ++i) {
    best.clear();
    for (Eigen::Index j = 0; j < nf; ++j) {
      const std::pair<double, Eigen::Index> cand{dist(i, j), j};
      if (best.size() < k) {
        best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
      } else if (cand < best.back()) {
        best.pop_back();
        best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
      }
    }
    for (const auto& [d, j] : best) {
      probs[static_cast<std::size_t>(i) * n_classes + fit_labels[static_cast<std::size_t>(j)]] += 1.0 / best.size();
    }
  }
}

double vote_auroc(const std::vector<double>& probs, const std::vector<int>& labels, int n_classes) {
  if (n_classes == 2) {
    std::vector<double> pos(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) pos[i] = probs[i * 2 + 1];
    return auroc(pos, labels);
  }
  return auroc_ovr_macro(probs, labels, n_classes);
}

}  // namespace

FeatureImportance rank_feature_importance(const TabularDataset& ds, std::uint64_t seed) {
  require(ds.task.is_classification(), "feature importance needs a classification task");
  constexpr std::size_t kNeighbors = 10;
  const auto split = stratified_split(ds, {0.75, 0.25}, seed);
  const int C = ds.task.n_classes;

  Matrix fit(static_cast<Eigen::Index>(split.train_idx.size()), ds.features.cols());
  Matrix val(static_cast<Eigen::Index>(split.test_idx.size()), ds.features.cols());
  std::vector<int> fit_labels, val_labels;
  for (std::size_t i = 0; i < split.train_idx.size(); ++i) {
    fit.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(split.train_idx[i]));
    fit_labels.push_back(ds.class_of(split.train_idx[i]));
  }
  for (std::size_t i = 0; i < split.test_idx.size(); ++i) {
    val.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(split.test_idx[i]));
    val_labels.push_back(ds.class_of(split.test_idx[i]));
  }
  fit = fit.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
  val = val.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
  const std::size_t k = std::min(kNeighbors, static_cast<std::size_t>(fit.rows()));

  Matrix dist(val.rows(), fit.rows());
  for (Eigen::Index i = 0; i < val.rows(); ++i) {
    dist.row(i) = (fit.rowwise() - val.row(i)).rowwise().squaredNorm().transpose();
  }
  std::vector<double> probs;
  knn_vote_scores(dist, fit_labels, C, k, probs);
  const double base = vote_auroc(probs, val_labels, C);

  FeatureImportance result;
  result.importance.assign(ds.cols(), 0.0);
  Rng rng(derive_seed(seed, 1));
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(val.rows()));
  Matrix shuffled(dist.rows(), dist.cols());
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto fj = fit.col(static_cast<Eigen::Index>(j));
    for (Eigen::Index i = 0; i < val.rows(); ++i) {
      const double old_v = val(i, static_cast<Eigen::Index>(j));
      const double new_v = val(perm[static_cast<std::size_t>(i)], static_cast<Eigen::Index>(j));
      shuffled.row(i) = dist.row(i) - (fj.array() - old_v).square().matrix().transpose() +
                        (fj.array() - new_v).square().matrix().transpose();
    }
    knn_vote_scores(shuffled, fit_labels, C, k, probs);
    result.importance[j] = base - vote_auroc(probs, val_labels, C);
  }
  result.order.resize(ds.cols());
  std::iota(result.order.begin(), result.order.end(), 0);
  std::stable_sort(result.order.begin(), result.order.end(), [&](std::size_t a, std::size_t b) {
    return result.importance[a] > result.importance[b];
  });
  return result;
}

std::vector<int> quantile_bins(const std::vector<double>& values, int n_bins) {
  require(n_bins >= 1, "need at least one bin");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (int b = 1; b < n_bins; ++b) {
    cuts.push_back(sorted[static_cast<std::size_t>(b) * sorted.size() / static_cast<std::size_t>(n_bins)]);
  }
  std::vector<int> bins(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    bins[i] = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin());
  }
  // Compact away empty bins so labels stay dense.
  std::vector<int> remap(static_cast<std::size_t>(n_bins), -1);
  int next = 0;
  std::vector<int> present(static_cast<std::size_t>(n_bins), 0);
  for (int b : bins) present[static_cast<std::size_t>(b)] = 1;
  for (int b = 0; b < n_bins; ++b) {
    if (present[static_cast<std::size_t>(b)]) remap[static_cast<std::size_t>(b)] = next++;
  }
  for (int& b : bins) b = remap[static_cast<std::size_t>(b)];
  return bins;
}

std::uint64_t dataset_hash(const TabularDataset& ds) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const std::uint64_t id = ds.row_ids.empty() ? r : ds.row_ids[r];
    h = fnv1a(&id, sizeof(id), h);
    h = fnv1a(&ds.labels[r], sizeof(double), h);
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
      const double v = ds.features(static_cast<Eigen::Index>(r), j);
      h = fnv1a(&v, sizeof(double), h);
    }
  }
  return h;
}

}  // namespace aware
