#include "harness.hpp"

#include "metrics.hpp"
#include "pipeline.hpp"
#include "retrieval.hpp"
#include "serialization.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace aware {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::pair<Protocol, std::string>>& protocol_table() {
  static const std::vector<std::pair<Protocol, std::string>> table = {{Protocol::data_scale, "data_scale"},
                                                                      {Protocol::heterogeneity, "heterogeneity"},
                                                                      {Protocol::rarity, "rarity"},
                                                                      {Protocol::ablation, "ablation"},
                                                                      {Protocol::single, "single"}};
  return table;
}

const std::vector<std::pair<Variant, std::string>>& variant_table() {
  static const std::vector<std::pair<Variant, std::string>> table = {{Variant::baseline_raw_knn, "baseline_raw_knn"},
                                                                     {Variant::attention, "+attention"},
                                                                     {Variant::snnl, "+snnl"},
                                                                     {Variant::balanced, "+balanced"},
                                                                     {Variant::ensemble, "+ensemble"},
                                                                     {Variant::adapter, "+adapter"}};
  return table;
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

json synthetic_json(const SyntheticSpec& s) {
  return {{"n_rows", s.n_rows},         {"n_informative", s.n_informative}, {"n_noise", s.n_noise},
          {"n_classes", s.n_classes},   {"class_sep", s.class_sep},         {"imbalance_ratio", s.imbalance_ratio},
          {"seed", s.seed}};
}

SyntheticSpec synthetic_from(const json& j, SyntheticSpec s) {
  s.n_rows = j.value("n_rows", s.n_rows);
  s.n_informative = j.value("n_informative", s.n_informative);
  s.n_noise = j.value("n_noise", s.n_noise);
  s.n_classes = j.value("n_classes", s.n_classes);
  s.class_sep = j.value("class_sep", s.class_sep);
  s.imbalance_ratio = j.value("imbalance_ratio", s.imbalance_ratio);
  s.seed = j.value("seed", s.seed);
  return s;
}

// Result-affecting fields only, in a fixed key order (nlohmann sorts keys).
json config_json(const ExperimentConfig& c) {
  json source;
  if (!c.source.csv_path.empty()) {
    source = {{"csv", c.source.csv_path}, {"manifest", c.source.manifest_path}};
  } else {
    source = {{"synthetic", synthetic_json(c.effective_synthetic())}};
  }
  json variants = json::array();
  for (Variant v : c.effective_variants()) variants.push_back(to_string(v));
  json vote = {{"epsilon", c.vote.epsilon}};
  vote["tau"] = c.vote.tau ? json(*c.vote.tau) : json(nullptr);
  return {{"protocol", to_string(c.protocol)},
          {"source", source},
          {"sweep", c.effective_sweep()},
          {"variants", variants},
          {"seeds", c.seeds},
          {"seed", c.seed},
          {"k", c.k},
          {"test_size", c.test_size},
          {"train_size", c.effective_train_size()},
          {"ensemble_k", c.ensemble_k},
          {"train", json::parse(train_config_to_json(c.train))},
          {"adapter",
           {{"epochs", c.adapter.epochs},
            {"learning_rate", c.adapter.learning_rate},
            {"weight_decay", c.adapter.weight_decay},
            {"context_size", c.adapter.context_size},
            {"prompts_per_epoch", c.adapter.prompts_per_epoch},
            {"prompt_batch", c.adapter.prompt_batch},
            {"retrieval_threshold", c.adapter.retrieval_threshold}}},
          {"vote", vote}};
}

// Metrics and timing of one variant within one job.
struct VariantOutcome {
  std::vector<double> metrics;
  double wall_time = 0.0;
};

struct JobSpec {
  std::size_t sweep_index = 0;
  double sweep_value = 0.0;
  int seed_index = 0;
};

struct PreparedJob {
  TabularDataset train;
  TabularDataset test;
};

class JobRunner {
 public:
  JobRunner(const ExperimentConfig& config, const TabularDataset& train, const TabularDataset& test,
            std::uint64_t seed)
      : config_(config), train_(train), test_(test), seed_(seed), n_classes_(train.task.n_classes) {}

  VariantOutcome run(Variant v) {
    const auto start = std::chrono::steady_clock::now();
    const StageFlags f = stage_flags(v);
    Matrix train_space, test_space;
    const AdapterParams* adapter = nullptr;
    AdapterParams trained_adapter;
    if (!f.snnl) {
      if (f.attention) {
        Rng rng(derive_seed(seed_, 0xA77E));
        const EncoderParams gate = init_encoder(dims(), rng);
        train_space = gate_batch(gate, train_.features).cwiseProduct(train_.features);
        test_space = gate_batch(gate, test_.features).cwiseProduct(test_.features);
      } else {
        train_space = train_.features;
        test_space = test_.features;
      }
    } else {
      const EncoderEnsemble& ens = ensemble(f.balanced ? Sampling::balanced : Sampling::uniform,
                                            f.ensemble ? config_.ensemble_k : 1);
      train_space = ensemble_embed(ens, train_.features);
      test_space = ensemble_embed(ens, test_.features);
    }
    const EmbeddingIndex index = build_index(train_space, train_.labels, train_.row_ids, config_.train.distance);
    if (f.adapter) {
      AdapterConfig ac = config_.adapter;
      ac.seed = derive_seed(seed_, 0xADA9);
      ac.vote = vote();
      trained_adapter = train_adapter(index, ac).params;
      adapter = &trained_adapter;
    }
    KnnVoteBackbone backbone(vote());
    const auto outputs = predict_embedded(index, test_space, adapter, config_.k, backbone);
    std::vector<double> p10(test_.rows());
    const std::size_t k10 = std::min<std::size_t>(10, index.size());
    for (std::size_t i = 0; i < test_.rows(); ++i) {
      p10[i] = precision_at_k(index, test_space.row(static_cast<Eigen::Index>(i)).transpose(), test_.labels[i], k10);
    }
    VariantOutcome out;
    out.metrics = score_predictions(outputs, test_.labels, p10, n_classes_);
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }

 private:
  EncoderDims dims() const {
    return {static_cast<int>(train_.cols()), config_.train.gate_hidden, config_.train.embed_hidden,
            config_.train.embed_dim};
  }

  VoteConfig vote() const {
    VoteConfig v = config_.vote;
    v.n_classes = n_classes_;
    return v;
  }

  const EncoderEnsemble& ensemble(Sampling sampling, int k) {
    const auto key = std::make_pair(static_cast<int>(sampling), k);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    TrainConfig tc = config_.train;
    tc.sampling = sampling;
    tc.seed = derive_seed(seed_, 0xE7C0);
    return cache_.emplace(key, train_ensemble(train_, all_rows(train_), tc, k)).first->second;
  }

  const ExperimentConfig& config_;
  const TabularDataset& train_;
  const TabularDataset& test_;
  std::uint64_t seed_;
  int n_classes_;
  std::map<std::pair<int, int>, EncoderEnsemble> cache_;
};

// Filtering and preprocessing fitted on the training rows, replayed on the
// test rows.
PreparedJob prepare(const TabularDataset& source, const std::vector<std::size_t>& train_rows,
                    const std::vector<std::size_t>& test_rows, const std::vector<std::size_t>* columns) {
  std::vector<std::size_t> rows = train_rows;
  rows.insert(rows.end(), test_rows.begin(), test_rows.end());
  TabularDataset combined = select_rows(source, rows);
  if (columns) combined = select_columns(combined, *columns);
  std::vector<std::size_t> train_idx(train_rows.size());
  std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
  std::vector<std::size_t> test_idx(test_rows.size());
  std::iota(test_idx.begin(), test_idx.end(), train_rows.size());
  combined = preprocess(filter_features(combined, train_idx), train_idx);
  return {select_rows(combined, train_idx), select_rows(combined, test_idx)};
}

struct Experiment {
  TabularDataset source;
  std::vector<std::size_t> pool;  // positions in source
  std::vector<std::size_t> test;
  std::vector<std::string> warnings;
  std::uint64_t test_hash = 0;
};

Experiment setup(const ExperimentConfig& config) {
  Experiment e;
  if (!config.source.csv_path.empty()) {
    if (config.source.manifest_path.empty()) fail(ErrorKind::config, "a CSV source needs a manifest");
    e.source = load_csv(config.source.csv_path, load_manifest(config.source.manifest_path));
  } else {
    SyntheticDataset syn = make_synthetic(config.effective_synthetic());
    e.source = std::move(syn.data);
    e.warnings = std::move(syn.warnings);
  }
  if (!e.source.task.is_classification()) fail(ErrorKind::config, "stress protocols need a classification task");
  const std::size_t n = e.source.rows();
  if (config.test_size < 1 || config.test_size >= n) {
    fail(ErrorKind::data, "test_size " + std::to_string(config.test_size) + " must be between 1 and " +
                              std::to_string(n - 1) + " for a source of " + std::to_string(n) + " rows");
  }
  const double test_fraction = static_cast<double>(config.test_size) / static_cast<double>(n);
  const SplitSpec split = stratified_split(e.source, {1.0 - test_fraction, test_fraction}, derive_seed(config.seed, 0x7E57));
  e.pool = split.train_idx;
  e.test = split.test_idx;
  e.test_hash = dataset_hash(select_rows(e.source, e.test));
  return e;
}

std::vector<int> classes_of(const TabularDataset& source, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(source.class_of(r));
  return out;
}

std::vector<std::size_t> pick(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& positions) {
  std::vector<std::size_t> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(rows[p]);
  return out;
}

using TrainRowsFn = std::function<std::vector<std::size_t>(const JobSpec&, std::uint64_t job_seed)>;
using ColumnsFn = std::function<const std::vector<std::size_t>*(const JobSpec&)>;

StressReport run_protocol(const ExperimentConfig& config, const Experiment& e, const TrainRowsFn& train_rows,
                          const ColumnsFn& columns) {
  const auto sweep = config.effective_sweep();
  const auto variants = config.effective_variants();
  StressReport report;
  report.protocol = to_string(config.protocol);
  report.config_hash = config_hash(config);
  report.config_json = config_json(config).dump();
  report.test_hash = e.test_hash;
  report.warnings = e.warnings;
  report.record_timings = config.record_timings;
  for (Variant v : variants) report.variant_order.push_back(to_string(v));
  report.metric_order = metric_names(e.source.task.n_classes);
  for (int s = 0; s < config.seeds; ++s) report.seeds.push_back(derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(s)));

  std::vector<JobSpec> jobs;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    for (int s = 0; s < config.seeds; ++s) jobs.push_back({i, sweep[i], s});
  }
  std::vector<std::vector<ReportRow>> job_rows(jobs.size());
  std::vector<std::optional<std::string>> job_errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const JobSpec& spec = jobs[j];
      const std::uint64_t job_seed = report.seeds[static_cast<std::size_t>(spec.seed_index)];
      try {
        const PreparedJob data = prepare(e.source, train_rows(spec, job_seed), e.test, columns(spec));
        JobRunner runner(config, data.train, data.test, job_seed);
        for (Variant v : variants) {
          const VariantOutcome out = runner.run(v);
          for (std::size_t m = 0; m < out.metrics.size(); ++m) {
            job_rows[j].push_back({report.protocol, spec.sweep_value, to_string(v), spec.seed_index,
                                   report.metric_order[m], out.metrics[m], out.wall_time});
          }
        }
      } catch (const std::exception& ex) {
        job_rows[j].clear();
        job_errors[j] = ex.what();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (job_errors[j]) {
      report.failures.push_back({jobs[j].sweep_value, jobs[j].seed_index, *job_errors[j]});
    } else {
      report.rows.insert(report.rows.end(), job_rows[j].begin(), job_rows[j].end());
    }
  }
  auto rank = [](const std::vector<std::string>& order, const std::string& name) {
    return std::find(order.begin(), order.end(), name) - order.begin();
  };
  std::stable_sort(report.rows.begin(), report.rows.end(), [&](const ReportRow& a, const ReportRow& b) {
    return std::make_tuple(a.sweep_value, rank(report.variant_order, a.variant), a.seed, rank(report.metric_order, a.metric)) <
           std::make_tuple(b.sweep_value, rank(report.variant_order, b.variant), b.seed, rank(report.metric_order, b.metric));
  });
  return report;
}

std::vector<std::size_t> pool_subset(const Experiment& e, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n >= e.pool.size()) return e.pool;
  return pick(e.pool, stratified_subsample(classes_of(e.source, e.pool), n, seed));
}

const std::vector<std::size_t>* no_columns(const JobSpec&) { return nullptr; }

}  // namespace

std::string to_string(Protocol p) {
  for (const auto& [value, name] : protocol_table()) {
    if (value == p) return name;
  }
  return "unknown";
}

std::vector<std::string> protocol_names() {
  std::vector<std::string> out;
  for (const auto& entry : protocol_table()) out.push_back(entry.second);
  return out;
}

Protocol protocol_from_string(const std::string& name) {
  for (const auto& [value, text] : protocol_table()) {
    if (text == name) return value;
  }
  std::string allowed;
  for (const auto& n : protocol_names()) allowed += (allowed.empty() ? "" : ", ") + n;
  fail(ErrorKind::config, "unknown protocol '" + name + "' (allowed: " + allowed + ")");
}

std::string to_string(Variant v) {
  for (const auto& [value, name] : variant_table()) {
    if (value == v) return name;
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  for (const auto& [value, text] : variant_table()) {
    if (text == name) return value;
  }
  std::string allowed;
  for (const auto& entry : variant_table()) allowed += (allowed.empty() ? "" : ", ") + entry.second;
  fail(ErrorKind::config, "unknown variant '" + name + "' (allowed: " + allowed + ")");
}

StageFlags stage_flags(Variant v) {
  StageFlags f;
  const int level = static_cast<int>(v);
  f.attention = level >= static_cast<int>(Variant::attention);
  f.snnl = level >= static_cast<int>(Variant::snnl);
  f.balanced = level >= static_cast<int>(Variant::balanced);
  f.ensemble = level >= static_cast<int>(Variant::ensemble);
  f.adapter = level >= static_cast<int>(Variant::adapter);
  return f;
}

const std::vector<Variant>& ladder() {
  static const std::vector<Variant> all = {Variant::baseline_raw_knn, Variant::attention, Variant::snnl,
                                           Variant::balanced,         Variant::ensemble,  Variant::adapter};
  return all;
}

SyntheticSpec default_synthetic(Protocol p) {
  switch (p) {
    case Protocol::data_scale:
      return {52000, 5, 95, 2, 3.0, 10.0, 0};
    case Protocol::heterogeneity:
      return {7000, 5, 495, 2, 3.0, 10.0, 0};
    case Protocol::rarity:
      return {16000, 5, 25, 2, 3.0, 4.0, 0};
    case Protocol::ablation:
    case Protocol::single:
      break;
  }
  return {7000, 5, 95, 2, 3.0, 10.0, 0};
}

std::vector<double> default_sweep(Protocol p) {
  switch (p) {
    case Protocol::data_scale:
      return {1000, 2000, 5000, 10000, 20000, 50000};
    case Protocol::heterogeneity:
      return {10, 25, 50, 100, 200, 500};
    case Protocol::rarity:
      return {5, 10, 20, 50, 100, 200, 500};
    case Protocol::ablation:
    case Protocol::single:
      break;
  }
  return {0};
}

std::vector<Variant> default_variants(Protocol p) {
  if (p == Protocol::ablation) return ladder();
  return {Variant::baseline_raw_knn, Variant::balanced};
}

void ExperimentConfig::validate() const {
  if (seeds < 1) fail(ErrorKind::config, "seeds must be at least 1");
  if (k < 1) fail(ErrorKind::config, "context size k must be at least 1");
  if (ensemble_k < 1) fail(ErrorKind::config, "ensemble_k must be at least 1");
  if (jobs < 1) fail(ErrorKind::config, "jobs must be at least 1");
  const auto s = effective_sweep();
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!(s[i] > s[i - 1])) fail(ErrorKind::config, "sweep values must be strictly increasing");
  }
  if ((protocol == Protocol::ablation || protocol == Protocol::single) && s.size() != 1) {
    fail(ErrorKind::config, to_string(protocol) + " runs a single configuration; give at most one sweep value");
  }
  for (double v : s) {
    if (!std::isfinite(v) || v < 0) fail(ErrorKind::config, "sweep values must be finite and non-negative");
    if (protocol == Protocol::rarity && v < 1) fail(ErrorKind::config, "imbalance ratios must be >= 1");
    if ((protocol == Protocol::data_scale || protocol == Protocol::heterogeneity) &&
        (v < 1 || v != std::floor(v))) {
      fail(ErrorKind::config, "sweep values for " + to_string(protocol) + " must be positive integers");
    }
  }
  const auto vars = effective_variants();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (vars[i] == vars[j]) fail(ErrorKind::config, "variant '" + to_string(vars[i]) + "' listed twice");
    }
  }
  try {
    train.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, e.what());
  }
  if (adapter.epochs < 1) fail(ErrorKind::config, "adapter epochs must be at least 1");
  if (vote.tau && !(*vote.tau > 0.0)) fail(ErrorKind::config, "vote tau must be positive");
}

std::vector<double> ExperimentConfig::effective_sweep() const { return sweep.empty() ? default_sweep(protocol) : sweep; }

std::vector<Variant> ExperimentConfig::effective_variants() const {
  return variants.empty() ? default_variants(protocol) : variants;
}

SyntheticSpec ExperimentConfig::effective_synthetic() const {
  return source.synthetic ? *source.synthetic : default_synthetic(protocol);
}

std::size_t ExperimentConfig::effective_train_size() const {
  if (train_size == 0 && protocol == Protocol::rarity) return 10000;
  return train_size;
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json j = config_json(config);
  j["jobs"] = config.jobs;
  j["output_dir"] = config.output_dir;
  j["record_timings"] = config.record_timings;
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("experiment config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::config, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    if (j.contains("protocol")) c.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    if (j.contains("source")) {
      const json& s = j.at("source");
      if (s.contains("csv")) {
        c.source.csv_path = s.at("csv").get<std::string>();
        c.source.manifest_path = s.value("manifest", std::string());
      } else if (s.contains("synthetic")) {
        c.source.synthetic = synthetic_from(s.at("synthetic"), default_synthetic(c.protocol));
      }
    }
    if (j.contains("sweep")) c.sweep = j.at("sweep").get<std::vector<double>>();
    if (j.contains("variants")) {
      for (const auto& v : j.at("variants")) c.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    c.seeds = j.value("seeds", c.seeds);
    c.seed = j.value("seed", c.seed);
    c.k = j.value("k", c.k);
    c.test_size = j.value("test_size", c.test_size);
    c.train_size = j.value("train_size", c.train_size);
    c.ensemble_k = j.value("ensemble_k", c.ensemble_k);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train").dump());
    if (j.contains("adapter")) {
      const json& a = j.at("adapter");
      c.adapter.epochs = a.value("epochs", c.adapter.epochs);
      c.adapter.learning_rate = a.value("learning_rate", c.adapter.learning_rate);
      c.adapter.weight_decay = a.value("weight_decay", c.adapter.weight_decay);
      c.adapter.context_size = a.value("context_size", c.adapter.context_size);
      c.adapter.prompts_per_epoch = a.value("prompts_per_epoch", c.adapter.prompts_per_epoch);
      c.adapter.prompt_batch = a.value("prompt_batch", c.adapter.prompt_batch);
      c.adapter.retrieval_threshold = a.value("retrieval_threshold", c.adapter.retrieval_threshold);
    }
    if (j.contains("vote")) {
      const json& v = j.at("vote");
      c.vote.epsilon = v.value("epsilon", c.vote.epsilon);
      if (v.contains("tau") && !v.at("tau").is_null()) c.vote.tau = v.at("tau").get<double>();
    }
    c.jobs = j.value("jobs", c.jobs);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.record_timings = j.value("record_timings", c.record_timings);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("experiment config has a malformed field: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t config_hash(const ExperimentConfig& config) { return fnv1a(config_json(config).dump()); }

std::vector<std::size_t> stratified_subsample(const std::vector<int>& classes, std::size_t n, std::uint64_t seed) {
  require(n <= classes.size(), "subsample larger than the population");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < classes.size(); ++i) by_class[classes[i]].push_back(i);
  std::vector<std::size_t> take;
  std::vector<std::pair<double, int>> remainders;
  std::size_t assigned = 0;
  int slot = 0;
  for (const auto& [c, rows] : by_class) {
    const double exact = static_cast<double>(n) * static_cast<double>(rows.size()) / static_cast<double>(classes.size());
    take.push_back(static_cast<std::size_t>(std::floor(exact)));
    assigned += take.back();
    remainders.push_back({exact - std::floor(exact), slot++});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) take[static_cast<std::size_t>(remainders[i].second)]++;
  Rng rng(seed);
  std::vector<std::size_t> out;
  std::size_t c = 0;
  for (auto& [label, rows] : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    out.insert(out.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take[c++]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> metric_names(int n_classes) {
  if (n_classes == 2) return {"auroc", "auprc", "f1", "precision_at_10"};
  return {"auroc", "accuracy", "f1", "precision_at_10"};
}

std::vector<double> score_predictions(const std::vector<BackboneOutput>& outputs, const std::vector<double>& labels,
                                      const std::vector<double>& precision_at_10, int n_classes) {
  require(outputs.size() == labels.size() && labels.size() == precision_at_10.size(), "score inputs differ in length");
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = static_cast<int>(labels[i]);
  if (n_classes == 2) {
    std::vector<double> s(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) s[i] = outputs[i].class_probs[1];
    // Precision@10 follows the positive-query definition for binary tasks.
    double p = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == 1) {
        p += precision_at_10[i];
        ++n_pos;
      }
    }
    return {auroc(s, y), auprc(s, y), f1_binary(s, y), n_pos ? p / static_cast<double>(n_pos) : kNaN};
  }
  std::vector<double> probs;
  std::vector<int> predicted;
  for (const auto& o : outputs) {
    probs.insert(probs.end(), o.class_probs.begin(), o.class_probs.end());
    predicted.push_back(static_cast<int>(std::max_element(o.class_probs.begin(), o.class_probs.end()) -
                                         o.class_probs.begin()));
  }
  const double p = std::accumulate(precision_at_10.begin(), precision_at_10.end(), 0.0) /
                   static_cast<double>(precision_at_10.size());
  return {auroc_ovr_macro(probs, y, n_classes), accuracy(predicted, y), f1_macro(predicted, y, n_classes), p};
}

StressReport run_data_scale(const ExperimentConfig& config) {
  config.validate();
  const Experiment e = setup(config);
  const auto sweep = config.effective_sweep();
  std::vector<double> feasible;
  for (double n : sweep) {
    if (static_cast<std::size_t>(n) <= e.pool.size()) feasible.push_back(n);
  }
  if (feasible.size() != sweep.size()) {
    std::string prefix;
    for (double n : feasible) prefix += (prefix.empty() ? "" : ",") + format_double(n);
    fail(ErrorKind::data, "training pool has " + std::to_string(e.pool.size()) +
                              " rows; feasible sweep prefix: {" + prefix + "}");
  }
  return run_protocol(
      config, e,
      [&](const JobSpec& spec, std::uint64_t seed) {
        return pool_subset(e, static_cast<std::size_t>(spec.sweep_value), derive_seed(seed, std::bit_cast<std::uint64_t>(spec.sweep_value)));
      },
      no_columns);
}

StressReport run_heterogeneity(const ExperimentConfig& config) {
  config.validate();
  Experiment e = setup(config);
  // Importance is ranked once on the whole training pool.
  const TabularDataset pool = select_rows(e.source, e.pool);
  const TabularDataset ranked_on = preprocess(pool, all_rows(pool));
  const FeatureImportance importance = rank_feature_importance(ranked_on, derive_seed(config.seed, 0x1A));
  const auto sweep = config.effective_sweep();
  std::vector<std::vector<std::size_t>> columns;
  for (double v : sweep) {
    std::size_t n = static_cast<std::size_t>(v);
    if (n > e.source.cols()) {
      e.warnings.push_back("n_features " + std::to_string(n) + " exceeds the " + std::to_string(e.source.cols()) +
                           " available columns; clamped");
      n = e.source.cols();
    }
    columns.emplace_back(importance.order.begin(), importance.order.begin() + static_cast<std::ptrdiff_t>(n));
  }
  const std::size_t train_size = config.effective_train_size();
  return run_protocol(
      config, e, [&](const JobSpec&, std::uint64_t seed) { return pool_subset(e, train_size, derive_seed(seed, 0)); },
      [&](const JobSpec& spec) { return &columns[spec.sweep_index]; });
}

StressReport run_rarity(const ExperimentConfig& config) {
  config.validate();
  const Experiment e = setup(config);
  const std::size_t train_size = config.effective_train_size();
  const TabularDataset pool = select_rows(e.source, e.pool);
  for (double ir : config.effective_sweep()) apply_rarity(pool, train_size, ir, 0);  // feasibility check
  std::unordered_map<std::size_t, std::size_t> position;
  for (std::size_t i = 0; i < pool.rows(); ++i) position[pool.row_ids[i]] = e.pool[i];
  return run_protocol(
      config, e,
      [&](const JobSpec& spec, std::uint64_t seed) {
        const TabularDataset sub = apply_rarity(pool, train_size, spec.sweep_value, derive_seed(seed, std::bit_cast<std::uint64_t>(spec.sweep_value)));
        std::vector<std::size_t> rows;
        rows.reserve(sub.rows());
        for (std::size_t id : sub.row_ids) rows.push_back(position.at(id));
        std::sort(rows.begin(), rows.end());
        return rows;
      },
      no_columns);
}

static StressReport run_single_point(const ExperimentConfig& config) {
  config.validate();
  const Experiment e = setup(config);
  const std::size_t train_size = config.effective_train_size();
  return run_protocol(
      config, e, [&](const JobSpec&, std::uint64_t seed) { return pool_subset(e, train_size, derive_seed(seed, 0)); },
      no_columns);
}

StressReport run_ablation(const ExperimentConfig& config) {
  if (config.protocol != Protocol::ablation) fail(ErrorKind::config, "run_ablation needs protocol ablation");
  return run_single_point(config);
}

StressReport run_experiment(const ExperimentConfig& config) {
  switch (config.protocol) {
    case Protocol::data_scale:
      return run_data_scale(config);
    case Protocol::heterogeneity:
      return run_heterogeneity(config);
    case Protocol::rarity:
      return run_rarity(config);
    case Protocol::ablation:
      return run_ablation(config);
    case Protocol::single:
      return run_single_point(config);
  }
  fail(ErrorKind::internal, "unhandled protocol");
}

std::vector<double> StressReport::values(double sweep_value, const std::string& variant,
                                         const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.sweep_value == sweep_value && r.variant == variant && r.metric == metric) out.push_back(r.value);
  }
  return out;
}

std::vector<AggregateRow> StressReport::aggregates() const {
  std::vector<AggregateRow> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
      return a.sweep_value == r.sweep_value && a.variant == r.variant && a.metric == r.metric;
    });
    if (it != out.end()) continue;
    AggregateRow a{protocol, r.sweep_value, r.variant, r.metric, 0, 0.0, 0.0, kNaN};
    const auto v = values(r.sweep_value, r.variant, r.metric);
    a.n = v.size();
    a.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - a.mean) * (x - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(v.size()));
    out.push_back(a);
  }
  for (auto& a : out) {
    auto base = std::find_if(out.begin(), out.end(), [&](const AggregateRow& b) {
      return b.sweep_value == a.sweep_value && b.variant == to_string(Variant::baseline_raw_knn) && b.metric == a.metric;
    });
    if (base != out.end() && base->mean != 0.0) a.pct_change_vs_baseline = 100.0 * (a.mean - base->mean) / std::abs(base->mean);
  }
  return out;
}

std::string rows_csv(const StressReport& report) {
  std::ostringstream out;
  out << "protocol,sweep_value,variant,seed,metric,value" << (report.record_timings ? ",wall_time" : "") << '\n';
  for (const auto& r : report.rows) {
    out << r.protocol << ',' << format_double(r.sweep_value) << ',' << r.variant << ',' << r.seed << ',' << r.metric
        << ',' << format_double(r.value);
    if (report.record_timings) out << ',' << format_double(r.wall_time);
    out << '\n';
  }
  return out.str();
}

std::string aggregates_csv(const StressReport& report) {
  std::ostringstream out;
  out << "protocol,sweep_value,variant,metric,n,mean,std,pct_change_vs_baseline\n";
  for (const auto& a : report.aggregates()) {
    out << a.protocol << ',' << format_double(a.sweep_value) << ',' << a.variant << ',' << a.metric << ',' << a.n << ','
        << format_double(a.mean) << ',' << format_double(a.std) << ',' << format_double(a.pct_change_vs_baseline)
        << '\n';
  }
  return out.str();
}

std::string provenance_json(const StressReport& report) {
  json seeds = json::array();
  for (auto s : report.seeds) seeds.push_back(hex(s));
  json j = {{"artifact_version", kArtifactVersion},
            {"protocol", report.protocol},
            {"config_hash", hex(report.config_hash)},
            {"config", report.config_json.empty() ? json::object() : json::parse(report.config_json)},
            {"seeds", seeds},
            {"test_set_hash", hex(report.test_hash)},
            {"rows", report.rows.size()},
            {"failed_jobs", report.failures.size()},
            {"complete", report.complete()},
            {"warnings", report.warnings},
            {"std_convention", "population"}};
  return j.dump(2) + "\n";
}

std::string failures_json(const StressReport& report) {
  json arr = json::array();
  for (const auto& f : report.failures) arr.push_back({{"sweep_value", f.sweep_value}, {"seed", f.seed}, {"error", f.error}});
  return arr.dump(2) + "\n";
}

std::string summary_text(const StressReport& report) {
  std::ostringstream out;
  out << "protocol: " << report.protocol << "\n";
  out << "config hash: " << hex(report.config_hash) << "  test set hash: " << hex(report.test_hash) << "\n";
  out << "seeds: " << report.seeds.size() << "  rows: " << report.rows.size()
      << "  failed jobs: " << report.failures.size() << "\n\n";
  out << std::left << std::setw(12) << "sweep" << std::setw(18) << "variant" << std::setw(17) << "metric"
      << std::right << std::setw(10) << "mean" << std::setw(10) << "std" << std::setw(12) << "vs base %" << "\n";
  for (const auto& a : report.aggregates()) {
    std::ostringstream pct;
    if (std::isnan(a.pct_change_vs_baseline)) {
      pct << "NA";
    } else {
      pct << std::fixed << std::setprecision(2) << a.pct_change_vs_baseline;
    }
    out << std::left << std::setw(12) << format_double(a.sweep_value) << std::setw(18) << a.variant << std::setw(17)
        << a.metric << std::right << std::fixed << std::setprecision(4) << std::setw(10) << a.mean << std::setw(10)
        << a.std << std::setw(12) << pct.str() << "\n";
    out.unsetf(std::ios::fixed);
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  for (const auto& f : report.failures) {
    out << "failed: sweep " << format_double(f.sweep_value) << " seed " << f.seed << ": " << f.error << "\n";
  }
  return out.str();
}

void prepare_output_dir(const std::string& dir, bool force) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) fail(ErrorKind::config, "output path '" + dir + "' is not a directory");
    if (!fs::is_empty(dir, ec) && !force) {
      fail(ErrorKind::config, "output directory '" + dir + "' is not empty (use --force to overwrite)");
    }
    return;
  }
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory '" + dir + "': " + ec.message());
}

void emit_report(const StressReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory '" + dir + "': " + ec.message());
  const fs::path root(dir);
  write_text_file((root / "rows.csv").string(), rows_csv(report));
  write_text_file((root / "aggregates.csv").string(), aggregates_csv(report));
  write_text_file((root / "provenance.json").string(), provenance_json(report));
  write_text_file((root / "summary.txt").string(), summary_text(report));
  const fs::path failures = root / "failures.json";
  if (!report.complete()) {
    write_text_file(failures.string(), failures_json(report));
  } else if (fs::exists(failures, ec)) {
    fs::remove(failures, ec);
  }
}

}  // namespace aware
