#include "aware/aware.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;

namespace {

enum ExitCode { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitPartial = 4, kExitInternal = 5 };

int exit_code_for(aware_status status) {
  switch (status) {
    case AWARE_OK:
      return kExitOk;
    case AWARE_ERR_INVALID_ARGUMENT:
    case AWARE_ERR_CONFIG:
      return kExitUsage;
    case AWARE_ERR_DATA:
    case AWARE_ERR_IO:
    case AWARE_ERR_NUMERIC:
    case AWARE_ERR_BACKBONE:
      return kExitData;
    case AWARE_ERR_PARTIAL:
      return kExitPartial;
    case AWARE_ERR_INTERNAL:
      return kExitInternal;
  }
  return kExitInternal;
}

// Thrown to unwind a subcommand once the diagnostic has been printed.
struct Exit {
  int code;
};

void check(aware_status status) {
  if (status == AWARE_OK) return;
  std::cerr << "aware: " << aware_status_name(status) << ": " << aware_last_error() << "\n";
  throw Exit{exit_code_for(status)};
}

[[noreturn]] void usage_error(const std::string& what) {
  std::cerr << "aware: configuration error: " << what << "\n";
  throw Exit{kExitUsage};
}

struct StringDeleter {
  void operator()(char* s) const { aware_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct DatasetDeleter {
  void operator()(aware_dataset* p) const { aware_dataset_free(p); }
};
struct ModelDeleter {
  void operator()(aware_model* p) const { aware_model_free(p); }
};
struct IndexDeleter {
  void operator()(aware_index* p) const { aware_index_free(p); }
};
struct AdapterDeleter {
  void operator()(aware_adapter* p) const { aware_adapter_free(p); }
};
using Dataset = std::unique_ptr<aware_dataset, DatasetDeleter>;
using Model = std::unique_ptr<aware_model, ModelDeleter>;
using Index = std::unique_ptr<aware_index, IndexDeleter>;
using Adapter = std::unique_ptr<aware_adapter, AdapterDeleter>;

std::string take(char* s) {
  OwnedString owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    std::cerr << "aware: i/o error: cannot write " << path << "\n";
    throw Exit{kExitData};
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "aware: i/o error: cannot read " << path << "\n";
    throw Exit{kExitData};
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string output_root() {
  const char* root = std::getenv("AWARE_OUTPUT_ROOT");
  return root && *root ? root : "runs";
}

// "<stem>.manifest.json" next to a CSV path.
std::string sibling_manifest(const std::string& csv) {
  std::filesystem::path p(csv);
  p.replace_extension(".manifest.json");
  return p.string();
}

Dataset load_dataset(const std::string& csv, const std::string& manifest, bool require_label) {
  aware_dataset* raw = nullptr;
  check(aware_dataset_load_csv(csv.c_str(), (manifest.empty() ? sibling_manifest(csv) : manifest).c_str(),
                               require_label ? 1 : 0, &raw));
  return Dataset(raw);
}

Model load_model(const std::string& path) {
  aware_model* m = nullptr;
  check(aware_model_load(path.c_str(), &m));
  return Model(m);
}

Index load_index(const std::string& path) {
  aware_index* ix = nullptr;
  check(aware_index_load(path.c_str(), &ix));
  return Index(ix);
}

void add_data_options(CLI::App* cmd, std::string& csv, std::string& manifest) {
  cmd->add_option("--data", csv, "input CSV")->required();
  cmd->add_option("--manifest", manifest, "manifest JSON (default: <data stem>.manifest.json)");
}

struct SynthArgs {
  aware_synthetic_spec spec{1000, 2, 8, 2, 1.0, 1.0, 0};
  std::string out;
  std::string manifest;
};

void run_synth(const SynthArgs& a) {
  aware_dataset* raw = nullptr;
  check(aware_dataset_synthesize(&a.spec, &raw));
  Dataset ds(raw);
  check(aware_dataset_save_csv(ds.get(), a.out.c_str()));
  char* manifest = nullptr;
  check(aware_dataset_manifest_json(ds.get(), &manifest));
  const std::string manifest_path = a.manifest.empty() ? sibling_manifest(a.out) : a.manifest;
  write_file(manifest_path, take(manifest));
  char* info = nullptr;
  check(aware_dataset_info_json(ds.get(), &info));
  const json j = json::parse(take(info));
  std::cout << "wrote " << a.out << " (" << j["rows"] << " rows, " << j["columns"] << " columns) and "
            << manifest_path << "\n";
  std::cout << "informative columns: " << j["informative_columns"].dump() << "\n";
  for (const auto& w : j["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
}

struct PreprocessArgs {
  std::string data, manifest, out, out_manifest, split_out;
  double train_fraction = 1.0;
  std::size_t max_features = 500;
  std::uint64_t seed = 0;
};

void run_preprocess(const PreprocessArgs& a) {
  Dataset raw = load_dataset(a.data, a.manifest, true);
  aware_dataset* processed = nullptr;
  char* split = nullptr;
  check(aware_dataset_preprocess(raw.get(), a.train_fraction, a.max_features, a.seed, &processed, &split));
  Dataset ds(processed);
  const std::string split_json = take(split);
  check(aware_dataset_save_csv(ds.get(), a.out.c_str()));
  char* manifest = nullptr;
  check(aware_dataset_manifest_json(ds.get(), &manifest));
  write_file(a.out_manifest.empty() ? sibling_manifest(a.out) : a.out_manifest, take(manifest));
  if (!a.split_out.empty()) write_file(a.split_out, split_json);
  const json j = json::parse(split_json);
  std::cout << "wrote " << a.out << " (" << j["kept_columns"] << " columns kept, "
            << j["dropped_columns"].size() << " dropped)\n";
  for (const auto& w : j["dropped_columns"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
}

struct TrainArgs {
  std::string data, manifest, out, trace;
  std::string distance = "sqeuclidean";
  std::string sampling = "balanced";
  aware_train_options options{};
};

void run_train_encoder(TrainArgs a) {
  if (a.distance == "cosine") {
    a.options.cosine_distance = 1;
  } else if (a.distance == "sqeuclidean") {
    a.options.cosine_distance = 0;
  } else {
    usage_error("unknown distance '" + a.distance + "' (expected sqeuclidean or cosine)");
  }
  if (a.sampling == "uniform") {
    a.options.uniform_sampling = 1;
  } else if (a.sampling == "balanced") {
    a.options.uniform_sampling = 0;
  } else {
    usage_error("unknown sampling '" + a.sampling + "' (expected balanced or uniform)");
  }
  Dataset raw = load_dataset(a.data, a.manifest, true);
  aware_model* trained = nullptr;
  char* report = nullptr;
  check(aware_model_train(raw.get(), &a.options, &trained, &report));
  Model model(trained);
  const json r = json::parse(take(report));
  check(aware_model_save(model.get(), a.out.c_str()));
  if (!a.trace.empty()) {
    char* csv = nullptr;
    check(aware_model_trace_csv(model.get(), &csv));
    write_file(a.trace, take(csv));
  }
  std::cout << "final loss: " << r["final_loss"].get<double>() << "\n";
  const std::string pk = "validation precision@" + std::to_string(r["precision_k"].get<std::size_t>());
  if (r["valid_precision_at_k"].is_null()) {
    std::cout << pk << ": NA\n";
  } else {
    std::cout << pk << ": " << r["valid_precision_at_k"].get<double>() << "\n";
  }
  std::cout << "wrote " << a.out << "\n";
}

struct IndexArgs {
  std::string model, data, manifest, out;
};

void run_build_index(const IndexArgs& a) {
  Model model = load_model(a.model);
  Dataset raw = load_dataset(a.data, a.manifest, true);
  aware_index* built = nullptr;
  check(aware_index_build(model.get(), raw.get(), &built));
  Index index(built);
  check(aware_index_save(index.get(), a.out.c_str()));
  std::size_t rows = 0, dim = 0;
  check(aware_index_shape(index.get(), &rows, &dim));
  std::cout << "wrote " << a.out << " (" << rows << " rows, dim " << dim << ")\n";
}

struct AdapterArgs {
  std::string model, index, out, trace;
  aware_adapter_options options{};
};

void run_train_adapter(const AdapterArgs& a) {
  Model model = load_model(a.model);
  Index index = load_index(a.index);
  char* info = nullptr;
  check(aware_model_info_json(model.get(), &info));
  const json m = json::parse(take(info));
  aware_adapter* trained = nullptr;
  char* trace = nullptr;
  check(aware_adapter_train(index.get(), m["task"]["n_classes"].get<int>(), &a.options, &trained, &trace));
  Adapter adapter(trained);
  const std::string trace_csv = take(trace);
  check(aware_adapter_save(adapter.get(), a.out.c_str()));
  if (!a.trace.empty()) write_file(a.trace, trace_csv);
  std::istringstream lines(trace_csv);
  std::string line, last;
  while (std::getline(lines, line)) last = line;
  std::cout << "final epoch (epoch,mean_nll): " << last << "\n";
  std::cout << "wrote " << a.out << "\n";
}

struct PredictArgs {
  std::string model, index, adapter, data, manifest, out;
  std::string backbone = "knn_vote";
  std::size_t k = 1024;
  unsigned jobs = 1;
};

void run_predict(const PredictArgs& a) {
  Model model = load_model(a.model);
  Index index = load_index(a.index);
  Adapter adapter;
  if (!a.adapter.empty()) {
    aware_adapter* loaded = nullptr;
    check(aware_adapter_load(a.adapter.c_str(), &loaded));
    adapter.reset(loaded);
  }
  Dataset queries = load_dataset(a.data, a.manifest, false);
  char* csv = nullptr;
  check(aware_predict_csv(model.get(), index.get(), adapter.get(), queries.get(), a.k, a.backbone.c_str(), a.jobs,
                          &csv));
  const std::string text = take(csv);
  if (a.out.empty() || a.out == "-") {
    std::cout << text;
  } else {
    write_file(a.out, text);
    std::size_t rows = 0;
    check(aware_dataset_shape(queries.get(), &rows, nullptr));
    std::cout << "wrote " << a.out << " (" << rows << " predictions)\n";
  }
}

struct StressArgs {
  std::string protocol;
  std::string config;
  std::string out;
  std::string data, manifest;
  std::vector<double> ir, sizes, features;
  std::vector<std::string> variants;
  std::optional<int> seeds, epochs, ensemble;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k, test_size, train_size;
  unsigned jobs = 1;
  bool force = false;
  bool record_timings = false;
};

json stress_config(const StressArgs& a) {
  json c = json::object();
  if (!a.config.empty()) {
    try {
      c = json::parse(read_file(a.config));
    } catch (const json::exception& e) {
      usage_error("config " + a.config + " is not valid JSON: " + e.what());
    }
    if (!c.is_object()) usage_error("config " + a.config + " must be a JSON object");
  }
  if (!a.protocol.empty()) {
    if (c.contains("protocol") && c["protocol"] != a.protocol) c.erase("sweep");
    c["protocol"] = a.protocol;
  }
  if (!c.contains("protocol")) usage_error("no protocol given (use --protocol or a config file)");
  const std::string protocol = c["protocol"].get<std::string>();
  auto sweep = [&](const std::vector<double>& values, const char* flag, const char* owner) {
    if (values.empty()) return;
    if (protocol != owner) usage_error(std::string(flag) + " only applies to the " + owner + " protocol");
    c["sweep"] = values;
  };
  sweep(a.sizes, "--sizes", "data_scale");
  sweep(a.features, "--features", "heterogeneity");
  sweep(a.ir, "--ir", "rarity");
  if (!a.data.empty()) c["source"] = {{"csv", a.data}, {"manifest", a.manifest.empty() ? sibling_manifest(a.data) : a.manifest}};
  if (!a.variants.empty()) c["variants"] = a.variants;
  if (a.seeds) c["seeds"] = *a.seeds;
  if (a.seed) c["seed"] = *a.seed;
  if (a.k) c["k"] = *a.k;
  if (a.test_size) c["test_size"] = *a.test_size;
  if (a.train_size) c["train_size"] = *a.train_size;
  if (a.ensemble) c["ensemble_k"] = *a.ensemble;
  if (a.epochs) c["train"]["epochs"] = *a.epochs;
  c["jobs"] = a.jobs;
  if (a.record_timings) c["record_timings"] = true;
  return c;
}

int run_stress(const StressArgs& a) {
  const json config = stress_config(a);
  const std::string protocol = config["protocol"].get<std::string>();
  const std::string out = a.out.empty() ? (std::filesystem::path(output_root()) / protocol).string() : a.out;
  char* summary = nullptr;
  const aware_status status = aware_stress_run(config.dump().c_str(), out.c_str(), a.force ? 1 : 0, &summary);
  const std::string text = take(summary);
  if (status != AWARE_OK && status != AWARE_ERR_PARTIAL) check(status);
  std::cout << text;
  std::cout << "report written to " << out << "\n";
  if (status == AWARE_ERR_PARTIAL) {
    std::cerr << "aware: " << aware_status_name(status) << ": " << aware_last_error() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}

struct InspectArgs {
  std::string path;
  std::string data, manifest;
};

void run_inspect(const InspectArgs& a) {
  char* out = nullptr;
  check(aware_inspect(a.path.c_str(), &out));
  json j = json::parse(take(out));
  if (!a.data.empty()) {
    if (j.value("kind", "") != "aware-encoder") usage_error("--data is only meaningful for an encoder file");
    Model model = load_model(a.path);
    Dataset raw = load_dataset(a.data, a.manifest, false);
    char* attention = nullptr;
    check(aware_model_attention_json(model.get(), raw.get(), &attention));
    j["attention"] = json::parse(take(attention));
  }
  std::cout << j.dump(2) << "\n";
}

json stress_defaults(const char* protocol) {
  char* text = nullptr;
  check(aware_stress_default_config(protocol, &text));
  return json::parse(take(text));
}

std::string list_str(const json& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ",";
    if (v.is_string()) {
      out += v.get<std::string>();
    } else if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>())) {
      out += std::to_string(static_cast<long long>(v.get<double>()));
    } else {
      out += v.dump();
    }
  }
  return out;
}

void add_stress_options(CLI::App* cmd, StressArgs& a, bool with_protocol) {
  const json d = stress_defaults(with_protocol ? "single" : "ablation");
  if (with_protocol) {
    cmd->add_option("--protocol", a.protocol, "data_scale | heterogeneity | rarity | ablation | single");
  }
  cmd->add_option("--config", a.config, "experiment config JSON");
  cmd->add_option("--out", a.out, "report directory")->default_str("$AWARE_OUTPUT_ROOT/<protocol>, root defaults to runs");
  cmd->add_option("--data", a.data, "CSV source")->default_str("synthetic");
  cmd->add_option("--manifest", a.manifest, "manifest for --data")->default_str("<data stem>.manifest.json");
  if (with_protocol) {
    cmd->add_option("--sizes", a.sizes, "data_scale sweep: training sizes")
        ->delimiter(',')
        ->default_str(list_str(stress_defaults("data_scale")["sweep"]));
    cmd->add_option("--features", a.features, "heterogeneity sweep: feature counts")
        ->delimiter(',')
        ->default_str(list_str(stress_defaults("heterogeneity")["sweep"]));
    cmd->add_option("--ir", a.ir, "rarity sweep: imbalance ratios")
        ->delimiter(',')
        ->default_str(list_str(stress_defaults("rarity")["sweep"]));
  }
  cmd->add_option("--variants", a.variants, "ladder variants to run")
      ->delimiter(',')
      ->default_str(list_str(d["variants"]));
  cmd->add_option("--seeds", a.seeds, "number of seeds")->default_str(d["seeds"].dump());
  cmd->add_option("--seed", a.seed, "base seed")->default_str(d["seed"].dump());
  cmd->add_option("--k", a.k, "context size")->default_str(d["k"].dump());
  cmd->add_option("--test-size", a.test_size, "held-out test rows")->default_str(d["test_size"].dump());
  cmd->add_option("--train-size", a.train_size, "training rows per job")->default_str("10000 for rarity, whole pool otherwise");
  cmd->add_option("--ensemble", a.ensemble, "ensemble size K")->default_str(d["ensemble_k"].dump());
  cmd->add_option("--epochs", a.epochs, "encoder epochs")->default_str(d["train"]["epochs"].dump());
  cmd->add_option("--jobs", a.jobs, "worker threads")->capture_default_str();
  cmd->add_flag("--force", a.force, "overwrite a non-empty report directory");
  cmd->add_flag("--record-timings", a.record_timings, "add wall_time to rows.csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-aligned retrieval for tabular in-context learning"};
  app.set_version_flag("--version", std::string(aware_version()));
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic classification dataset");
  c_synth->add_option("--rows", synth.spec.n_rows, "rows")->capture_default_str();
  c_synth->add_option("--informative", synth.spec.n_informative, "informative columns")->capture_default_str();
  c_synth->add_option("--noise", synth.spec.n_noise, "noise columns")->capture_default_str();
  c_synth->add_option("--classes", synth.spec.n_classes, "classes")->capture_default_str();
  c_synth->add_option("--sep", synth.spec.class_sep, "distance between adjacent class means")->capture_default_str();
  c_synth->add_option("--ir", synth.spec.imbalance_ratio, "majority / minority ratio")->capture_default_str();
  c_synth->add_option("--seed", synth.spec.seed, "seed")->capture_default_str();
  c_synth->add_option("--out", synth.out, "output CSV")->required();
  c_synth->add_option("--manifest-out", synth.manifest, "manifest path (default: <out stem>.manifest.json)");

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "filter and normalize a CSV with train-split statistics");
  add_data_options(c_pre, pre.data, pre.manifest);
  c_pre->add_option("--out", pre.out, "output CSV")->required();
  c_pre->add_option("--manifest-out", pre.out_manifest, "manifest path (default: <out stem>.manifest.json)");
  c_pre->add_option("--split-out", pre.split_out, "write the train/test split as JSON");
  c_pre->add_option("--train-fraction", pre.train_fraction, "fraction used for statistics")->capture_default_str();
  c_pre->add_option("--max-features", pre.max_features, "feature cap")->capture_default_str();
  c_pre->add_option("--seed", pre.seed, "split seed")->capture_default_str();

  TrainArgs train;
  aware_train_options_default(&train.options);
  auto* c_train = app.add_subcommand("train-encoder", "train an attention encoder ensemble");
  add_data_options(c_train, train.data, train.manifest);
  c_train->add_option("--out", train.out, "model JSON")->required();
  c_train->add_option("--trace", train.trace, "per-epoch loss CSV");
  c_train->add_option("--epochs", train.options.epochs, "epochs")->capture_default_str();
  c_train->add_option("--lr", train.options.learning_rate, "learning rate")->capture_default_str();
  c_train->add_option("--batch", train.options.batch_size, "batch size")->capture_default_str();
  c_train->add_option("--temperature", train.options.temperature, "loss temperature")->capture_default_str();
  c_train->add_option("--distance", train.distance, "sqeuclidean | cosine")->capture_default_str();
  c_train->add_option("--weight-decay", train.options.weight_decay, "AdamW weight decay")->capture_default_str();
  c_train->add_option("--sampling", train.sampling, "balanced | uniform")->capture_default_str();
  c_train->add_option("--ensemble", train.options.ensemble_k, "ensemble size K")->capture_default_str();
  c_train->add_option("--embed-dim", train.options.embed_dim, "embedding dimension")->capture_default_str();
  c_train->add_option("--valid-fraction", train.options.valid_fraction, "held-out fraction")->capture_default_str();
  c_train->add_option("--max-features", train.options.max_features, "feature cap")->capture_default_str();
  c_train->add_option("--precision-k", train.options.precision_k, "k of the reported precision")->capture_default_str();
  c_train->add_option("--seed", train.options.seed, "seed")->capture_default_str();

  IndexArgs idx;
  auto* c_index = app.add_subcommand("build-index", "embed a reference CSV into a retrieval index");
  c_index->add_option("--model", idx.model, "model JSON")->required();
  add_data_options(c_index, idx.data, idx.manifest);
  c_index->add_option("--out", idx.out, "index JSON")->required();

  AdapterArgs adapt;
  aware_adapter_options_default(&adapt.options);
  auto* c_adapter = app.add_subcommand("train-adapter", "fit the affine prompt adapter on an index");
  c_adapter->add_option("--model", adapt.model, "model JSON")->required();
  c_adapter->add_option("--index", adapt.index, "index JSON")->required();
  c_adapter->add_option("--out", adapt.out, "adapter JSON")->required();
  c_adapter->add_option("--trace", adapt.trace, "per-epoch NLL CSV");
  c_adapter->add_option("--epochs", adapt.options.epochs, "epochs")->capture_default_str();
  c_adapter->add_option("--lr", adapt.options.learning_rate, "learning rate")->capture_default_str();
  c_adapter->add_option("--context", adapt.options.context_size, "prompt context size")->capture_default_str();
  c_adapter->add_option("--prompts", adapt.options.prompts_per_epoch, "prompts per epoch (0: index size)")
      ->capture_default_str();
  c_adapter->add_option("--seed", adapt.options.seed, "seed")->capture_default_str();

  PredictArgs pred;
  auto* c_predict = app.add_subcommand("predict", "predict class probabilities for a CSV");
  c_predict->add_option("--model", pred.model, "model JSON")->required();
  c_predict->add_option("--index", pred.index, "index JSON")->required();
  c_predict->add_option("--adapter", pred.adapter, "adapter JSON");
  add_data_options(c_predict, pred.data, pred.manifest);
  c_predict->add_option("--out", pred.out, "output CSV (default: stdout)");
  c_predict->add_option("--k", pred.k, "context size")->capture_default_str();
  c_predict->add_option("--backbone", pred.backbone, "knn_vote | subprocess:<command>")->capture_default_str();
  c_predict->add_option("--jobs", pred.jobs, "worker threads")->capture_default_str();

  StressArgs stress;
  auto* c_stress = app.add_subcommand("stress", "run a stress protocol and write a report");
  add_stress_options(c_stress, stress, true);

  StressArgs ablate;
  auto* c_ablate = app.add_subcommand("ablate", "run the cumulative component ablation");
  add_stress_options(c_ablate, ablate, false);

  InspectArgs inspect;
  auto* c_inspect = app.add_subcommand("inspect", "describe a model, index, adapter or report directory");
  c_inspect->add_option("path", inspect.path, "artifact path")->required();
  c_inspect->add_option("--data", inspect.data, "CSV for mean attention weights (encoder files)");
  c_inspect->add_option("--manifest", inspect.manifest, "manifest for --data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_synth) run_synth(synth);
    if (*c_pre) run_preprocess(pre);
    if (*c_train) run_train_encoder(train);
    if (*c_index) run_build_index(idx);
    if (*c_adapter) run_train_adapter(adapt);
    if (*c_predict) run_predict(pred);
    if (*c_stress) return run_stress(stress);
    if (*c_ablate) {
      ablate.protocol = "ablation";
      return run_stress(ablate);
    }
    if (*c_inspect) run_inspect(inspect);
  } catch (const Exit& e) {
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "aware: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
