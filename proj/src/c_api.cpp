#define AWARE_BUILDING_LIBRARY
#include "aware/aware.h"

#include "adapter.hpp"
#include "backbone.hpp"
#include "dataset.hpp"
#include "harness.hpp"
#include "pipeline.hpp"
#include "retrieval.hpp"
#include "serialization.hpp"
#include "training.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <sstream>
#include <string>

using json = nlohmann::json;

struct aware_dataset {
  aware::TabularDataset data;
  aware::Manifest manifest;
  std::vector<std::size_t> informative;
  std::vector<std::string> warnings;
};

struct aware_model {
  aware::EncoderModel model;
};

struct aware_index {
  aware::EmbeddingIndex index;
};

struct aware_adapter {
  aware::AdapterParams params;
};

namespace {

thread_local std::string g_last_error;

aware_status status_of(aware::ErrorKind kind) {
  switch (kind) {
    case aware::ErrorKind::invalid_argument:
      return AWARE_ERR_INVALID_ARGUMENT;
    case aware::ErrorKind::config:
      return AWARE_ERR_CONFIG;
    case aware::ErrorKind::data:
      return AWARE_ERR_DATA;
    case aware::ErrorKind::io:
      return AWARE_ERR_IO;
    case aware::ErrorKind::numeric:
      return AWARE_ERR_NUMERIC;
    case aware::ErrorKind::backbone:
      return AWARE_ERR_BACKBONE;
    case aware::ErrorKind::internal:
      return AWARE_ERR_INTERNAL;
  }
  return AWARE_ERR_INTERNAL;
}

template <typename Fn>
aware_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const aware::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return AWARE_ERR_DATA;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return AWARE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AWARE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return AWARE_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_string(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

template <typename T>
void need(const T* p, const char* what) {
  if (!p) aware::fail(aware::ErrorKind::invalid_argument, std::string(what) + " must not be NULL");
}

std::string text_arg(const char* s, const char* what) {
  need(s, what);
  return s;
}

aware::Manifest manifest_of(const aware::TabularDataset& ds) {
  aware::Manifest m;
  m.label_column = ds.label_name;
  m.task = ds.task;
  for (const auto& c : ds.column_meta) {
    if (c.kind == aware::ColumnKind::categorical) m.categorical_columns.push_back(c.name);
  }
  return m;
}

json task_json(const aware::Task& task) { return {{"kind", aware::to_string(task)}, {"n_classes", task.n_classes}}; }

aware::Matrix embed_raw(const aware::EncoderModel& model, const aware::TabularDataset& raw) {
  const aware::TabularDataset processed = model.transform.apply(raw);
  return aware::ensemble_embed(model.ensemble, processed.features);
}

json describe_model(const aware::EncoderModel& m) {
  const auto& d = m.ensemble.dims();
  json losses = json::array();
  for (const auto& t : m.ensemble.traces) losses.push_back(t.empty() ? 0.0 : t.back().mean_loss);
  return {{"kind", "aware-encoder"},
          {"task", task_json(m.task)},
          {"label_column", m.label_column},
          {"members", m.ensemble.size()},
          {"input_dim", d.input},
          {"gate_hidden", d.gate_hidden},
          {"embed_hidden", d.embed_hidden},
          {"embed_dim", d.embed},
          {"parameters_per_member", m.ensemble.members.front().parameter_count()},
          {"input_columns", m.transform.input_columns.size()},
          {"kept_columns", m.transform.output_dim()},
          {"epochs", m.config.epochs},
          {"distance", aware::to_string(m.config.distance)},
          {"final_loss_per_member", losses}};
}

json describe_index(const aware::EmbeddingIndex& ix) {
  std::map<long long, std::size_t> counts;
  for (double y : ix.labels()) ++counts[static_cast<long long>(y)];
  json classes = json::object();
  for (const auto& [c, n] : counts) classes[std::to_string(c)] = n;
  return {{"kind", "aware-index"},
          {"rows", ix.size()},
          {"dim", ix.dim()},
          {"distance", aware::to_string(ix.distance_kind())},
          {"label_counts", classes}};
}

json describe_adapter(const aware::AdapterParams& a) {
  const auto m = a.weight.rows();
  const double dev = (a.weight - aware::Matrix::Identity(m, m)).norm();
  return {{"kind", "aware-adapter"},
          {"dim", m},
          {"parameters", a.parameter_count()},
          {"is_identity", a.is_identity()},
          {"weight_distance_from_identity", dev},
          {"bias_norm", a.bias.norm()}};
}

json describe_report_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  json j = json::parse(aware::read_text_file((root / "provenance.json").string()));
  json files = json::array();
  for (const char* f : {"rows.csv", "aggregates.csv", "provenance.json", "summary.txt", "failures.json"}) {
    if (fs::exists(root / f)) files.push_back(f);
  }
  return {{"kind", "stress-report"},
          {"protocol", j.value("protocol", "")},
          {"config_hash", j.value("config_hash", "")},
          {"test_set_hash", j.value("test_set_hash", "")},
          {"rows", j.value("rows", 0)},
          {"failed_jobs", j.value("failed_jobs", 0)},
          {"complete", j.value("complete", false)},
          {"files", files}};
}

}  // namespace

extern "C" {

const char* aware_version(void) { return aware::kArtifactVersion; }

const char* aware_last_error(void) { return g_last_error.c_str(); }

const char* aware_status_name(aware_status status) {
  switch (status) {
    case AWARE_OK:
      return "ok";
    case AWARE_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case AWARE_ERR_CONFIG:
      return "configuration error";
    case AWARE_ERR_DATA:
      return "data error";
    case AWARE_ERR_PARTIAL:
      return "partial result";
    case AWARE_ERR_INTERNAL:
      return "internal error";
    case AWARE_ERR_IO:
      return "i/o error";
    case AWARE_ERR_NUMERIC:
      return "numeric error";
    case AWARE_ERR_BACKBONE:
      return "backbone error";
  }
  return "unknown status";
}

void aware_string_free(char* text) { std::free(text); }

aware_status aware_dataset_load_csv(const char* csv_path, const char* manifest_path, int require_label,
                                    aware_dataset** out) {
  return guarded([&] {
    need(out, "out");
    const std::string csv = text_arg(csv_path, "csv_path");
    const std::string manifest = text_arg(manifest_path, "manifest_path");
    auto ds = std::make_unique<aware_dataset>();
    ds->manifest = aware::load_manifest(manifest);
    ds->data = aware::load_csv(csv, ds->manifest, require_label != 0);
    *out = ds.release();
    return AWARE_OK;
  });
}

aware_status aware_dataset_synthesize(const aware_synthetic_spec* spec, aware_dataset** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    aware::SyntheticSpec s;
    s.n_rows = spec->n_rows;
    s.n_informative = spec->n_informative;
    s.n_noise = spec->n_noise;
    s.n_classes = spec->n_classes;
    s.class_sep = spec->class_sep;
    s.imbalance_ratio = spec->imbalance_ratio;
    s.seed = spec->seed;
    aware::SyntheticDataset syn = aware::make_synthetic(s);
    auto ds = std::make_unique<aware_dataset>();
    ds->manifest = manifest_of(syn.data);
    ds->data = std::move(syn.data);
    ds->informative = std::move(syn.informative_columns);
    ds->warnings = std::move(syn.warnings);
    *out = ds.release();
    return AWARE_OK;
  });
}

aware_status aware_dataset_save_csv(const aware_dataset* dataset, const char* path) {
  return guarded([&] {
    need(dataset, "dataset");
    aware::write_csv(dataset->data, text_arg(path, "path"));
    return AWARE_OK;
  });
}

aware_status aware_dataset_shape(const aware_dataset* dataset, size_t* rows, size_t* cols) {
  return guarded([&] {
    need(dataset, "dataset");
    if (rows) *rows = dataset->data.rows();
    if (cols) *cols = dataset->data.cols();
    return AWARE_OK;
  });
}

aware_status aware_dataset_manifest_json(const aware_dataset* dataset, char** out_json) {
  return guarded([&] {
    need(dataset, "dataset");
    need(out_json, "out_json");
    put_string(out_json, aware::manifest_to_json(dataset->manifest));
    return AWARE_OK;
  });
}

aware_status aware_dataset_info_json(const aware_dataset* dataset, char** out_json) {
  return guarded([&] {
    need(dataset, "dataset");
    need(out_json, "out_json");
    const auto& d = dataset->data;
    json counts = json::array();
    if (d.task.is_classification()) {
      for (auto c : d.class_counts()) counts.push_back(c);
    }
    json informative = json::array();
    for (auto c : dataset->informative) informative.push_back(d.column_meta[c].name);
    json j = {{"rows", d.rows()},
              {"columns", d.cols()},
              {"label_column", d.label_name},
              {"task", task_json(d.task)},
              {"class_counts", counts},
              {"informative_columns", informative},
              {"warnings", dataset->warnings}};
    put_string(out_json, j.dump(2) + "\n");
    return AWARE_OK;
  });
}

aware_status aware_dataset_preprocess(const aware_dataset* raw, double train_fraction, size_t max_features,
                                      uint64_t seed, aware_dataset** out, char** out_split_json) {
  return guarded([&] {
    need(raw, "raw");
    need(out, "out");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
      aware::fail(aware::ErrorKind::invalid_argument, "train fraction must lie in (0, 1]");
    }
    std::vector<std::size_t> train_idx = aware::all_rows(raw->data);
    std::vector<std::size_t> test_idx;
    if (train_fraction < 1.0) {
      const aware::SplitSpec split = aware::stratified_split(raw->data, {train_fraction, 1.0 - train_fraction}, seed);
      train_idx = split.train_idx;
      test_idx = split.test_idx;
    }
    aware::FilterOptions filter;
    if (max_features > 0) filter.max_features = max_features;
    const aware::TabularDataset filtered = aware::filter_features(raw->data, train_idx, filter);
    auto ds = std::make_unique<aware_dataset>();
    ds->data = aware::preprocess(filtered, train_idx);
    ds->manifest = manifest_of(ds->data);
    for (const auto& c : ds->data.dropped_columns) {
      ds->warnings.push_back("dropped column " + c.name + (c.warning.empty() ? "" : ": " + c.warning));
    }
    if (out_split_json) {
      auto ids = [&](const std::vector<std::size_t>& pos) {
        json a = json::array();
        for (auto p : pos) a.push_back(raw->data.row_ids[p]);
        return a;
      };
      json j = {{"seed", seed},
                {"train_fraction", train_fraction},
                {"train_row_ids", ids(train_idx)},
                {"test_row_ids", ids(test_idx)},
                {"kept_columns", ds->data.cols()},
                {"dropped_columns", ds->warnings}};
      put_string(out_split_json, j.dump(2) + "\n");
    }
    *out = ds.release();
    return AWARE_OK;
  });
}

void aware_dataset_free(aware_dataset* dataset) { delete dataset; }

void aware_train_options_default(aware_train_options* options) {
  if (!options) return;
  const aware::TrainConfig c;
  options->epochs = c.epochs;
  options->learning_rate = c.learning_rate;
  options->batch_size = c.batch_size;
  options->temperature = c.temperature;
  options->cosine_distance = c.distance == aware::DistanceKind::cosine ? 1 : 0;
  options->weight_decay = c.weight_decay;
  options->uniform_sampling = c.sampling == aware::Sampling::uniform ? 1 : 0;
  options->ensemble_k = 5;
  options->gate_hidden = c.gate_hidden;
  options->embed_hidden = c.embed_hidden;
  options->embed_dim = c.embed_dim;
  options->valid_fraction = 0.2;
  options->max_features = aware::FilterOptions{}.max_features;
  options->precision_k = 10;
  options->seed = 0;
}

aware_status aware_model_train(const aware_dataset* raw, const aware_train_options* options, aware_model** out,
                               char** out_report_json) {
  return guarded([&] {
    need(raw, "raw");
    need(options, "options");
    need(out, "out");
    aware::TrainConfig cfg;
    cfg.epochs = options->epochs;
    cfg.learning_rate = options->learning_rate;
    cfg.batch_size = options->batch_size;
    cfg.temperature = options->temperature;
    cfg.distance = options->cosine_distance ? aware::DistanceKind::cosine : aware::DistanceKind::squared_euclidean;
    cfg.weight_decay = options->weight_decay;
    cfg.sampling = options->uniform_sampling ? aware::Sampling::uniform : aware::Sampling::balanced;
    cfg.gate_hidden = options->gate_hidden;
    cfg.embed_hidden = options->embed_hidden;
    cfg.embed_dim = options->embed_dim;
    cfg.seed = options->seed;
    cfg.validate();
    if (options->ensemble_k < 1) aware::fail(aware::ErrorKind::config, "ensemble size must be at least 1");
    if (!(options->valid_fraction >= 0.0 && options->valid_fraction < 1.0)) {
      aware::fail(aware::ErrorKind::config, "validation fraction must lie in [0, 1)");
    }

    std::vector<std::size_t> train_idx = aware::all_rows(raw->data);
    std::vector<std::size_t> valid_idx;
    if (options->valid_fraction > 0.0) {
      const aware::SplitSpec split = aware::stratified_split(
          raw->data, {1.0 - options->valid_fraction, options->valid_fraction}, aware::derive_seed(options->seed, 0x5A17));
      train_idx = split.train_idx;
      valid_idx = split.test_idx;
    }
    aware::FilterOptions filter;
    if (options->max_features > 0) filter.max_features = options->max_features;
    const aware::TabularDataset filtered = aware::filter_features(raw->data, train_idx, filter);
    const aware::TabularDataset processed = aware::preprocess(filtered, train_idx);

    auto model = std::make_unique<aware_model>();
    model->model.ensemble = aware::train_ensemble(processed, train_idx, cfg, options->ensemble_k);
    model->model.config = cfg;
    model->model.transform = aware::make_transform(raw->data, processed);
    model->model.task = raw->data.task;
    model->model.label_column = raw->data.label_name;

    double final_loss = 0.0;
    for (const auto& t : model->model.ensemble.traces) final_loss += t.empty() ? 0.0 : t.back().mean_loss;
    final_loss /= static_cast<double>(model->model.ensemble.size());

    json report = {{"final_loss", final_loss},
                   {"members", model->model.ensemble.size()},
                   {"n_train", train_idx.size()},
                   {"n_valid", valid_idx.size()},
                   {"kept_columns", processed.cols()},
                   {"precision_k", options->precision_k},
                   {"valid_precision_at_k", nullptr}};
    if (!valid_idx.empty() && processed.task.is_classification() && options->precision_k > 0) {
      const aware::Matrix train_z =
          aware::ensemble_embed(model->model.ensemble, aware::gather_rows(processed.features, train_idx));
      const aware::Matrix valid_z =
          aware::ensemble_embed(model->model.ensemble, aware::gather_rows(processed.features, valid_idx));
      std::vector<double> labels;
      std::vector<std::size_t> ids;
      for (auto r : train_idx) {
        labels.push_back(processed.labels[r]);
        ids.push_back(processed.row_ids[r]);
      }
      const aware::EmbeddingIndex index = aware::build_index(train_z, labels, ids, cfg.distance);
      double total = 0.0;
      for (std::size_t i = 0; i < valid_idx.size(); ++i) {
        total += aware::precision_at_k(index, valid_z.row(static_cast<Eigen::Index>(i)).transpose(),
                                       processed.labels[valid_idx[i]], options->precision_k);
      }
      report["valid_precision_at_k"] = total / static_cast<double>(valid_idx.size());
    }
    put_string(out_report_json, report.dump(2) + "\n");
    *out = model.release();
    return AWARE_OK;
  });
}

aware_status aware_model_save(const aware_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    aware::write_text_file(text_arg(path, "path"), aware::encoder_model_to_json(model->model));
    return AWARE_OK;
  });
}

aware_status aware_model_load(const char* path, aware_model** out) {
  return guarded([&] {
    need(out, "out");
    auto model = std::make_unique<aware_model>();
    model->model = aware::encoder_model_from_json(aware::read_text_file(text_arg(path, "path")));
    *out = model.release();
    return AWARE_OK;
  });
}

aware_status aware_model_trace_csv(const aware_model* model, char** out_csv) {
  return guarded([&] {
    need(model, "model");
    need(out_csv, "out_csv");
    std::ostringstream out;
    out << "member,epoch,mean_loss,skipped_anchor_fraction\n";
    const auto& traces = model->model.ensemble.traces;
    for (std::size_t m = 0; m < traces.size(); ++m) {
      for (const auto& e : traces[m]) {
        out << m << ',' << e.epoch << ',' << aware::format_double(e.mean_loss) << ','
            << aware::format_double(e.skipped_anchor_fraction) << '\n';
      }
    }
    put_string(out_csv, out.str());
    return AWARE_OK;
  });
}

aware_status aware_model_info_json(const aware_model* model, char** out_json) {
  return guarded([&] {
    need(model, "model");
    need(out_json, "out_json");
    put_string(out_json, describe_model(model->model).dump(2) + "\n");
    return AWARE_OK;
  });
}

aware_status aware_model_embed(const aware_model* model, const aware_dataset* raw, double* out, size_t capacity,
                               size_t* rows, size_t* cols) {
  return guarded([&] {
    need(model, "model");
    need(raw, "raw");
    const std::size_t n = raw->data.rows();
    const std::size_t m = static_cast<std::size_t>(model->model.ensemble.dims().embed);
    if (rows) *rows = n;
    if (cols) *cols = m;
    if (!out) return AWARE_OK;
    if (capacity < n * m) {
      aware::fail(aware::ErrorKind::invalid_argument,
                  "output buffer holds " + std::to_string(capacity) + " values, " + std::to_string(n * m) + " needed");
    }
    const aware::Matrix z = embed_raw(model->model, raw->data);
    std::memcpy(out, z.data(), sizeof(double) * n * m);
    return AWARE_OK;
  });
}

aware_status aware_model_attention_json(const aware_model* model, const aware_dataset* raw, char** out_json) {
  return guarded([&] {
    need(model, "model");
    need(raw, "raw");
    need(out_json, "out_json");
    const aware::TabularDataset processed = model->model.transform.apply(raw->data);
    const aware::Vector alpha = aware::mean_attention(model->model.ensemble, processed.features);
    json features = json::array();
    for (std::size_t j = 0; j < processed.cols(); ++j) {
      features.push_back({{"column", processed.column_meta[j].name}, {"mean_alpha", alpha(static_cast<Eigen::Index>(j))}});
    }
    json j = {{"rows", processed.rows()}, {"features", features}};
    put_string(out_json, j.dump(2) + "\n");
    return AWARE_OK;
  });
}

void aware_model_free(aware_model* model) { delete model; }

aware_status aware_index_build(const aware_model* model, const aware_dataset* raw, aware_index** out) {
  return guarded([&] {
    need(model, "model");
    need(raw, "raw");
    need(out, "out");
    const aware::Matrix z = embed_raw(model->model, raw->data);
    *out = new aware_index{aware::build_index(z, raw->data.labels, raw->data.row_ids, model->model.config.distance)};
    return AWARE_OK;
  });
}

aware_status aware_index_save(const aware_index* index, const char* path) {
  return guarded([&] {
    need(index, "index");
    aware::write_text_file(text_arg(path, "path"), aware::index_to_json(index->index));
    return AWARE_OK;
  });
}

aware_status aware_index_load(const char* path, aware_index** out) {
  return guarded([&] {
    need(out, "out");
    *out = new aware_index{aware::index_from_json(aware::read_text_file(text_arg(path, "path")))};
    return AWARE_OK;
  });
}

aware_status aware_index_shape(const aware_index* index, size_t* rows, size_t* dim) {
  return guarded([&] {
    need(index, "index");
    if (rows) *rows = index->index.size();
    if (dim) *dim = index->index.dim();
    return AWARE_OK;
  });
}

void aware_index_free(aware_index* index) { delete index; }

void aware_adapter_options_default(aware_adapter_options* options) {
  if (!options) return;
  const aware::AdapterConfig c;
  options->epochs = c.epochs;
  options->learning_rate = c.learning_rate;
  options->weight_decay = c.weight_decay;
  options->context_size = c.context_size;
  options->prompts_per_epoch = c.prompts_per_epoch;
  options->retrieval_threshold = c.retrieval_threshold;
  options->seed = c.seed;
}

aware_status aware_adapter_identity(size_t dim, aware_adapter** out) {
  return guarded([&] {
    need(out, "out");
    if (dim == 0) aware::fail(aware::ErrorKind::invalid_argument, "adapter dimension must be positive");
    *out = new aware_adapter{aware::AdapterParams::identity(static_cast<int>(dim))};
    return AWARE_OK;
  });
}

aware_status aware_adapter_train(const aware_index* index, int n_classes, const aware_adapter_options* options,
                                 aware_adapter** out, char** out_trace_csv) {
  return guarded([&] {
    need(index, "index");
    need(options, "options");
    need(out, "out");
    if (n_classes < 2) aware::fail(aware::ErrorKind::config, "adapter training needs a classification task");
    aware::AdapterConfig cfg;
    cfg.epochs = options->epochs;
    cfg.learning_rate = options->learning_rate;
    cfg.weight_decay = options->weight_decay;
    cfg.context_size = options->context_size;
    cfg.prompts_per_epoch = options->prompts_per_epoch;
    cfg.retrieval_threshold = options->retrieval_threshold;
    cfg.seed = options->seed;
    cfg.vote.n_classes = n_classes;
    aware::TrainedAdapter trained = aware::train_adapter(index->index, cfg);
    if (out_trace_csv) {
      std::ostringstream csv;
      csv << "epoch,mean_nll\n";
      for (std::size_t e = 0; e < trained.epoch_nll.size(); ++e) {
        csv << e + 1 << ',' << aware::format_double(trained.epoch_nll[e]) << '\n';
      }
      put_string(out_trace_csv, csv.str());
    }
    *out = new aware_adapter{std::move(trained.params)};
    return AWARE_OK;
  });
}

aware_status aware_adapter_save(const aware_adapter* adapter, const char* path) {
  return guarded([&] {
    need(adapter, "adapter");
    aware::write_text_file(text_arg(path, "path"), aware::adapter_to_json(adapter->params));
    return AWARE_OK;
  });
}

aware_status aware_adapter_load(const char* path, aware_adapter** out) {
  return guarded([&] {
    need(out, "out");
    *out = new aware_adapter{aware::adapter_from_json(aware::read_text_file(text_arg(path, "path")))};
    return AWARE_OK;
  });
}

void aware_adapter_free(aware_adapter* adapter) { delete adapter; }

aware_status aware_predict_csv(const aware_model* model, const aware_index* index, const aware_adapter* adapter,
                               const aware_dataset* queries, size_t k, const char* backbone, unsigned jobs,
                               char** out_csv) {
  return guarded([&] {
    need(model, "model");
    need(index, "index");
    need(queries, "queries");
    need(out_csv, "out_csv");
    if (k == 0) aware::fail(aware::ErrorKind::invalid_argument, "context size k must be positive");
    const std::size_t m = static_cast<std::size_t>(model->model.ensemble.dims().embed);
    if (index->index.dim() != m) {
      aware::fail(aware::ErrorKind::data, "index dimension " + std::to_string(index->index.dim()) +
                                              " does not match encoder embedding dimension " + std::to_string(m));
    }
    if (adapter && static_cast<std::size_t>(adapter->params.weight.rows()) != m) {
      aware::fail(aware::ErrorKind::data, "adapter dimension " + std::to_string(adapter->params.weight.rows()) +
                                              " does not match encoder embedding dimension " + std::to_string(m));
    }
    aware::VoteConfig vote;
    vote.n_classes = model->model.task.n_classes;
    const auto bb = aware::make_backbone(backbone ? backbone : "knn_vote", vote);
    const aware::Matrix z = embed_raw(model->model, queries->data);
    const auto outputs =
        aware::predict_embedded(index->index, z, adapter ? &adapter->params : nullptr, k, *bb, jobs == 0 ? 1 : jobs);
    std::ostringstream csv;
    csv << "row_id";
    const bool classification = model->model.task.is_classification();
    if (classification) {
      for (int c = 0; c < vote.n_classes; ++c) csv << ",p_" << c;
    } else {
      csv << ",prediction";
    }
    csv << '\n';
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      csv << queries->data.row_ids[i];
      if (classification) {
        for (double p : outputs[i].class_probs) csv << ',' << aware::format_double(p);
      } else {
        csv << ',' << aware::format_double(outputs[i].value);
      }
      csv << '\n';
    }
    put_string(out_csv, csv.str());
    return AWARE_OK;
  });
}

aware_status aware_stress_default_config(const char* protocol, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    aware::ExperimentConfig config;
    config.protocol = aware::protocol_from_string(text_arg(protocol, "protocol"));
    config.sweep = config.effective_sweep();
    config.variants = config.effective_variants();
    config.source.synthetic = config.effective_synthetic();
    put_string(out_json, aware::experiment_config_to_json(config));
    return AWARE_OK;
  });
}

aware_status aware_stress_run(const char* config_json, const char* output_dir, int force, char** out_summary) {
  return guarded([&] {
    aware::ExperimentConfig config = aware::experiment_config_from_json(text_arg(config_json, "config_json"));
    const std::string dir = text_arg(output_dir, "output_dir");
    config.output_dir = dir;
    config.validate();
    aware::prepare_output_dir(dir, force != 0);
    const aware::StressReport report = aware::run_experiment(config);
    aware::emit_report(report, dir);
    put_string(out_summary, aware::summary_text(report));
    if (!report.complete()) {
      g_last_error = std::to_string(report.failures.size()) + " job(s) failed; see failures.json";
      return AWARE_ERR_PARTIAL;
    }
    return AWARE_OK;
  });
}

aware_status aware_inspect(const char* path, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    const std::string p = text_arg(path, "path");
    std::error_code ec;
    if (std::filesystem::is_directory(p, ec)) {
      put_string(out_json, describe_report_dir(p).dump(2) + "\n");
      return AWARE_OK;
    }
    const std::string text = aware::read_text_file(p);
    const json j = json::parse(text);
    const std::string kind = j.is_object() ? j.value("kind", "") : "";
    json d;
    if (kind == "aware-encoder") {
      d = describe_model(aware::encoder_model_from_json(text));
    } else if (kind == "aware-index") {
      d = describe_index(aware::index_from_json(text));
    } else if (kind == "aware-adapter") {
      d = describe_adapter(aware::adapter_from_json(text));
    } else {
      aware::fail(aware::ErrorKind::data, "'" + p + "' is not an encoder, index or adapter file");
    }
    put_string(out_json, d.dump(2) + "\n");
    return AWARE_OK;
  });
}

}  // extern "C"
