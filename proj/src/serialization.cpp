#include "serialization.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace aware {

using nlohmann::json;

namespace {

json flat(const double* data, Eigen::Index size) { return std::vector<double>(data, data + size); }

json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat(m.data(), m.size())}};
}

std::vector<double> doubles(const json& j, std::size_t expected, const std::string& what) {
  if (!j.is_array()) fail(ErrorKind::data, what + " must be an array");
  if (j.size() != expected) {
    fail(ErrorKind::data, what + " has " + std::to_string(j.size()) + " values, expected " + std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& v : j) {
    if (!v.is_number()) fail(ErrorKind::data, what + " contains a non-numeric value");
    out.push_back(v.get<double>());
  }
  return out;
}

Matrix matrix_from(const json& j, const std::string& what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0) fail(ErrorKind::data, what + " has a negative shape");
  const auto values = doubles(j.at("data"), static_cast<std::size_t>(rows * cols), what);
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

json parse(const std::string& text, const std::string& kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::data, kind + " file is not valid JSON: " + e.what());
  }
  if (!j.is_object() || j.value("kind", "") != kind) fail(ErrorKind::data, "not an " + kind + " file");
  const int version = j.value("format_version", -1);
  if (version != kFormatVersion) {
    fail(ErrorKind::config, kind + " format_version " + std::to_string(version) + " is not supported (expected " +
                                std::to_string(kFormatVersion) + ")");
  }
  return j;
}

template <typename Fn>
auto guarded(const std::string& kind, Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorKind::data, kind + " file is malformed: " + e.what());
  }
}

json train_config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"temperature", c.temperature},
          {"distance", to_string(c.distance)},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"seed", c.seed},
          {"sampling", c.sampling == Sampling::balanced ? "balanced" : "uniform"},
          {"gate_hidden", c.gate_hidden},
          {"embed_hidden", c.embed_hidden},
          {"embed_dim", c.embed_dim},
          {"regression_bins", c.regression_bins}};
}

TrainConfig train_config_from(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.temperature = j.value("temperature", c.temperature);
  c.distance = distance_kind_from_string(j.value("distance", to_string(c.distance)));
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.seed = j.value("seed", c.seed);
  const std::string sampling = j.value("sampling", std::string("balanced"));
  if (sampling == "balanced") {
    c.sampling = Sampling::balanced;
  } else if (sampling == "uniform") {
    c.sampling = Sampling::uniform;
  } else {
    fail(ErrorKind::config, "unknown sampling '" + sampling + "' (expected balanced or uniform)");
  }
  c.gate_hidden = j.value("gate_hidden", c.gate_hidden);
  c.embed_hidden = j.value("embed_hidden", c.embed_hidden);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.regression_bins = j.value("regression_bins", c.regression_bins);
  c.validate();
  return c;
}

json column_json(const ColumnMeta& cm) {
  return {{"name", cm.name},
          {"kind", cm.kind == ColumnKind::categorical ? "categorical" : "numerical"},
          {"train_mean", cm.train_mean},
          {"train_std", cm.train_std},
          {"train_mode", cm.train_mode},
          {"normalized", cm.normalized},
          {"categories", cm.categories}};
}

ColumnMeta column_from(const json& j) {
  ColumnMeta cm;
  cm.name = j.at("name").get<std::string>();
  cm.kind = j.at("kind").get<std::string>() == "categorical" ? ColumnKind::categorical : ColumnKind::numerical;
  cm.train_mean = j.at("train_mean").get<double>();
  cm.train_std = j.at("train_std").get<double>();
  cm.train_mode = j.at("train_mode").get<double>();
  cm.normalized = j.at("normalized").get<bool>();
  cm.categories = j.at("categories").get<std::vector<std::string>>();
  return cm;
}

json task_json(const Task& t) { return {{"kind", to_string(t)}, {"n_classes", t.n_classes}}; }

Task task_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const int c = j.at("n_classes").get<int>();
  if (kind == "binary") return Task::binary();
  if (kind == "regression") return Task::regression();
  if (c < 2) fail(ErrorKind::data, "multiclass task needs at least two classes");
  return Task::multiclass(c);
}

}  // namespace

std::string train_config_to_json(const TrainConfig& config) { return train_config_json(config).dump(2); }

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("train config is not valid JSON: ") + e.what());
  }
  return train_config_from(j);
}

std::string encoder_model_to_json(const EncoderModel& model) {
  model.ensemble.validate();
  const EncoderDims& d = model.ensemble.dims();
  json members = json::array();
  for (const auto& p : model.ensemble.members) {
    json blocks = json::object();
    p.for_each_block([&](const char* name, const double* data, std::size_t size, bool) {
      blocks[name] = flat(data, static_cast<Eigen::Index>(size));
    });
    members.push_back(std::move(blocks));
  }
  json traces = json::array();
  for (const auto& trace : model.ensemble.traces) {
    json t = json::array();
    for (const auto& e : trace) t.push_back({e.epoch, e.mean_loss, e.skipped_anchor_fraction});
    traces.push_back(std::move(t));
  }
  json columns = json::array();
  for (const auto& cm : model.transform.meta) columns.push_back(column_json(cm));
  json j = {{"format_version", kFormatVersion},
            {"kind", "aware-encoder"},
            {"dims",
             {{"input", d.input}, {"gate_hidden", d.gate_hidden}, {"embed_hidden", d.embed_hidden}, {"embed", d.embed}}},
            {"train_config", train_config_json(model.config)},
            {"task", task_json(model.task)},
            {"label_column", model.label_column},
            {"k", model.ensemble.size()},
            {"members", std::move(members)},
            {"fold_of", model.ensemble.fold_of},
            {"traces", std::move(traces)},
            {"transform",
             {{"input_columns", model.transform.input_columns},
              {"kept", model.transform.kept},
              {"columns", std::move(columns)}}}};
  return j.dump() + "\n";
}

EncoderModel encoder_model_from_json(const std::string& text) {
  const json j = parse(text, "aware-encoder");
  return guarded("aware-encoder", [&] {
    EncoderModel model;
    const json& dj = j.at("dims");
    EncoderDims dims{dj.at("input").get<int>(), dj.at("gate_hidden").get<int>(), dj.at("embed_hidden").get<int>(),
                     dj.at("embed").get<int>()};
    if (dims.input < 1 || dims.gate_hidden < 1 || dims.embed_hidden < 1 || dims.embed < 1) {
      fail(ErrorKind::data, "encoder dims must be positive");
    }
    for (const auto& mj : j.at("members")) {
      EncoderParams p = EncoderParams::zeros(dims);
      p.for_each_block([&](const char* name, double* data, std::size_t size, bool) {
        const auto values = doubles(mj.at(name), size, std::string("block ") + name);
        std::copy(values.begin(), values.end(), data);
      });
      if (!p.all_finite()) fail(ErrorKind::data, "encoder weights contain non-finite values");
      model.ensemble.members.push_back(std::move(p));
    }
    if (j.at("k").get<std::size_t>() != model.ensemble.size()) fail(ErrorKind::data, "member count does not match k");
    model.ensemble.fold_of = j.at("fold_of").get<std::vector<int>>();
    for (const auto& tj : j.at("traces")) {
      std::vector<EpochStats> trace;
      for (const auto& e : tj) trace.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>()});
      model.ensemble.traces.push_back(std::move(trace));
    }
    model.ensemble.validate();
    model.config = train_config_from(j.at("train_config"));
    model.task = task_from(j.at("task"));
    model.label_column = j.at("label_column").get<std::string>();
    const json& tj = j.at("transform");
    model.transform.input_columns = tj.at("input_columns").get<std::vector<std::string>>();
    model.transform.kept = tj.at("kept").get<std::vector<std::size_t>>();
    for (const auto& cj : tj.at("columns")) model.transform.meta.push_back(column_from(cj));
    if (model.transform.kept.size() != model.transform.meta.size() ||
        static_cast<int>(model.transform.meta.size()) != dims.input) {
      fail(ErrorKind::data, "preprocessing record does not match encoder input dimension");
    }
    return model;
  });
}

std::string index_to_json(const EmbeddingIndex& index) {
  json j = {{"format_version", kFormatVersion},
            {"kind", "aware-index"},
            {"distance", to_string(index.distance_kind())},
            {"vectors", matrix_json(index.vectors())},
            {"labels", index.labels()},
            {"row_ids", index.row_ids()}};
  return j.dump() + "\n";
}

EmbeddingIndex index_from_json(const std::string& text) {
  const json j = parse(text, "aware-index");
  return guarded("aware-index", [&] {
    Matrix vectors = matrix_from(j.at("vectors"), "index vectors");
    const auto n = static_cast<std::size_t>(vectors.rows());
    auto labels = doubles(j.at("labels"), n, "index labels");
    auto row_ids = j.at("row_ids").get<std::vector<std::size_t>>();
    return EmbeddingIndex(std::move(vectors), std::move(labels), std::move(row_ids),
                          distance_kind_from_string(j.at("distance").get<std::string>()));
  });
}

std::string adapter_to_json(const AdapterParams& adapter) {
  json j = {{"format_version", kFormatVersion},
            {"kind", "aware-adapter"},
            {"weight", matrix_json(adapter.weight)},
            {"bias", flat(adapter.bias.data(), adapter.bias.size())}};
  return j.dump() + "\n";
}

AdapterParams adapter_from_json(const std::string& text) {
  const json j = parse(text, "aware-adapter");
  return guarded("aware-adapter", [&] {
    AdapterParams a;
    a.weight = matrix_from(j.at("weight"), "adapter weight");
    if (a.weight.rows() != a.weight.cols() || a.weight.rows() < 1) fail(ErrorKind::data, "adapter weight must be square");
    const auto bias = doubles(j.at("bias"), static_cast<std::size_t>(a.weight.rows()), "adapter bias");
    a.bias = Eigen::Map<const Vector>(bias.data(), static_cast<Eigen::Index>(bias.size()));
    if (!a.weight.allFinite() || !a.bias.allFinite()) fail(ErrorKind::data, "adapter contains non-finite values");
    return a;
  });
}

std::string loss_trace_csv(const std::vector<EpochStats>& trace) {
  std::ostringstream out;
  out << "epoch,mean_loss,skipped_anchor_fraction\n";
  for (const auto& e : trace) {
    out << e.epoch << ',' << format_double(e.mean_loss) << ',' << format_double(e.skipped_anchor_fraction) << '\n';
  }
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorKind::io, "failed writing '" + path + "'");
}

}  // namespace aware
