#pragma once

#include "adapter.hpp"
#include "dataset.hpp"
#include "retrieval.hpp"
#include "training.hpp"

#include <string>

namespace aware {

inline constexpr int kFormatVersion = 1;

// Everything needed to embed a new raw CSV: the ensemble, the configuration it
// was trained with, and the replayable preprocessing.
struct EncoderModel {
  EncoderEnsemble ensemble;
  TrainConfig config;
  FeatureTransform transform;
  Task task;
  std::string label_column;
};

std::string encoder_model_to_json(const EncoderModel& model);
EncoderModel encoder_model_from_json(const std::string& text);

std::string index_to_json(const EmbeddingIndex& index);
EmbeddingIndex index_from_json(const std::string& text);

std::string adapter_to_json(const AdapterParams& adapter);
AdapterParams adapter_from_json(const std::string& text);

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

std::string loss_trace_csv(const std::vector<EpochStats>& trace);

// Whole-file helpers; failures are ErrorKind::io errors naming the path.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace aware
