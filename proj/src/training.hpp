#pragma once

#include "dataset.hpp"
#include "encoder.hpp"
#include "optimizer.hpp"

#include <vector>

namespace aware {

enum class Sampling { balanced, uniform };

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  double temperature = 1.0;
  DistanceKind distance = DistanceKind::squared_euclidean;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::balanced;
  int gate_hidden = 64;
  int embed_hidden = 64;
  int embed_dim = 32;
  int regression_bins = 10;

  void validate() const;
  AdamWConfig optimizer() const;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double skipped_anchor_fraction = 0.0;
};

struct TrainedEncoder {
  EncoderParams params;
  std::vector<EpochStats> trace;
};

// Labels used by the loss: class indices, or quantile bins for regression.
std::vector<int> snnl_labels(const TabularDataset& ds, const std::vector<std::size_t>& rows, int regression_bins);

TrainedEncoder train_encoder(const TabularDataset& ds, const std::vector<std::size_t>& train_idx,
                             const TrainConfig& config);

struct EncoderEnsemble {
  std::vector<EncoderParams> members;
  std::vector<int> fold_of;                      // per entry of the train_idx used
  std::vector<std::vector<EpochStats>> traces;   // per member

  std::size_t size() const { return members.size(); }
  const EncoderDims& dims() const { return members.front().dims; }
  void validate() const;
};

EncoderEnsemble train_ensemble(const TabularDataset& ds, const std::vector<std::size_t>& train_idx,
                               const TrainConfig& config, int k);

// Mean of member embeddings for every row of x.
Matrix ensemble_embed(const EncoderEnsemble& ensemble, const Matrix& x);
Vector ensemble_embed_row(const EncoderEnsemble& ensemble, const Eigen::Ref<const Vector>& x);

// Diagnostic: mean attention weight per input feature over the rows of x,
// averaged over ensemble members.
Vector mean_attention(const EncoderEnsemble& ensemble, const Matrix& x);

// Rows of the dataset's feature matrix gathered into a dense batch.
Matrix gather_rows(const Matrix& features, const std::vector<std::size_t>& rows);

}  // namespace aware
