#pragma once

#include "backbone.hpp"
#include "retrieval.hpp"

#include <vector>

namespace aware {

// Affine map v -> A v + bias applied to every prompt row and the query before
// the frozen backbone.
struct AdapterParams {
  Matrix weight;  // m x m
  Vector bias;    // m

  static AdapterParams identity(int m);
  std::size_t parameter_count() const { return static_cast<std::size_t>(weight.size() + bias.size()); }
  bool is_identity() const;
  bool operator==(const AdapterParams& o) const { return weight == o.weight && bias == o.bias; }
};

Prompt apply_adapter(const AdapterParams& adapter, const Prompt& prompt);

struct AdapterGradient {
  double nll = 0.0;
  Matrix d_weight;
  Vector d_bias;
};

// -log p(query_label) under the adapted kNN vote, with its exact gradient.
// The vote temperature is differentiated too when it is self-scaled.
AdapterGradient adapter_nll_grad(const AdapterParams& adapter, const Prompt& prompt, const VoteConfig& vote);
double adapter_nll(const AdapterParams& adapter, const Prompt& prompt, const VoteConfig& vote);

inline constexpr std::size_t kBootstrapRetrievalThreshold = 3000;

// Samples one training prompt from the indexed training set. Above the
// threshold the context is the retrieved neighbourhood of a random anchor
// (anchor excluded); otherwise a uniform subset of min(B, N - 1) other rows.
Prompt bootstrap_prompt(const EmbeddingIndex& index, std::size_t context_size, Rng& rng,
                        std::size_t retrieval_threshold = kBootstrapRetrievalThreshold);
Prompt bootstrap_prompt(const EmbeddingIndex& index, std::size_t context_size, std::uint64_t seed,
                        std::size_t retrieval_threshold = kBootstrapRetrievalThreshold);

struct AdapterConfig {
  int epochs = 5;
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  std::size_t context_size = kDefaultContextSize;
  std::size_t prompts_per_epoch = 0;  // 0: one prompt per indexed row
  std::size_t prompt_batch = 1;       // prompts averaged per optimizer step
  std::size_t retrieval_threshold = kBootstrapRetrievalThreshold;
  std::uint64_t seed = 0;
  VoteConfig vote;
};

struct TrainedAdapter {
  AdapterParams params;
  std::vector<double> epoch_nll;  // mean training-prompt NLL per epoch
};

TrainedAdapter train_adapter(const EmbeddingIndex& index, const AdapterConfig& config);

// Mean NLL over held-out queries whose contexts are retrieved from the index.
double heldout_nll(const AdapterParams& adapter, const EmbeddingIndex& index, const Matrix& queries,
                   const std::vector<double>& labels, std::size_t context_size, const VoteConfig& vote);

}  // namespace aware
