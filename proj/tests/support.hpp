#pragma once

#include "adapter.hpp"
#include "encoder.hpp"
#include "retrieval.hpp"

#include <cstdint>
#include <vector>

namespace aware::oracle {

// Elementwise |a - n| / max(|a|, |n|, floor), maximised over entries.
double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                          double floor = 1e-5);

// SNNL through every encoder parameter on a random small configuration
// (random dims, batch, labels, temperature and distance) against central
// differences with step 1e-5.
double encoder_gradcheck(std::uint64_t seed);

// Prompt NLL through the adapter weight and bias on a random prompt.
double adapter_gradcheck(std::uint64_t seed);

// Embeddings whose first axis carries the label while the remaining axes are
// large-variance nuisance noise.
struct NuisanceData {
  EmbeddingIndex index;
  Matrix queries;
  std::vector<double> query_labels;
};

NuisanceData make_nuisance_data(std::uint64_t seed, std::size_t n_train = 2000, std::size_t n_queries = 300);

// Relative reduction of held-out prompt NLL achieved by a trained adapter.
double adapter_nll_reduction(const NuisanceData& data, const AdapterConfig& config, std::size_t context_size);

// Full-sort oracle for EmbeddingIndex::top_k.
std::vector<Neighbor> full_sort_top_k(const Matrix& vectors, const std::vector<std::size_t>& row_ids,
                                      const Vector& query, std::size_t k);

// Mann-Whitney statistic over all positive/negative pairs, ties at half credit.
double pairwise_auroc(const std::vector<double>& scores, const std::vector<int>& labels);

double median(std::vector<double> values);

}  // namespace aware::oracle
