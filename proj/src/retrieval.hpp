#pragma once

#include "common.hpp"

#include <optional>
#include <unordered_map>
#include <vector>

namespace aware {

struct Neighbor {
  std::size_t row_id = 0;
  double distance = 0.0;

  bool operator==(const Neighbor&) const = default;
};

inline constexpr std::size_t kDefaultContextSize = 1024;

// Frozen set of reference embeddings answering exact top-k queries.
class EmbeddingIndex {
 public:
  EmbeddingIndex(Matrix vectors, std::vector<double> labels, std::vector<std::size_t> row_ids,
                 DistanceKind kind = DistanceKind::squared_euclidean);

  std::size_t size() const { return static_cast<std::size_t>(vectors_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  DistanceKind distance_kind() const { return kind_; }
  const Matrix& vectors() const { return vectors_; }
  const std::vector<double>& labels() const { return labels_; }
  const std::vector<std::size_t>& row_ids() const { return row_ids_; }

  // Position of a row id inside the index, if present.
  std::optional<std::size_t> position_of(std::size_t row_id) const;

  // Ascending distance, ties by ascending row id. `exclude_row_id` removes one
  // row from consideration (used to keep a query out of its own context).
  std::vector<Neighbor> top_k(const Eigen::Ref<const Vector>& query, std::size_t k,
                              std::optional<std::size_t> exclude_row_id = std::nullopt) const;

  // One result list per query row; `jobs` > 1 fans out across threads.
  std::vector<std::vector<Neighbor>> top_k_batch(const Matrix& queries, std::size_t k, unsigned jobs = 1) const;

  // Distance from query to every indexed row (row order of the index).
  Vector distances(const Eigen::Ref<const Vector>& query) const;

 private:
  Matrix vectors_;
  std::vector<double> labels_;
  std::vector<std::size_t> row_ids_;
  DistanceKind kind_;
  Vector norms_;  // cosine mode: norms of the stored vectors
  Matrix unit_;   // cosine mode: normalized copies
  std::unordered_map<std::size_t, std::size_t> position_;
};

EmbeddingIndex build_index(const Matrix& embeddings, const std::vector<double>& labels,
                           const std::vector<std::size_t>& row_ids,
                           DistanceKind kind = DistanceKind::squared_euclidean);

double precision_at_k(const EmbeddingIndex& index, const Eigen::Ref<const Vector>& query, double query_label,
                      std::size_t k);

struct ContextSet {
  std::vector<std::size_t> row_ids;
  Matrix embeddings;            // k x m, in retrieval order
  std::vector<double> labels;
  std::vector<double> distances;
};

// k = 0 selects the default context size; k is clipped to the index size.
ContextSet retrieve_context(const EmbeddingIndex& index, const Eigen::Ref<const Vector>& query, std::size_t k = 0,
                            std::optional<std::size_t> exclude_row_id = std::nullopt);

}  // namespace aware
