#include "retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace aware {

EmbeddingIndex::EmbeddingIndex(Matrix vectors, std::vector<double> labels, std::vector<std::size_t> row_ids,
                               DistanceKind kind)
    : vectors_(std::move(vectors)), labels_(std::move(labels)), row_ids_(std::move(row_ids)), kind_(kind) {
  if (vectors_.rows() == 0) fail(ErrorKind::invalid_argument, "cannot build an index over zero vectors");
  if (labels_.size() != size() || row_ids_.size() != size()) {
    fail(ErrorKind::invalid_argument, "index labels / row ids do not match the number of vectors");
  }
  if (!vectors_.allFinite()) fail(ErrorKind::data, "index vectors must be finite");
  for (std::size_t i = 0; i < row_ids_.size(); ++i) {
    if (!position_.emplace(row_ids_[i], i).second) fail(ErrorKind::invalid_argument, "duplicate row id in index");
  }
  if (kind_ == DistanceKind::cosine) {
    norms_ = vectors_.rowwise().norm();
    unit_ = vectors_;
    for (Eigen::Index i = 0; i < unit_.rows(); ++i) {
      if (norms_(i) > 0.0) unit_.row(i) /= norms_(i);
    }
  }
}

std::optional<std::size_t> EmbeddingIndex::position_of(std::size_t row_id) const {
  auto it = position_.find(row_id);
  if (it == position_.end()) return std::nullopt;
  return it->second;
}

Vector EmbeddingIndex::distances(const Eigen::Ref<const Vector>& query) const {
  if (static_cast<std::size_t>(query.size()) != dim()) {
    fail(ErrorKind::data, "query has dimension " + std::to_string(query.size()) + ", index has " +
                              std::to_string(dim()));
  }
  if (kind_ == DistanceKind::squared_euclidean) {
    return (vectors_.rowwise() - query.transpose()).rowwise().squaredNorm();
  }
  const double qn = query.norm();
  Vector d(vectors_.rows());
  for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
    if (norms_(i) == 0.0) {
      d(i) = std::numeric_limits<double>::infinity();  // unreachable rows rank last
    } else if (qn == 0.0) {
      d(i) = 1.0;
    } else {
      d(i) = 1.0 - unit_.row(i).dot(query) / qn;
    }
  }
  return d;
}

std::vector<Neighbor> EmbeddingIndex::top_k(const Eigen::Ref<const Vector>& query, std::size_t k,
                                            std::optional<std::size_t> exclude_row_id) const {
  const std::size_t available = size() - (exclude_row_id && position_of(*exclude_row_id) ? 1 : 0);
  if (k < 1) fail(ErrorKind::invalid_argument, "k must be at least 1");
  if (k > available) {
    fail(ErrorKind::invalid_argument, "k = " + std::to_string(k) + " exceeds the " + std::to_string(available) +
                                          " retrievable rows");
  }
  const Vector d = distances(query);
  std::vector<std::size_t> order;
  order.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (exclude_row_id && row_ids_[i] == *exclude_row_id) continue;
    order.push_back(i);
  }
  auto closer = [&](std::size_t a, std::size_t b) {
    const double da = d(static_cast<Eigen::Index>(a));
    const double db = d(static_cast<Eigen::Index>(b));
    if (da != db) return da < db;
    return row_ids_[a] < row_ids_[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
  std::vector<Neighbor> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = {row_ids_[order[i]], d(static_cast<Eigen::Index>(order[i]))};
  return out;
}

std::vector<std::vector<Neighbor>> EmbeddingIndex::top_k_batch(const Matrix& queries, std::size_t k,
                                                               unsigned jobs) const {
  const auto n = static_cast<std::size_t>(queries.rows());
  std::vector<std::vector<Neighbor>> out(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = top_k(queries.row(static_cast<Eigen::Index>(i)).transpose(), k);
  };
  parallel_ranges(n, jobs, work);
  return out;
}

EmbeddingIndex build_index(const Matrix& embeddings, const std::vector<double>& labels,
                           const std::vector<std::size_t>& row_ids, DistanceKind kind) {
  return EmbeddingIndex(embeddings, labels, row_ids, kind);
}

double precision_at_k(const EmbeddingIndex& index, const Eigen::Ref<const Vector>& query, double query_label,
                      std::size_t k) {
  const auto hits = index.top_k(query, k);
  std::size_t match = 0;
  for (const auto& n : hits) {
    const auto pos = *index.position_of(n.row_id);
    if (index.labels()[pos] == query_label) ++match;
  }
  return static_cast<double>(match) / static_cast<double>(k);
}

ContextSet retrieve_context(const EmbeddingIndex& index, const Eigen::Ref<const Vector>& query, std::size_t k,
                            std::optional<std::size_t> exclude_row_id) {
  const std::size_t available =
      index.size() - (exclude_row_id && index.position_of(*exclude_row_id) ? 1 : 0);
  if (k == 0) k = kDefaultContextSize;
  k = std::min(k, available);
  if (k == 0) fail(ErrorKind::invalid_argument, "no rows available for the context");
  const auto hits = index.top_k(query, k, exclude_row_id);
  ContextSet ctx;
  ctx.embeddings.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(index.dim()));
  for (std::size_t i = 0; i < k; ++i) {
    const auto pos = *index.position_of(hits[i].row_id);
    ctx.row_ids.push_back(hits[i].row_id);
    ctx.embeddings.row(static_cast<Eigen::Index>(i)) = index.vectors().row(static_cast<Eigen::Index>(pos));
    ctx.labels.push_back(index.labels()[pos]);
    ctx.distances.push_back(hits[i].distance);
  }
  return ctx;
}

}  // namespace aware
