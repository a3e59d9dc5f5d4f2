#pragma once

#include "common.hpp"

#include <span>

namespace aware {

struct SnnlResult {
  double loss = 0.0;
  std::size_t anchors_used = 0;
  std::size_t anchors_skipped = 0;
  bool all_skipped = false;  // loss forced to 0
};

// Soft nearest neighbour loss over the rows of z. Anchors without a same-class
// partner are skipped; the mean runs over the remaining anchors.
SnnlResult snnl(const Matrix& z, std::span<const int> labels, double temperature, DistanceKind kind);

// Gradient of snnl() with respect to every entry of z.
Matrix snnl_grad(const Matrix& z, std::span<const int> labels, double temperature, DistanceKind kind,
                 SnnlResult* result = nullptr);

// Pairwise distance matrix used by the loss.
Matrix pairwise_distances(const Matrix& z, DistanceKind kind);

}  // namespace aware
