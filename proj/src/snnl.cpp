#include "snnl.hpp"

#include <cmath>
#include <limits>

namespace aware {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 + exp(t)) without overflow or loss of precision for very negative t.
double softplus(double t) {
  if (t == kNegInf) return 0.0;
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

void check_inputs(const Matrix& z, std::span<const int> labels, double temperature) {
  require(z.rows() >= 2, "snnl needs a batch of at least two embeddings");
  require(static_cast<std::size_t>(z.rows()) == labels.size(), "labels do not match batch size");
  require(temperature > 0.0, "temperature must be positive");
}

struct AnchorTerms {
  double lse_same = kNegInf;
  double lse_cross = kNegInf;
};

// Log-sum-exp of the same-class and cross-class logits of anchor i; each
// accumulation subtracts its own running maximum.
AnchorTerms anchor_terms(const Matrix& dist, std::span<const int> labels, Eigen::Index i, double temperature) {
  double max_same = kNegInf, max_cross = kNegInf;
  const Eigen::Index b = dist.rows();
  for (Eigen::Index j = 0; j < b; ++j) {
    if (j == i) continue;
    const double l = -dist(i, j) / temperature;
    if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
      max_same = std::max(max_same, l);
    } else {
      max_cross = std::max(max_cross, l);
    }
  }
  double sum_same = 0.0, sum_cross = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    if (j == i) continue;
    const double l = -dist(i, j) / temperature;
    if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
      sum_same += std::exp(l - max_same);
    } else {
      sum_cross += std::exp(l - max_cross);
    }
  }
  AnchorTerms t;
  if (max_same != kNegInf) t.lse_same = max_same + std::log(sum_same);
  if (max_cross != kNegInf) t.lse_cross = max_cross + std::log(sum_cross);
  return t;
}

}  // namespace

Matrix pairwise_distances(const Matrix& z, DistanceKind kind) {
  const Eigen::Index b = z.rows();
  Matrix d(b, b);
  if (kind == DistanceKind::squared_euclidean) {
    for (Eigen::Index i = 0; i < b; ++i) {
      d(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < b; ++j) d(i, j) = d(j, i) = (z.row(i) - z.row(j)).squaredNorm();
    }
    return d;
  }
  const Vector norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = i; j < b; ++j) {
      double v = 1.0;
      if (norms(i) > 0.0 && norms(j) > 0.0) v = 1.0 - z.row(i).dot(z.row(j)) / (norms(i) * norms(j));
      d(i, j) = d(j, i) = v;
    }
  }
  return d;
}

SnnlResult snnl(const Matrix& z, std::span<const int> labels, double temperature, DistanceKind kind) {
  check_inputs(z, labels, temperature);
  const Matrix dist = pairwise_distances(z, kind);
  SnnlResult r;
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const AnchorTerms t = anchor_terms(dist, labels, i, temperature);
    if (t.lse_same == kNegInf) {
      ++r.anchors_skipped;
      continue;
    }
    ++r.anchors_used;
    total += softplus(t.lse_cross - t.lse_same);
  }
  r.all_skipped = r.anchors_used == 0;
  r.loss = r.all_skipped ? 0.0 : total / static_cast<double>(r.anchors_used);
  return r;
}

Matrix snnl_grad(const Matrix& z, std::span<const int> labels, double temperature, DistanceKind kind,
                 SnnlResult* result) {
  check_inputs(z, labels, temperature);
  const Eigen::Index b = z.rows();
  const Matrix dist = pairwise_distances(z, kind);

  // coef(i, j) = dLoss / d dist(i, j) with anchor i.
  Matrix coef = Matrix::Zero(b, b);
  SnnlResult r;
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const AnchorTerms t = anchor_terms(dist, labels, i, temperature);
    if (t.lse_same == kNegInf) {
      ++r.anchors_skipped;
      continue;
    }
    ++r.anchors_used;
    total += softplus(t.lse_cross - t.lse_same);
    const double lse_all = log_add(t.lse_same, t.lse_cross);
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j == i) continue;
      const double l = -dist(i, j) / temperature;
      const double p = std::exp(l - lse_all);
      const double q = labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]
                           ? std::exp(l - t.lse_same)
                           : 0.0;
      // dloss_i/dl = p - q and dl/ddist = -1/T
      coef(i, j) = -(p - q) / temperature;
    }
  }
  r.all_skipped = r.anchors_used == 0;
  r.loss = r.all_skipped ? 0.0 : total / static_cast<double>(r.anchors_used);
  if (result) *result = r;
  Matrix grad = Matrix::Zero(b, z.cols());
  if (r.all_skipped) return grad;
  coef /= static_cast<double>(r.anchors_used);
  const Matrix sym = coef + coef.transpose();

  if (kind == DistanceKind::squared_euclidean) {
    // d/dz_i of |z_i - z_j|^2 = 2 (z_i - z_j)
    for (Eigen::Index i = 0; i < b; ++i) {
      for (Eigen::Index j = 0; j < b; ++j) {
        if (j == i || sym(i, j) == 0.0) continue;
        grad.row(i) += 2.0 * sym(i, j) * (z.row(i) - z.row(j));
      }
    }
    return grad;
  }
  const Vector norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < b; ++i) {
    if (norms(i) == 0.0) continue;
    const auto zi_hat = z.row(i) / norms(i);
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j == i || norms(j) == 0.0 || sym(i, j) == 0.0) continue;
      const auto zj_hat = z.row(j) / norms(j);
      const double cos = zi_hat.dot(zj_hat);
      // dist = 1 - cos; dcos/dz_i = (zj_hat - cos * zi_hat) / |z_i|
      grad.row(i) -= sym(i, j) * (zj_hat - cos * zi_hat) / norms(i);
    }
  }
  return grad;
}

}  // namespace aware
