#include "metrics.hpp"

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aware {

namespace {

void check_scored(std::size_t n_scores, std::size_t n_labels) {
  require(n_scores == n_labels, "scores and labels differ in length");
  require(n_scores >= 1, "scored set is empty");
}

void check_finite(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorKind::numeric, "non-finite score");
  }
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_scored(scores.size(), labels.size());
  check_finite(scores);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // ranks i+1 .. j+1 share the midrank
    const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::data, "AUROC undefined: scored set has a single class");
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  check_scored(scores.size(), labels.size());
  check_finite(scores);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[order[r]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) fail(ErrorKind::data, "AUPRC undefined: no positive labels");
  return sum / static_cast<double>(hits);
}

double f1_binary(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_scored(scores.size(), labels.size());
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool truth = labels[i] == 1;
    if (pred && truth) ++tp;
    if (pred && !truth) ++fp;
    if (!pred && truth) ++fn;
  }
  const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double f1_macro(std::span<const int> predicted, std::span<const int> labels, int n_classes) {
  check_scored(predicted.size(), labels.size());
  require(n_classes >= 1, "n_classes must be positive");
  double total = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool pred = predicted[i] == c;
      const bool truth = labels[i] == c;
      if (pred && truth) ++tp;
      if (pred && !truth) ++fp;
      if (!pred && truth) ++fn;
    }
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    total += p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  return total / n_classes;
}

RegressionErrors mae_rmse(std::span<const double> predictions, std::span<const double> targets) {
  check_scored(predictions.size(), targets.size());
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double e = targets[i] - predictions[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const double n = static_cast<double>(targets.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  check_scored(predicted.size(), labels.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double auroc_ovr_macro(std::span<const double> probs, std::span<const int> labels, int n_classes) {
  require(probs.size() == labels.size() * static_cast<std::size_t>(n_classes), "probability matrix shape mismatch");
  const std::size_t n = labels.size();
  std::vector<double> col(n);
  std::vector<int> bin(n);
  double total = 0.0;
  int used = 0;
  for (int c = 0; c < n_classes; ++c) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = probs[i * n_classes + c];
      bin[i] = labels[i] == c ? 1 : 0;
      pos += bin[i];
    }
    if (pos == 0 || pos == n) continue;
    total += auroc(col, bin);
    ++used;
  }
  if (used == 0) fail(ErrorKind::data, "AUROC undefined: no class has both polarities");
  return total / used;
}

}  // namespace aware
