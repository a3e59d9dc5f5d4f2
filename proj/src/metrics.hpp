#pragma once

#include <span>
#include <utility>
#include <vector>

namespace aware {

// Mann-Whitney AUROC with midranks for ties. labels: 1 = positive, anything else negative.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Average precision. Ties in score are ordered by ascending input index.
double auprc(std::span<const double> scores, std::span<const int> labels);

double f1_binary(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

// Unweighted mean of per-class one-vs-rest F1 for hard predictions.
double f1_macro(std::span<const int> predicted, std::span<const int> labels, int n_classes);

struct RegressionErrors {
  double mae = 0.0;
  double rmse = 0.0;
};

RegressionErrors mae_rmse(std::span<const double> predictions, std::span<const double> targets);

double accuracy(std::span<const int> predicted, std::span<const int> labels);

// Macro one-vs-rest AUROC over the classes present with both polarities.
// probs is row-major n x n_classes.
double auroc_ovr_macro(std::span<const double> probs, std::span<const int> labels, int n_classes);

}  // namespace aware
