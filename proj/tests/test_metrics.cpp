#include "common.hpp"
#include "metrics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace aware;

TEST(Auroc, PerfectRanking) {
  const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(auroc(s, y), 1.0);
}

TEST(Auroc, ThreeOfFourPairsCorrect) {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.1};
  const std::vector<int> y{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(auroc(s, y), 0.75);
}

TEST(Auroc, AllTiesGiveOneHalf) {
  const std::vector<double> s(6, 0.3);
  const std::vector<int> y{1, 0, 1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(auroc(s, y), 0.5);
}

TEST(Auroc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng() % 60;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so that ties are common.
      s[i] = static_cast<double>(rng() % 8) / 8.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(auroc(s, y), oracle::pairwise_auroc(s, y), 1e-12);
  }
}

TEST(Auroc, SingleClassIsDataError) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<int> y{1, 1};
  try {
    auroc(s, y);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
}

TEST(Auprc, WorkedExample) {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  const std::vector<int> y{1, 0, 1, 0};
  EXPECT_NEAR(auprc(s, y), 5.0 / 6.0, 1e-15);
}

TEST(Auprc, PerfectSeparation) {
  const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(auprc(s, y), 1.0);
}

TEST(Auprc, RandomScorerApproachesPrevalence) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double total = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> s(10000);
    std::vector<int> y(10000);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = u(rng);
      y[i] = i % 10 == 0 ? 1 : 0;
    }
    total += auprc(s, y);
  }
  EXPECT_NEAR(total / 20.0, 0.1, 0.03);
}

TEST(F1, ExactPredictions) {
  const std::vector<double> s{0.9, 0.1, 0.8, 0.2};
  const std::vector<int> y{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(f1_binary(s, y), 1.0);
}

TEST(F1, NoPredictedPositivesIsZero) {
  const std::vector<double> s{0.1, 0.2, 0.3};
  const std::vector<int> y{1, 0, 1};
  EXPECT_DOUBLE_EQ(f1_binary(s, y), 0.0);
}

TEST(F1, DirectFormula) {
  // TP = 2, FP = 1, FN = 1.
  const std::vector<double> s{0.9, 0.9, 0.9, 0.1, 0.1};
  const std::vector<int> y{1, 1, 0, 1, 0};
  EXPECT_NEAR(f1_binary(s, y), 2.0 / 3.0, 1e-15);
}

TEST(F1, MacroAveragesPerClass) {
  const std::vector<int> pred{0, 1, 2, 2};
  const std::vector<int> y{0, 1, 2, 1};
  // Class F1: 1, 2/3, 2/3.
  EXPECT_NEAR(f1_macro(pred, y, 3), (1.0 + 2.0 / 3.0 + 2.0 / 3.0) / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(accuracy(pred, y), 0.75);
}

TEST(MaeRmse, Examples) {
  const std::vector<double> t{1.0, 2.0};
  auto e = mae_rmse(std::vector<double>{1.0, 2.0}, t);
  EXPECT_EQ(e.mae, 0.0);
  EXPECT_EQ(e.rmse, 0.0);
  e = mae_rmse(std::vector<double>{2.0, 1.0}, t);
  EXPECT_DOUBLE_EQ(e.mae, 1.0);
  EXPECT_DOUBLE_EQ(e.rmse, 1.0);
  e = mae_rmse(std::vector<double>{1.0, 4.0}, t);
  EXPECT_DOUBLE_EQ(e.mae, 1.0);
  EXPECT_DOUBLE_EQ(e.rmse, std::sqrt(2.0));
}

TEST(AurocOvrMacro, ReducesToBinaryForTwoClasses) {
  const std::vector<double> probs{0.2, 0.8, 0.7, 0.3, 0.4, 0.6, 0.9, 0.1};
  const std::vector<int> y{1, 0, 1, 0};
  const std::vector<double> pos{0.8, 0.3, 0.6, 0.1};
  EXPECT_NEAR(auroc_ovr_macro(probs, y, 2), auroc(pos, y), 1e-15);
}
