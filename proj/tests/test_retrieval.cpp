#include "retrieval.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace aware;

namespace {

std::vector<std::size_t> iota_ids(std::size_t n, std::size_t start = 0) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), start);
  return ids;
}

Matrix random_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

EmbeddingIndex line_index() {
  Matrix v(3, 2);
  v << 1, 0, 2, 0, 3, 0;
  return build_index(v, {0, 1, 0}, {10, 11, 12});
}

}  // namespace

TEST(BuildIndex, SizeAndOrderPreserved) {
  const auto ix = line_index();
  EXPECT_EQ(ix.size(), 3u);
  EXPECT_EQ(ix.dim(), 2u);
  EXPECT_EQ(ix.row_ids(), (std::vector<std::size_t>{10, 11, 12}));
  EXPECT_EQ(ix.position_of(11), std::optional<std::size_t>(1));
  EXPECT_FALSE(ix.position_of(99).has_value());
}

TEST(BuildIndex, RejectsMismatchedInputs) {
  EXPECT_THROW(build_index(Matrix::Zero(3, 2), {0, 1}, iota_ids(3)), Error);
  EXPECT_THROW(build_index(Matrix::Zero(3, 2), {0, 1, 0}, {1, 1, 2}), Error);
}

TEST(BuildIndex, CosineZeroVectorRanksLast) {
  Matrix v(4, 2);
  v << 0, 0, 1, 0, 0, 1, -1, -1;
  const auto ix = build_index(v, {0, 0, 1, 1}, iota_ids(4), DistanceKind::cosine);
  Rng rng(0);
  for (int q = 0; q < 20; ++q) {
    const Vector query = random_rows(1, 2, rng).row(0).transpose();
    EXPECT_EQ(ix.top_k(query, 4).back().row_id, 0u);
  }
}

TEST(TopK, LineExample) {
  const auto nn = line_index().top_k(Vector::Zero(2), 2);
  ASSERT_EQ(nn.size(), 2u);
  EXPECT_EQ(nn[0], (Neighbor{10, 1.0}));
  EXPECT_EQ(nn[1], (Neighbor{11, 4.0}));
}

TEST(TopK, TiesBreakByLowerRowId) {
  Matrix v(3, 1);
  v << 1, -1, 1;
  const auto ix = build_index(v, {0, 1, 0}, {7, 3, 5});
  const auto nn = ix.top_k(Vector::Zero(1), 3);
  EXPECT_EQ(nn[0].row_id, 3u);
  EXPECT_EQ(nn[1].row_id, 5u);
  EXPECT_EQ(nn[2].row_id, 7u);
}

TEST(TopK, MatchesFullSortOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix v = random_rows(200, 8, rng);
    auto ids = iota_ids(200, 1000);
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto ix = build_index(v, std::vector<double>(200, 0.0), ids);
    const Vector q = random_rows(1, 8, rng).row(0).transpose();
    for (std::size_t k : {1u, 7u, 50u, 200u}) {
      const auto got = ix.top_k(q, k);
      const auto want = oracle::full_sort_top_k(v, ids, q, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].row_id, want[i].row_id);
        EXPECT_NEAR(got[i].distance, want[i].distance, 1e-12 * want[i].distance);
      }
    }
  }
}

TEST(TopK, ExcludedRowNeverReturned) {
  const auto nn = line_index().top_k(Vector::Zero(2), 2, 10);
  ASSERT_EQ(nn.size(), 2u);
  EXPECT_EQ(nn[0].row_id, 11u);
}

TEST(TopK, BatchAgreesAcrossThreadCounts) {
  Rng rng(2);
  const Matrix v = random_rows(300, 4, rng);
  const auto ix = build_index(v, std::vector<double>(300, 1.0), iota_ids(300));
  const Matrix q = random_rows(40, 4, rng);
  const auto serial = ix.top_k_batch(q, 9, 1);
  EXPECT_EQ(serial, ix.top_k_batch(q, 9, 4));
  for (Eigen::Index i = 0; i < q.rows(); ++i) EXPECT_EQ(serial[static_cast<std::size_t>(i)], ix.top_k(q.row(i).transpose(), 9));
}

TEST(TopK, KBeyondRetrievableRowsIsError) {
  EXPECT_THROW(line_index().top_k(Vector::Zero(2), 4), Error);
  EXPECT_THROW(line_index().top_k(Vector::Zero(2), 3, 10), Error);
}

TEST(TopK, DimensionMismatchIsDataError) {
  try {
    line_index().top_k(Vector::Zero(3), 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
}

TEST(PrecisionAtK, WorkedExample) {
  Matrix v(5, 1);
  v << 1, 2, 3, 4, 5;
  const auto ix = build_index(v, {1, 1, 0, 1, 0}, iota_ids(5));
  EXPECT_DOUBLE_EQ(precision_at_k(ix, Vector::Zero(1), 1, 5), 0.6);
  EXPECT_DOUBLE_EQ(precision_at_k(ix, Vector::Zero(1), 1, 1), 1.0);
}

TEST(PrecisionAtK, SingleLabelIndex) {
  Rng rng(3);
  const auto ix = build_index(random_rows(20, 2, rng), std::vector<double>(20, 1.0), iota_ids(20));
  EXPECT_DOUBLE_EQ(precision_at_k(ix, Vector::Zero(2), 1, 10), 1.0);
  EXPECT_DOUBLE_EQ(precision_at_k(ix, Vector::Zero(2), 0, 10), 0.0);
}

TEST(RetrieveContext, DefaultSizeClipsToIndex) {
  Rng rng(4);
  const auto ix = build_index(random_rows(300, 3, rng), std::vector<double>(300, 0.0), iota_ids(300));
  EXPECT_EQ(retrieve_context(ix, Vector::Zero(3)).row_ids.size(), 300u);
}

TEST(RetrieveContext, FixedSizeAndTopKOrder) {
  Rng rng(5);
  const Matrix v = random_rows(1500, 3, rng);
  std::vector<double> labels(1500);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<double>(i % 2);
  const auto ix = build_index(v, labels, iota_ids(1500));
  const Vector q = Vector::Constant(3, 0.1);
  const auto ctx = retrieve_context(ix, q, kDefaultContextSize);
  ASSERT_EQ(ctx.row_ids.size(), 1024u);
  EXPECT_EQ(ctx.embeddings.rows(), 1024);
  const auto nn = ix.top_k(q, 1024);
  for (std::size_t i = 0; i < nn.size(); ++i) {
    EXPECT_EQ(ctx.row_ids[i], nn[i].row_id);
    EXPECT_EQ(ctx.distances[i], nn[i].distance);
    EXPECT_EQ(ctx.labels[i], labels[nn[i].row_id]);
    EXPECT_EQ(ctx.embeddings.row(static_cast<Eigen::Index>(i)), v.row(static_cast<Eigen::Index>(nn[i].row_id)));
  }
}
