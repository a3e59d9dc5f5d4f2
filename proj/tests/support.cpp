#include "support.hpp"

#include "snnl.hpp"

#include <algorithm>
#include <cmath>

namespace aware::oracle {

namespace {

constexpr double kStep = 1e-5;

std::vector<double> flatten(const EncoderParams& p) {
  std::vector<double> out;
  p.for_each_block([&](const char*, const double* data, std::size_t size, bool) { out.insert(out.end(), data, data + size); });
  return out;
}

std::vector<double*> slots(EncoderParams& p) {
  std::vector<double*> out;
  p.for_each_block([&](const char*, double* data, std::size_t size, bool) {
    for (std::size_t i = 0; i < size; ++i) out.push_back(data + i);
  });
  return out;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

double encoder_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> dim(2, 6);
  std::uniform_int_distribution<int> batch(4, 8);
  std::uniform_real_distribution<double> temp(0.5, 2.0);
  EncoderDims dims{dim(rng), dim(rng), dim(rng), dim(rng)};
  EncoderParams params = init_encoder(dims, rng);
  std::normal_distribution<double> jitter(0.0, 0.2);
  params.for_each_block([&](const char*, double* data, std::size_t size, bool) {
    for (std::size_t i = 0; i < size; ++i) data[i] += jitter(rng);
  });
  const int b = batch(rng);
  const Matrix x = random_matrix(b, dims.input, rng);
  std::vector<int> labels(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
  std::shuffle(labels.begin(), labels.end(), rng);
  const double t = temp(rng);
  const DistanceKind kind = (seed % 3 == 2) ? DistanceKind::cosine : DistanceKind::squared_euclidean;

  auto loss = [&](const EncoderParams& p) { return snnl(embed_batch(p, x), labels, t, kind).loss; };

  const ForwardCache cache = forward(params, x);
  const Matrix dz = snnl_grad(cache.z, labels, t, kind);
  const std::vector<double> analytic = flatten(backward(params, cache, dz));

  std::vector<double> numeric;
  for (double* slot : slots(params)) {
    const double saved = *slot;
    *slot = saved + kStep;
    const double up = loss(params);
    *slot = saved - kStep;
    const double down = loss(params);
    *slot = saved;
    numeric.push_back((up - down) / (2.0 * kStep));
  }
  return max_relative_error(analytic, numeric);
}

double adapter_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> dim(2, 6);
  std::uniform_int_distribution<int> ctx(3, 12);
  std::uniform_int_distribution<int> classes(2, 4);
  const int m = dim(rng);
  const int b = ctx(rng);
  const int c = classes(rng);

  Prompt prompt;
  prompt.context = random_matrix(b, m, rng);
  prompt.query = random_matrix(1, m, rng).row(0).transpose();
  std::uniform_int_distribution<int> label(0, c - 1);
  for (int i = 0; i < b; ++i) prompt.context_labels.push_back(label(rng));
  prompt.query_label = prompt.context_labels[0];

  VoteConfig vote;
  vote.n_classes = c;
  if (seed % 2 == 1) vote.tau = std::uniform_real_distribution<double>(0.5, 3.0)(rng);

  AdapterParams adapter = AdapterParams::identity(m);
  adapter.weight += random_matrix(m, m, rng, 0.3);
  adapter.bias = random_matrix(1, m, rng).row(0).transpose();

  const AdapterGradient g = adapter_nll_grad(adapter, prompt, vote);
  std::vector<double> analytic(g.d_weight.data(), g.d_weight.data() + g.d_weight.size());
  analytic.insert(analytic.end(), g.d_bias.data(), g.d_bias.data() + g.d_bias.size());

  std::vector<double*> entries;
  for (Eigen::Index i = 0; i < adapter.weight.size(); ++i) entries.push_back(adapter.weight.data() + i);
  for (Eigen::Index i = 0; i < adapter.bias.size(); ++i) entries.push_back(adapter.bias.data() + i);
  std::vector<double> numeric;
  for (double* slot : entries) {
    const double saved = *slot;
    *slot = saved + kStep;
    const double up = adapter_nll(adapter, prompt, vote);
    *slot = saved - kStep;
    const double down = adapter_nll(adapter, prompt, vote);
    *slot = saved;
    numeric.push_back((up - down) / (2.0 * kStep));
  }
  return max_relative_error(analytic, numeric);
}

NuisanceData make_nuisance_data(std::uint64_t seed, std::size_t n_train, std::size_t n_queries) {
  constexpr int kDim = 4;
  Rng rng(seed);
  std::normal_distribution<double> signal(0.0, 0.5);
  std::normal_distribution<double> nuisance(0.0, 5.0);
  auto draw = [&](std::size_t n, Matrix& z, std::vector<double>& y) {
    z.resize(static_cast<Eigen::Index>(n), kDim);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int label = static_cast<int>(i % 2);
      const auto r = static_cast<Eigen::Index>(i);
      z(r, 0) = (label == 1 ? 1.0 : -1.0) + signal(rng);
      for (int j = 1; j < kDim; ++j) z(r, j) = nuisance(rng);
      y[i] = label;
    }
  };
  Matrix train;
  std::vector<double> train_labels;
  draw(n_train, train, train_labels);
  std::vector<std::size_t> ids(n_train);
  for (std::size_t i = 0; i < n_train; ++i) ids[i] = i;
  NuisanceData out{build_index(train, train_labels, ids), Matrix(), {}};
  draw(n_queries, out.queries, out.query_labels);
  return out;
}

double adapter_nll_reduction(const NuisanceData& data, const AdapterConfig& config, std::size_t context_size) {
  const int m = static_cast<int>(data.index.dim());
  const double before =
      heldout_nll(AdapterParams::identity(m), data.index, data.queries, data.query_labels, context_size, config.vote);
  const TrainedAdapter trained = train_adapter(data.index, config);
  const double after = heldout_nll(trained.params, data.index, data.queries, data.query_labels, context_size, config.vote);
  return (before - after) / before;
}

std::vector<Neighbor> full_sort_top_k(const Matrix& vectors, const std::vector<std::size_t>& row_ids,
                                      const Vector& query, std::size_t k) {
  std::vector<Neighbor> all;
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    all.push_back({row_ids[static_cast<std::size_t>(i)], (vectors.row(i).transpose() - query).squaredNorm()});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.row_id < b.row_id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

double pairwise_auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double credit = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        credit += 1.0;
      } else if (scores[i] == scores[j]) {
        credit += 0.5;
      }
    }
  }
  return credit / pairs;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) return std::nan("");
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace aware::oracle
