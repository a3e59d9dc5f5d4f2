#include "adapter.hpp"

#include "optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aware {

AdapterParams AdapterParams::identity(int m) {
  require(m >= 1, "adapter dimension must be positive");
  return {Matrix::Identity(m, m), Vector::Zero(m)};
}

bool AdapterParams::is_identity() const {
  return weight.rows() == weight.cols() && weight == Matrix::Identity(weight.rows(), weight.cols()) &&
         bias.isZero(0.0);
}

Prompt apply_adapter(const AdapterParams& adapter, const Prompt& prompt) {
  if (adapter.weight.cols() != prompt.context.cols() || adapter.weight.rows() != adapter.weight.cols() ||
      adapter.bias.size() != adapter.weight.rows()) {
    fail(ErrorKind::data, "adapter shape does not match prompt dimension");
  }
  if (adapter.is_identity()) return prompt;
  Prompt out = prompt;
  out.context = (prompt.context * adapter.weight.transpose()).rowwise() + adapter.bias.transpose();
  out.query = adapter.weight * prompt.query + adapter.bias;
  return out;
}

AdapterGradient adapter_nll_grad(const AdapterParams& adapter, const Prompt& prompt, const VoteConfig& vote) {
  prompt.validate();
  require(prompt.query_label.has_value(), "training prompt needs a query label");
  require(vote.n_classes >= 2, "adapter training needs a classification vote");
  const int C = vote.n_classes;
  const int y = static_cast<int>(*prompt.query_label);
  require(y >= 0 && y < C, "query label outside the class range");

  // Differences are taken before the map; the bias cancels in A(q) - A(c).
  const Matrix delta = (-prompt.context).rowwise() + prompt.query.transpose();  // B x m
  const Matrix u = delta * adapter.weight.transpose();
  const Vector d = u.rowwise().squaredNorm();
  const Eigen::Index B = d.size();

  const bool self_scaled = !vote.tau.has_value();
  const double tau = vote_temperature(vote, d);
  const bool tau_tracks = self_scaled && std::isfinite(d.mean()) && d.mean() > 0.0;
  const Vector s = -d / tau;
  Eigen::Index top = 0;
  s.maxCoeff(&top);
  const Vector w = (s.array() - s(top)).exp();
  double w_all = 0.0, w_y = 0.0;
  for (Eigen::Index j = 0; j < B; ++j) {
    w_all += w(j);
    if (static_cast<int>(prompt.context_labels[static_cast<std::size_t>(j)]) == y) w_y += w(j);
  }
  const double eps = vote.epsilon;
  const double num = w_y + eps;
  const double den = w_all + C * eps;

  AdapterGradient g;
  g.nll = -std::log(num) + std::log(den);
  if (!std::isfinite(g.nll)) fail(ErrorKind::numeric, "adapter prompt NLL is not finite");

  // dL/ds_k, including the shift by the maximum logit s(top).
  Vector ds(B);
  for (Eigen::Index k = 0; k < B; ++k) {
    const bool same = static_cast<int>(prompt.context_labels[static_cast<std::size_t>(k)]) == y;
    ds(k) = -(same ? w(k) : 0.0) / num + w(k) / den;
  }
  ds(top) += w_y / num - w_all / den;

  Vector dd = -ds / tau;
  if (tau_tracks) dd.array() += ds.dot(d) / (tau * tau * static_cast<double>(B));

  // d(dist_k)/dA = 2 u_k delta_k^T
  g.d_weight = 2.0 * u.transpose() * dd.asDiagonal() * delta;
  g.d_bias = Vector::Zero(adapter.bias.size());
  return g;
}

double adapter_nll(const AdapterParams& adapter, const Prompt& prompt, const VoteConfig& vote) {
  require(prompt.query_label.has_value(), "prompt needs a query label");
  const auto out = knn_vote_predict(apply_adapter(adapter, prompt), vote);
  return -std::log(out.class_probs[static_cast<std::size_t>(*prompt.query_label)]);
}

Prompt bootstrap_prompt(const EmbeddingIndex& index, std::size_t context_size, Rng& rng,
                        std::size_t retrieval_threshold) {
  const std::size_t n = index.size();
  if (n < 2) fail(ErrorKind::invalid_argument, "bootstrapping prompts needs at least two rows");
  require(context_size >= 1, "context size must be at least 1");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t anchor = pick(rng);
  const std::size_t anchor_id = index.row_ids()[anchor];

  Prompt p;
  p.query = index.vectors().row(static_cast<Eigen::Index>(anchor)).transpose();
  p.query_row_id = anchor_id;
  p.query_label = index.labels()[anchor];
  if (n > retrieval_threshold) {
    ContextSet ctx = retrieve_context(index, p.query, std::min(context_size, n - 1), anchor_id);
    p.context = std::move(ctx.embeddings);
    p.context_labels = std::move(ctx.labels);
    p.context_row_ids = std::move(ctx.row_ids);
    return p;
  }
  // Uniform subset of the remaining rows via a partial Fisher-Yates shuffle.
  std::vector<std::size_t> others;
  others.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i != anchor) others.push_back(i);
  }
  const std::size_t b = std::min(context_size, n - 1);
  for (std::size_t i = 0; i < b; ++i) {
    std::uniform_int_distribution<std::size_t> swap_with(i, others.size() - 1);
    std::swap(others[i], others[swap_with(rng)]);
  }
  others.resize(b);
  std::sort(others.begin(), others.end());
  p.context.resize(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(index.dim()));
  for (std::size_t i = 0; i < b; ++i) {
    p.context.row(static_cast<Eigen::Index>(i)) = index.vectors().row(static_cast<Eigen::Index>(others[i]));
    p.context_labels.push_back(index.labels()[others[i]]);
    p.context_row_ids.push_back(index.row_ids()[others[i]]);
  }
  return p;
}

Prompt bootstrap_prompt(const EmbeddingIndex& index, std::size_t context_size, std::uint64_t seed,
                        std::size_t retrieval_threshold) {
  Rng rng(seed);
  return bootstrap_prompt(index, context_size, rng, retrieval_threshold);
}

TrainedAdapter train_adapter(const EmbeddingIndex& index, const AdapterConfig& config) {
  require(config.epochs >= 1, "adapter epochs must be at least 1");
  require(config.prompt_batch >= 1, "prompt batch must be at least 1");
  require(config.vote.n_classes >= 2, "adapter training needs a classification task");
  const int m = static_cast<int>(index.dim());
  TrainedAdapter out{AdapterParams::identity(m), {}};
  AdamW opt({config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay});
  Rng rng(config.seed);
  const std::size_t per_epoch = config.prompts_per_epoch == 0 ? index.size() : config.prompts_per_epoch;

  Matrix acc_w = Matrix::Zero(m, m);
  Vector acc_b = Vector::Zero(m);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double nll_sum = 0.0;
    std::size_t in_batch = 0;
    for (std::size_t i = 0; i < per_epoch; ++i) {
      const Prompt prompt = bootstrap_prompt(index, config.context_size, rng, config.retrieval_threshold);
      const AdapterGradient g = adapter_nll_grad(out.params, prompt, config.vote);
      nll_sum += g.nll;
      acc_w += g.d_weight;
      acc_b += g.d_bias;
      if (++in_batch == config.prompt_batch || i + 1 == per_epoch) {
        acc_w /= static_cast<double>(in_batch);
        acc_b /= static_cast<double>(in_batch);
        opt.step({{"adapter_weight", out.params.weight.data(), static_cast<std::size_t>(out.params.weight.size()), true},
                  {"adapter_bias", out.params.bias.data(), static_cast<std::size_t>(out.params.bias.size()), false}},
                 {{acc_w.data(), static_cast<std::size_t>(acc_w.size())},
                  {acc_b.data(), static_cast<std::size_t>(acc_b.size())}});
        acc_w.setZero();
        acc_b.setZero();
        in_batch = 0;
      }
    }
    out.epoch_nll.push_back(nll_sum / static_cast<double>(per_epoch));
  }
  return out;
}

double heldout_nll(const AdapterParams& adapter, const EmbeddingIndex& index, const Matrix& queries,
                   const std::vector<double>& labels, std::size_t context_size, const VoteConfig& vote) {
  require(static_cast<std::size_t>(queries.rows()) == labels.size(), "query labels do not match queries");
  require(queries.rows() >= 1, "no held-out queries");
  double total = 0.0;
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    ContextSet ctx = retrieve_context(index, queries.row(i).transpose(), context_size);
    Prompt p;
    p.context = std::move(ctx.embeddings);
    p.context_labels = std::move(ctx.labels);
    p.context_row_ids = std::move(ctx.row_ids);
    p.query = queries.row(i).transpose();
    p.query_label = labels[static_cast<std::size_t>(i)];
    total += adapter_nll(adapter, p, vote);
  }
  return total / static_cast<double>(queries.rows());
}

}  // namespace aware
