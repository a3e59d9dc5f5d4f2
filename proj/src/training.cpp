#include "training.hpp"

#include "sampling.hpp"
#include "snnl.hpp"

#include <algorithm>
#include <set>

namespace aware {

void TrainConfig::validate() const {
  require(temperature > 0.0, "temperature must be positive");
  require(batch_size >= 4, "batch size must be at least 4");
  require(epochs >= 1, "epochs must be at least 1");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(gate_hidden >= 1 && embed_hidden >= 1 && embed_dim >= 1, "hidden sizes must be positive");
}

AdamWConfig TrainConfig::optimizer() const { return {learning_rate, beta1, beta2, eps, weight_decay}; }

std::vector<int> snnl_labels(const TabularDataset& ds, const std::vector<std::size_t>& rows, int regression_bins) {
  std::vector<int> out;
  out.reserve(rows.size());
  if (ds.task.is_classification()) {
    for (std::size_t r : rows) out.push_back(ds.class_of(r));
    return out;
  }
  std::vector<double> targets;
  for (std::size_t r : rows) targets.push_back(ds.labels[r]);
  return quantile_bins(targets, regression_bins);
}

Matrix gather_rows(const Matrix& features, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

namespace {

std::vector<ParamBlock> param_blocks(EncoderParams& p) {
  std::vector<ParamBlock> blocks;
  p.for_each_block([&](const char* name, double* data, std::size_t size, bool w) {
    blocks.push_back({name, data, size, w});
  });
  return blocks;
}

std::vector<GradBlock> grad_blocks(const EncoderParams& g) {
  std::vector<GradBlock> blocks;
  g.for_each_block([&](const char*, const double* data, std::size_t size, bool) { blocks.push_back({data, size}); });
  return blocks;
}

}  // namespace

TrainedEncoder train_encoder(const TabularDataset& ds, const std::vector<std::size_t>& train_idx,
                             const TrainConfig& config) {
  config.validate();
  require(!train_idx.empty(), "training split is empty");
  const Matrix x = gather_rows(ds.features, train_idx);
  if (!x.allFinite()) fail(ErrorKind::data, "training features contain non-finite values; preprocess first");
  const std::vector<int> labels = snnl_labels(ds, train_idx, config.regression_bins);
  const std::size_t batch_size = std::min(config.batch_size, train_idx.size());

  // One generator per run: parameter init first, then each epoch's batch stream.
  Rng rng(config.seed);
  EncoderDims dims{static_cast<int>(ds.cols()), config.gate_hidden, config.embed_hidden, config.embed_dim};
  TrainedEncoder out;
  out.params = init_encoder(dims, rng);
  AdamW opt(config.optimizer());

  std::vector<int> batch_labels;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = config.sampling == Sampling::balanced ? balanced_batches(labels, batch_size, rng)
                                                               : uniform_batches(labels.size(), batch_size, rng);
    double loss_sum = 0.0;
    std::size_t loss_batches = 0, skipped = 0, anchors = 0;
    for (const auto& batch : batches) {
      if (batch.size() < 2) continue;
      Matrix xb(static_cast<Eigen::Index>(batch.size()), x.cols());
      batch_labels.resize(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(batch[i]));
        batch_labels[i] = labels[batch[i]];
      }
      const ForwardCache cache = forward(out.params, xb);
      SnnlResult res;
      const Matrix dz = snnl_grad(cache.z, batch_labels, config.temperature, config.distance, &res);
      skipped += res.anchors_skipped;
      anchors += batch.size();
      if (res.all_skipped) continue;
      loss_sum += res.loss;
      ++loss_batches;
      const EncoderParams grads = backward(out.params, cache, dz);
      opt.step(param_blocks(out.params), grad_blocks(grads));
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_batches == 0 ? 0.0 : loss_sum / static_cast<double>(loss_batches);
    stats.skipped_anchor_fraction = anchors == 0 ? 0.0 : static_cast<double>(skipped) / static_cast<double>(anchors);
    out.trace.push_back(stats);
  }
  if (!out.params.all_finite()) fail(ErrorKind::numeric, "encoder parameters became non-finite during training");
  return out;
}

void EncoderEnsemble::validate() const {
  if (members.empty()) fail(ErrorKind::data, "ensemble has no members");
  for (const auto& m : members) {
    m.check_shapes();
    if (!(m.dims == members.front().dims)) fail(ErrorKind::data, "ensemble members disagree on dimensions");
  }
}

EncoderEnsemble train_ensemble(const TabularDataset& ds, const std::vector<std::size_t>& train_idx,
                               const TrainConfig& config, int k) {
  require(k >= 1, "ensemble size must be at least 1");
  EncoderEnsemble ens;
  const std::vector<int> strata = snnl_labels(ds, train_idx, config.regression_bins);
  ens.fold_of = k == 1 ? std::vector<int>(train_idx.size(), 0)
                       : stratified_folds(strata, k, derive_seed(config.seed, 0xF01D));
  const std::set<int> all_classes(strata.begin(), strata.end());
  for (int member = 0; member < k; ++member) {
    std::vector<std::size_t> rows;
    std::set<int> classes;
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
      if (k == 1 || ens.fold_of[i] != member) {
        rows.push_back(train_idx[i]);
        classes.insert(strata[i]);
      }
    }
    if (classes != all_classes || classes.size() < 2) {
      fail(ErrorKind::data, "training folds for member " + std::to_string(member) + " lack a class");
    }
    TrainConfig member_config = config;
    member_config.seed = config.seed ^ static_cast<std::uint64_t>(member);
    TrainedEncoder trained = train_encoder(ds, rows, member_config);
    ens.members.push_back(std::move(trained.params));
    ens.traces.push_back(std::move(trained.trace));
  }
  return ens;
}

Matrix ensemble_embed(const EncoderEnsemble& ensemble, const Matrix& x) {
  ensemble.validate();
  // Running mean, so identical members reproduce their embedding exactly.
  Matrix mean = embed_batch(ensemble.members.front(), x);
  for (std::size_t k = 1; k < ensemble.members.size(); ++k) {
    mean += (embed_batch(ensemble.members[k], x) - mean) / static_cast<double>(k + 1);
  }
  return mean;
}

Vector ensemble_embed_row(const EncoderEnsemble& ensemble, const Eigen::Ref<const Vector>& x) {
  const Matrix row = x.transpose();
  return ensemble_embed(ensemble, row).row(0).transpose();
}

Vector mean_attention(const EncoderEnsemble& ensemble, const Matrix& x) {
  ensemble.validate();
  Vector total = Vector::Zero(ensemble.dims().input);
  for (const auto& m : ensemble.members) total += gate_batch(m, x).colwise().mean().transpose();
  return total / static_cast<double>(ensemble.members.size());
}

}  // namespace aware
