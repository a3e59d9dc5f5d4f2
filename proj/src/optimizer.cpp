#include "optimizer.hpp"

#include <cmath>

namespace aware {

void AdamW::step(const std::vector<ParamBlock>& params, const std::vector<GradBlock>& grads) {
  require(params.size() == grads.size(), "parameter and gradient block counts differ");
  for (std::size_t b = 0; b < params.size(); ++b) {
    require(params[b].size == grads[b].size, "gradient block '" + params[b].name + "' has the wrong size");
    for (std::size_t i = 0; i < grads[b].size; ++i) {
      if (!std::isfinite(grads[b].data[i])) {
        fail(ErrorKind::numeric, "non-finite gradient in parameter block '" + params[b].name + "'");
      }
    }
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size, 0.0);
      v_.emplace_back(p.size, 0.0);
    }
  }
  require(m_.size() == params.size(), "optimizer state does not match parameter blocks");

  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const double lr = config_.learning_rate;
  for (std::size_t b = 0; b < params.size(); ++b) {
    double* w = params[b].data;
    const double* g = grads[b].data;
    auto& m = m_[b];
    auto& v = v_[b];
    const double decay = params[b].is_weight ? config_.weight_decay : 0.0;
    for (std::size_t i = 0; i < params[b].size; ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= lr * (m_hat / (std::sqrt(v_hat) + config_.eps) + decay * w[i]);
    }
  }
}

}  // namespace aware
