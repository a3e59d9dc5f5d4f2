#pragma once

#include "common.hpp"

#include <string>
#include <vector>

namespace aware {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct ParamBlock {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
  bool is_weight = true;  // biases are exempt from weight decay
};

struct GradBlock {
  const double* data = nullptr;
  std::size_t size = 0;
};

// Adam with decoupled weight decay and bias correction. Moments are allocated
// on the first step and tied to block order thereafter.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config) : config_(config) {}

  void step(const std::vector<ParamBlock>& params, const std::vector<GradBlock>& grads);
  std::size_t steps() const { return t_; }
  const AdamWConfig& config() const { return config_; }

 private:
  AdamWConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace aware
