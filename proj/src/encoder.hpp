#pragma once

#include "common.hpp"

#include <functional>
#include <vector>

namespace aware {

struct EncoderDims {
  int input = 0;         // d
  int gate_hidden = 64;  // h
  int embed_hidden = 64; // h_e
  int embed = 32;        // m

  bool operator==(const EncoderDims&) const = default;
};

// Attention gate alpha(x) = sigmoid(W2 relu(W1 x + b1) + b2) followed by the
// embedding map z = E2 relu(E1 (x * alpha) + c1) + c2.
struct EncoderParams {
  EncoderDims dims;
  Matrix gate_w1;   // h x d
  Vector gate_b1;   // h
  Matrix gate_w2;   // d x h
  Vector gate_b2;   // d
  Matrix embed_w1;  // h_e x d
  Vector embed_b1;  // h_e
  Matrix embed_w2;  // m x h_e
  Vector embed_b2;  // m

  static EncoderParams zeros(const EncoderDims& dims);

  std::size_t parameter_count() const;
  bool all_finite() const;
  void check_shapes() const;

  // Visits every block in a fixed order; `is_weight` is false for biases.
  void for_each_block(const std::function<void(const char* name, double* data, std::size_t size, bool is_weight)>& fn);
  void for_each_block(
      const std::function<void(const char* name, const double* data, std::size_t size, bool is_weight)>& fn) const;

  bool operator==(const EncoderParams& other) const;
};

// Uniform(+-1/sqrt(fan_in)) weights, zero biases, gate output bias +2.
EncoderParams init_encoder(const EncoderDims& dims, Rng& rng);

Vector attention_gate(const EncoderParams& p, const Eigen::Ref<const Vector>& x);
Vector embed(const EncoderParams& p, const Eigen::Ref<const Vector>& x);

// Batched forward pass over the rows of x, keeping what backward() needs.
struct ForwardCache {
  Matrix x;       // b x d
  Matrix gate_a1; // b x h   pre-activation
  Matrix gate_r1; // b x h
  Matrix alpha;   // b x d
  Matrix gated;   // b x d
  Matrix emb_a1;  // b x h_e pre-activation
  Matrix emb_r1;  // b x h_e
  Matrix z;       // b x m
};

ForwardCache forward(const EncoderParams& p, const Matrix& x);
Matrix embed_batch(const EncoderParams& p, const Matrix& x);
Matrix gate_batch(const EncoderParams& p, const Matrix& x);

// Parameter gradients given dLoss/dz for every row of the cached batch.
EncoderParams backward(const EncoderParams& p, const ForwardCache& cache, const Matrix& dz);

}  // namespace aware
