#include "encoder.hpp"

#include <cmath>

namespace aware {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

Matrix relu(const Matrix& a) { return a.cwiseMax(0.0); }

Matrix sigmoid(const Matrix& a) {
  return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

EncoderParams EncoderParams::zeros(const EncoderDims& dims) {
  require(dims.input >= 1 && dims.gate_hidden >= 1 && dims.embed_hidden >= 1 && dims.embed >= 1,
          "encoder dimensions must be positive");
  EncoderParams p;
  p.dims = dims;
  p.gate_w1 = Matrix::Zero(dims.gate_hidden, dims.input);
  p.gate_b1 = Vector::Zero(dims.gate_hidden);
  p.gate_w2 = Matrix::Zero(dims.input, dims.gate_hidden);
  p.gate_b2 = Vector::Zero(dims.input);
  p.embed_w1 = Matrix::Zero(dims.embed_hidden, dims.input);
  p.embed_b1 = Vector::Zero(dims.embed_hidden);
  p.embed_w2 = Matrix::Zero(dims.embed, dims.embed_hidden);
  p.embed_b2 = Vector::Zero(dims.embed);
  return p;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block([&](const char*, const double*, std::size_t size, bool) { n += size; });
  return n;
}

bool EncoderParams::all_finite() const {
  bool ok = true;
  for_each_block([&](const char*, const double* data, std::size_t size, bool) {
    for (std::size_t i = 0; i < size; ++i) ok = ok && std::isfinite(data[i]);
  });
  return ok;
}

void EncoderParams::check_shapes() const {
  const auto& d = dims;
  const bool ok = gate_w1.rows() == d.gate_hidden && gate_w1.cols() == d.input && gate_b1.size() == d.gate_hidden &&
                  gate_w2.rows() == d.input && gate_w2.cols() == d.gate_hidden && gate_b2.size() == d.input &&
                  embed_w1.rows() == d.embed_hidden && embed_w1.cols() == d.input &&
                  embed_b1.size() == d.embed_hidden && embed_w2.rows() == d.embed &&
                  embed_w2.cols() == d.embed_hidden && embed_b2.size() == d.embed;
  if (!ok) fail(ErrorKind::data, "encoder parameter shapes disagree with recorded dims");
}

void EncoderParams::for_each_block(
    const std::function<void(const char*, double*, std::size_t, bool)>& fn) {
  fn("gate_w1", gate_w1.data(), static_cast<std::size_t>(gate_w1.size()), true);
  fn("gate_b1", gate_b1.data(), static_cast<std::size_t>(gate_b1.size()), false);
  fn("gate_w2", gate_w2.data(), static_cast<std::size_t>(gate_w2.size()), true);
  fn("gate_b2", gate_b2.data(), static_cast<std::size_t>(gate_b2.size()), false);
  fn("embed_w1", embed_w1.data(), static_cast<std::size_t>(embed_w1.size()), true);
  fn("embed_b1", embed_b1.data(), static_cast<std::size_t>(embed_b1.size()), false);
  fn("embed_w2", embed_w2.data(), static_cast<std::size_t>(embed_w2.size()), true);
  fn("embed_b2", embed_b2.data(), static_cast<std::size_t>(embed_b2.size()), false);
}

void EncoderParams::for_each_block(
    const std::function<void(const char*, const double*, std::size_t, bool)>& fn) const {
  const_cast<EncoderParams*>(this)->for_each_block(
      [&](const char* name, double* data, std::size_t size, bool w) { fn(name, data, size, w); });
}

bool EncoderParams::operator==(const EncoderParams& o) const {
  return dims == o.dims && gate_w1 == o.gate_w1 && gate_b1 == o.gate_b1 && gate_w2 == o.gate_w2 &&
         gate_b2 == o.gate_b2 && embed_w1 == o.embed_w1 && embed_b1 == o.embed_b1 && embed_w2 == o.embed_w2 &&
         embed_b2 == o.embed_b2;
}

EncoderParams init_encoder(const EncoderDims& dims, Rng& rng) {
  EncoderParams p = EncoderParams::zeros(dims);
  p.gate_w1 = uniform_matrix(dims.gate_hidden, dims.input, 1.0 / std::sqrt(dims.input), rng);
  p.gate_w2 = uniform_matrix(dims.input, dims.gate_hidden, 1.0 / std::sqrt(dims.gate_hidden), rng);
  p.gate_b2.setConstant(2.0);
  p.embed_w1 = uniform_matrix(dims.embed_hidden, dims.input, 1.0 / std::sqrt(dims.input), rng);
  p.embed_w2 = uniform_matrix(dims.embed, dims.embed_hidden, 1.0 / std::sqrt(dims.embed_hidden), rng);
  return p;
}

ForwardCache forward(const EncoderParams& p, const Matrix& x) {
  if (x.cols() != p.dims.input) {
    fail(ErrorKind::data, "input has " + std::to_string(x.cols()) + " features, encoder expects " +
                              std::to_string(p.dims.input));
  }
  ForwardCache c;
  c.x = x;
  c.gate_a1 = (x * p.gate_w1.transpose()).rowwise() + p.gate_b1.transpose();
  c.gate_r1 = relu(c.gate_a1);
  c.alpha = sigmoid((c.gate_r1 * p.gate_w2.transpose()).rowwise() + p.gate_b2.transpose());
  c.gated = x.cwiseProduct(c.alpha);
  c.emb_a1 = (c.gated * p.embed_w1.transpose()).rowwise() + p.embed_b1.transpose();
  c.emb_r1 = relu(c.emb_a1);
  c.z = (c.emb_r1 * p.embed_w2.transpose()).rowwise() + p.embed_b2.transpose();
  return c;
}

Matrix embed_batch(const EncoderParams& p, const Matrix& x) { return forward(p, x).z; }

Matrix gate_batch(const EncoderParams& p, const Matrix& x) {
  if (x.cols() != p.dims.input) fail(ErrorKind::data, "input width does not match encoder");
  const Matrix r1 = relu((x * p.gate_w1.transpose()).rowwise() + p.gate_b1.transpose());
  return sigmoid((r1 * p.gate_w2.transpose()).rowwise() + p.gate_b2.transpose());
}

Vector attention_gate(const EncoderParams& p, const Eigen::Ref<const Vector>& x) {
  const Matrix row = x.transpose();
  return gate_batch(p, row).row(0).transpose();
}

Vector embed(const EncoderParams& p, const Eigen::Ref<const Vector>& x) {
  const Matrix row = x.transpose();
  return embed_batch(p, row).row(0).transpose();
}

EncoderParams backward(const EncoderParams& p, const ForwardCache& c, const Matrix& dz) {
  EncoderParams g = EncoderParams::zeros(p.dims);
  g.embed_w2 = dz.transpose() * c.emb_r1;
  g.embed_b2 = dz.colwise().sum().transpose();
  const Matrix d_emb_a1 = (dz * p.embed_w2).cwiseProduct((c.emb_a1.array() > 0.0).cast<double>().matrix());
  g.embed_w1 = d_emb_a1.transpose() * c.gated;
  g.embed_b1 = d_emb_a1.colwise().sum().transpose();
  const Matrix d_gated = d_emb_a1 * p.embed_w1;
  const Matrix d_alpha = d_gated.cwiseProduct(c.x);
  const Matrix d_gate_a2 = d_alpha.array() * c.alpha.array() * (1.0 - c.alpha.array());
  g.gate_w2 = d_gate_a2.transpose() * c.gate_r1;
  g.gate_b2 = d_gate_a2.colwise().sum().transpose();
  const Matrix d_gate_a1 = (d_gate_a2 * p.gate_w2).cwiseProduct((c.gate_a1.array() > 0.0).cast<double>().matrix());
  g.gate_w1 = d_gate_a1.transpose() * c.x;
  g.gate_b1 = d_gate_a1.colwise().sum().transpose();
  return g;
}

}  // namespace aware
