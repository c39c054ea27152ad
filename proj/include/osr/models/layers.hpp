#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "osr/ndcore/rng.hpp"
#include "osr/ndcore/tensor.hpp"

namespace osr::models::layers {

/// y = x W^T + b for a (batch x in) input and an (out x in) weight.
inline Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const std::size_t batch = x.rows();
  const std::size_t in = weight.cols();
  const std::size_t out = weight.rows();
  if (x.cols() != in) throw DimensionMismatch("affine: input width mismatch");
  Tensor y({batch, out});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = x.data().data() + b * in;
    double* yr = y.data().data() + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = weight.data().data() + o * in;
      double s = bias[o];
      for (std::size_t i = 0; i < in; ++i) s += xr[i] * wr[i];
      yr[o] = s;
    }
  }
  return y;
}

/// Accumulates dW and db; writes dx when requested.
inline void affine_backward(const Tensor& x, const Tensor& dy, const Tensor& weight, Tensor& d_weight,
                            Tensor& d_bias, Tensor* dx) {
  const std::size_t batch = x.rows();
  const std::size_t in = weight.cols();
  const std::size_t out = weight.rows();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = x.data().data() + b * in;
    const double* gr = dy.data().data() + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = gr[o];
      if (g == 0.0) continue;
      d_bias[o] += g;
      double* dwr = d_weight.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
    }
  }
  if (dx == nullptr) return;
  *dx = Tensor({batch, in});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* gr = dy.data().data() + b * out;
    double* dxr = dx->data().data() + b * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = gr[o];
      if (g == 0.0) continue;
      const double* wr = weight.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
    }
  }
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
/// 1 / (1 - rate). Returns an empty tensor when rate == 0 (no draws made).
inline Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (rate <= 0.0) return {};
  Tensor mask({rows, cols});
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.data()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

/// ReLU followed by an optional dropout mask; `pre` is kept for backward.
inline Tensor relu_dropout(const Tensor& pre, const Tensor& mask) {
  Tensor out(pre.shape());
  const bool masked = !mask.empty();
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double r = pre[i] > 0.0 ? pre[i] : 0.0;
    out[i] = masked ? r * mask[i] : r;
  }
  return out;
}

inline Tensor relu_dropout_backward(const Tensor& pre, const Tensor& mask, const Tensor& d_out) {
  Tensor d_pre(pre.shape());
  const bool masked = !mask.empty();
  for (std::size_t i = 0; i < pre.size(); ++i) {
    if (pre[i] > 0.0) d_pre[i] = masked ? d_out[i] * mask[i] : d_out[i];
  }
  return d_pre;
}

inline Tensor he_normal(std::size_t out, std::size_t in, Rng& rng) {
  Tensor w({out, in});
  const double scale = std::sqrt(2.0 / static_cast<double>(in));
  for (double& v : w.data()) v = scale * rng.normal();
  return w;
}

}  // namespace osr::models::layers
