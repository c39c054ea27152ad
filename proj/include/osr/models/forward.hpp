#pragma once

#include <span>
#include <vector>

#include "osr/models/layers.hpp"
#include "osr/models/model.hpp"

namespace osr::models {

/// Activations cached by a run of consecutive ReLU + dropout layers.
struct StackTrace {
  std::vector<Tensor> inputs;
  std::vector<Tensor> pre;
  std::vector<Tensor> masks;
  Tensor output;
};

/// Runs `count` hidden layers starting at layer index `first`. `masks` holds
/// one mask per layer (empty tensors disable dropout) or is empty.
inline StackTrace hidden_stack_forward(const VariationalModel& m, std::size_t first, std::size_t count, Tensor x,
                                       std::span<const Tensor> masks) {
  StackTrace trace;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t layer = first + i;
    Tensor pre = layers::affine(x, m.weight(layer), m.bias(layer));
    Tensor mask = i < masks.size() ? masks[i] : Tensor{};
    Tensor out = layers::relu_dropout(pre, mask);
    trace.inputs.push_back(std::move(x));
    trace.pre.push_back(std::move(pre));
    trace.masks.push_back(std::move(mask));
    x = std::move(out);
  }
  trace.output = std::move(x);
  return trace;
}

/// Accumulates parameter gradients into `grads`; returns d(input) when asked.
inline Tensor hidden_stack_backward(const VariationalModel& m, std::size_t first, const StackTrace& trace,
                                    Tensor d_out, std::vector<Tensor>& grads, bool need_input_grad) {
  for (std::size_t i = trace.pre.size(); i-- > 0;) {
    const std::size_t layer = first + i;
    Tensor d_pre = layers::relu_dropout_backward(trace.pre[i], trace.masks[i], d_out);
    const bool want_dx = need_input_grad || i > 0;
    Tensor dx;
    layers::affine_backward(trace.inputs[i], d_pre, m.weight(layer), grads[2 * layer], grads[2 * layer + 1],
                            want_dx ? &dx : nullptr);
    d_out = std::move(dx);
  }
  return d_out;
}

inline std::vector<Tensor> draw_encoder_masks(const VariationalModel& m, std::size_t batch, Rng& rng) {
  std::vector<Tensor> masks;
  const auto& arch = m.architecture();
  for (auto width : arch.hidden) masks.push_back(layers::dropout_mask(batch, width, arch.dropout_rate, rng));
  return masks;
}

inline std::vector<Tensor> draw_decoder_masks(const VariationalModel& m, std::size_t batch, Rng& rng) {
  std::vector<Tensor> masks;
  const auto& arch = m.architecture();
  if (!arch.has_decoder()) return masks;
  for (auto it = arch.hidden.rbegin(); it != arch.hidden.rend(); ++it) {
    masks.push_back(layers::dropout_mask(batch, *it, arch.dropout_rate, rng));
  }
  return masks;
}

/// Encoder output for a batch: penultimate features and, for variational
/// variants, posterior mean and (unclamped) log-variance.
struct EncodedBatch {
  Tensor features;
  Tensor mu;
  Tensor log_variance;
};

/// Deterministic when `dropout_rng` is null; otherwise draws one fresh mask set.
inline EncodedBatch encode_batch(const VariationalModel& m, const Tensor& x, Rng* dropout_rng = nullptr) {
  if (x.cols() != m.architecture().input_dim) throw DimensionMismatch("encode: input width mismatch");
  std::vector<Tensor> masks;
  if (dropout_rng != nullptr) masks = draw_encoder_masks(m, x.rows(), *dropout_rng);
  EncodedBatch out;
  out.features = hidden_stack_forward(m, 0, m.encoder_layer_count(), x, masks).output;
  if (m.is_variational()) {
    out.mu = layers::affine(out.features, m.weight(m.mu_layer()), m.bias(m.mu_layer()));
    out.log_variance = layers::affine(out.features, m.weight(m.log_variance_layer()), m.bias(m.log_variance_layer()));
  }
  return out;
}

/// Decoder logits (bernoulli) or means (gaussian) for a batch of latents.
inline Tensor decode_batch(const VariationalModel& m, const Tensor& z, std::span<const Tensor> masks = {}) {
  require(m.architecture().has_decoder(), "decode: model has no decoder");
  auto trace = hidden_stack_forward(m, m.decoder_layer(0), m.decoder_hidden_count(), z, masks);
  return layers::affine(trace.output, m.weight(m.decoder_output_layer()), m.bias(m.decoder_output_layer()));
}

}  // namespace osr::models
