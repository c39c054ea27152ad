#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "osr/models/forward.hpp"
#include "osr/ndcore/ops.hpp"

namespace osr::models {

/// Every random quantity one objective evaluation consumes. Fixing it makes
/// the objective a deterministic function of the parameters.
struct ElboNoise {
  std::vector<Tensor> encoder_masks;               // per encoder hidden layer
  std::vector<Tensor> eps;                         // per latent sample: batch x latent
  std::vector<std::vector<Tensor>> decoder_masks;  // per latent sample, per decoder hidden layer
};

inline ElboNoise draw_elbo_noise(const VariationalModel& m, std::size_t batch, std::size_t samples, Rng& rng) {
  ElboNoise noise;
  noise.encoder_masks = draw_encoder_masks(m, batch, rng);
  if (!m.is_variational()) return noise;
  const std::size_t latent = m.architecture().latent_dim;
  for (std::size_t k = 0; k < samples; ++k) {
    Tensor eps({batch, latent});
    for (double& e : eps.data()) e = rng.normal();
    noise.eps.push_back(std::move(eps));
    noise.decoder_masks.push_back(draw_decoder_masks(m, batch, rng));
  }
  return noise;
}

/// Dropout off and eps = 0: the objective at the posterior means.
inline ElboNoise mean_noise(const VariationalModel& m, std::size_t batch, std::size_t samples = 1) {
  ElboNoise noise;
  if (!m.is_variational()) return noise;
  for (std::size_t k = 0; k < samples; ++k) {
    noise.eps.emplace_back(Tensor::Shape{batch, m.architecture().latent_dim});
    noise.decoder_masks.emplace_back();
  }
  return noise;
}

/// Batch means of the objective's terms; loss = reconstruction +
/// classification + beta * kl (the negated lower bound).
struct ElboTerms {
  double loss = 0.0;
  double reconstruction = 0.0;
  double classification = 0.0;
  double kl = 0.0;
};

struct ElboResult {
  ElboTerms terms;
  std::vector<Tensor> grads;
};

namespace detail {

inline double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }
inline double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

/// Mean cross-entropy of softmax(logits) against labels; writes the logit
/// gradient scaled by `scale`.
inline double cross_entropy(const Tensor& logits, std::span<const int> labels, double scale, Tensor& d_logits) {
  double total = 0.0;
  d_logits = Tensor(logits.shape());
  const auto classes = static_cast<int>(logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    require(y >= 0 && y < classes, "elbo: label out of range");
    auto row = logits.row(r);
    const double lse = log_sum_exp(row);
    total += lse - row[static_cast<std::size_t>(y)];
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double p = std::exp(row[c] - lse);
      d_logits.at(r, c) = scale * (p - (static_cast<int>(c) == y ? 1.0 : 0.0));
    }
  }
  return total / static_cast<double>(logits.rows());
}

/// Mean over examples of the per-example negative log-likelihood, summed over pixels.
inline double reconstruction_nll(const Tensor& out, const Tensor& x, DecoderLikelihood likelihood, double scale,
                                 Tensor& d_out) {
  double total = 0.0;
  d_out = Tensor(out.shape());
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double o = out[i];
    if (likelihood == DecoderLikelihood::bernoulli) {
      total += softplus(o) - x[i] * o;
      d_out[i] = scale * (sigmoid(o) - x[i]);
    } else {
      const double diff = o - x[i];
      total += 0.5 * diff * diff + half_log_2pi;
      d_out[i] = scale * diff;
    }
  }
  return total / static_cast<double>(out.rows());
}

}  // namespace detail

/// Negated lower bound for a batch under fixed noise, with gradients for
/// every parameter tensor (zero for inactive ones).
inline ElboResult elbo_with_noise(const VariationalModel& m, const Tensor& x, std::span<const int> labels,
                                  const TrainingConfig& config, const ElboNoise& noise, bool with_grads = true) {
  const auto& arch = m.architecture();
  const std::size_t batch = x.rows();
  require(batch > 0, "elbo: empty batch");
  require(labels.size() == batch, "elbo: label count mismatch");
  if (x.cols() != arch.input_dim) throw DimensionMismatch("elbo: input width mismatch");

  ElboResult result;
  result.grads = zeros_like(m.parameters());
  auto& grads = result.grads;
  const double inv_batch = 1.0 / static_cast<double>(batch);

  const auto enc = hidden_stack_forward(m, 0, m.encoder_layer_count(), x, noise.encoder_masks);

  if (!m.is_variational()) {
    const std::size_t cls = m.classifier_layer();
    const Tensor logits = layers::affine(enc.output, m.weight(cls), m.bias(cls));
    Tensor d_logits;
    result.terms.classification = detail::cross_entropy(logits, labels, inv_batch, d_logits);
    result.terms.loss = result.terms.classification;
    if (with_grads) {
      Tensor d_features;
      layers::affine_backward(enc.output, d_logits, m.weight(cls), grads[2 * cls], grads[2 * cls + 1], &d_features);
      hidden_stack_backward(m, 0, enc, std::move(d_features), grads, false);
    }
  } else {
    const std::size_t samples = noise.eps.size();
    require(samples >= 1, "elbo: at least one latent sample required");
    const Tensor mu = layers::affine(enc.output, m.weight(m.mu_layer()), m.bias(m.mu_layer()));
    const Tensor raw_lv = layers::affine(enc.output, m.weight(m.log_variance_layer()), m.bias(m.log_variance_layer()));

    Tensor sigma(raw_lv.shape());
    Tensor d_mu(mu.shape());
    Tensor d_lv(raw_lv.shape());
    double kl = 0.0;
    for (std::size_t i = 0; i < raw_lv.size(); ++i) {
      const double lv = std::clamp(raw_lv[i], kMinLogVariance, kMaxLogVariance);
      const double var = std::exp(lv);
      sigma[i] = std::exp(0.5 * lv);
      kl += 0.5 * (mu[i] * mu[i] + var - 1.0 - lv);
      d_mu[i] = config.beta * mu[i] * inv_batch;
      d_lv[i] = config.beta * 0.5 * (var - 1.0) * inv_batch;
    }
    result.terms.kl = kl * inv_batch;

    const double sample_scale = inv_batch / static_cast<double>(samples);
    const std::size_t cls = m.classifier_layer();
    for (std::size_t k = 0; k < samples; ++k) {
      const Tensor& eps = noise.eps[k];
      Tensor z(mu.shape());
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + sigma[i] * eps[i];

      const Tensor logits = layers::affine(z, m.weight(cls), m.bias(cls));
      Tensor d_logits;
      result.terms.classification +=
          detail::cross_entropy(logits, labels, sample_scale, d_logits) / static_cast<double>(samples);
      Tensor d_z;
      if (with_grads) layers::affine_backward(z, d_logits, m.weight(cls), grads[2 * cls], grads[2 * cls + 1], &d_z);

      if (arch.has_decoder()) {
        const auto& masks = noise.decoder_masks[k];
        const auto dec = hidden_stack_forward(m, m.decoder_layer(0), m.decoder_hidden_count(), z, masks);
        const std::size_t out_layer = m.decoder_output_layer();
        const Tensor out = layers::affine(dec.output, m.weight(out_layer), m.bias(out_layer));
        Tensor d_out;
        result.terms.reconstruction +=
            detail::reconstruction_nll(out, x, config.likelihood, sample_scale, d_out) / static_cast<double>(samples);
        if (with_grads) {
          Tensor d_hidden;
          layers::affine_backward(dec.output, d_out, m.weight(out_layer), grads[2 * out_layer],
                                  grads[2 * out_layer + 1], &d_hidden);
          Tensor d_z_dec = hidden_stack_backward(m, m.decoder_layer(0), dec, std::move(d_hidden), grads, true);
          for (std::size_t i = 0; i < d_z.size(); ++i) d_z[i] += d_z_dec[i];
        }
      }

      if (with_grads) {
        for (std::size_t i = 0; i < d_z.size(); ++i) {
          d_mu[i] += d_z[i];
          d_lv[i] += d_z[i] * eps[i] * 0.5 * sigma[i];
        }
      }
    }

    result.terms.loss = result.terms.reconstruction + result.terms.classification + config.beta * result.terms.kl;

    if (with_grads) {
      for (std::size_t i = 0; i < raw_lv.size(); ++i) {
        if (raw_lv[i] < kMinLogVariance || raw_lv[i] > kMaxLogVariance) d_lv[i] = 0.0;
      }
      Tensor d_feat_mu, d_feat_lv;
      const std::size_t mu_l = m.mu_layer();
      const std::size_t lv_l = m.log_variance_layer();
      layers::affine_backward(enc.output, d_mu, m.weight(mu_l), grads[2 * mu_l], grads[2 * mu_l + 1], &d_feat_mu);
      layers::affine_backward(enc.output, d_lv, m.weight(lv_l), grads[2 * lv_l], grads[2 * lv_l + 1], &d_feat_lv);
      for (std::size_t i = 0; i < d_feat_mu.size(); ++i) d_feat_mu[i] += d_feat_lv[i];
      hidden_stack_backward(m, 0, enc, std::move(d_feat_mu), grads, false);
    }
  }

  if (!std::isfinite(result.terms.loss)) throw NonFiniteValue("elbo: non-finite loss");
  return result;
}

/// One stochastic evaluation: fresh dropout masks and latent_samples draws per input.
inline ElboResult elbo(const VariationalModel& m, const Tensor& x, std::span<const int> labels,
                       const TrainingConfig& config, Rng& rng) {
  const auto noise = draw_elbo_noise(m, x.rows(), config.latent_samples, rng);
  return elbo_with_noise(m, x, labels, config, noise);
}

}  // namespace osr::models
