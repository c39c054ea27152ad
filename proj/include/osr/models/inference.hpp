#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "osr/models/forward.hpp"
#include "osr/ndcore/ops.hpp"

namespace osr::models {

namespace detail {
inline Tensor single_row(std::span<const double> x) {
  return Tensor({1, x.size()}, std::vector<double>(x.begin(), x.end()));
}

inline void require_variational(const VariationalModel& m, const char* op) {
  if (!m.is_variational()) {
    throw InvalidArgument(std::string(op) + ": standard-discriminative model has no latent posterior");
  }
}
}  // namespace detail

/// q(z|x) with dropout off.
inline LatentPosterior encode(const VariationalModel& m, std::span<const double> x) {
  detail::require_variational(m, "encode");
  auto enc = encode_batch(m, detail::single_row(x));
  enc.mu.check_finite("encode");
  enc.log_variance.check_finite("encode");
  return LatentPosterior::from_log_variance(enc.mu.values(), enc.log_variance.data());
}

inline std::vector<double> reparameterize(const LatentPosterior& post, std::span<const double> eps) {
  require(eps.size() == post.dim(), "reparameterize: noise length mismatch");
  std::vector<double> z(post.dim());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = post.mu[i] + post.sigma[i] * eps[i];
  return z;
}

/// z = mu + sigma * eps, eps ~ N(0, I) drawn from `rng`.
inline std::vector<double> reparameterize(const LatentPosterior& post, Rng& rng) {
  std::vector<double> eps(post.dim());
  for (double& e : eps) e = rng.normal();
  return reparameterize(post, eps);
}

/// KL(q || N(0, I)) in closed form.
inline double kl_diag_gaussian(const LatentPosterior& post) {
  double kl = 0.0;
  for (std::size_t i = 0; i < post.dim(); ++i) {
    const double var = post.sigma[i] * post.sigma[i];
    kl += post.mu[i] * post.mu[i] + var - 1.0 - std::log(var);
  }
  return std::max(0.0, 0.5 * kl);
}

/// Softmax of the classifier logits, one row per input row.
inline Tensor classify_batch(const VariationalModel& m, const Tensor& inputs) {
  const std::size_t layer = m.classifier_layer();
  if (inputs.cols() != m.weight(layer).cols()) throw DimensionMismatch("classify: input width mismatch");
  Tensor logits = layers::affine(inputs, m.weight(layer), m.bias(layer));
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto p = softmax(logits.row(r));
    std::copy(p.begin(), p.end(), logits.row(r).begin());
  }
  return logits;
}

/// p(y|z) for one latent vector (or penultimate features for the standard variant).
inline std::vector<double> classify(const VariationalModel& m, std::span<const double> z) {
  auto probs = classify_batch(m, detail::single_row(z));
  return probs.values();
}

inline std::vector<std::vector<double>> posterior_latents(const VariationalModel& m, std::span<const double> x,
                                                          std::size_t n, Rng& rng) {
  require(n >= 1, "posterior_latents: sample count must be >= 1");
  const auto post = encode(m, x);
  std::vector<std::vector<double>> zs;
  zs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) zs.push_back(reparameterize(post, rng));
  return zs;
}

inline std::vector<double> penultimate_features(const VariationalModel& m, std::span<const double> x) {
  if (m.is_variational()) {
    throw InvalidArgument("penultimate_features: variational model; use posterior_latents");
  }
  return encode_batch(m, detail::single_row(x)).features.values();
}

/// Class probabilities from the deterministic forward pass (dropout off, z = mu).
inline Tensor deterministic_probabilities(const VariationalModel& m, const Tensor& x) {
  auto enc = encode_batch(m, x);
  return classify_batch(m, m.is_variational() ? enc.mu : enc.features);
}

inline std::vector<int> predict_labels(const VariationalModel& m, const Tensor& x) {
  const Tensor probs = deterministic_probabilities(m, x);
  std::vector<int> labels(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) labels[r] = static_cast<int>(argmax(probs.row(r)));
  return labels;
}

struct McdPrediction {
  std::vector<double> mean;
  std::vector<std::vector<double>> passes;
};

/// T stochastic forward passes with fresh dropout masks. Variational models
/// classify the masked posterior mean.
inline McdPrediction mcd_predict(const VariationalModel& m, std::span<const double> x, std::size_t passes, Rng& rng) {
  require(passes >= 1, "mcd_predict: pass count must be >= 1");
  const Tensor input = detail::single_row(x);
  McdPrediction out;
  out.mean.assign(m.architecture().class_count, 0.0);
  for (std::size_t t = 0; t < passes; ++t) {
    auto enc = encode_batch(m, input, &rng);
    auto probs = classify_batch(m, m.is_variational() ? enc.mu : enc.features).values();
    for (std::size_t c = 0; c < probs.size(); ++c) out.mean[c] += probs[c];
    out.passes.push_back(std::move(probs));
  }
  for (double& v : out.mean) v /= static_cast<double>(passes);
  return out;
}

}  // namespace osr::models
