#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "osr/models/layers.hpp"
#include "osr/ndcore/error.hpp"
#include "osr/ndcore/rng.hpp"
#include "osr/ndcore/tensor.hpp"

namespace osr::models {

enum class Variant { standard_discriminative, variational_discriminative, variational_generative };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::standard_discriminative: return "standard-discriminative";
    case Variant::variational_discriminative: return "variational-discriminative";
    case Variant::variational_generative: return "variational-generative";
  }
  return "?";
}

inline Variant variant_from_string(std::string_view s) {
  if (s == "standard-discriminative") return Variant::standard_discriminative;
  if (s == "variational-discriminative") return Variant::variational_discriminative;
  if (s == "variational-generative") return Variant::variational_generative;
  throw InvalidArgument("unknown model variant '" + std::string(s) + "'");
}

enum class DecoderLikelihood { bernoulli, diagonal_gaussian };

inline std::string to_string(DecoderLikelihood l) {
  return l == DecoderLikelihood::bernoulli ? "bernoulli" : "diagonal-gaussian";
}

inline DecoderLikelihood likelihood_from_string(std::string_view s) {
  if (s == "bernoulli") return DecoderLikelihood::bernoulli;
  if (s == "diagonal-gaussian") return DecoderLikelihood::diagonal_gaussian;
  throw InvalidArgument("unknown decoder likelihood '" + std::string(s) + "'");
}

/// Network shape. Hidden layers are ReLU + dropout; the decoder mirrors the
/// encoder's hidden widths in reverse.
struct Architecture {
  Variant variant = Variant::variational_discriminative;
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{256, 128};
  std::size_t latent_dim = 60;
  std::size_t class_count = 0;
  double dropout_rate = 0.2;

  bool is_variational() const { return variant != Variant::standard_discriminative; }
  bool has_decoder() const { return variant == Variant::variational_generative; }

  void validate() const {
    require(input_dim > 0, "architecture: input_dim must be positive");
    require(class_count > 0, "architecture: class_count must be positive");
    require(!is_variational() || latent_dim > 0, "architecture: latent_dim must be positive");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, "architecture: dropout_rate must lie in [0, 1)");
    for (auto w : hidden) require(w > 0, "architecture: hidden widths must be positive");
    require(is_variational() || !hidden.empty(), "architecture: standard variant needs a hidden layer");
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct TrainingConfig {
  double beta = 1.0;
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  std::size_t epochs = 5;
  std::size_t max_steps = 0;  // 0: run all epochs
  std::uint64_t seed = 0;
  std::size_t mcd_passes = 50;
  std::size_t posterior_samples = 100;
  std::size_t latent_samples = 1;  // reparameterized draws per input per step
  DecoderLikelihood likelihood = DecoderLikelihood::bernoulli;

  void validate() const {
    require(std::isfinite(beta) && beta >= 0.0, "training: beta must be non-negative");
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, "training: learning_rate must be non-negative");
    require(batch_size >= 1, "training: batch_size must be >= 1");
    require(mcd_passes >= 1, "training: mcd_passes must be >= 1");
    require(posterior_samples >= 1, "training: posterior_samples must be >= 1");
    require(latent_samples >= 1, "training: latent_samples must be >= 1");
  }

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

inline constexpr double kMinLogVariance = -10.0;
inline constexpr double kMaxLogVariance = 10.0;

/// Diagonal Gaussian q(z|x).
struct LatentPosterior {
  std::vector<double> mu;
  std::vector<double> sigma;

  static LatentPosterior from_log_variance(std::vector<double> mu, std::span<const double> log_variance) {
    require(mu.size() == log_variance.size(), "posterior: mu/log-variance length mismatch");
    LatentPosterior post{std::move(mu), std::vector<double>(log_variance.size())};
    for (std::size_t i = 0; i < log_variance.size(); ++i) {
      post.sigma[i] = std::exp(0.5 * std::clamp(log_variance[i], kMinLogVariance, kMaxLogVariance));
    }
    return post;
  }

  std::size_t dim() const { return mu.size(); }
};

/// Parameters of one of the three model variants.
///
/// All parameter tensors live in one flat list, (weight, bias) per affine
/// layer, ordered: encoder hidden layers, [mu head, log-variance head],
/// classifier, [decoder hidden layers, decoder output].
class VariationalModel {
 public:
  static VariationalModel zeros(const Architecture& arch) {
    arch.validate();
    VariationalModel m(arch);
    for (const auto& [out, in] : m.layer_shapes()) {
      m.params_.emplace_back(Tensor::Shape{out, in});
      m.params_.emplace_back(Tensor::Shape{out});
    }
    return m;
  }

  /// He fan-in Gaussian weights and zero biases, except the mu and
  /// log-variance heads, which start at zero so every posterior starts at the
  /// prior (KL = 0).
  static VariationalModel initialize(const Architecture& arch, Rng& rng) {
    VariationalModel m = zeros(arch);
    const std::size_t layers = m.params_.size() / 2;
    for (std::size_t k = 0; k < layers; ++k) {
      if (m.is_variational() && (k == m.mu_layer() || k == m.log_variance_layer())) continue;
      auto& w = m.weight(k);
      w = layers::he_normal(w.rows(), w.cols(), rng);
    }
    return m;
  }

  static VariationalModel from_parameters(const Architecture& arch, std::vector<Tensor> params) {
    VariationalModel m = zeros(arch);
    if (params.size() != m.params_.size()) throw DimensionMismatch("model: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].shape() != m.params_[i].shape()) throw DimensionMismatch("model: parameter shape mismatch");
    }
    m.params_ = std::move(params);
    return m;
  }

  const Architecture& architecture() const { return arch_; }
  Variant variant() const { return arch_.variant; }
  bool is_variational() const { return arch_.is_variational(); }

  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }

  std::size_t encoder_layer_count() const { return arch_.hidden.size(); }
  std::size_t decoder_hidden_count() const { return arch_.has_decoder() ? arch_.hidden.size() : 0; }

  // Layer indices into the flat parameter list (layer k -> params 2k, 2k+1).
  std::size_t encoder_layer(std::size_t i) const { return i; }
  std::size_t mu_layer() const { return arch_.hidden.size(); }
  std::size_t log_variance_layer() const { return arch_.hidden.size() + 1; }
  std::size_t classifier_layer() const { return arch_.hidden.size() + (is_variational() ? 2 : 0); }
  std::size_t decoder_layer(std::size_t i) const { return classifier_layer() + 1 + i; }
  std::size_t decoder_output_layer() const { return decoder_layer(arch_.hidden.size()); }

  const Tensor& weight(std::size_t layer) const { return params_[2 * layer]; }
  const Tensor& bias(std::size_t layer) const { return params_[2 * layer + 1]; }
  Tensor& weight(std::size_t layer) { return params_[2 * layer]; }
  Tensor& bias(std::size_t layer) { return params_[2 * layer + 1]; }

  /// Width of the representation fed to the classifier.
  std::size_t feature_width() const {
    return arch_.hidden.empty() ? arch_.input_dim : arch_.hidden.back();
  }

 private:
  explicit VariationalModel(Architecture arch) : arch_(std::move(arch)) {}

  std::vector<std::pair<std::size_t, std::size_t>> layer_shapes() const {
    std::vector<std::pair<std::size_t, std::size_t>> shapes;  // (out, in)
    std::size_t width = arch_.input_dim;
    for (auto h : arch_.hidden) {
      shapes.emplace_back(h, width);
      width = h;
    }
    if (is_variational()) {
      shapes.emplace_back(arch_.latent_dim, width);
      shapes.emplace_back(arch_.latent_dim, width);
      shapes.emplace_back(arch_.class_count, arch_.latent_dim);
    } else {
      shapes.emplace_back(arch_.class_count, width);
    }
    if (arch_.has_decoder()) {
      std::size_t w = arch_.latent_dim;
      for (auto it = arch_.hidden.rbegin(); it != arch_.hidden.rend(); ++it) {
        shapes.emplace_back(*it, w);
        w = *it;
      }
      shapes.emplace_back(arch_.input_dim, w);
    }
    return shapes;
  }

  Architecture arch_;
  std::vector<Tensor> params_;
};

}  // namespace osr::models
