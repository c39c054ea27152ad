#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "osr/evt/weibull.hpp"
#include "osr/ndcore/ops.hpp"
#include "osr/ndcore/tensor.hpp"

namespace osr::evt {

enum class Distance { cosine, euclidean };

inline std::string to_string(Distance d) { return d == Distance::cosine ? "cosine" : "euclidean"; }

inline Distance distance_from_string(std::string_view s) {
  if (s == "cosine") return Distance::cosine;
  if (s == "euclidean") return Distance::euclidean;
  throw InvalidArgument("unknown distance '" + std::string(s) + "'");
}

inline double distance(Distance kind, std::span<const double> a, std::span<const double> b) {
  return kind == Distance::cosine ? cosine_distance(a, b) : euclidean_distance(a, b);
}

struct EvtConfig {
  double tail_fraction = 0.05;
  Distance distance = Distance::cosine;
  std::size_t min_tail_count = 10;

  void validate() const {
    require(tail_fraction > 0.0 && tail_fraction <= 1.0, "evt: tail_fraction must lie in (0, 1]");
    require(min_tail_count >= 10, "evt: min_tail_count must be >= 10");
  }

  /// max(min_tail_count, ceil(fraction * n)), clipped to n.
  std::size_t tail_size(std::size_t class_size) const {
    const auto fraction_count =
        static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(class_size) - 1e-9));
    return std::min(class_size, std::max(min_tail_count, fraction_count));
  }

  friend bool operator==(const EvtConfig&, const EvtConfig&) = default;
};

/// Per-class latent mean plus the shifted Weibull tail model fitted to the
/// largest distances from it.
struct ClassWeibull {
  int class_id = 0;
  std::vector<double> mean;
  double tau = 0.0;
  double kappa = 1.0;
  double lambda = 1.0;
  std::size_t tail_count = 0;
  std::size_t iterations = 0;  // diagnostic, not persisted

  double cdf(double d) const { return weibull_cdf(d, tau, kappa, lambda); }
};

inline double weibull_cdf(double d, const ClassWeibull& model) { return model.cdf(d); }

enum class Aggregation { min_over_classes, predicted_class, any_class };

inline std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::min_over_classes: return "min-over-classes";
    case Aggregation::predicted_class: return "predicted-class";
    case Aggregation::any_class: return "any-class";
  }
  return "?";
}

inline Aggregation aggregation_from_string(std::string_view s) {
  if (s == "min-over-classes") return Aggregation::min_over_classes;
  if (s == "predicted-class") return Aggregation::predicted_class;
  if (s == "any-class") return Aggregation::any_class;
  throw InvalidArgument("unknown aggregation '" + std::string(s) + "'");
}

struct RejectionPolicy {
  double prior = 0.95;
  Aggregation aggregation = Aggregation::min_over_classes;

  void validate() const { require(prior >= 0.0 && prior <= 1.0, "rejection prior must lie in [0, 1]"); }
};

namespace detail {

/// Row indices of examples with prediction == label == c, in lexicographic
/// order of their latent vectors so downstream sums do not depend on the
/// order of the training set.
inline std::vector<std::vector<std::size_t>> correct_members(const Tensor& latents, std::span<const int> labels,
                                                             std::span<const int> predictions,
                                                             std::size_t class_count) {
  require(latents.rank() == 2, "evt: latents must be a matrix");
  require(labels.size() == latents.rows() && predictions.size() == latents.rows(),
          "evt: latents, labels and predictions must be aligned");
  std::vector<std::vector<std::size_t>> members(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != predictions[i]) continue;
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < class_count, "evt: label out of range");
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < class_count; ++c) {
    auto& idx = members[c];
    if (idx.empty()) throw EmptyClass("class " + std::to_string(c) + ": no correctly classified examples");
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      auto ra = latents.row(a);
      auto rb = latents.row(b);
      return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
  }
  return members;
}

inline std::vector<double> mean_of_rows(const Tensor& latents, std::span<const std::size_t> rows) {
  std::vector<double> mean(latents.cols(), 0.0);
  for (auto r : rows) {
    auto row = latents.row(r);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += row[j];
  }
  for (double& v : mean) v /= static_cast<double>(rows.size());
  return mean;
}

template <class Fn>
auto with_class_context(int class_id, Fn&& fn) {
  const std::string prefix = "class " + std::to_string(class_id) + ": ";
  try {
    return fn();
  } catch (const DegenerateSample& e) {
    throw DegenerateSample(prefix + e.what());
  } catch (const NonConvergence& e) {
    throw NonConvergence(prefix + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(prefix + e.what());
  }
}

}  // namespace detail

/// Mean latent of the correctly classified examples of each class.
inline std::vector<std::vector<double>> class_latent_means(const Tensor& latents, std::span<const int> labels,
                                                           std::span<const int> predictions,
                                                           std::size_t class_count) {
  const auto members = detail::correct_members(latents, labels, predictions, class_count);
  std::vector<std::vector<double>> means;
  for (const auto& idx : members) means.push_back(detail::mean_of_rows(latents, idx));
  return means;
}

/// Fits one shifted Weibull per class on the largest distances of correctly
/// classified examples to their class mean. tau sits 1e-12 below the smallest
/// tail distance so every shifted value is strictly positive.
inline std::vector<ClassWeibull> fit_openset(const Tensor& latents, std::span<const int> labels,
                                             std::span<const int> predictions, std::size_t class_count,
                                             const EvtConfig& config) {
  config.validate();
  const auto members = detail::correct_members(latents, labels, predictions, class_count);
  std::vector<ClassWeibull> models;
  for (std::size_t c = 0; c < class_count; ++c) {
    const int class_id = static_cast<int>(c);
    models.push_back(detail::with_class_context(class_id, [&] {
      ClassWeibull model;
      model.class_id = class_id;
      model.mean = detail::mean_of_rows(latents, members[c]);
      std::vector<double> distances;
      distances.reserve(members[c].size());
      for (auto r : members[c]) distances.push_back(distance(config.distance, latents.row(r), model.mean));
      std::sort(distances.begin(), distances.end(), std::greater<>());
      model.tail_count = config.tail_size(distances.size());
      distances.resize(model.tail_count);
      model.tau = distances.back() - 1e-12;
      for (double& d : distances) d -= model.tau;
      const auto fit = fit_weibull_mle(distances);
      model.kappa = fit.kappa;
      model.lambda = fit.lambda;
      model.iterations = fit.iterations;
      return model;
    }));
  }
  return models;
}

struct OutlierScore {
  std::vector<double> per_class;  // omega_c averaged over samples
  double aggregate = 0.0;
};

/// Averages omega_c over the latent samples, then aggregates over classes.
/// `predicted_class` is required for Aggregation::predicted_class.
inline OutlierScore outlier_probability(const Tensor& samples, std::span<const ClassWeibull> models,
                                        Distance kind, Aggregation aggregation,
                                        std::optional<std::size_t> predicted_class = std::nullopt) {
  require(samples.rank() == 2 && samples.rows() >= 1, "outlier_probability: need at least one sample");
  require(!models.empty(), "outlier_probability: no class models");
  OutlierScore score;
  score.per_class.assign(models.size(), 0.0);
  for (std::size_t c = 0; c < models.size(); ++c) {
    if (models[c].mean.size() != samples.cols()) throw DimensionMismatch("outlier_probability: latent width mismatch");
    double total = 0.0;
    for (std::size_t s = 0; s < samples.rows(); ++s) {
      total += models[c].cdf(distance(kind, samples.row(s), models[c].mean));
    }
    score.per_class[c] = total / static_cast<double>(samples.rows());
  }
  switch (aggregation) {
    case Aggregation::min_over_classes:
      score.aggregate = *std::min_element(score.per_class.begin(), score.per_class.end());
      break;
    case Aggregation::any_class:
      score.aggregate = *std::max_element(score.per_class.begin(), score.per_class.end());
      break;
    case Aggregation::predicted_class:
      require(predicted_class.has_value() && *predicted_class < models.size(),
              "outlier_probability: predicted-class aggregation needs a valid predicted class");
      score.aggregate = score.per_class[*predicted_class];
      break;
  }
  return score;
}

/// True iff the aggregated score exceeds the prior.
inline bool reject(double score, const RejectionPolicy& policy) {
  policy.validate();
  require(score >= 0.0 && score <= 1.0, "reject: score must lie in [0, 1]");
  return score > policy.prior;
}

}  // namespace osr::evt
