#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "osr/dataio/dataset.hpp"
#include "osr/ndcore/ops.hpp"
#include "osr/ndcore/rng.hpp"

namespace osr::dataio {

struct OodClusterSpec {
  std::vector<double> mean;
  double scale = 1.0;
  std::size_t count = 0;
};

/// Isotropic Gaussian classes plus one out-of-distribution cluster.
struct SyntheticSpec {
  std::size_t class_count = 0;
  std::size_t dimension = 0;
  std::vector<std::vector<double>> means;
  std::vector<double> scales;
  std::size_t samples_per_class = 0;
  OodClusterSpec ood;
  std::uint64_t seed = 0;

  static constexpr double kOodMargin = 6.0;

  void validate() const {
    require(class_count > 0 && dimension > 0, "synthetic: class_count and dimension must be positive");
    require(means.size() == class_count && scales.size() == class_count, "synthetic: one mean and scale per class");
    for (const auto& m : means) require(m.size() == dimension, "synthetic: mean dimension mismatch");
    for (double s : scales) require(s > 0.0, "synthetic: scales must be positive");
    require(ood.scale > 0.0, "synthetic: OOD scale must be positive");
    require(ood.mean.size() == dimension, "synthetic: OOD mean dimension mismatch");
    for (std::size_t a = 0; a < class_count; ++a) {
      for (std::size_t b = a + 1; b < class_count; ++b) {
        require(means[a] != means[b], "synthetic: class means must be pairwise distinct");
      }
    }
    const double largest = std::max(ood.scale, *std::max_element(scales.begin(), scales.end()));
    for (const auto& m : means) {
      if (euclidean_distance(m, ood.mean) < kOodMargin * largest) {
        throw InvalidArgument("synthetic: OOD cluster overlaps a class (needs distance >= 6x largest scale)");
      }
    }
  }
};

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  s.class_count = j.at("class_count").get<std::size_t>();
  s.dimension = j.at("dimension").get<std::size_t>();
  s.means = j.at("means").get<std::vector<std::vector<double>>>();
  s.scales = j.at("scales").get<std::vector<double>>();
  s.samples_per_class = j.at("samples_per_class").get<std::size_t>();
  const auto& ood = j.at("ood");
  s.ood.mean = ood.at("mean").get<std::vector<double>>();
  s.ood.scale = ood.at("scale").get<double>();
  s.ood.count = ood.at("count").get<std::size_t>();
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

inline nlohmann::json to_json(const SyntheticSpec& s) {
  return {{"class_count", s.class_count},
          {"dimension", s.dimension},
          {"means", s.means},
          {"scales", s.scales},
          {"samples_per_class", s.samples_per_class},
          {"ood", {{"mean", s.ood.mean}, {"scale", s.ood.scale}, {"count", s.ood.count}}},
          {"seed", s.seed}};
}

/// Returns (labelled inliers, unlabelled OOD cluster). Inliers are class-major.
inline std::pair<Dataset, Dataset> make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n = spec.class_count * spec.samples_per_class;
  Dataset inliers{"synthetic", {spec.dimension}, Tensor({n, spec.dimension}), {}, spec.class_count, SplitTag::train};
  inliers.labels.reserve(n);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    for (std::size_t i = 0; i < spec.samples_per_class; ++i, ++row) {
      auto out = inliers.inputs.row(row);
      for (std::size_t d = 0; d < spec.dimension; ++d) out[d] = spec.means[c][d] + spec.scales[c] * rng.normal();
      inliers.labels.push_back(static_cast<int>(c));
    }
  }
  Dataset ood{"synthetic-ood", {spec.dimension}, Tensor({spec.ood.count, spec.dimension}), {}, spec.class_count,
              SplitTag::test};
  for (std::size_t i = 0; i < spec.ood.count; ++i) {
    auto out = ood.inputs.row(i);
    for (std::size_t d = 0; d < spec.dimension; ++d) out[d] = spec.ood.mean[d] + spec.ood.scale * rng.normal();
  }
  return {std::move(inliers), std::move(ood)};
}

}  // namespace osr::dataio
