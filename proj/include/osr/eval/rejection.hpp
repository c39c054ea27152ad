#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "osr/ndcore/error.hpp"

namespace osr::eval {

enum class Method { entropy, evt_latent };

inline std::string to_string(Method m) { return m == Method::entropy ? "entropy" : "evt-latent"; }

/// Per-example outlier scores of one method on one dataset; larger means
/// more outlying for both methods.
struct ScoreSet {
  std::string dataset_id;
  Method method = Method::entropy;
  std::vector<double> scores;
  std::size_t z_samples = 1;
  std::size_t mcd_passes = 0;
};

/// Smallest score t such that at least `inlier_fraction` of the scores are
/// <= t: the sorted score at index ceil(f * N) - 1 (lower interpolation).
inline double calibrate_threshold(std::span<const double> inlier_scores, double inlier_fraction) {
  require(!inlier_scores.empty(), "calibrate_threshold: empty score list");
  require(inlier_fraction > 0.0 && inlier_fraction <= 1.0, "calibrate_threshold: fraction must lie in (0, 1]");
  std::vector<double> sorted(inlier_scores.begin(), inlier_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil(inlier_fraction * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

/// Percentage of scores strictly above the threshold.
inline double rejection_rate(std::span<const double> scores, double threshold) {
  if (scores.empty()) return 0.0;
  const auto above = std::count_if(scores.begin(), scores.end(), [&](double s) { return s > threshold; });
  return 100.0 * static_cast<double>(above) / static_cast<double>(scores.size());
}

inline double rejection_rate(const ScoreSet& set, double threshold) { return rejection_rate(set.scores, threshold); }

struct CurvePoint {
  double threshold = 0.0;
  double percent = 0.0;
};

struct Curve {
  Method method = Method::entropy;
  std::string dataset_id;
  std::vector<CurvePoint> points;
};

inline Curve rejection_curve(const ScoreSet& set, std::span<const double> grid) {
  require(std::is_sorted(grid.begin(), grid.end()), "rejection_curve: grid must be sorted ascending");
  Curve curve{set.method, set.dataset_id, {}};
  for (double t : grid) curve.points.push_back({t, rejection_rate(set, t)});
  return curve;
}

/// `count` evenly spaced points covering [lo, hi], endpoints exact.
inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  require(count >= 2 && hi > lo, "linear_grid: need count >= 2 and hi > lo");
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  grid.back() = hi;
  return grid;
}

/// Default sweep: [0, 1] for EVT priors, [0, ln C] for entropy.
inline std::vector<double> default_grid(Method method, std::size_t class_count) {
  const double hi = method == Method::entropy ? std::log(static_cast<double>(class_count)) : 1.0;
  return linear_grid(0.0, hi, 101);
}

}  // namespace osr::eval
