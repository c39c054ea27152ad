#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "osr/ndcore/error.hpp"

namespace osr::evt {

struct WeibullFit {
  double kappa = 0.0;   // shape
  double lambda = 0.0;  // scale
  std::size_t iterations = 0;
};

inline constexpr std::size_t kMaxNewtonIterations = 200;
inline constexpr double kShapeTolerance = 1e-9;

/// Two-parameter Weibull maximum likelihood.
///
/// The shape solves the profile-likelihood equation
///   g(k) = sum(x^k ln x) / sum(x^k) - 1/k - mean(ln x) = 0,
/// which is strictly increasing in k. Newton iterations start from the
/// log-moment estimate k0 = pi / (sd(ln x) * sqrt(6)) and fall back to
/// bisection whenever a step leaves the current sign bracket. The scale is
/// then (mean x^k)^(1/k). Data are divided by their maximum first, which
/// leaves k unchanged and keeps x^k in (0, 1].
inline WeibullFit fit_weibull_mle(std::span<const double> sample) {
  if (sample.size() < 2) throw InvalidArgument("fit_weibull_mle: need at least 2 values");
  double max_value = 0.0;
  for (double v : sample) {
    if (!std::isfinite(v) || v <= 0.0) throw InvalidArgument("fit_weibull_mle: values must be finite and > 0");
    max_value = std::max(max_value, v);
  }

  const auto n = static_cast<double>(sample.size());
  std::vector<double> logs(sample.size());
  double mean_log = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    logs[i] = std::log(sample[i] / max_value);
    mean_log += logs[i];
  }
  mean_log /= n;
  double var_log = 0.0;
  for (double l : logs) var_log += (l - mean_log) * (l - mean_log);
  var_log /= n;
  if (!(var_log > 0.0)) throw DegenerateSample("fit_weibull_mle: all values equal");

  struct Sums {
    double a = 0, b = 0, c = 0;
  };
  auto sums = [&](double k) {
    Sums s;
    for (double l : logs) {
      const double w = std::exp(k * l);
      s.a += w;
      s.b += w * l;
      s.c += w * l * l;
    }
    return s;
  };

  double kappa = std::numbers::pi / std::sqrt(6.0 * var_log);
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 1; iter <= kMaxNewtonIterations; ++iter) {
    const Sums s = sums(kappa);
    const double g = s.b / s.a - 1.0 / kappa - mean_log;
    if (g < 0.0) lo = kappa;
    else hi = kappa;
    const double slope = (s.c * s.a - s.b * s.b) / (s.a * s.a) + 1.0 / (kappa * kappa);
    double next = kappa - g / slope;
    if (!(next > lo && next < hi)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * kappa;
    const double change = std::abs(next - kappa) / next;
    kappa = next;
    if (change <= kShapeTolerance || g == 0.0) {
      const double mean_pow = sums(kappa).a / n;
      const double lambda = max_value * std::pow(mean_pow, 1.0 / kappa);
      if (!std::isfinite(kappa) || !std::isfinite(lambda) || lambda <= 0.0) {
        throw NonConvergence("fit_weibull_mle: non-finite estimate");
      }
      return {kappa, lambda, iter};
    }
  }
  throw NonConvergence("fit_weibull_mle: no convergence within " + std::to_string(kMaxNewtonIterations) +
                       " iterations");
}

/// Shifted Weibull CDF: 0 for d <= tau, else 1 - exp(-((d - tau) / lambda)^kappa).
inline double weibull_cdf(double d, double tau, double kappa, double lambda) {
  if (!(d > tau)) return 0.0;
  return -std::expm1(-std::pow((d - tau) / lambda, kappa));
}

}  // namespace osr::evt
