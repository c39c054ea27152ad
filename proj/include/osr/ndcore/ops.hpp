#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "osr/ndcore/error.hpp"

namespace osr {

namespace detail {
inline void require_finite(std::span<const double> xs, const char* what) {
  for (double v : xs) {
    if (!std::isfinite(v)) throw NonFiniteValue(std::string(what) + ": non-finite input");
  }
}
}  // namespace detail

/// Max-shifted softmax.
inline std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax: empty input");
  detail::require_finite(logits, "softmax");
  const double shift = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - shift);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

/// log-sum-exp, max-shifted.
inline double log_sum_exp(std::span<const double> xs) {
  const double shift = *std::max_element(xs.begin(), xs.end());
  double total = 0.0;
  for (double v : xs) total += std::exp(v - shift);
  return shift + std::log(total);
}

/// Shannon entropy in nats, with 0 ln 0 = 0.
inline double entropy(std::span<const double> p) {
  require(!p.empty(), "entropy: empty input");
  double total = 0.0;
  double h = 0.0;
  for (double v : p) {
    if (!std::isfinite(v)) throw NonFiniteValue("entropy: non-finite input");
    require(v >= 0.0, "entropy: negative probability");
    total += v;
    if (v > 0.0) h -= v * std::log(v);
  }
  require(std::abs(total - 1.0) <= 1e-9, "entropy: probabilities do not sum to 1");
  return std::clamp(h, 0.0, std::log(static_cast<double>(p.size())));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// 1 - cos(a, b), clamped to [0, 2]. Zero-norm input signals a degenerate code.
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine_distance: length mismatch");
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (!(na > 0.0) || !(nb > 0.0)) throw InvalidArgument("cosine_distance: zero-norm vector");
  return std::clamp(1.0 - dot(a, b) / (na * nb), 0.0, 2.0);
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("euclidean_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline std::size_t argmax(std::span<const double> xs) {
  return static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

}  // namespace osr
