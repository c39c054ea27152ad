#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

#include "osr/ndcore/error.hpp"

namespace osr {

/// Seeded pseudo-random source.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniform and normal variates are derived here rather than via
/// <random> distributions, whose algorithms vary between standard libraries:
///   uniform()  = (next >> 11) * 2^-53, in [0, 1)
///   normal()   = Marsaglia polar method, second variate cached
/// Instances are single-owner; use fork() to hand independent streams to
/// parallel work.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in the open interval (0, 1).
  double uniform_open() {
    for (;;) {
      const double u = uniform();
      if (u > 0.0) return u;
    }
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

  /// Unbiased integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    require(n > 0, "uniform_index: empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
      const std::uint64_t r = engine_();
      if (r < limit) return r % n;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Independent generator for sub-stream `stream`, derived via splitmix64.
  Rng fork(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL))); }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace osr
