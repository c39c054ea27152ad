#pragma once

#include <cmath>
#include <vector>

#include "osr/ndcore/error.hpp"
#include "osr/ndcore/tensor.hpp"

namespace osr::models {

/// Adam with bias-corrected first and second moment estimates.
class Adam {
 public:
  struct Options {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam(const std::vector<Tensor>& params, Options options)
      : options_(options), first_(zeros_like(params)), second_(zeros_like(params)) {}

  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
    if (params.size() != first_.size() || grads.size() != first_.size()) {
      throw DimensionMismatch("adam: parameter list mismatch");
    }
    ++steps_;
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(options_.beta1, t);
    const double c2 = 1.0 - std::pow(options_.beta2, t);
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& m = first_[p];
      auto& v = second_[p];
      for (std::size_t i = 0; i < params[p].size(); ++i) {
        const double g = grads[p][i];
        m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
        v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
        params[p][i] -= options_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.epsilon);
      }
    }
  }

  std::size_t steps() const { return steps_; }

 private:
  Options options_;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
  std::size_t steps_ = 0;
};

}  // namespace osr::models
