#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "osr/ndcore/error.hpp"
#include "osr/ndcore/tensor.hpp"

namespace osr {

/// A scalar objective evaluated together with its analytic gradient.
struct ValueAndGrad {
  double value = 0.0;
  std::vector<Tensor> grads;
};

/// Per-entry relative errors |analytic - central| / max(1, |central|), in
/// parameter order.
template <class Objective>
std::vector<double> grad_check_entries(Objective&& objective, std::vector<Tensor> params, double step) {
  require(step > 0.0 && step <= 1e-2, "grad_check: step must lie in (0, 1e-2]");
  const ValueAndGrad analytic = objective(params);
  require(analytic.grads.size() == params.size(), "grad_check: gradient count mismatch");

  std::vector<double> errors;
  for (std::size_t t = 0; t < params.size(); ++t) {
    require(analytic.grads[t].size() == params[t].size(), "grad_check: gradient shape mismatch");
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double original = params[t][i];
      params[t][i] = original + step;
      const double plus = objective(params).value;
      params[t][i] = original - step;
      const double minus = objective(params).value;
      params[t][i] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NonFiniteValue("grad_check: non-finite evaluation");
      }
      const double numeric = (plus - minus) / (2.0 * step);
      errors.push_back(std::abs(analytic.grads[t][i] - numeric) / std::max(1.0, std::abs(numeric)));
    }
  }
  return errors;
}

/// Maximum relative error of the analytic gradient against central
/// differences over every parameter entry.
template <class Objective>
double grad_check(Objective&& objective, std::vector<Tensor> params, double step) {
  const auto errors = grad_check_entries(std::forward<Objective>(objective), std::move(params), step);
  return errors.empty() ? 0.0 : *std::max_element(errors.begin(), errors.end());
}

}  // namespace osr
