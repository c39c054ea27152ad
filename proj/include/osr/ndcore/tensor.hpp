#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "osr/ndcore/error.hpp"

namespace osr {

/// Dense row-major array of doubles with shape metadata.
///
/// The product of the extents always equals the element count. Rank-2
/// tensors double as (rows x cols) matrices for the network code.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size()) {
      throw DimensionMismatch("tensor shape does not match data length");
    }
  }

  static Tensor from_vector(std::vector<double> values) {
    Shape shape{values.size()};
    return Tensor(std::move(shape), std::move(values));
  }

  static std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  /// Product of the trailing extents (row width); 1 for rank-1 tensors.
  std::size_t cols() const {
    if (shape_.empty()) return 0;
    return std::accumulate(shape_.begin() + 1, shape_.end(), std::size_t{1}, std::multiplies<>());
  }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void check_finite(std::string_view what) const {
    if (!all_finite()) throw NonFiniteValue(std::string(what) + ": non-finite value");
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline Tensor zeros_like(const Tensor& t) { return Tensor(t.shape(), 0.0); }

inline std::vector<Tensor> zeros_like(const std::vector<Tensor>& ts) {
  std::vector<Tensor> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(zeros_like(t));
  return out;
}

}  // namespace osr
