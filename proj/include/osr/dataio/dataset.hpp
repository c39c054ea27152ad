#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "osr/ndcore/error.hpp"
#include "osr/ndcore/tensor.hpp"

namespace osr::dataio {

enum class SplitTag { train, val, test };

inline std::string to_string(SplitTag s) {
  switch (s) {
    case SplitTag::train: return "train";
    case SplitTag::val: return "val";
    case SplitTag::test: return "test";
  }
  return "?";
}

/// Examples flattened to rows of `inputs`; `example_shape` records the
/// original per-example shape (e.g. 28x28). Labels are optional.
struct Dataset {
  std::string id;
  Tensor::Shape example_shape;
  Tensor inputs;
  std::vector<int> labels;
  std::size_t class_count = 0;
  SplitTag split = SplitTag::train;

  std::size_t size() const { return inputs.rows(); }
  std::size_t input_dim() const { return inputs.cols(); }
  bool has_labels() const { return !labels.empty(); }

  void validate() const {
    require(inputs.rank() == 2, "dataset '" + id + "': inputs must be a matrix");
    require(Tensor::element_count(example_shape) == input_dim(), "dataset '" + id + "': example shape mismatch");
    if (has_labels()) {
      require(labels.size() == size(), "dataset '" + id + "': label count mismatch");
      for (int y : labels) {
        require(y >= 0 && static_cast<std::size_t>(y) < class_count, "dataset '" + id + "': label out of range");
      }
    }
    inputs.check_finite("dataset '" + id + "'");
  }

  Dataset subset(std::span<const std::size_t> rows, SplitTag tag) const {
    Dataset out{id, example_shape, Tensor({rows.size(), input_dim()}), {}, class_count, tag};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto src = inputs.row(rows[r]);
      std::copy(src.begin(), src.end(), out.inputs.row(r).begin());
      if (has_labels()) out.labels.push_back(labels[rows[r]]);
    }
    return out;
  }

  /// First `n` examples (all when n >= size()).
  Dataset head(std::size_t n) const {
    std::vector<std::size_t> rows(std::min(n, size()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return subset(rows, split);
  }
};

}  // namespace osr::dataio
