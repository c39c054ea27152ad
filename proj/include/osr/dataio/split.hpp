#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "osr/dataio/dataset.hpp"
#include "osr/ndcore/rng.hpp"

namespace osr::dataio {

/// Per-class validation counts by largest-remainder apportionment of
/// round(fraction * N): each class gets floor(fraction * n_c) or one more.
inline std::vector<std::size_t> stratified_counts(const std::vector<std::size_t>& class_sizes, double fraction) {
  const std::size_t total = std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  std::vector<std::size_t> counts(class_sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    const double exact = fraction * static_cast<double>(class_sizes[c]);
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i) {
    const auto c = remainders[i].second;
    if (counts[c] < class_sizes[c]) {
      ++counts[c];
      ++assigned;
    }
  }
  return counts;
}

/// Deterministic stratified split into (train, val). Unlabelled data is
/// treated as one stratum. Both parts keep the original example order.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double val_fraction, std::uint64_t seed) {
  require(val_fraction > 0.0 && val_fraction < 1.0, "split: fraction must lie in (0, 1)");
  const std::size_t strata = ds.has_labels() ? std::max<std::size_t>(ds.class_count, 1) : 1;
  std::vector<std::vector<std::size_t>> members(strata);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    members[ds.has_labels() ? static_cast<std::size_t>(ds.labels[i]) : 0].push_back(i);
  }
  std::vector<std::size_t> sizes;
  for (const auto& m : members) sizes.push_back(m.size());
  const auto val_counts = stratified_counts(sizes, val_fraction);

  Rng rng(seed);
  std::vector<bool> in_val(ds.size(), false);
  for (std::size_t c = 0; c < strata; ++c) {
    auto idx = members[c];
    rng.shuffle(std::span(idx));
    for (std::size_t i = 0; i < val_counts[c]; ++i) in_val[idx[i]] = true;
  }
  std::vector<std::size_t> train_rows, val_rows;
  for (std::size_t i = 0; i < ds.size(); ++i) (in_val[i] ? val_rows : train_rows).push_back(i);
  if (train_rows.empty() || val_rows.empty()) throw InvalidArgument("split: fraction leaves one side empty");
  return {ds.subset(train_rows, SplitTag::train), ds.subset(val_rows, SplitTag::val)};
}

}  // namespace osr::dataio
