#pragma once

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "osr/models/adam.hpp"
#include "osr/models/elbo.hpp"

namespace osr::models {

struct TrainResult {
  VariationalModel model;
  std::vector<double> epoch_loss;  // example-weighted mean training loss per epoch
  std::vector<double> step_loss;
  std::size_t steps = 0;
};

/// Copies the rows listed in `indices` into a fresh batch.
inline Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
  const std::size_t width = x.cols();
  Tensor out({indices.size(), width});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto src = x.row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

/// Mini-batch Adam on the variant's objective. Shuffling and noise come from
/// a stream of `config.seed`, so equal seeds and data give equal parameters.
inline TrainResult train(VariationalModel model, const Tensor& x, std::span<const int> labels,
                         const TrainingConfig& config) {
  config.validate();
  require(x.rows() > 0, "train: empty dataset");
  require(labels.size() == x.rows(), "train: label count mismatch");

  Rng rng = Rng(config.seed).fork(0x747261696eULL);
  Adam optimizer(model.parameters(), Adam::Options{.learning_rate = config.learning_rate});

  TrainResult result{std::move(model), {}, {}, 0};
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double epoch_total = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (config.max_steps != 0 && result.steps >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor batch = gather_rows(x, idx);
      std::vector<int> batch_labels;
      batch_labels.reserve(idx.size());
      for (auto i : idx) batch_labels.push_back(labels[i]);

      ElboResult step;
      try {
        step = elbo(result.model, batch, batch_labels, config, rng);
      } catch (const NonFiniteValue&) {
        throw Divergence("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                         std::to_string(result.steps));
      }
      optimizer.step(result.model.parameters(), step.grads);
      ++result.steps;
      result.step_loss.push_back(step.terms.loss);
      epoch_total += step.terms.loss * static_cast<double>(idx.size());
      epoch_count += idx.size();
    }
    if (epoch_count == 0) break;
    result.epoch_loss.push_back(epoch_total / static_cast<double>(epoch_count));
    for (const auto& p : result.model.parameters()) {
      if (!p.all_finite()) throw Divergence("train: non-finite parameter after epoch " + std::to_string(epoch));
    }
  }
  return result;
}

}  // namespace osr::models
