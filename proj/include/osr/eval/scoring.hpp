#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "osr/dataio/dataset.hpp"
#include "osr/eval/rejection.hpp"
#include "osr/evt/openset.hpp"
#include "osr/models/inference.hpp"

namespace osr::eval {

struct ScoringConfig {
  std::size_t posterior_samples = 100;
  std::size_t mcd_passes = 50;
  bool mcd_enabled = false;
  evt::Distance distance = evt::Distance::cosine;
  evt::Aggregation aggregation = evt::Aggregation::min_over_classes;

  std::size_t passes() const { return mcd_enabled ? mcd_passes : 1; }
};

/// Everything the two scoring rules need for one example: class
/// probabilities and the latent (or penultimate) vector of every
/// (pass, sample) draw.
struct ExampleDraws {
  Tensor probabilities;  // draws x C
  Tensor latents;        // draws x latent width
};

namespace detail {

/// Draws for one input. With MCD off the encoder pass is deterministic and
/// row `encoded_row` of the precomputed `encoded` batch is reused; with MCD on
/// each pass draws one dropout mask set shared by that pass's latent samples.
inline ExampleDraws draw_example(const models::VariationalModel& m, std::span<const double> x,
                                 const models::EncodedBatch& encoded, std::size_t encoded_row,
                                 const ScoringConfig& cfg, Rng rng) {
  const bool variational = m.is_variational();
  const std::size_t samples = variational ? cfg.posterior_samples : 1;
  const std::size_t width = variational ? m.architecture().latent_dim : m.feature_width();
  std::vector<double> latents;
  latents.reserve(cfg.passes() * samples * width);

  Tensor input;
  if (cfg.mcd_enabled) input = Tensor({1, x.size()}, std::vector<double>(x.begin(), x.end()));
  for (std::size_t pass = 0; pass < cfg.passes(); ++pass) {
    models::EncodedBatch masked;
    const models::EncodedBatch* enc = &encoded;
    std::size_t r = encoded_row;
    if (cfg.mcd_enabled) {
      masked = models::encode_batch(m, input, &rng);
      enc = &masked;
      r = 0;
    }
    if (!variational) {
      auto f = enc->features.row(r);
      latents.insert(latents.end(), f.begin(), f.end());
      continue;
    }
    const auto post = models::LatentPosterior::from_log_variance(
        std::vector<double>(enc->mu.row(r).begin(), enc->mu.row(r).end()), enc->log_variance.row(r));
    for (std::size_t s = 0; s < samples; ++s) {
      const auto z = models::reparameterize(post, rng);
      latents.insert(latents.end(), z.begin(), z.end());
    }
  }
  const std::size_t draws = latents.size() / width;
  ExampleDraws out;
  out.latents = Tensor({draws, width}, std::move(latents));
  out.probabilities = models::classify_batch(m, out.latents);
  return out;
}

inline std::vector<double> mean_rows(const Tensor& t) {
  std::vector<double> mean(t.cols(), 0.0);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) mean[c] += t.at(r, c);
  }
  for (double& v : mean) v /= static_cast<double>(t.rows());
  return mean;
}

}  // namespace detail

/// Entropy and EVT scores from shared per-example draws. Example i uses the
/// stream rng.fork(i), so results do not depend on evaluation order.
/// `evt_models` may be empty, in which case only entropy scores are filled.
inline std::pair<ScoreSet, ScoreSet> score_dataset(const models::VariationalModel& m,
                                                   std::span<const evt::ClassWeibull> evt_models,
                                                   const dataio::Dataset& ds, const ScoringConfig& cfg,
                                                   const Rng& rng) {
  require(ds.input_dim() == m.architecture().input_dim, "scoring: dataset '" + ds.id + "' input width mismatch");
  require(cfg.posterior_samples >= 1 && cfg.mcd_passes >= 1, "scoring: sample counts must be >= 1");
  const std::size_t z = m.is_variational() ? cfg.posterior_samples : 1;
  const std::size_t passes = cfg.mcd_enabled ? cfg.mcd_passes : 0;
  ScoreSet entropy_set{ds.id, Method::entropy, {}, z, passes};
  ScoreSet evt_set{ds.id, Method::evt_latent, {}, z, passes};

  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < ds.size(); start += kChunk) {
    const std::size_t end = std::min(ds.size(), start + kChunk);
    models::EncodedBatch encoded;
    if (!cfg.mcd_enabled) {
      std::vector<std::size_t> rows(end - start);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = start + i;
      encoded = models::encode_batch(m, ds.subset(rows, ds.split).inputs);
    }
    for (std::size_t i = start; i < end; ++i) {
      const auto draws = detail::draw_example(m, ds.inputs.row(i), encoded, i - start, cfg, rng.fork(i));
      const auto mean = detail::mean_rows(draws.probabilities);
      entropy_set.scores.push_back(entropy(mean));
      if (!evt_models.empty()) {
        const auto score = evt::outlier_probability(draws.latents, evt_models, cfg.distance, cfg.aggregation,
                                                    argmax(mean));
        evt_set.scores.push_back(score.aggregate);
      }
    }
  }
  return {std::move(entropy_set), std::move(evt_set)};
}

inline ScoreSet entropy_scores(const models::VariationalModel& m, const dataio::Dataset& ds, const ScoringConfig& cfg,
                               const Rng& rng) {
  return score_dataset(m, {}, ds, cfg, rng).first;
}

inline ScoreSet evt_scores(const models::VariationalModel& m, std::span<const evt::ClassWeibull> evt_models,
                           const dataio::Dataset& ds, const ScoringConfig& cfg, const Rng& rng) {
  require(!evt_models.empty(), "evt_scores: no fitted class models");
  return score_dataset(m, evt_models, ds, cfg, rng).second;
}

}  // namespace osr::eval
