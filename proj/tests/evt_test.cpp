#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "osr/evt.hpp"
#include "osr/ndcore.hpp"
#include "support/oracles.hpp"

using namespace osr;
using namespace osr::evt;

namespace {

Tensor rows_of(const std::vector<std::vector<double>>& rows) {
  Tensor t({rows.size(), rows.front().size()});
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), t.row(r).begin());
  return t;
}

struct Blobs {
  Tensor latents;
  std::vector<int> labels;
  std::vector<int> predictions;
};

// Gaussian blobs in 2-D: class c centred at centres[c], with a few examples
// deliberately mispredicted.
Blobs blobs(const std::vector<std::vector<double>>& centres, std::size_t per_class, double scale, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  Blobs b;
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      rows.push_back({centres[c][0] + scale * rng.normal(), centres[c][1] + scale * rng.normal()});
      b.labels.push_back(static_cast<int>(c));
      b.predictions.push_back(i % 17 == 3 ? static_cast<int>((c + 1) % centres.size()) : static_cast<int>(c));
    }
  }
  b.latents = rows_of(rows);
  return b;
}

EvtConfig euclidean(double tail_fraction = 0.05) {
  EvtConfig c;
  c.distance = Distance::euclidean;
  c.tail_fraction = tail_fraction;
  return c;
}

}  // namespace

TEST(ClassMeans, SingleCorrectExample) {
  const auto t = rows_of({{1, 2}, {3, 4}});
  const auto means = class_latent_means(t, std::vector<int>{0, 1}, std::vector<int>{0, 1}, 2);
  EXPECT_EQ(means[0], (std::vector<double>{1, 2}));
  EXPECT_EQ(means[1], (std::vector<double>{3, 4}));
}

TEST(ClassMeans, OppositePointsAverageToZero) {
  const auto t = rows_of({{1.5, -2.0}, {-1.5, 2.0}});
  const auto means = class_latent_means(t, std::vector<int>{0, 0}, std::vector<int>{0, 0}, 1);
  EXPECT_EQ(means[0], (std::vector<double>{0, 0}));
}

TEST(ClassMeans, MatchesFilteredMean) {
  const auto b = blobs({{0, 0}, {5, 5}, {-5, 5}}, 50, 1.0, 1);
  const auto means = class_latent_means(b.latents, b.labels, b.predictions, 3);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> sum(2, 0.0);
    int n = 0;
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
      if (b.labels[i] != c || b.predictions[i] != c) continue;
      sum[0] += b.latents.at(i, 0);
      sum[1] += b.latents.at(i, 1);
      ++n;
    }
    EXPECT_NEAR(means[c][0], sum[0] / n, 1e-12);
    EXPECT_NEAR(means[c][1], sum[1] / n, 1e-12);
  }
}

TEST(ClassMeans, EmptyClassIsAnError) {
  const auto t = rows_of({{1, 2}, {3, 4}});
  EXPECT_THROW(class_latent_means(t, std::vector<int>{0, 1}, std::vector<int>{0, 0}, 2), EmptyClass);
}

TEST(WeibullMle, RecoversShapeTwo) {
  const auto x = oracle::weibull_draws(10'000, 2.0, 1.0, 20240601);
  const auto fit = fit_weibull_mle(x);
  EXPECT_GE(fit.kappa, 1.94);
  EXPECT_LE(fit.kappa, 2.06);
  EXPECT_GE(fit.lambda, 0.98);
  EXPECT_LE(fit.lambda, 1.02);
}

TEST(WeibullMle, RecoversExponential) {
  const auto x = oracle::weibull_draws(10'000, 1.0, 3.0, 77);
  const auto fit = fit_weibull_mle(x);
  EXPECT_GE(fit.kappa, 0.97);
  EXPECT_LE(fit.kappa, 1.03);
}

TEST(WeibullMle, WideRangeOfShapesAndScales) {
  for (double k : {0.3, 0.8, 1.5, 4.0, 12.0}) {
    for (double l : {1e-3, 1.0, 250.0}) {
      const auto fit = fit_weibull_mle(oracle::weibull_draws(5000, k, l, 5));
      EXPECT_NEAR(fit.kappa / k, 1.0, 0.06) << k << " " << l;
      EXPECT_NEAR(fit.lambda / l, 1.0, 0.06) << k << " " << l;
    }
  }
}

TEST(WeibullMle, SolvesTheProfileEquation) {
  const auto x = oracle::weibull_draws(500, 2.5, 0.7, 9);
  const auto fit = fit_weibull_mle(x);
  double a = 0, b = 0, mean_log = 0, mean_pow = 0;
  for (double v : x) {
    a += std::pow(v, fit.kappa);
    b += std::pow(v, fit.kappa) * std::log(v);
    mean_log += std::log(v) / x.size();
  }
  mean_pow = a / x.size();
  EXPECT_NEAR(b / a - 1.0 / fit.kappa - mean_log, 0.0, 1e-9);
  EXPECT_NEAR(fit.lambda, std::pow(mean_pow, 1.0 / fit.kappa), 1e-12);
}

TEST(WeibullMle, ErrorShrinksWithSampleSize) {
  double previous = INFINITY;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const auto fit = fit_weibull_mle(oracle::weibull_draws(n, 2.0, 1.0, 31));
    const double err = std::abs(fit.kappa - 2.0) / 2.0 + std::abs(fit.lambda - 1.0);
    EXPECT_LT(err, previous) << n;
    previous = err;
  }
}

TEST(WeibullMle, InvalidSamples) {
  EXPECT_THROW(fit_weibull_mle(std::vector<double>(20, 0.4)), DegenerateSample);
  EXPECT_THROW(fit_weibull_mle(std::vector<double>{1.0}), InvalidArgument);
  EXPECT_THROW(fit_weibull_mle(std::vector<double>{1.0, -1.0}), InvalidArgument);
  EXPECT_THROW(fit_weibull_mle(std::vector<double>{1.0, NAN}), InvalidArgument);
}

TEST(WeibullCdf, AnalyticPoints) {
  for (double k : {0.5, 1.0, 2.0, 5.0}) {
    EXPECT_EQ(weibull_cdf(0.3, 0.3, k, 1.7), 0.0);
    EXPECT_NEAR(weibull_cdf(0.3 + 1.7, 0.3, k, 1.7), 1.0 - std::exp(-1.0), 1e-12);
    EXPECT_EQ(weibull_cdf(-5.0, 0.3, k, 1.7), 0.0);
    EXPECT_NEAR(weibull_cdf(1e6, 0.3, k, 1.7), 1.0, 1e-12);
  }
}

TEST(WeibullCdf, MonotoneOnGrid) {
  for (double k : {0.5, 1.0, 2.0, 5.0}) {
    double prev = 0.0;
    for (int i = 0; i <= 10'000; ++i) {
      const double w = weibull_cdf(i * 1e-3, 0.5, k, 2.0);
      ASSERT_GE(w, prev);
      ASSERT_LE(w, 1.0);
      prev = w;
    }
  }
}

namespace {

// Single class whose distances to the (exact) mean are Weibull(2, 1) draws:
// points come in pairs mean +- r * u so the sample mean is the mean itself.
Blobs weibull_ring(std::size_t pairs, std::uint64_t seed) {
  const auto radii = oracle::weibull_draws(pairs, 2.0, 1.0, seed);
  std::mt19937_64 gen(seed + 1);
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
  std::vector<std::vector<double>> rows;
  for (double r : radii) {
    const double a = angle(gen);
    rows.push_back({3.0 + r * std::cos(a), -1.0 + r * std::sin(a)});
    rows.push_back({3.0 - r * std::cos(a), -1.0 - r * std::sin(a)});
  }
  Blobs b;
  b.latents = rows_of(rows);
  b.labels.assign(rows.size(), 0);
  b.predictions.assign(rows.size(), 0);
  return b;
}

}  // namespace

TEST(FitOpenset, RecoversGenerativeTail) {
  const auto b = weibull_ring(5000, 123);
  const auto models = fit_openset(b.latents, b.labels, b.predictions, 1, euclidean(1.0));
  ASSERT_EQ(models.size(), 1u);
  EXPECT_NEAR(models[0].mean[0], 3.0, 1e-12);
  EXPECT_NEAR(models[0].mean[1], -1.0, 1e-12);
  EXPECT_EQ(models[0].tail_count, 10000u);
  // tau is the smallest distance (~0.01); the shifted sample stays close to
  // Weibull(2, 1).
  EXPECT_LT(models[0].tau, 0.05);
  EXPECT_GE(models[0].kappa, 1.94);
  EXPECT_LE(models[0].kappa, 2.06);
  EXPECT_GE(models[0].lambda, 0.98);
  EXPECT_LE(models[0].lambda, 1.02);
}

TEST(FitOpenset, SeparatedClasses) {
  const auto b = blobs({{0, 0}, {40, 0}}, 400, 1.0, 2);
  const auto models = fit_openset(b.latents, b.labels, b.predictions, 2, euclidean());
  for (int c = 0; c < 2; ++c) {
    std::vector<double> own, other;
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
      const double w = models[c].cdf(euclidean_distance(b.latents.row(i), models[c].mean));
      (b.labels[i] == c ? own : other).push_back(w);
    }
    std::nth_element(own.begin(), own.begin() + own.size() / 2, own.end());
    EXPECT_LT(own[own.size() / 2], 0.6);
    EXPECT_GT(*std::min_element(other.begin(), other.end()), 0.99);
  }
}

TEST(FitOpenset, TailClippedToClassSize) {
  const auto b = blobs({{0, 0}, {10, 0}}, 12, 1.0, 3);
  auto cfg = euclidean(0.05);
  cfg.min_tail_count = 50;
  const auto models = fit_openset(b.latents, b.labels, b.predictions, 2, cfg);
  for (int c = 0; c < 2; ++c) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < b.labels.size(); ++i) correct += b.labels[i] == c && b.predictions[i] == c;
    EXPECT_EQ(models[c].tail_count, correct);
  }
}

TEST(FitOpenset, TailSizeRule) {
  EvtConfig c;
  EXPECT_EQ(c.tail_size(1000), 50u);
  EXPECT_EQ(c.tail_size(100), 10u);
  EXPECT_EQ(c.tail_size(7), 7u);
  EXPECT_EQ(c.tail_size(201), 11u);
  c.min_tail_count = 9;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(FitOpenset, EmpiricalNinetiethPercentileOfTail) {
  // 5% tails of ~9400 correct examples: ~470 tail points. Much smaller tails
  // bias the fit low because the smallest shifted distance is 1e-12.
  const auto b = blobs({{0, 0}, {30, 30}}, 10000, 1.0, 4);
  const auto models = fit_openset(b.latents, b.labels, b.predictions, 2, euclidean());
  for (int c = 0; c < 2; ++c) {
    std::vector<double> d;
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
      if (b.labels[i] == c && b.predictions[i] == c) d.push_back(euclidean_distance(b.latents.row(i), models[c].mean));
    }
    std::sort(d.begin(), d.end(), std::greater<>());
    d.resize(models[c].tail_count);
    std::sort(d.begin(), d.end());
    const double p90 = d[static_cast<std::size_t>(0.9 * (d.size() - 1))];
    const double w = models[c].cdf(p90);
    EXPECT_GE(w, 0.85);
    EXPECT_LE(w, 0.95);
  }
}

TEST(FitOpenset, PermutationInvariant) {
  const auto b = blobs({{0, 0}, {6, 1}, {-2, 7}}, 120, 1.0, 5);
  const auto base = fit_openset(b.latents, b.labels, b.predictions, 3, EvtConfig{});
  std::vector<std::size_t> order(b.labels.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(6);
  rng.shuffle(std::span(order));
  Blobs p{Tensor(b.latents.shape()), {}, {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::copy(b.latents.row(order[i]).begin(), b.latents.row(order[i]).end(), p.latents.row(i).begin());
    p.labels.push_back(b.labels[order[i]]);
    p.predictions.push_back(b.predictions[order[i]]);
  }
  const auto perm = fit_openset(p.latents, p.labels, p.predictions, 3, EvtConfig{});
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(perm[c].mean, base[c].mean);
    EXPECT_EQ(perm[c].tau, base[c].tau);
    EXPECT_EQ(perm[c].kappa, base[c].kappa);
    EXPECT_EQ(perm[c].lambda, base[c].lambda);
  }
}

TEST(FitOpenset, CosineFitIsScaleInvariant) {
  const auto b = blobs({{3, 0.5}, {0.5, 3}, {-2, -2}}, 150, 0.6, 7);
  const auto base = fit_openset(b.latents, b.labels, b.predictions, 3, EvtConfig{});
  for (double scale : {4.0, 0.125, 3.7}) {
    Tensor scaled = b.latents;
    for (double& v : scaled.data()) v *= scale;
    const auto fit = fit_openset(scaled, b.labels, b.predictions, 3, EvtConfig{});
    // Powers of two scale without rounding, so those fits are identical.
    const double tol = (scale == 3.7) ? 1e-9 : 0.0;
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(fit[c].tau, base[c].tau, tol);
      EXPECT_NEAR(fit[c].kappa / base[c].kappa, 1.0, tol);
      EXPECT_NEAR(fit[c].lambda / base[c].lambda, 1.0, tol);
    }
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
      const std::vector<double> z{3 * rng.normal(), 3 * rng.normal()};
      const std::vector<double> zs{scale * z[0], scale * z[1]};
      const auto a = outlier_probability(rows_of({z}), base, Distance::cosine, Aggregation::min_over_classes);
      const auto s = outlier_probability(rows_of({zs}), fit, Distance::cosine, Aggregation::min_over_classes);
      EXPECT_NEAR(a.aggregate, s.aggregate, tol == 0.0 ? 0.0 : 1e-6);
      EXPECT_EQ(reject(a.aggregate, {0.5}), reject(s.aggregate, {0.5}));
    }
  }
}

TEST(FitOpenset, ErrorsNameTheClass) {
  // Class 1 has only identical points: its tail is degenerate.
  const auto t = rows_of({{1, 0}, {2, 0}, {4, 0}, {0, 5}, {0, 5}, {0, 5}});
  try {
    fit_openset(t, std::vector<int>{0, 0, 0, 1, 1, 1}, std::vector<int>{0, 0, 0, 1, 1, 1}, 2, euclidean());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("class 1"), std::string::npos) << e.what();
  }
}

TEST(OutlierProbability, AtMeanIsZeroAndFarIsOne) {
  const auto b = blobs({{0, 0}, {20, 0}}, 200, 1.0, 9);
  const auto models = fit_openset(b.latents, b.labels, b.predictions, 2, euclidean());
  const auto at_mean = outlier_probability(rows_of({models[0].mean}), models, Distance::euclidean,
                                           Aggregation::min_over_classes);
  EXPECT_EQ(at_mean.per_class[0], 0.0);
  EXPECT_EQ(at_mean.aggregate, 0.0);
  const auto far = outlier_probability(rows_of({{0, 1e4}}), models, Distance::euclidean, Aggregation::min_over_classes);
  for (double w : far.per_class) EXPECT_NEAR(w, 1.0, 1e-12);
  EXPECT_NEAR(far.aggregate, 1.0, 1e-12);
}

TEST(OutlierProbability, MatchesAverageThenAggregate) {
  const auto b = blobs({{0, 0}, {5, 0}, {0, 5}}, 300, 1.0, 10);
  const auto models = fit_openset(b.latents, b.labels, b.predictions, 3, euclidean(0.2));
  Rng rng(11);
  std::vector<std::vector<double>> samples;
  for (int s = 0; s < 100; ++s) samples.push_back({2.5 + rng.normal(), 1.0 + rng.normal()});
  const auto t = rows_of(samples);

  std::vector<double> avg(3, 0.0);
  for (int c = 0; c < 3; ++c) {
    for (const auto& z : samples) {
      const double d = std::hypot(z[0] - models[c].mean[0], z[1] - models[c].mean[1]);
      avg[c] += (d > models[c].tau ? 1.0 - std::exp(-std::pow((d - models[c].tau) / models[c].lambda, models[c].kappa))
                                   : 0.0) /
                100.0;
    }
  }
  const auto min = outlier_probability(t, models, Distance::euclidean, Aggregation::min_over_classes);
  const auto any = outlier_probability(t, models, Distance::euclidean, Aggregation::any_class);
  const auto pred = outlier_probability(t, models, Distance::euclidean, Aggregation::predicted_class, 2);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(min.per_class[c], avg[c], 1e-12);
  EXPECT_NEAR(min.aggregate, *std::min_element(avg.begin(), avg.end()), 1e-12);
  EXPECT_NEAR(any.aggregate, *std::max_element(avg.begin(), avg.end()), 1e-12);
  EXPECT_NEAR(pred.aggregate, avg[2], 1e-12);
  EXPECT_THROW(outlier_probability(t, models, Distance::euclidean, Aggregation::predicted_class), InvalidArgument);
}

TEST(OutlierProbability, MinAggregateBoundsEveryClass) {
  const auto b = blobs({{0, 0}, {4, 0}, {0, 4}}, 200, 1.0, 12);
  const auto models = fit_openset(b.latents, b.labels, b.predictions, 3, euclidean());
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const auto s = outlier_probability(rows_of({{6 * rng.normal(), 6 * rng.normal()}}), models, Distance::euclidean,
                                       Aggregation::min_over_classes);
    for (double w : s.per_class) EXPECT_LE(s.aggregate, w);
    EXPECT_GE(s.aggregate, 0.0);
    EXPECT_LE(s.aggregate, 1.0);
  }
}

TEST(OutlierProbability, WidthMismatch) {
  const auto b = blobs({{0, 0}, {4, 0}}, 50, 1.0, 14);
  const auto models = fit_openset(b.latents, b.labels, b.predictions, 2, euclidean());
  EXPECT_THROW(outlier_probability(rows_of({{1, 2, 3}}), models, Distance::euclidean, Aggregation::any_class),
               DimensionMismatch);
}

TEST(Reject, Decisions) {
  EXPECT_FALSE(reject(0.0, {0.01}));
  EXPECT_TRUE(reject(1.0, {0.99}));
  EXPECT_FALSE(reject(0.5, {0.5}));
  EXPECT_THROW(reject(1.5, {0.5}), InvalidArgument);
  EXPECT_THROW(reject(0.5, {1.5}), InvalidArgument);

  Rng rng(15);
  std::vector<double> scores;
  for (int i = 0; i < 1000; ++i) scores.push_back(rng.uniform());
  scores.push_back(0.3);
  for (double prior : {0.0, 0.3, 0.95, 1.0}) {
    for (double s : scores) EXPECT_EQ(reject(s, {prior}), s > prior);
  }
}

TEST(EvtModelFile, RoundTripIsBitExact) {
  const auto b = blobs({{0, 0}, {5, 0}, {0, 5}}, 100, 1.0, 16);
  EvtModelFile file{euclidean(0.1), fit_openset(b.latents, b.labels, b.predictions, 3, euclidean(0.1))};
  const auto bytes = encode_evt_model(file);
  const auto back = decode_evt_model(io::ByteReader(bytes, "mem"));
  EXPECT_EQ(back.config, file.config);
  ASSERT_EQ(back.classes.size(), 3u);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(back.classes[c].class_id, c);
    EXPECT_EQ(back.classes[c].mean, file.classes[c].mean);
    EXPECT_EQ(back.classes[c].tau, file.classes[c].tau);
    EXPECT_EQ(back.classes[c].kappa, file.classes[c].kappa);
    EXPECT_EQ(back.classes[c].lambda, file.classes[c].lambda);
    EXPECT_EQ(back.classes[c].tail_count, file.classes[c].tail_count);
  }
  EXPECT_EQ(encode_evt_model(back), bytes);
  auto bad = bytes;
  bad[3] = '?';
  EXPECT_THROW(decode_evt_model(io::ByteReader(bad, "mem")), BadMagic);
  EXPECT_THROW(decode_evt_model(io::ByteReader(bytes.substr(0, 40), "mem")), TruncatedPayload);
}
