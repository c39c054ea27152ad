#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "osr/cli/config.hpp"
#include "osr/dataio.hpp"
#include "osr/eval.hpp"
#include "osr/evt.hpp"
#include "osr/models.hpp"

namespace osr::cli {

/// Error raised by a pipeline stage; keeps the original category and code.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.category(), cause.code(), cause.what()), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::validation: return 1;
    case ErrorCategory::runtime: return 2;
    case ErrorCategory::io: return 3;
  }
  return 2;
}

inline std::string error_json(const std::string& stage, const Error& e) {
  static constexpr const char* names[] = {"validation", "runtime", "io"};
  nlohmann::json j = {{"error",
                       {{"stage", stage},
                        {"code", e.code()},
                        {"category", names[static_cast<int>(e.category())]},
                        {"message", e.what()}}}};
  return j.dump();
}

/// Artifact locations inside the output directory.
struct ArtifactPaths {
  fs::path checkpoint, loss_trace, embeddings, evt_model, evt_log, report, curves_stem;

  static ArtifactPaths in(const fs::path& dir) {
    return {dir / "model.ckpt",  dir / "loss_trace.csv", dir / "embeddings.bin", dir / "evt_model.bin",
            dir / "evt_fit.csv", dir / "report.csv",     dir / "curves"};
  }
};

struct InlierData {
  dataio::Dataset train, val, test;
  std::optional<dataio::Dataset> synthetic_ood;
};

namespace detail {

inline void require_paths(const DataSource& s) {
  for (const auto& p : s.paths()) {
    if (!fs::exists(p)) throw IoError("dataset '" + s.id + "': missing file '" + p.string() + "'");
  }
}

inline std::uint64_t split_seed(std::uint64_t train_seed) { return Rng::mix(train_seed ^ 0x73706c6974ULL); }

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

}  // namespace detail

/// Inlier train/val/test splits. Synthetic inliers are split into test and
/// the rest by `test_fraction`; IDX inliers use their own test file.
inline InlierData load_inlier(const RunConfig& cfg) {
  const auto& src = cfg.inlier;
  detail::require_paths(src);
  InlierData data;
  dataio::Dataset full;
  if (src.kind == "synthetic") {
    auto [inliers, ood] = dataio::make_synthetic(*src.synthetic);
    inliers.id = src.id;
    auto [rest, test] = dataio::split(inliers, src.test_fraction, src.synthetic->seed);
    test.split = dataio::SplitTag::test;
    full = std::move(rest);
    data.test = std::move(test);
    data.synthetic_ood = std::move(ood);
  } else {
    require(!src.train_images.empty() && !src.train_labels.empty() && !src.test_images.empty() &&
                !src.test_labels.empty(),
            "idx inlier needs train_images, train_labels, test_images and test_labels");
    full = dataio::load_idx_dataset(src.id, src.train_images, src.train_labels, src.class_count,
                                    dataio::SplitTag::train);
    if (src.train_limit) full = full.head(src.train_limit);
    data.test = dataio::load_idx_dataset(src.id, src.test_images, src.test_labels, src.class_count,
                                         dataio::SplitTag::test);
    if (src.test_limit) data.test = data.test.head(src.test_limit);
  }
  auto [train, val] = dataio::split(full, cfg.val_fraction, detail::split_seed(cfg.train_seed));
  data.train = std::move(train);
  data.val = std::move(val);
  return data;
}

inline std::vector<dataio::Dataset> load_ood(const RunConfig& cfg, const InlierData& inlier) {
  std::vector<dataio::Dataset> out;
  for (const auto& src : cfg.ood) {
    detail::require_paths(src);
    if (src.kind == "synthetic-ood") {
      auto ds = *inlier.synthetic_ood;
      ds.id = src.id;
      out.push_back(std::move(ds));
      continue;
    }
    require(!src.images.empty(), "OOD dataset '" + src.id + "' needs an images path");
    std::optional<fs::path> labels;
    if (!src.labels.empty()) labels = src.labels;
    auto ds = dataio::load_idx_dataset(src.id, src.images, labels, src.class_count, dataio::SplitTag::test);
    if (src.limit) ds = ds.head(src.limit);
    out.push_back(std::move(ds));
  }
  return out;
}

inline models::Architecture resolved_architecture(const RunConfig& cfg, const dataio::Dataset& train) {
  auto arch = cfg.architecture;
  arch.input_dim = train.input_dim();
  arch.class_count = train.class_count;
  arch.validate();
  return arch;
}

struct TrainSummary {
  std::vector<double> epoch_loss;
  std::size_t steps = 0;
};

/// Trains from the config's seed and writes the checkpoint and loss trace.
inline TrainSummary cmd_train(const RunConfig& cfg) {
  const auto paths = ArtifactPaths::in(cfg.output_dir);
  const auto data = load_inlier(cfg);
  const auto arch = resolved_architecture(cfg, data.train);
  Rng init_rng(cfg.train_seed);
  auto model = models::VariationalModel::initialize(arch, init_rng);
  auto result = models::train(std::move(model), data.train.inputs, data.train.labels, cfg.training);

  detail::ensure_dir(cfg.output_dir);
  models::save_checkpoint(paths.checkpoint, result.model, cfg.training);
  std::ostringstream trace;
  trace << "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", result.epoch_loss[e]);
    trace << e << ',' << buf << '\n';
  }
  detail::write_text(paths.loss_trace, trace.str());
  return {result.epoch_loss, result.steps};
}

/// Latent codes of a dataset: one posterior draw per example (stream
/// rng.fork(i)) for variational models, penultimate features otherwise.
/// Predictions come from the deterministic forward pass.
inline dataio::Embeddings embed(const models::VariationalModel& m, const dataio::Dataset& ds, const Rng& rng) {
  if (ds.input_dim() != m.architecture().input_dim) {
    throw DimensionMismatch("dataset '" + ds.id + "' input width " + std::to_string(ds.input_dim()) +
                            " does not match checkpoint input width " + std::to_string(m.architecture().input_dim));
  }
  dataio::Embeddings e;
  const auto enc = models::encode_batch(m, ds.inputs);
  const auto probs = models::classify_batch(m, m.is_variational() ? enc.mu : enc.features);
  const std::size_t width = m.is_variational() ? m.architecture().latent_dim : m.feature_width();
  e.latents = Tensor({ds.size(), width});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    e.ids.push_back(i);
    e.labels.push_back(ds.has_labels() ? ds.labels[i] : -1);
    e.predictions.push_back(static_cast<int>(argmax(probs.row(i))));
    if (m.is_variational()) {
      auto stream = rng.fork(i);
      const auto post = models::LatentPosterior::from_log_variance(
          std::vector<double>(enc.mu.row(i).begin(), enc.mu.row(i).end()), enc.log_variance.row(i));
      const auto z = models::reparameterize(post, stream);
      std::copy(z.begin(), z.end(), e.latents.row(i).begin());
    } else {
      auto f = enc.features.row(i);
      std::copy(f.begin(), f.end(), e.latents.row(i).begin());
    }
  }
  return e;
}

inline dataio::Embeddings cmd_extract(const RunConfig& cfg, const fs::path& checkpoint) {
  const auto paths = ArtifactPaths::in(cfg.output_dir);
  const auto ckpt = models::load_checkpoint(checkpoint);
  const auto data = load_inlier(cfg);
  auto emb = embed(ckpt.model, data.train, Rng(cfg.eval_seed).fork(0x657874ULL));
  detail::ensure_dir(cfg.output_dir);
  dataio::export_embeddings(paths.embeddings, emb);
  return emb;
}

/// Fits the per-class Weibull models from an embeddings file.
inline evt::EvtModelFile fit_from_embeddings(const dataio::Embeddings& emb, std::size_t class_count,
                                             const evt::EvtConfig& config) {
  evt::EvtModelFile file{config, evt::fit_openset(emb.latents, emb.labels, emb.predictions, class_count, config)};
  return file;
}

inline evt::EvtModelFile cmd_fit_evt(const RunConfig& cfg, const fs::path& embeddings, std::ostream& log) {
  const auto paths = ArtifactPaths::in(cfg.output_dir);
  const auto emb = dataio::import_embeddings(embeddings);
  int max_label = -1;
  for (int y : emb.labels) max_label = std::max(max_label, y);
  require(max_label >= 0, "fit-evt: embeddings carry no labels");
  const auto file = fit_from_embeddings(emb, static_cast<std::size_t>(max_label) + 1, cfg.evt);

  detail::ensure_dir(cfg.output_dir);
  evt::save_evt_model(paths.evt_model, file);
  std::ostringstream csv;
  csv << "class_id,tail_count,iterations,tau,kappa,lambda\n";
  for (const auto& c : file.classes) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%zu,%zu,%.17g,%.17g,%.17g\n", c.class_id, c.tail_count, c.iterations, c.tau,
                  c.kappa, c.lambda);
    csv << buf;
    log << "class " << c.class_id << ": tail=" << c.tail_count << " iterations=" << c.iterations
        << " kappa=" << c.kappa << " lambda=" << c.lambda << '\n';
  }
  detail::write_text(paths.evt_log, csv.str());
  return file;
}

inline eval::ScoringConfig scoring_config(const RunConfig& cfg, const evt::EvtModelFile& evt_file) {
  return {cfg.posterior_samples, cfg.mcd_passes, cfg.mcd_enabled, evt_file.config.distance, cfg.rejection.aggregation};
}

/// Rejects mismatched checkpoint / EVT model pairs before any scoring.
inline void check_consistency(const models::VariationalModel& m, const evt::EvtModelFile& evt_file) {
  const auto& arch = m.architecture();
  const std::size_t width = m.is_variational() ? arch.latent_dim : m.feature_width();
  if (evt_file.classes.size() != arch.class_count) {
    throw DimensionMismatch("EVT model has " + std::to_string(evt_file.classes.size()) +
                            " classes, checkpoint has " + std::to_string(arch.class_count));
  }
  if (evt_file.latent_dim() != width) {
    throw DimensionMismatch("EVT model latent_dim " + std::to_string(evt_file.latent_dim()) +
                            " does not match checkpoint latent width " + std::to_string(width));
  }
}

inline eval::ReportRun cmd_evaluate(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& evt_model) {
  const auto paths = ArtifactPaths::in(cfg.output_dir);
  const auto ckpt = models::load_checkpoint(checkpoint);
  const auto evt_file = evt::load_evt_model(evt_model);
  check_consistency(ckpt.model, evt_file);
  const auto data = load_inlier(cfg);
  const auto ood = load_ood(cfg, data);
  for (const auto& d : ood) {
    if (d.input_dim() != ckpt.model.architecture().input_dim) {
      throw DimensionMismatch("OOD dataset '" + d.id + "' input width does not match the checkpoint");
    }
  }

  auto run = eval::build_report(ckpt.model, evt_file.classes, data.val, data.test, ood, cfg.inlier_fraction,
                                scoring_config(cfg, evt_file), Rng(cfg.eval_seed).fork(0x6576616cULL));
  std::vector<eval::Curve> curves;
  for (const auto& s : run.scores) {
    curves.push_back(eval::rejection_curve(s, eval::default_grid(s.method, ckpt.model.architecture().class_count)));
  }
  detail::ensure_dir(cfg.output_dir);
  eval::write_report_csv(paths.report, std::span(&run.report, 1));
  eval::export_curves(curves, paths.curves_stem);
  return run;
}

/// Runs a stage, tagging any library error with the stage name.
template <class Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const nlohmann::json::exception& e) {
    throw StageError(stage, InvalidArgument(e.what()));
  }
}

inline eval::ReportRun cmd_run_all(const RunConfig& cfg, std::ostream& log) {
  const auto paths = ArtifactPaths::in(cfg.output_dir);
  run_stage("train", [&] { return cmd_train(cfg); });
  run_stage("extract", [&] { return cmd_extract(cfg, paths.checkpoint); });
  run_stage("fit-evt", [&] { return cmd_fit_evt(cfg, paths.embeddings, log); });
  return run_stage("evaluate", [&] { return cmd_evaluate(cfg, paths.checkpoint, paths.evt_model); });
}

}  // namespace osr::cli
