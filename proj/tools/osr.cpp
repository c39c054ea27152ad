// osr: train -> extract -> fit-evt -> evaluate pipeline driver.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "osr/cli.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed_override;
  std::string checkpoint;
  std::string embeddings;
  std::string evt_model;
};

osr::cli::RunConfig load(const Options& opts) {
  auto cfg = osr::cli::load_run_config(opts.config);
  if (!opts.out.empty()) cfg.output_dir = opts.out;
  if (opts.seed_override) {
    cfg.train_seed = *opts.seed_override;
    cfg.training.seed = *opts.seed_override;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent EVT open-set recognition vs. prediction-entropy OOD rejection"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory (overrides config)");
    sub->add_option("--seed-override", opts.seed_override, "replace the training seed");
  };

  auto* train = app.add_subcommand("train", "train a model and write model.ckpt + loss_trace.csv");
  auto* extract = app.add_subcommand("extract", "write training-set embeddings.bin from a checkpoint");
  auto* fit = app.add_subcommand("fit-evt", "fit per-class Weibull models from embeddings");
  auto* evaluate = app.add_subcommand("evaluate", "score datasets and write report + rejection curves");
  auto* run_all = app.add_subcommand("run-all", "train, extract, fit-evt and evaluate in sequence");
  for (auto* sub : {train, extract, fit, evaluate, run_all}) add_common(sub);
  extract->add_option("--checkpoint", opts.checkpoint, "checkpoint (default <out>/model.ckpt)");
  evaluate->add_option("--checkpoint", opts.checkpoint, "checkpoint (default <out>/model.ckpt)");
  fit->add_option("--embeddings", opts.embeddings, "embeddings (default <out>/embeddings.bin)");
  evaluate->add_option("--evt-model", opts.evt_model, "EVT model (default <out>/evt_model.bin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::string stage = "config";
  try {
    const auto cfg = load(opts);
    const auto paths = osr::cli::ArtifactPaths::in(cfg.output_dir);
    auto or_default = [](const std::string& given, const std::filesystem::path& fallback) {
      return given.empty() ? fallback : std::filesystem::path(given);
    };

    if (train->parsed()) {
      stage = "train";
      const auto summary = osr::cli::cmd_train(cfg);
      std::cout << "trained " << summary.steps << " steps; final epoch loss "
                << (summary.epoch_loss.empty() ? 0.0 : summary.epoch_loss.back()) << '\n';
    } else if (extract->parsed()) {
      stage = "extract";
      const auto emb = osr::cli::cmd_extract(cfg, or_default(opts.checkpoint, paths.checkpoint));
      std::cout << "wrote " << emb.size() << " embeddings\n";
    } else if (fit->parsed()) {
      stage = "fit-evt";
      osr::cli::cmd_fit_evt(cfg, or_default(opts.embeddings, paths.embeddings), std::cout);
    } else if (evaluate->parsed()) {
      stage = "evaluate";
      const auto run = osr::cli::cmd_evaluate(cfg, or_default(opts.checkpoint, paths.checkpoint),
                                              or_default(opts.evt_model, paths.evt_model));
      std::cout << osr::eval::report_csv(std::span(&run.report, 1));
    } else if (run_all->parsed()) {
      stage = "run-all";
      const auto run = osr::cli::cmd_run_all(cfg, std::cout);
      std::cout << osr::eval::report_csv(std::span(&run.report, 1));
    }
  } catch (const osr::cli::StageError& e) {
    std::cerr << osr::cli::error_json(e.stage(), e) << '\n';
    return osr::cli::exit_code(e.category());
  } catch (const osr::Error& e) {
    std::cerr << osr::cli::error_json(stage, e) << '\n';
    return osr::cli::exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << osr::cli::error_json(stage, osr::Error(osr::ErrorCategory::runtime, "internal", e.what())) << '\n';
    return 2;
  }
  return 0;
}
