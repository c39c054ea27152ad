#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "osr/dataio/synthetic.hpp"
#include "osr/evt/model_file.hpp"
#include "osr/models/checkpoint.hpp"

namespace osr::cli {

namespace fs = std::filesystem;

/// One dataset source. `kind` is "synthetic" (inlier only), "synthetic-ood"
/// (the OOD cluster of the inlier synthetic spec) or "idx".
struct DataSource {
  std::string kind;
  std::string id;
  // synthetic
  std::optional<dataio::SyntheticSpec> synthetic;
  double test_fraction = 0.2;
  // idx (inlier: train_* and test_*; OOD: images and optional labels)
  fs::path train_images, train_labels, test_images, test_labels, images, labels;
  std::size_t class_count = 10;
  std::size_t train_limit = 0;  // 0: all
  std::size_t test_limit = 0;
  std::size_t limit = 0;

  std::vector<fs::path> paths() const {
    std::vector<fs::path> out;
    for (const auto* p : {&train_images, &train_labels, &test_images, &test_labels, &images, &labels}) {
      if (!p->empty()) out.push_back(*p);
    }
    return out;
  }
};

struct RunConfig {
  models::Architecture architecture;
  models::TrainingConfig training;
  evt::EvtConfig evt;
  evt::RejectionPolicy rejection;
  DataSource inlier;
  std::vector<DataSource> ood;
  double val_fraction = 0.1;
  std::uint64_t train_seed = 1;
  std::uint64_t eval_seed = 2;
  fs::path output_dir = "out";
  double inlier_fraction = 0.95;
  std::size_t posterior_samples = 100;
  std::size_t mcd_passes = 50;
  bool mcd_enabled = false;

  /// Numeric domains only; paths are checked by the stage that reads them.
  void validate() const {
    training.validate();
    evt.validate();
    rejection.validate();
    require(architecture.dropout_rate >= 0.0 && architecture.dropout_rate < 1.0, "config: dropout_rate must lie in [0, 1)");
    require(architecture.latent_dim > 0, "config: latent_dim must be positive");
    for (auto w : architecture.hidden) require(w > 0, "config: hidden widths must be positive");
    require(val_fraction > 0.0 && val_fraction < 1.0, "config: val_fraction must lie in (0, 1)");
    require(inlier_fraction > 0.0 && inlier_fraction <= 1.0, "config: inlier_fraction must lie in (0, 1]");
    require(posterior_samples >= 1 && mcd_passes >= 1, "config: sample counts must be >= 1");
    require(inlier.kind == "synthetic" || inlier.kind == "idx", "config: inlier kind must be synthetic or idx");
    if (inlier.kind == "synthetic") {
      require(inlier.synthetic.has_value(), "config: synthetic inlier needs a spec");
      inlier.synthetic->validate();
      require(inlier.test_fraction > 0.0 && inlier.test_fraction < 1.0, "config: test_fraction must lie in (0, 1)");
    }
    for (const auto& o : ood) {
      require(o.kind == "idx" || (o.kind == "synthetic-ood" && inlier.kind == "synthetic"),
              "config: OOD kind must be idx, or synthetic-ood with a synthetic inlier");
    }
    require(!output_dir.empty(), "config: output_dir must be set");
  }
};

namespace detail {

inline fs::path resolve(const fs::path& base, const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return {};
  fs::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

inline DataSource source_from_json(const nlohmann::json& j, const fs::path& base) {
  DataSource s;
  s.kind = j.at("kind").get<std::string>();
  s.id = j.value("id", s.kind);
  if (j.contains("spec")) {
    s.synthetic = dataio::synthetic_spec_from_json(j.at("spec"));
  } else if (j.contains("spec_path")) {
    const auto path = resolve(base, j, "spec_path");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synthetic spec '" + path.string() + "'");
    s.synthetic = dataio::synthetic_spec_from_json(nlohmann::json::parse(in));
  }
  s.test_fraction = j.value("test_fraction", s.test_fraction);
  s.train_images = resolve(base, j, "train_images");
  s.train_labels = resolve(base, j, "train_labels");
  s.test_images = resolve(base, j, "test_images");
  s.test_labels = resolve(base, j, "test_labels");
  s.images = resolve(base, j, "images");
  s.labels = resolve(base, j, "labels");
  s.class_count = j.value("class_count", s.class_count);
  s.train_limit = j.value("train_limit", s.train_limit);
  s.test_limit = j.value("test_limit", s.test_limit);
  s.limit = j.value("limit", s.limit);
  return s;
}

}  // namespace detail

/// Parses a run configuration. Relative paths resolve against `base`.
inline RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base = ".") {
  RunConfig c;
  try {
    const auto& model = j.at("model");
    c.architecture.variant = models::variant_from_string(model.at("variant").get<std::string>());
    c.architecture.hidden = model.value("hidden", c.architecture.hidden);
    c.architecture.latent_dim = model.value("latent_dim", c.architecture.latent_dim);
    c.architecture.dropout_rate = model.value("dropout_rate", c.architecture.dropout_rate);
    if (j.contains("training")) c.training = models::training_config_from_json(j.at("training"));
    if (j.contains("evt")) c.evt = evt::evt_config_from_json(j.at("evt"));
    if (j.contains("rejection")) {
      const auto& r = j.at("rejection");
      c.rejection.prior = r.value("prior", c.rejection.prior);
      if (r.contains("aggregation")) {
        c.rejection.aggregation = evt::aggregation_from_string(r.at("aggregation").get<std::string>());
      }
    }
    const auto& data = j.at("data");
    c.inlier = detail::source_from_json(data.at("inlier"), base);
    for (const auto& o : data.value("ood", nlohmann::json::array())) c.ood.push_back(detail::source_from_json(o, base));
    c.val_fraction = data.value("val_fraction", c.val_fraction);
    if (j.contains("seeds")) {
      c.train_seed = j.at("seeds").value("train", c.train_seed);
      c.eval_seed = j.at("seeds").value("eval", c.eval_seed);
    }
    c.output_dir = detail::resolve(base, j, "output_dir");
    if (c.output_dir.empty()) c.output_dir = base / "out";
    c.inlier_fraction = j.value("inlier_fraction", c.inlier_fraction);
    c.posterior_samples = j.value("posterior_samples", c.posterior_samples);
    c.mcd_passes = j.value("mcd_passes", c.mcd_passes);
    c.mcd_enabled = j.value("mcd_enabled", c.mcd_enabled);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.training.seed = c.train_seed;
  c.training.posterior_samples = c.posterior_samples;
  c.training.mcd_passes = c.mcd_passes;
  c.validate();
  return c;
}

inline RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return run_config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace osr::cli
