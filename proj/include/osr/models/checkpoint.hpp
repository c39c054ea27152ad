#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "osr/models/model.hpp"
#include "osr/ndcore/binary_io.hpp"

namespace osr::models {

inline nlohmann::json to_json(const Architecture& a) {
  return {{"variant", to_string(a.variant)}, {"input_dim", a.input_dim},     {"hidden", a.hidden},
          {"latent_dim", a.latent_dim},      {"class_count", a.class_count}, {"dropout_rate", a.dropout_rate}};
}

inline Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  a.variant = variant_from_string(j.at("variant").get<std::string>());
  a.input_dim = j.at("input_dim").get<std::size_t>();
  a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  a.latent_dim = j.at("latent_dim").get<std::size_t>();
  a.class_count = j.at("class_count").get<std::size_t>();
  a.dropout_rate = j.at("dropout_rate").get<double>();
  return a;
}

inline nlohmann::json to_json(const TrainingConfig& c) {
  return {{"beta", c.beta},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"max_steps", c.max_steps},
          {"seed", c.seed},
          {"mcd_passes", c.mcd_passes},
          {"posterior_samples", c.posterior_samples},
          {"latent_samples", c.latent_samples},
          {"likelihood", to_string(c.likelihood)}};
}

inline TrainingConfig training_config_from_json(const nlohmann::json& j) {
  TrainingConfig c;
  c.beta = j.value("beta", c.beta);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.seed = j.value("seed", c.seed);
  c.mcd_passes = j.value("mcd_passes", c.mcd_passes);
  c.posterior_samples = j.value("posterior_samples", c.posterior_samples);
  c.latent_samples = j.value("latent_samples", c.latent_samples);
  if (j.contains("likelihood")) c.likelihood = likelihood_from_string(j.at("likelihood").get<std::string>());
  return c;
}

struct Checkpoint {
  VariationalModel model;
  TrainingConfig config;
};

inline constexpr std::string_view kCheckpointMagic = "OSRCKPT1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: magic, u32 version, metadata JSON string (architecture, training
/// config echo, seed), u64 tensor count, tensors.
inline std::string encode_checkpoint(const VariationalModel& model, const TrainingConfig& config) {
  io::ByteWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put_u32(kCheckpointVersion);
  const nlohmann::json meta = {{"architecture", to_json(model.architecture())},
                               {"training", to_json(config)},
                               {"seed", config.seed}};
  w.put_string(meta.dump());
  w.put_u64(model.parameters().size());
  for (const auto& p : model.parameters()) w.put_tensor(p);
  return w.bytes();
}

inline void save_checkpoint(const std::filesystem::path& path, const VariationalModel& model,
                            const TrainingConfig& config) {
  io::ByteWriter w;
  w.put_bytes(encode_checkpoint(model, config));
  w.write_file(path);
}

inline Checkpoint decode_checkpoint(io::ByteReader r) {
  r.expect_magic(kCheckpointMagic);
  r.expect_version(kCheckpointVersion);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.get_string());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(r.source() + ": corrupt checkpoint metadata: " + e.what());
  }
  const auto arch = architecture_from_json(meta.at("architecture"));
  const auto config = training_config_from_json(meta.at("training"));
  const auto count = r.get_u64();
  std::vector<Tensor> params;
  for (std::uint64_t i = 0; i < count; ++i) params.push_back(r.get_tensor());
  if (!r.at_end()) throw IoError(r.source() + ": trailing bytes in checkpoint");
  return {VariationalModel::from_parameters(arch, std::move(params)), config};
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::ByteReader::from_file(path));
}

}  // namespace osr::models
