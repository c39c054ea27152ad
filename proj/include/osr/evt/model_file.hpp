#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "osr/evt/openset.hpp"
#include "osr/ndcore/binary_io.hpp"

namespace osr::evt {

struct EvtModelFile {
  EvtConfig config;
  std::vector<ClassWeibull> classes;

  std::size_t latent_dim() const { return classes.empty() ? 0 : classes.front().mean.size(); }
};

inline constexpr std::string_view kEvtMagic = "OSREVT01";
inline constexpr std::uint32_t kEvtVersion = 1;

inline nlohmann::json to_json(const EvtConfig& c) {
  return {{"tail_fraction", c.tail_fraction}, {"distance", to_string(c.distance)}, {"min_tail_count", c.min_tail_count}};
}

inline EvtConfig evt_config_from_json(const nlohmann::json& j) {
  EvtConfig c;
  c.tail_fraction = j.value("tail_fraction", c.tail_fraction);
  if (j.contains("distance")) c.distance = distance_from_string(j.at("distance").get<std::string>());
  c.min_tail_count = j.value("min_tail_count", c.min_tail_count);
  return c;
}

/// Layout: magic, u32 version, config JSON, u64 class count, then per class
/// i32 id, u64 tail count, f64 tau, kappa, lambda, mean tensor.
inline std::string encode_evt_model(const EvtModelFile& file) {
  io::ByteWriter w;
  w.put_bytes(kEvtMagic);
  w.put_u32(kEvtVersion);
  w.put_string(to_json(file.config).dump());
  w.put_u64(file.classes.size());
  for (const auto& c : file.classes) {
    w.put_i32(c.class_id);
    w.put_u64(c.tail_count);
    w.put_f64(c.tau);
    w.put_f64(c.kappa);
    w.put_f64(c.lambda);
    w.put_tensor(Tensor::from_vector(c.mean));
  }
  return w.bytes();
}

inline void save_evt_model(const std::filesystem::path& path, const EvtModelFile& file) {
  io::ByteWriter w;
  w.put_bytes(encode_evt_model(file));
  w.write_file(path);
}

inline EvtModelFile decode_evt_model(io::ByteReader r) {
  r.expect_magic(kEvtMagic);
  r.expect_version(kEvtVersion);
  EvtModelFile file;
  try {
    file.config = evt_config_from_json(nlohmann::json::parse(r.get_string()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(r.source() + ": corrupt EVT config: " + e.what());
  }
  const auto count = r.get_u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    ClassWeibull c;
    c.class_id = r.get_i32();
    c.tail_count = r.get_u64();
    c.tau = r.get_f64();
    c.kappa = r.get_f64();
    c.lambda = r.get_f64();
    c.mean = r.get_tensor().values();
    file.classes.push_back(std::move(c));
  }
  if (!r.at_end()) throw IoError(r.source() + ": trailing bytes in EVT model");
  return file;
}

inline EvtModelFile load_evt_model(const std::filesystem::path& path) {
  return decode_evt_model(io::ByteReader::from_file(path));
}

}  // namespace osr::evt
