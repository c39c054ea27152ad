#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "osr/ndcore/binary_io.hpp"

namespace osr::dataio {

/// Latent codes with their labels and predictions, one row per example.
/// A label of -1 marks an unlabelled example.
struct Embeddings {
  std::vector<std::uint64_t> ids;
  Tensor latents;
  std::vector<int> labels;
  std::vector<int> predictions;

  std::size_t size() const { return ids.size(); }
  std::size_t latent_dim() const { return latents.rank() == 2 ? latents.cols() : 0; }

  void validate() const {
    require(latents.rank() == 2, "embeddings: latents must be a matrix");
    require(latents.rows() == ids.size() && labels.size() == ids.size() && predictions.size() == ids.size(),
            "embeddings: ids, latents, labels and predictions must be aligned");
  }

  friend bool operator==(const Embeddings&, const Embeddings&) = default;
};

inline constexpr std::string_view kEmbeddingsMagic = "OSREMB01";
inline constexpr std::uint32_t kEmbeddingsVersion = 1;

/// Layout: magic, u32 version, u64 count, u64 latent_dim, then per record
/// u64 id, i32 label, i32 prediction, latent_dim f64 values.
inline std::string encode_embeddings(const Embeddings& e) {
  e.validate();
  io::ByteWriter w;
  w.put_bytes(kEmbeddingsMagic);
  w.put_u32(kEmbeddingsVersion);
  w.put_u64(e.size());
  w.put_u64(e.latent_dim());
  for (std::size_t i = 0; i < e.size(); ++i) {
    w.put_u64(e.ids[i]);
    w.put_i32(e.labels[i]);
    w.put_i32(e.predictions[i]);
    for (double v : e.latents.row(i)) w.put_f64(v);
  }
  return w.bytes();
}

inline void export_embeddings(const std::filesystem::path& path, const Embeddings& e) {
  io::ByteWriter w;
  w.put_bytes(encode_embeddings(e));
  w.write_file(path);
}

inline Embeddings decode_embeddings(io::ByteReader r) {
  r.expect_magic(kEmbeddingsMagic);
  r.expect_version(kEmbeddingsVersion);
  const auto count = r.get_u64();
  const auto dim = r.get_u64();
  const std::uint64_t record = 16 + 8 * dim;
  if (dim > (std::uint64_t{1} << 32) || (count != 0 && count > r.remaining() / record)) {
    throw TruncatedPayload(r.source() + ": embeddings payload shorter than header claims");
  }
  Embeddings e;
  e.latents = Tensor({static_cast<std::size_t>(count), static_cast<std::size_t>(dim)});
  for (std::uint64_t i = 0; i < count; ++i) {
    e.ids.push_back(r.get_u64());
    e.labels.push_back(r.get_i32());
    e.predictions.push_back(r.get_i32());
    for (auto& v : e.latents.row(i)) v = r.get_f64();
  }
  if (!r.at_end()) throw IoError(r.source() + ": trailing bytes in embeddings");
  return e;
}

inline Embeddings import_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(io::ByteReader::from_file(path));
}

}  // namespace osr::dataio
