#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "osr/dataio/dataset.hpp"
#include "osr/ndcore/binary_io.hpp"

namespace osr::dataio {

// IDX magic numbers: unsigned-byte payload, 1-D (labels) and 3-D (images).
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;

struct IdxBlock {
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> values;
};

inline std::uint32_t read_be32(io::ByteReader& r) {
  const auto raw = r.take(4);
  std::uint32_t v = 0;
  for (char c : raw) v = (v << 8) | static_cast<unsigned char>(c);
  return v;
}

inline IdxBlock parse_idx(io::ByteReader r) {
  const auto magic = read_be32(r);
  if (magic != kIdxLabelMagic && magic != kIdxImageMagic) {
    throw BadMagic(r.source() + ": unsupported IDX magic");
  }
  const std::size_t rank = magic & 0xffu;
  IdxBlock block;
  std::size_t count = 1;
  constexpr std::size_t kMaxElements = std::size_t{1} << 36;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t extent = read_be32(r);
    if (extent != 0 && count > kMaxElements / extent) throw DimensionOverflow(r.source() + ": IDX dimensions overflow");
    count *= extent;
    block.dims.push_back(extent);
  }
  if (r.remaining() < count) throw TruncatedPayload(r.source() + ": IDX payload truncated");
  const auto payload = r.take(count);
  block.values.assign(payload.begin(), payload.end());
  return block;
}

inline IdxBlock read_idx_block(const std::filesystem::path& path) {
  return parse_idx(io::ByteReader::from_file(path));
}

/// Images as an (N, rows, cols) tensor scaled by 1/255; label files come back
/// as an (N) tensor of raw class indices.
inline Tensor read_idx(const std::filesystem::path& path) {
  auto block = read_idx_block(path);
  const bool images = block.dims.size() == 3;
  std::vector<double> data(block.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = images ? static_cast<double>(block.values[i]) / 255.0 : static_cast<double>(block.values[i]);
  }
  return Tensor(Tensor::Shape(block.dims.begin(), block.dims.end()), std::move(data));
}

inline Dataset load_idx_dataset(std::string id, const std::filesystem::path& images,
                                const std::optional<std::filesystem::path>& labels, std::size_t class_count,
                                SplitTag split) {
  const auto block = read_idx_block(images);
  if (block.dims.size() != 3) throw BadMagic(images.string() + ": expected a 3-D image file");
  const std::size_t n = block.dims[0];
  const std::size_t width = block.dims[1] * block.dims[2];
  Dataset ds{std::move(id), {block.dims[1], block.dims[2]}, Tensor({n, width}), {}, class_count, split};
  for (std::size_t i = 0; i < block.values.size(); ++i) ds.inputs[i] = static_cast<double>(block.values[i]) / 255.0;
  if (labels) {
    const auto lb = read_idx_block(*labels);
    if (lb.dims.size() != 1) throw BadMagic(labels->string() + ": expected a 1-D label file");
    require(lb.dims[0] == n, "IDX label count does not match image count");
    ds.labels.assign(lb.values.begin(), lb.values.end());
  }
  ds.validate();
  return ds;
}

/// Writes an unsigned-byte IDX file (1-D or 3-D).
inline void write_idx(const std::filesystem::path& path, const std::vector<std::size_t>& dims,
                      const std::vector<std::uint8_t>& values) {
  require(dims.size() == 1 || dims.size() == 3, "write_idx: rank must be 1 or 3");
  io::ByteWriter w;
  auto be32 = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) w.put_bytes(std::string(1, static_cast<char>((v >> s) & 0xffu)));
  };
  be32(dims.size() == 1 ? kIdxLabelMagic : kIdxImageMagic);
  for (auto d : dims) be32(static_cast<std::uint32_t>(d));
  w.put_bytes(std::string(values.begin(), values.end()));
  w.write_file(path);
}

}  // namespace osr::dataio
