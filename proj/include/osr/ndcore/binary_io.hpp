#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "osr/ndcore/error.hpp"
#include "osr/ndcore/tensor.hpp"

namespace osr::io {

/// Little-endian byte sink. Doubles are written as their raw IEEE-754 bits.
class ByteWriter {
 public:
  void put_bytes(std::string_view bytes) { buffer_.append(bytes); }

  void put_u32(std::uint32_t v) { put_le(v, 4); }
  void put_u64(std::uint64_t v) { put_le(v, 8); }
  void put_i32(std::int32_t v) { put_u32(static_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

  void put_string(std::string_view s) {
    put_u64(s.size());
    put_bytes(s);
  }

  void put_tensor(const Tensor& t) {
    put_u64(t.rank());
    for (auto extent : t.shape()) put_u64(extent);
    for (double v : t.data()) put_f64(v);
  }

  const std::string& bytes() const { return buffer_; }

  void write_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
  }

 private:
  void put_le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }

  std::string buffer_;
};

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ByteReader {
 public:
  explicit ByteReader(std::string bytes, std::string source = "buffer")
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  static ByteReader from_file(const std::filesystem::path& path) {
    return ByteReader(read_file_bytes(path), path.string());
  }

  std::string_view take(std::size_t n) {
    if (n > remaining()) throw TruncatedPayload(source_ + ": unexpected end of data");
    std::string_view out(bytes_.data() + pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t get_u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t get_u64() { return get_le(8); }
  std::int32_t get_i32() { return static_cast<std::int32_t>(get_u32()); }
  double get_f64() { return std::bit_cast<double>(get_u64()); }

  std::string get_string() {
    const auto n = get_u64();
    return std::string(take(checked_size(n)));
  }

  Tensor get_tensor() {
    const auto rank = get_u64();
    if (rank > 8) throw DimensionOverflow(source_ + ": tensor rank too large");
    Tensor::Shape shape(rank);
    std::size_t count = 1;
    for (auto& extent : shape) {
      extent = checked_size(get_u64());
      if (extent != 0 && count > remaining() / extent) throw TruncatedPayload(source_ + ": tensor exceeds payload");
      count *= extent;
    }
    if (count > remaining() / 8) throw TruncatedPayload(source_ + ": tensor exceeds payload");
    std::vector<double> data(count);
    for (double& v : data) v = get_f64();
    return Tensor(std::move(shape), std::move(data));
  }

  void expect_magic(std::string_view magic) {
    if (remaining() < magic.size() || std::string_view(bytes_.data() + pos_, magic.size()) != magic) {
      throw BadMagic(source_ + ": bad magic");
    }
    pos_ += magic.size();
  }

  void expect_version(std::uint32_t expected) {
    const auto version = get_u32();
    if (version != expected) {
      throw VersionMismatch(source_ + ": unsupported version " + std::to_string(version));
    }
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }
  const std::string& source() const { return source_; }

  std::size_t checked_size(std::uint64_t n) const {
    if (n > remaining()) throw TruncatedPayload(source_ + ": length exceeds payload");
    return static_cast<std::size_t>(n);
  }

 private:
  std::uint64_t get_le(int width) {
    const auto raw = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
    return v;
  }

  std::string bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace osr::io
