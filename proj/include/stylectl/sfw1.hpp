#pragma once

// SFW1 weight container.
//
//   "SFW1"                      4 bytes magic
//   version                     u32 LE (currently 1)
//   channel means               3 x f32 LE (RGB, 0-255 pixel scale)
//   channel order               u8 (0 = RGB, 1 = BGR)
//   layer count                 u32 LE
//   per layer:
//     name length               u16 LE, followed by UTF-8 name
//     rank                      u8, followed by rank x u32 LE dims
//     payload                   f32 LE: prod(dims) weights, then dims[0] biases
//   crc32                       u32 LE over the concatenated payload bytes of all layers
//
// Convolution kernels use the (out, in, kh, kw) layout.

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "stylectl/error.hpp"

namespace stylectl {

enum class ChannelOrder : std::uint8_t { rgb = 0, bgr = 1 };

/// Mapping from [0,1] RGB images to the network input space:
/// scale to 0-255, subtract the per-channel mean, reorder channels.
struct Preprocessing {
  std::array<float, 3> mean{123.68f, 116.779f, 103.939f};
  ChannelOrder order = ChannelOrder::rgb;

  friend bool operator==(const Preprocessing&, const Preprocessing&) = default;
};

struct WeightEntry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> weights;
  std::vector<float> bias;
};

struct WeightFile {
  static constexpr std::uint32_t current_version = 1;

  std::uint32_t version = current_version;
  Preprocessing preprocessing;
  std::vector<WeightEntry> entries;
  std::uint32_t stored_crc = 0;
  std::uint32_t computed_crc = 0;

  bool checksum_ok() const noexcept { return stored_crc == computed_crc; }
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "SFW1 IO assumes a little-endian host");

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void f32(float v) { raw(&v, 4); }
  std::size_t size() const { return bytes_.size(); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void raw(void* p, std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(FormatError::Kind::truncated,
                        "SFW1: file truncated at byte " + std::to_string(bytes_.size()) +
                            " (needed " + std::to_string(pos_ + n) + ")");
    }
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint16_t u16() { std::uint16_t v; raw(&v, 2); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  float f32() { float v; raw(&v, 4); return v; }

  std::span<const std::uint8_t> take(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(FormatError::Kind::truncated, "SFW1: payload truncated");
    }
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc_update(std::uint32_t crc, const void* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      ::crc32(crc, static_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_sfw1(const WeightFile& file) {
  detail::ByteWriter w;
  w.raw("SFW1", 4);
  w.u32(file.version);
  for (float m : file.preprocessing.mean) w.f32(m);
  w.u8(static_cast<std::uint8_t>(file.preprocessing.order));
  w.u32(static_cast<std::uint32_t>(file.entries.size()));
  std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, Z_NULL, 0));
  for (const auto& e : file.entries) {
    if (e.name.size() > 0xFFFF) throw ConfigError("SFW1: layer name too long");
    if (e.dims.empty() || e.dims.size() > 0xFF) throw ConfigError("SFW1: invalid rank for " + e.name);
    std::size_t count = 1;
    for (auto d : e.dims) count *= d;
    if (e.weights.size() != count || e.bias.size() != e.dims[0]) {
      throw ConfigError("SFW1: payload size does not match dims for " + e.name);
    }
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.raw(e.name.data(), e.name.size());
    w.u8(static_cast<std::uint8_t>(e.dims.size()));
    for (auto d : e.dims) w.u32(d);
    const std::size_t start = w.size();
    w.raw(e.weights.data(), e.weights.size() * sizeof(float));
    w.raw(e.bias.data(), e.bias.size() * sizeof(float));
    crc = detail::crc_update(crc, w.bytes().data() + start, w.size() - start);
  }
  w.u32(crc);
  return std::move(w.bytes());
}

/// Parses an SFW1 byte stream. With `verify_checksum` the CRC is enforced;
/// without it the stored and computed values are reported in the result.
inline WeightFile decode_sfw1(std::span<const std::uint8_t> bytes, bool verify_checksum = true) {
  detail::ByteReader r(bytes);
  char magic[4] = {};
  if (bytes.size() < 4) throw FormatError(FormatError::Kind::truncated, "SFW1: file too short");
  r.raw(magic, 4);
  if (std::memcmp(magic, "SFW1", 4) != 0) {
    throw FormatError(FormatError::Kind::bad_magic, "SFW1: bad magic");
  }
  WeightFile file;
  file.version = r.u32();
  if (file.version != WeightFile::current_version) {
    throw FormatError(FormatError::Kind::bad_version,
                      "SFW1: unsupported format version " + std::to_string(file.version));
  }
  for (auto& m : file.preprocessing.mean) m = r.f32();
  const auto order = r.u8();
  if (order > 1) throw FormatError(FormatError::Kind::bad_version, "SFW1: unknown channel order flag");
  file.preprocessing.order = static_cast<ChannelOrder>(order);

  const auto count = r.u32();
  std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, Z_NULL, 0));
  for (std::uint32_t i = 0; i < count; ++i) {
    WeightEntry e;
    const auto name_len = r.u16();
    auto name = r.take(name_len);
    e.name.assign(name.begin(), name.end());
    const auto rank = r.u8();
    if (rank == 0) throw FormatError(FormatError::Kind::shape_mismatch, "SFW1: zero rank for " + e.name);
    std::size_t n = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      e.dims.push_back(r.u32());
      n *= e.dims.back();
    }
    const std::size_t payload_floats = n + e.dims[0];
    if (payload_floats * sizeof(float) > r.remaining()) {
      throw FormatError(FormatError::Kind::truncated, "SFW1: payload of " + e.name + " truncated");
    }
    auto payload = r.take(payload_floats * sizeof(float));
    crc = detail::crc_update(crc, payload.data(), payload.size());
    e.weights.resize(n);
    e.bias.resize(e.dims[0]);
    std::memcpy(e.weights.data(), payload.data(), n * sizeof(float));
    std::memcpy(e.bias.data(), payload.data() + n * sizeof(float), e.dims[0] * sizeof(float));
    file.entries.push_back(std::move(e));
  }
  if (r.remaining() != 4) {
    throw FormatError(FormatError::Kind::truncated,
                      "SFW1: expected 4 trailing checksum bytes, found " + std::to_string(r.remaining()));
  }
  file.stored_crc = r.u32();
  file.computed_crc = crc;
  if (verify_checksum && !file.checksum_ok()) {
    throw FormatError(FormatError::Kind::checksum, "SFW1: payload checksum mismatch");
  }
  return file;
}

inline WeightFile read_sfw1(const std::filesystem::path& path, bool verify_checksum = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_sfw1(bytes, verify_checksum);
}

inline void write_sfw1(const std::filesystem::path& path, const WeightFile& file) {
  const auto bytes = encode_sfw1(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weight file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace stylectl
