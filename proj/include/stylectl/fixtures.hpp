#pragma once

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "stylectl/error.hpp"
#include "stylectl/tensor.hpp"
#include "stylectl/vgg.hpp"

namespace stylectl {

// Reference activations for parity checks:
//
//   <root>/index.json
//   <root>/<image-id>/input.f32     3 x H x W RGB in [0,1]
//   <root>/<image-id>/<layer>.f32   C x H x W activation
//
// .f32 files are raw little-endian float32 in channel-major (C, H, W) order
// with no header. index.json:
//
//   {"format": "f32le-chw",
//    "images": [{"id": "gray", "input": [3, 64, 64],
//                "layers": {"conv1_1": [64, 64, 64], ...}}, ...]}
//
// Layer names follow the engine's naming; a conv name refers to the conv
// output before its ReLU.

inline constexpr const char* fixture_format = "f32le-chw";

struct FixtureImage {
  std::string id;
  Tensor input;
  std::map<std::string, Tensor> layers;
};

namespace detail {

inline Shape shape_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw FormatError(FormatError::Kind::shape_mismatch, what + ": expected [C, H, W]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
}

inline Tensor read_f32(const std::filesystem::path& path, const Shape& shape) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != shape.size() * 4) {
    throw FormatError(FormatError::Kind::truncated, "'" + path.string() + "' holds " + std::to_string(bytes) +
                                                        " bytes, expected " + std::to_string(shape.size() * 4));
  }
  in.seekg(0);
  std::vector<std::uint8_t> raw(bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  Tensor t(shape);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(raw[4 * i]) | static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
                            static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 |
                            static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
    float f;
    std::memcpy(&f, &u, 4);
    t[i] = f;
  }
  return t;
}

inline void write_f32(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (float f : t.data()) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    const char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                       static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
    out.write(b, 4);
  }
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

inline nlohmann::json shape_json(const Shape& s) { return {s.channels, s.height, s.width}; }

}  // namespace detail

inline std::vector<FixtureImage> read_fixtures(const std::filesystem::path& root) {
  std::ifstream in(root / "index.json");
  if (!in) throw IoError("cannot open '" + (root / "index.json").string() + "'");
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("fixture index: " + std::string(e.what()));
  }
  if (index.value("format", "") != fixture_format) {
    throw FormatError(FormatError::Kind::bad_version, "fixture index: unsupported format");
  }
  std::vector<FixtureImage> out;
  for (const auto& img : index.at("images")) {
    FixtureImage f;
    f.id = img.at("id").get<std::string>();
    const auto dir = root / f.id;
    f.input = detail::read_f32(dir / "input.f32", detail::shape_from_json(img.at("input"), f.id + "/input"));
    for (const auto& [layer, shape] : img.at("layers").items()) {
      f.layers.emplace(layer, detail::read_f32(dir / (layer + ".f32"), detail::shape_from_json(shape, f.id + "/" + layer)));
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline void write_fixtures(const std::filesystem::path& root, const std::vector<FixtureImage>& images) {
  std::filesystem::create_directories(root);
  nlohmann::json index;
  index["format"] = fixture_format;
  index["images"] = nlohmann::json::array();
  for (const auto& img : images) {
    const auto dir = root / img.id;
    std::filesystem::create_directories(dir);
    detail::write_f32(dir / "input.f32", img.input);
    nlohmann::json entry;
    entry["id"] = img.id;
    entry["input"] = detail::shape_json(img.input.shape());
    entry["layers"] = nlohmann::json::object();
    for (const auto& [layer, t] : img.layers) {
      detail::write_f32(dir / (layer + ".f32"), t);
      entry["layers"][layer] = detail::shape_json(t.shape());
    }
    index["images"].push_back(entry);
  }
  std::ofstream out(root / "index.json");
  out << index.dump(2) << "\n";
  if (!out) throw IoError("cannot write fixture index in '" + root.string() + "'");
}

/// Largest |a - b| / max(|b|_inf, tiny) over the layer; tensors must match in shape.
inline double relative_error(const Tensor& actual, const Tensor& reference) {
  require_same_shape(actual, reference, "relative_error");
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    diff = std::max(diff, std::abs(static_cast<double>(actual[i]) - reference[i]));
    scale = std::max(scale, std::abs(static_cast<double>(reference[i])));
  }
  return diff / std::max(scale, 1e-30);
}

/// Engine activations for each fixture image at its recorded layers.
inline std::map<std::string, std::map<std::string, double>> compare_fixtures(const NetworkModel& model,
                                                                            const std::vector<FixtureImage>& images) {
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& img : images) {
    std::set<std::string, std::less<>> names;
    for (const auto& [layer, t] : img.layers) names.insert(layer);
    const auto acts = forward(model, model.preprocess(img.input), names);
    for (const auto& [layer, t] : img.layers) out[img.id][layer] = relative_error(acts.at(layer), t);
  }
  return out;
}

}  // namespace stylectl
