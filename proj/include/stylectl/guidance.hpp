#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stylectl/error.hpp"
#include "stylectl/losses.hpp"
#include "stylectl/nn.hpp"
#include "stylectl/tensor.hpp"
#include "stylectl/vgg.hpp"

namespace stylectl {

enum class GuidanceMode { simple, eroded };

/// Soft masks are binarised at this value before the receptive-field test.
inline constexpr double erosion_threshold = 0.5;

/// User-supplied region map, 1 x H x W with values in [0,1].
struct GuidanceMask {
  std::string region;
  Tensor values;

  GuidanceMask(std::string region_id, Tensor mask) : region(std::move(region_id)), values(std::move(mask)) {
    if (values.channels() != 1) throw ConfigError("guidance mask '" + region + "' must have one channel");
    for (float v : values.data()) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw ConfigError("guidance mask '" + region + "' has values outside [0,1]");
      }
    }
  }
};

namespace detail {

// 1D erosion along one axis with radius r; positions beyond the border count as outside.
inline std::vector<unsigned char> erode_axis(const std::vector<unsigned char>& in, std::size_t h, std::size_t w,
                                             std::size_t r, bool horizontal) {
  std::vector<unsigned char> out(in.size(), 0);
  const std::size_t len = horizontal ? w : h;
  const std::size_t lines = horizontal ? h : w;
  for (std::size_t line = 0; line < lines; ++line) {
    auto at = [&](std::size_t i) -> unsigned char {
      return horizontal ? in[line * w + i] : in[i * w + line];
    };
    // Length of the run of "inside" cells ending at each position.
    std::vector<std::size_t> run(len, 0);
    for (std::size_t i = 0; i < len; ++i) run[i] = at(i) ? (i > 0 ? run[i - 1] + 1 : 1) : 0;
    for (std::size_t i = 0; i < len; ++i) {
      if (i < r || i + r >= len) continue;
      if (run[i + r] >= 2 * r + 1) {
        (horizontal ? out[line * w + i] : out[i * w + line]) = 1;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Raw (unnormalised) guidance channel for each layer.
///
/// Simple mode resamples the mask to the layer's spatial size. Eroded mode
/// additionally zeroes every cell whose receptive field is not entirely inside
/// the {mask >= 0.5} region, using the field's half-width converted to layer
/// cells (ReceptiveField::layer_radius). The image border counts as outside.
inline std::map<std::string, GuidanceChannel> propagate(const GuidanceMask& mask, const NetworkModel& model,
                                                        const std::vector<std::string>& layers,
                                                        GuidanceMode mode) {
  std::map<std::string, GuidanceChannel> out;
  const auto H = mask.values.height();
  const auto W = mask.values.width();
  for (const auto& layer : layers) {
    const Shape s = model.output_shape(layer, H, W);
    if (s.height == 0 || s.width == 0) {
      throw ConfigError("guidance: layer '" + layer + "' has no spatial extent for a " + std::to_string(H) +
                        "x" + std::to_string(W) + " mask");
    }
    GuidanceChannel raw = resample(mask.values, s.height, s.width, ResampleMethod::bilinear).cast<double>();
    if (mode == GuidanceMode::eroded) {
      const std::size_t r = model.receptive_field(layer).layer_radius();
      std::vector<unsigned char> inside(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i) inside[i] = raw[i] >= erosion_threshold ? 1 : 0;
      const auto keep = detail::erode_axis(detail::erode_axis(inside, s.height, s.width, r, true), s.height,
                                           s.width, r, false);
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!keep[i]) raw[i] = 0.0;
      }
    }
    out.emplace(layer, std::move(raw));
  }
  return out;
}

struct PyramidChannel {
  GuidanceChannel raw;
  double mass = 0.0;  // sum of squares of the raw channel
  GuidanceChannel normalised;
};

/// Guidance channels for every (layer, region) pair of one image.
struct GuidancePyramid {
  std::vector<std::string> layers;
  std::map<std::string, Shape> layer_shapes;
  std::vector<std::string> regions;
  std::optional<std::string> global_region;
  bool normalised = false;
  std::map<std::string, std::map<std::string, PyramidChannel>> channels;

  const PyramidChannel& channel(const std::string& layer, const std::string& region) const {
    auto l = channels.find(layer);
    if (l == channels.end()) throw ConfigError("guidance: no channels for layer '" + layer + "'");
    auto r = l->second.find(region);
    if (r == l->second.end()) {
      throw ConfigError("guidance: no channel for region '" + region + "' at layer '" + layer + "'");
    }
    return r->second;
  }
};

inline GuidancePyramid empty_pyramid(const NetworkModel& model, const std::vector<std::string>& layers,
                                     std::size_t height, std::size_t width) {
  GuidancePyramid p;
  p.layers = layers;
  for (const auto& l : layers) {
    p.layer_shapes[l] = model.output_shape(l, height, width);
    p.channels[l];
  }
  return p;
}

inline GuidancePyramid build_pyramid(const std::vector<GuidanceMask>& masks, const NetworkModel& model,
                                     const std::vector<std::string>& layers, GuidanceMode mode) {
  if (masks.empty()) throw ConfigError("guidance: at least one mask is required");
  const auto H = masks.front().values.height();
  const auto W = masks.front().values.width();
  GuidancePyramid p = empty_pyramid(model, layers, H, W);
  for (const auto& m : masks) {
    if (m.values.height() != H || m.values.width() != W) {
      throw ConfigError("guidance: mask '" + m.region + "' size differs from the other masks");
    }
    if (std::find(p.regions.begin(), p.regions.end(), m.region) != p.regions.end()) {
      throw ConfigError("guidance: duplicate region '" + m.region + "'");
    }
    p.regions.push_back(m.region);
    for (auto& [layer, raw] : propagate(m, model, layers, mode)) {
      double mass = 0.0;
      for (double v : raw.data()) mass += v * v;
      p.channels[layer][m.region] = PyramidChannel{std::move(raw), mass, {}};
    }
  }
  return p;
}

/// Adds a region that is 1 everywhere at every layer.
inline GuidancePyramid add_global_channel(GuidancePyramid pyramid, const std::string& region = "global") {
  if (pyramid.global_region) throw ConfigError("guidance: global channel already present");
  if (std::find(pyramid.regions.begin(), pyramid.regions.end(), region) != pyramid.regions.end()) {
    throw ConfigError("guidance: region id '" + region + "' already used");
  }
  pyramid.regions.push_back(region);
  pyramid.global_region = region;
  for (const auto& layer : pyramid.layers) {
    const Shape s = pyramid.layer_shapes.at(layer);
    GuidanceChannel raw(1, s.height, s.width, 1.0);
    const double mass = static_cast<double>(raw.size());
    pyramid.channels[layer][region] = PyramidChannel{std::move(raw), mass, {}};
  }
  pyramid.normalised = false;
  return pyramid;
}

/// Scales every channel to unit sum of squares. A channel with no mass (for
/// example a region eroded away at a deep layer) is an error.
inline GuidancePyramid normalise(GuidancePyramid pyramid) {
  for (auto& [layer, regions] : pyramid.channels) {
    for (auto& [region, ch] : regions) {
      double mass = 0.0;
      for (double v : ch.raw.data()) mass += v * v;
      ch.mass = mass;
      if (!(mass > 0.0)) {
        throw NumericError("guidance: region '" + region + "' has zero mass at layer '" + layer +
                           "' (eroded away or empty mask)");
      }
      const double scale = 1.0 / std::sqrt(mass);
      ch.normalised = ch.raw;
      if (mass != 1.0) {
        for (auto& v : ch.normalised.data()) v *= scale;
      }
    }
  }
  pyramid.normalised = true;
  return pyramid;
}

}  // namespace stylectl
