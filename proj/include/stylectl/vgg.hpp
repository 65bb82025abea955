#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylectl/error.hpp"
#include "stylectl/nn.hpp"
#include "stylectl/sfw1.hpp"
#include "stylectl/tensor.hpp"

namespace stylectl {

enum class LayerKind { conv, relu, pool };

struct LayerInfo {
  std::string name;
  LayerKind kind;
  std::size_t channels;    // output channels
  std::size_t conv_index;  // index into the conv list for conv and relu layers
};

struct ReceptiveField {
  std::size_t size = 1;    // footprint side length in input pixels
  std::size_t stride = 1;  // input pixels between neighbouring neurons

  /// Half-width of the footprint, ceil((size - 1) / 2), in input pixels.
  std::size_t half_width() const noexcept { return size / 2; }

  /// Number of layer cells a neuron must keep from a region boundary so that
  /// its footprint does not cross it.
  std::size_t layer_radius() const noexcept { return (half_width() + stride - 1) / stride; }

  friend bool operator==(const ReceptiveField&, const ReceptiveField&) = default;
};

/// Name used to capture (or inject gradients at) the network input.
inline constexpr std::string_view input_layer = "input";

/// The VGG-19 prefix conv1_1 ... relu5_1 in canonical order.
inline const std::vector<LayerInfo>& vgg19_architecture() {
  static const std::vector<LayerInfo> layers = [] {
    std::vector<LayerInfo> out;
    const std::size_t convs_per_block[] = {2, 2, 4, 4, 1};
    const std::size_t widths[] = {64, 128, 256, 512, 512};
    std::size_t conv_index = 0;
    for (std::size_t b = 0; b < 5; ++b) {
      for (std::size_t i = 1; i <= convs_per_block[b]; ++i) {
        const auto suffix = std::to_string(b + 1) + "_" + std::to_string(i);
        out.push_back({"conv" + suffix, LayerKind::conv, widths[b], conv_index});
        out.push_back({"relu" + suffix, LayerKind::relu, widths[b], conv_index});
        ++conv_index;
      }
      if (b < 4) out.push_back({"pool" + std::to_string(b + 1), LayerKind::pool, widths[b], 0});
    }
    return out;
  }();
  return layers;
}

/// Layer whose activations carry the statistics for a conv layer name.
/// Statistics are read after the ReLU: "conv4_2" maps to "relu4_2".
inline std::string statistic_layer(std::string_view name) {
  if (name.starts_with("conv")) return "relu" + std::string(name.substr(4));
  return std::string(name);
}

template <typename T>
using ActivationSet = std::map<std::string, BasicTensor<T>, std::less<>>;

/// Immutable VGG-19 prefix with loaded weights.
class NetworkModel {
 public:
  static constexpr std::size_t min_input_side = 32;

  NetworkModel(std::vector<ConvSpec> convs, Preprocessing preprocessing = {},
               PoolKind pooling = PoolKind::average)
      : convs_(std::move(convs)), preprocessing_(preprocessing), pooling_(pooling) {
    const auto& arch = vgg19_architecture();
    std::size_t expected_convs = 0;
    std::size_t in = 3;
    for (const auto& l : arch) {
      if (l.kind != LayerKind::conv) continue;
      if (l.conv_index >= convs_.size()) break;
      const auto& c = convs_[l.conv_index];
      if (c.in_channels() != in || c.out_channels() != l.channels) {
        throw ConfigError("NetworkModel: " + l.name + " expects " + std::to_string(in) + "->" +
                          std::to_string(l.channels) + " channels");
      }
      in = l.channels;
      ++expected_convs;
    }
    if (convs_.size() != 13 || expected_convs != 13) {
      throw ConfigError("NetworkModel: expected 13 conv layers, got " + std::to_string(convs_.size()));
    }
    fields_.reserve(arch.size());
    ReceptiveField rf;
    for (const auto& l : arch) {
      if (l.kind == LayerKind::conv) {
        rf.size += 2 * rf.stride;
      } else if (l.kind == LayerKind::pool) {
        rf.size += rf.stride;
        rf.stride *= 2;
      }
      fields_.push_back(rf);
    }
  }

  const std::vector<LayerInfo>& layers() const noexcept { return vgg19_architecture(); }
  const Preprocessing& preprocessing() const noexcept { return preprocessing_; }
  PoolKind pooling() const noexcept { return pooling_; }
  const std::vector<ConvSpec>& convs() const noexcept { return convs_; }

  bool has_layer(std::string_view name) const {
    if (name == input_layer) return true;
    const auto& arch = layers();
    return std::any_of(arch.begin(), arch.end(), [&](const LayerInfo& l) { return l.name == name; });
  }

  /// Position in the layer list; the input is -1.
  std::ptrdiff_t index_of(std::string_view name) const {
    if (name == input_layer) return -1;
    const auto& arch = layers();
    for (std::size_t i = 0; i < arch.size(); ++i) {
      if (arch[i].name == name) return static_cast<std::ptrdiff_t>(i);
    }
    throw ConfigError("unknown layer '" + std::string(name) + "'");
  }

  const ConvSpec& conv(std::string_view name) const {
    const auto i = index_of(name);
    if (i < 0 || layers()[static_cast<std::size_t>(i)].kind != LayerKind::conv) {
      throw ConfigError("'" + std::string(name) + "' is not a convolution layer");
    }
    return convs_[layers()[static_cast<std::size_t>(i)].conv_index];
  }

  ReceptiveField receptive_field(std::string_view name) const {
    const auto i = index_of(name);
    if (i < 0) return {};
    return fields_[static_cast<std::size_t>(i)];
  }

  /// Activation shape at `name` for an input of h x w pixels.
  Shape output_shape(std::string_view name, std::size_t h, std::size_t w) const {
    const auto idx = index_of(name);
    std::size_t c = 3;
    for (std::ptrdiff_t i = 0; i <= idx; ++i) {
      const auto& l = layers()[static_cast<std::size_t>(i)];
      c = l.channels;
      if (l.kind == LayerKind::pool) {
        h /= 2;
        w /= 2;
      }
    }
    return {c, h, w};
  }

  /// [0,1] RGB image to network input space.
  template <typename T>
  BasicTensor<T> preprocess(const BasicTensor<T>& rgb) const {
    if (rgb.channels() != 3) throw ConfigError("preprocess: expected a 3-channel image");
    BasicTensor<T> out(rgb.shape());
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t dst = preprocessing_.order == ChannelOrder::rgb ? c : 2 - c;
      auto s = rgb.channel(c);
      auto d = out.channel(dst);
      const double mean = preprocessing_.mean[c];
      for (std::size_t i = 0; i < s.size(); ++i) {
        d[i] = static_cast<T>(255.0 * static_cast<double>(s[i]) - mean);
      }
    }
    return out;
  }

  /// Inverse of preprocess (no clamping).
  template <typename T>
  BasicTensor<T> deprocess(const BasicTensor<T>& net) const {
    if (net.channels() != 3) throw ConfigError("deprocess: expected a 3-channel tensor");
    BasicTensor<T> out(net.shape());
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t src = preprocessing_.order == ChannelOrder::rgb ? c : 2 - c;
      auto s = net.channel(src);
      auto d = out.channel(c);
      const double mean = preprocessing_.mean[c];
      for (std::size_t i = 0; i < s.size(); ++i) {
        d[i] = static_cast<T>((static_cast<double>(s[i]) + mean) / 255.0);
      }
    }
    return out;
  }

  /// Lower and upper bounds of valid pixels, per network input channel.
  std::pair<std::array<double, 3>, std::array<double, 3>> pixel_bounds() const {
    std::array<double, 3> lo{}, hi{};
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t dst = preprocessing_.order == ChannelOrder::rgb ? c : 2 - c;
      lo[dst] = -static_cast<double>(preprocessing_.mean[c]);
      hi[dst] = 255.0 - static_cast<double>(preprocessing_.mean[c]);
    }
    return {lo, hi};
  }

 private:
  std::vector<ConvSpec> convs_;
  Preprocessing preprocessing_;
  PoolKind pooling_;
  std::vector<ReceptiveField> fields_;
};

// ---------------------------------------------------------------------------
// Weight files

inline WeightFile to_weight_file(const NetworkModel& model) {
  WeightFile file;
  file.preprocessing = model.preprocessing();
  for (const auto& l : model.layers()) {
    if (l.kind != LayerKind::conv) continue;
    const auto& c = model.convs()[l.conv_index];
    file.entries.push_back({l.name,
                            {static_cast<std::uint32_t>(c.out_channels()),
                             static_cast<std::uint32_t>(c.in_channels()), 3u, 3u},
                            c.weights(),
                            c.bias()});
  }
  return file;
}

inline NetworkModel model_from_weight_file(const WeightFile& file, PoolKind pooling) {
  std::map<std::string, const WeightEntry*> by_name;
  for (const auto& e : file.entries) {
    if (!by_name.emplace(e.name, &e).second) {
      throw FormatError(FormatError::Kind::shape_mismatch, "SFW1: duplicate layer " + e.name);
    }
  }
  std::vector<ConvSpec> convs;
  std::size_t in = 3;
  for (const auto& l : vgg19_architecture()) {
    if (l.kind != LayerKind::conv) continue;
    auto it = by_name.find(l.name);
    if (it == by_name.end()) {
      throw FormatError(FormatError::Kind::shape_mismatch, "SFW1: missing layer " + l.name);
    }
    const auto& e = *it->second;
    const std::vector<std::uint32_t> want{static_cast<std::uint32_t>(l.channels),
                                          static_cast<std::uint32_t>(in), 3u, 3u};
    if (e.dims != want) {
      throw FormatError(FormatError::Kind::shape_mismatch,
                        "SFW1: " + l.name + " has shape incompatible with VGG-19");
    }
    convs.emplace_back(in, l.channels, e.weights, e.bias);
    by_name.erase(it);
    in = l.channels;
  }
  if (!by_name.empty()) {
    throw FormatError(FormatError::Kind::shape_mismatch,
                      "SFW1: unexpected layer " + by_name.begin()->first);
  }
  return NetworkModel(std::move(convs), file.preprocessing, pooling);
}

inline NetworkModel load_model(const std::filesystem::path& path, PoolKind pooling = PoolKind::average) {
  return model_from_weight_file(read_sfw1(path), pooling);
}

inline void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  write_sfw1(path, to_weight_file(model));
}

/// He-initialised random weights. Useful for fixtures and tests; it carries no
/// learned features.
inline NetworkModel random_vgg19(std::uint64_t seed, PoolKind pooling = PoolKind::average) {
  std::mt19937_64 rng(seed);
  std::vector<ConvSpec> convs;
  std::size_t in = 3;
  for (const auto& l : vgg19_architecture()) {
    if (l.kind != LayerKind::conv) continue;
    std::normal_distribution<double> w(0.0, std::sqrt(2.0 / (9.0 * static_cast<double>(in))));
    std::normal_distribution<double> b(0.0, 0.05);
    std::vector<float> weights(l.channels * in * 9);
    std::vector<float> bias(l.channels);
    for (auto& v : weights) v = static_cast<float>(w(rng));
    for (auto& v : bias) v = static_cast<float>(b(rng));
    convs.emplace_back(in, l.channels, std::move(weights), std::move(bias));
    in = l.channels;
  }
  return NetworkModel(std::move(convs), Preprocessing{}, pooling);
}

// ---------------------------------------------------------------------------
// Forward and backward passes

/// Input plus the outputs of layers 0..depth-1, kept for the backward pass.
template <typename T>
struct ForwardTrace {
  BasicTensor<T> input;
  std::vector<BasicTensor<T>> outputs;

  const BasicTensor<T>& layer_input(std::size_t i) const { return i == 0 ? input : outputs[i - 1]; }
};

template <typename T>
ForwardTrace<T> forward_trace(const NetworkModel& model, const BasicTensor<T>& image, std::ptrdiff_t last) {
  if (image.channels() != 3) throw ConfigError("forward: image must have 3 channels");
  if (image.height() < NetworkModel::min_input_side || image.width() < NetworkModel::min_input_side) {
    throw ConfigError("forward: image " + image.shape().str() + " is smaller than " +
                      std::to_string(NetworkModel::min_input_side) + " pixels per side");
  }
  ForwardTrace<T> trace;
  trace.input = image;
  const auto& arch = model.layers();
  const PoolSpec pool{model.pooling()};
  for (std::ptrdiff_t i = 0; i <= last; ++i) {
    const auto& l = arch[static_cast<std::size_t>(i)];
    const auto& x = trace.layer_input(static_cast<std::size_t>(i));
    switch (l.kind) {
      case LayerKind::conv:
        trace.outputs.push_back(conv_forward(x, model.convs()[l.conv_index]));
        break;
      case LayerKind::relu:
        trace.outputs.push_back(relu_forward(x));
        break;
      case LayerKind::pool:
        trace.outputs.push_back(pool_forward(x, pool));
        break;
    }
  }
  return trace;
}

template <typename Names>
std::ptrdiff_t deepest_layer(const NetworkModel& model, const Names& names) {
  std::ptrdiff_t last = -1;
  for (const auto& n : names) last = std::max(last, model.index_of(n));
  return last;
}

/// Runs the network only as deep as the deepest requested layer.
template <typename T>
ActivationSet<T> forward(const NetworkModel& model, const BasicTensor<T>& image,
                         const std::set<std::string, std::less<>>& capture) {
  const auto last = deepest_layer(model, capture);
  const auto trace = forward_trace(model, image, last);
  ActivationSet<T> out;
  for (const auto& name : capture) {
    const auto i = model.index_of(name);
    out.emplace(name, i < 0 ? trace.input : trace.outputs[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Back-propagates gradients injected at named layers down to the pixels.
template <typename T>
BasicTensor<T> backward(const NetworkModel& model, const ForwardTrace<T>& trace,
                        const ActivationSet<T>& loss_grads) {
  std::ptrdiff_t top = -1;
  for (const auto& [name, g] : loss_grads) {
    const auto i = model.index_of(name);
    if (i >= static_cast<std::ptrdiff_t>(trace.outputs.size())) {
      throw ConfigError("backward: gradient at '" + name + "' which was not computed in the forward pass");
    }
    const Shape want = i < 0 ? trace.input.shape() : trace.outputs[static_cast<std::size_t>(i)].shape();
    if (g.shape() != want) {
      throw ConfigError("backward: gradient at '" + name + "' has shape " + g.shape().str() +
                        ", activation has " + want.str());
    }
    top = std::max(top, i);
  }

  const auto& arch = model.layers();
  const PoolSpec pool{model.pooling()};
  std::optional<BasicTensor<T>> grad;
  for (std::ptrdiff_t i = top; i >= 0; --i) {
    const auto& l = arch[static_cast<std::size_t>(i)];
    if (auto it = loss_grads.find(l.name); it != loss_grads.end()) {
      if (grad) {
        accumulate(*grad, it->second);
      } else {
        grad = it->second;
      }
    }
    const auto& x = trace.layer_input(static_cast<std::size_t>(i));
    switch (l.kind) {
      case LayerKind::conv:
        grad = conv_backward(x, model.convs()[l.conv_index], *grad);
        break;
      case LayerKind::relu:
        grad = relu_backward(x, *grad);
        break;
      case LayerKind::pool:
        grad = pool_backward(x, pool, *grad);
        break;
    }
  }
  if (!grad) grad = BasicTensor<T>(trace.input.shape());
  if (auto it = loss_grads.find(input_layer); it != loss_grads.end()) accumulate(*grad, it->second);
  return *std::move(grad);
}

template <typename T>
BasicTensor<T> backward(const NetworkModel& model, const BasicTensor<T>& image,
                        const ActivationSet<T>& loss_grads) {
  std::vector<std::string> names;
  for (const auto& [name, g] : loss_grads) names.push_back(name);
  return backward(model, forward_trace(model, image, deepest_layer(model, names)), loss_grads);
}

}  // namespace stylectl
