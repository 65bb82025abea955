#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stylectl/color.hpp"
#include "stylectl/error.hpp"
#include "stylectl/guidance.hpp"
#include "stylectl/losses.hpp"
#include "stylectl/nn.hpp"
#include "stylectl/optimize.hpp"
#include "stylectl/tensor.hpp"
#include "stylectl/vgg.hpp"

namespace stylectl {

inline std::vector<std::string> default_style_layers() {
  return {"conv1_1", "conv2_1", "conv3_1", "conv4_1", "conv5_1"};
}

inline constexpr const char* default_content_layer = "conv4_2";

/// Region correspondence for spatial control: content pixels under
/// `content_mask` take their style from the pixels of `styles[style_index]`
/// under `style_mask`.
struct Region {
  std::string id;
  Tensor content_mask;  // 1 x H x W, values in [0,1]
  Tensor style_mask;    // 1 x Hs x Ws of the designated style image
  std::size_t style_index = 0;
  double weight = 1.0;  // lambda_r
};

enum class SpatialMethod { guided_gram, guided_sum };

struct TransferJob {
  ColorImage content;
  std::vector<ColorImage> styles;

  // Spatial control.
  std::vector<Region> regions;
  GuidanceMode guidance = GuidanceMode::eroded;
  bool global_channel = true;
  double global_weight = 1.0;
  SpatialMethod spatial_method = SpatialMethod::guided_gram;

  std::string content_layer = default_content_layer;
  std::vector<std::string> style_layers = default_style_layers();
  std::vector<double> style_layer_weights;  // empty: uniform 1/n
  double content_weight = 1.0;              // alpha
  double style_weight = 1e3;                // beta

  OptimizerConfig optimizer;

  std::vector<double> layer_weights() const {
    if (style_layer_weights.empty()) {
      return std::vector<double>(style_layers.size(), 1.0 / static_cast<double>(style_layers.size()));
    }
    if (style_layer_weights.size() != style_layers.size()) {
      throw ConfigError("job: " + std::to_string(style_layer_weights.size()) + " style layer weights for " +
                        std::to_string(style_layers.size()) + " style layers");
    }
    return style_layer_weights;
  }
};

struct TransferResult {
  ColorImage image;      // RGB in [0,1]
  Tensor network_image;  // network input space, clamped
  RunReport report;
};

namespace detail {

inline void require_image(const ColorImage& img, const char* what) {
  if (img.channels() != 3) throw ConfigError(std::string(what) + " must be an RGB image");
  if (img.height() < NetworkModel::min_input_side || img.width() < NetworkModel::min_input_side) {
    throw ConfigError(std::string(what) + " " + img.shape().str() + " is smaller than " +
                      std::to_string(NetworkModel::min_input_side) + " pixels per side");
  }
}

inline std::vector<std::string> stat_layers(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) out.push_back(statistic_layer(n));
  return out;
}

inline ActivationSet<float> capture(const NetworkModel& model, const Tensor& net_image,
                                    const std::vector<std::string>& layers) {
  return forward(model, net_image, std::set<std::string, std::less<>>(layers.begin(), layers.end()));
}

inline void add_content_term(LossProgram& p, const NetworkModel& model, const Tensor& content_net,
                             const TransferJob& job) {
  p.content_weight = job.content_weight;
  if (job.content_weight == 0.0) return;
  const auto layer = statistic_layer(job.content_layer);
  auto acts = capture(model, content_net, {layer});
  p.content.push_back({layer, acts.at(layer).cast<double>(), 1.0});
}

inline ColorImage to_rgb(const NetworkModel& model, const Tensor& net) {
  ColorImage rgb = model.deprocess(net);
  clamp_unit(rgb);
  return rgb;
}

inline TransferResult run(const NetworkModel& model, const LossProgram& program, const Tensor& content_net,
                          const OptimizerConfig& cfg) {
  auto res = minimise(model, program, content_net, cfg);
  ColorImage rgb = to_rgb(model, res.image);
  return {std::move(rgb), std::move(res.image), std::move(res.report)};
}

}  // namespace detail

/// Loss program of plain transfer: content at one layer, Gram statistics of a
/// single style image at the style layers.
inline LossProgram plain_program(const NetworkModel& model, const TransferJob& job) {
  detail::require_image(job.content, "content image");
  if (job.styles.size() != 1) {
    throw ConfigError("transfer: expected exactly one style image, got " + std::to_string(job.styles.size()));
  }
  detail::require_image(job.styles[0], "style image");
  const Tensor content_net = model.preprocess(job.content);
  const Tensor style_net = model.preprocess(job.styles[0]);

  LossProgram p;
  detail::add_content_term(p, model, content_net, job);
  p.style_weight = job.style_weight;
  if (job.style_weight != 0.0) {
    const auto layers = detail::stat_layers(job.style_layers);
    const auto weights = job.layer_weights();
    auto acts = detail::capture(model, style_net, layers);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      p.style.push_back({layers[i], gram(acts.at(layers[i])), weights[i]});
    }
  }
  return p;
}

inline TransferResult transfer(const NetworkModel& model, const TransferJob& job) {
  const LossProgram program = plain_program(model, job);
  return detail::run(model, program, model.preprocess(job.content), job.optimizer);
}

// ---------------------------------------------------------------------------
// Spatial control

struct SpatialGuidance {
  GuidancePyramid content;
  std::vector<GuidancePyramid> styles;                        // one per style image that has regions
  std::vector<std::pair<std::string, std::size_t>> regions;   // region id -> style image
  std::map<std::string, double> weights;
};

/// Builds normalised content- and style-side pyramids for the job's regions,
/// plus the global channel (attached to style image 0) when enabled.
inline SpatialGuidance build_spatial_guidance(const NetworkModel& model, const TransferJob& job) {
  const auto layers = detail::stat_layers(job.style_layers);
  const auto H = job.content.height();
  const auto W = job.content.width();
  if (job.regions.empty() && !job.global_channel) {
    throw ConfigError("spatial transfer: no regions and no global channel");
  }

  SpatialGuidance g;
  std::vector<GuidanceMask> content_masks;
  std::map<std::size_t, std::vector<GuidanceMask>> style_masks;
  for (const auto& r : job.regions) {
    if (r.style_index >= job.styles.size()) {
      throw ConfigError("region '" + r.id + "' refers to missing style image " + std::to_string(r.style_index));
    }
    if (r.content_mask.empty() || r.style_mask.empty()) {
      throw ConfigError("region '" + r.id + "' needs both a content and a style mask");
    }
    if (r.content_mask.height() != H || r.content_mask.width() != W) {
      throw ConfigError("region '" + r.id + "': content mask size differs from the content image");
    }
    const auto& s = job.styles[r.style_index];
    if (r.style_mask.height() != s.height() || r.style_mask.width() != s.width()) {
      throw ConfigError("region '" + r.id + "': style mask size differs from its style image");
    }
    content_masks.emplace_back(r.id, r.content_mask);
    style_masks[r.style_index].emplace_back(r.id, r.style_mask);
    g.regions.emplace_back(r.id, r.style_index);
    g.weights[r.id] = r.weight;
  }

  GuidancePyramid content = content_masks.empty() ? empty_pyramid(model, layers, H, W)
                                                  : build_pyramid(content_masks, model, layers, job.guidance);
  std::vector<GuidancePyramid> styles;
  for (std::size_t s = 0; s < job.styles.size(); ++s) {
    auto it = style_masks.find(s);
    GuidancePyramid p = it == style_masks.end()
                            ? empty_pyramid(model, layers, job.styles[s].height(), job.styles[s].width())
                            : build_pyramid(it->second, model, layers, job.guidance);
    styles.push_back(std::move(p));
  }
  if (job.global_channel) {
    const std::string id = "global";
    content = add_global_channel(std::move(content), id);
    styles[0] = add_global_channel(std::move(styles[0]), id);
    g.regions.emplace_back(id, 0);
    g.weights[id] = job.global_weight;
  }
  g.content = normalise(std::move(content));
  for (auto& p : styles) {
    if (!p.regions.empty()) p = normalise(std::move(p));
    g.styles.push_back(std::move(p));
  }
  return g;
}

inline LossProgram spatial_program(const NetworkModel& model, const TransferJob& job) {
  detail::require_image(job.content, "content image");
  if (job.styles.empty()) throw ConfigError("spatial transfer: no style images");
  for (const auto& s : job.styles) detail::require_image(s, "style image");

  const auto guidance = build_spatial_guidance(model, job);
  const auto layers = detail::stat_layers(job.style_layers);
  const auto weights = job.layer_weights();
  const Tensor content_net = model.preprocess(job.content);

  LossProgram p;
  detail::add_content_term(p, model, content_net, job);
  p.style_weight = job.style_weight;
  if (job.style_weight == 0.0) return p;

  std::vector<ActivationSet<float>> style_acts;
  for (const auto& s : job.styles) style_acts.push_back(detail::capture(model, model.preprocess(s), layers));

  if (job.spatial_method == SpatialMethod::guided_sum) {
    for (const auto& [id, s] : guidance.regions) {
      if (s != 0) throw ConfigError("guided sums support a single style image; region '" + id + "' uses another");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      std::vector<GuidanceChannel> style_guides;
      std::vector<GuidanceChannel> content_guides;
      for (const auto& [id, s] : guidance.regions) {
        style_guides.push_back(guidance.styles[0].channel(layers[i], id).raw);
        content_guides.push_back(guidance.content.channel(layers[i], id).raw);
      }
      p.guided_sum.push_back({layers[i], guided_sum_gram(style_acts[0].at(layers[i]), style_guides),
                              std::move(content_guides), weights[i]});
    }
    return p;
  }

  for (std::size_t i = 0; i < layers.size(); ++i) {
    GuidedStyleTerm term{layers[i], {}, {}, weights[i]};
    for (const auto& [id, s] : guidance.regions) {
      const auto& style_t = guidance.styles[s].channel(layers[i], id).normalised;
      const auto& content_t = guidance.content.channel(layers[i], id).normalised;
      term.regions.push_back({guided_gram(style_acts[s].at(layers[i]), style_t), content_t, guidance.weights.at(id)});
      term.region_ids.push_back(id);
    }
    p.guided.push_back(std::move(term));
  }
  return p;
}

inline TransferResult transfer_spatial(const NetworkModel& model, const TransferJob& job) {
  const LossProgram program = spatial_program(model, job);
  return detail::run(model, program, model.preprocess(job.content), job.optimizer);
}

// ---------------------------------------------------------------------------
// Colour control

enum class LuminanceMatch { automatic, always, never };

struct LuminanceResult {
  ColorImage image;  // RGB in [0,1]
  Tensor yiq;        // recombined YIQ before conversion to RGB; chroma is the content's
  Tensor luminance;  // stylised luminance
  bool matched = false;
  RunReport report;
};

/// Style transfer on luminance only, recombined with the content's chroma.
/// The single-channel images are fed to the network by channel replication.
inline LuminanceResult transfer_luminance_preserving(const NetworkModel& model, const TransferJob& job,
                                                     LuminanceMatch match = LuminanceMatch::automatic,
                                                     const LuminanceMatchPolicy& policy = {}) {
  detail::require_image(job.content, "content image");
  if (job.styles.size() != 1) throw ConfigError("luminance transfer: expected exactly one style image");
  const auto content = to_luminance(job.content);
  Tensor style_l = to_luminance(job.styles[0]).luminance;

  LuminanceResult out;
  out.matched = match == LuminanceMatch::always ||
                (match == LuminanceMatch::automatic && policy.should_match(style_l, content.luminance));
  if (out.matched) style_l = match_luminance(style_l, content.luminance);

  TransferJob gray = job;
  gray.content = replicate_channels(content.luminance);
  gray.styles = {replicate_channels(style_l)};
  auto res = transfer(model, gray);

  out.luminance = to_luminance(res.image).luminance;
  for (auto& v : out.luminance.data()) v = std::clamp(v, 0.0f, 1.0f);
  out.yiq = stack_yiq(out.luminance, content.chroma);
  out.image = from_luminance(out.luminance, content.chroma, true);
  out.report = std::move(res.report);
  return out;
}

struct ColorMatchedResult {
  TransferResult transfer;
  ColorTransform transform;
  ColorImage matched_style;  // unclamped A p + b
};

/// Recolours the style image to the content's colour mean and covariance,
/// then runs plain transfer with it. `transform` overrides the fitted map.
inline ColorMatchedResult transfer_color_matched(const NetworkModel& model, const TransferJob& job,
                                                 std::optional<ColorTransform> transform = std::nullopt,
                                                 MatrixRoot root = MatrixRoot::eigen) {
  if (job.styles.size() != 1) throw ConfigError("colour matching: expected exactly one style image");
  ColorMatchedResult out;
  out.transform = transform ? *transform : fit_color_transform(job.styles[0], job.content, root);
  out.matched_style = apply_color_transform(job.styles[0], out.transform, false);
  TransferJob matched = job;
  matched.styles = {out.matched_style};
  out.transfer = transfer(model, matched);
  return out;
}

// ---------------------------------------------------------------------------
// Scale control

inline std::vector<std::string> default_fine_layers() { return {"conv1_1", "conv2_1"}; }

/// New style image with the fine-scale statistics of `fine_style` on top of
/// the coarse structure of `coarse_style`: style loss only, restricted to the
/// fine layers, initialised at the coarse image. The fine image is resampled
/// to the coarse image's size first.
inline TransferResult make_mixed_style(const NetworkModel& model, const ColorImage& fine_style,
                                       const ColorImage& coarse_style,
                                       const std::vector<std::string>& fine_layers = default_fine_layers(),
                                       OptimizerConfig optimizer = {}, double style_weight = 1.0) {
  detail::require_image(coarse_style, "coarse style image");
  detail::require_image(fine_style, "fine style image");
  if (fine_layers.empty()) throw ConfigError("mixed style: no fine layers");
  const ColorImage fine = resample(fine_style, coarse_style.height(), coarse_style.width());

  TransferJob job;
  job.content = coarse_style;
  job.styles = {fine};
  job.style_layers = fine_layers;
  job.content_weight = 0.0;
  job.style_weight = style_weight;
  LossProgram program = plain_program(model, job);

  const Tensor coarse_net = model.preprocess(coarse_style);
  optimizer.init.kind = InitKind::provided;
  optimizer.init.image = coarse_net;
  return detail::run(model, program, coarse_net, optimizer);
}

struct HighResConfig {
  double pixel_budget = 500.0 * 500.0;  // total pixels of the low-resolution pass
  double iteration_ratio = 2.5;         // stage-1 iterations / stage-2 iterations
  int levels = 1;                       // refinement passes after the low-resolution one
  std::optional<int> refinement_iterations;  // overrides the derived stage-2 count

  void validate() const {
    if (!(pixel_budget > 0.0)) throw ConfigError("highres: pixel budget must be positive");
    if (!(iteration_ratio > 0.0)) throw ConfigError("highres: iteration ratio must be positive");
    if (levels < 1) throw ConfigError("highres: at least one refinement level is required");
    if (refinement_iterations && *refinement_iterations < 0) {
      throw ConfigError("highres: refinement iterations must be non-negative");
    }
  }
};

struct HighResLevel {
  std::size_t height = 0;
  std::size_t width = 0;
  int iterations = 0;
};

struct HighResPlan {
  std::size_t factor = 1;             // k
  std::vector<HighResLevel> levels;   // levels[0] is the low-resolution pass
};

/// Smallest integer k with (H W) / k^2 within the budget; each refinement
/// level gets 1/ratio of the previous level's iterations.
inline HighResPlan plan_highres(std::size_t height, std::size_t width, int low_res_iterations,
                                const HighResConfig& cfg) {
  cfg.validate();
  if (low_res_iterations < 0) throw ConfigError("highres: negative iteration count");
  const double pixels = static_cast<double>(height) * static_cast<double>(width);
  std::size_t k = 1;
  while (pixels / static_cast<double>(k * k) > cfg.pixel_budget) ++k;

  HighResPlan plan;
  plan.factor = k;
  plan.levels.push_back({height / k, width / k, low_res_iterations});
  int iters = low_res_iterations;
  for (int level = 1; level <= cfg.levels; ++level) {
    iters = static_cast<int>(std::lround(static_cast<double>(iters) / cfg.iteration_ratio));
    if (cfg.refinement_iterations) iters = *cfg.refinement_iterations;
    const double scale = std::pow(static_cast<double>(k),
                                  static_cast<double>(cfg.levels - level) / static_cast<double>(cfg.levels));
    const auto h = level == cfg.levels ? height : static_cast<std::size_t>(std::lround(static_cast<double>(height) / scale));
    const auto w = level == cfg.levels ? width : static_cast<std::size_t>(std::lround(static_cast<double>(width) / scale));
    plan.levels.push_back({h, w, iters});
  }
  return plan;
}

struct HighResStage {
  HighResLevel level;
  RunReport report;
};

struct HighResResult {
  ColorImage image;
  Tensor network_image;
  HighResPlan plan;
  std::vector<HighResStage> stages;
};

/// Coarse-to-fine transfer: stylise both images downsampled by k with the
/// job's iteration budget, then upsample the result and refine at each
/// higher level with 1/ratio as many iterations.
inline HighResResult transfer_highres(const NetworkModel& model, const TransferJob& job,
                                      const HighResConfig& cfg = {}) {
  detail::require_image(job.content, "content image");
  if (job.styles.size() != 1) throw ConfigError("highres: expected exactly one style image");
  HighResResult out;
  out.plan = plan_highres(job.content.height(), job.content.width(), job.optimizer.max_iterations, cfg);
  const auto k = out.plan.factor;
  const auto& style = job.styles[0];

  std::optional<Tensor> previous;
  for (std::size_t i = 0; i < out.plan.levels.size(); ++i) {
    const auto& level = out.plan.levels[i];
    TransferJob stage = job;
    stage.content = resample(job.content, level.height, level.width);
    // Style follows the content's scale factor at each level.
    const auto sh = i == 0 ? style.height() / k
                           : std::max<std::size_t>(1, style.height() * level.height / job.content.height());
    const auto sw = i == 0 ? style.width() / k
                           : std::max<std::size_t>(1, style.width() * level.width / job.content.width());
    stage.styles = {resample(style, sh, sw)};
    stage.optimizer.max_iterations = level.iterations;
    if (previous) {
      stage.optimizer.init.kind = InitKind::provided;
      stage.optimizer.init.image = resample(*previous, level.height, level.width);
    }
    auto res = transfer(model, stage);
    previous = res.network_image;
    out.stages.push_back({level, std::move(res.report)});
    out.image = std::move(res.image);
    out.network_image = std::move(res.network_image);
  }
  return out;
}

}  // namespace stylectl
