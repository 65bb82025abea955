#pragma once

#include <Eigen/Core>

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stylectl/error.hpp"
#include "stylectl/nn.hpp"
#include "stylectl/tensor.hpp"
#include "stylectl/vgg.hpp"

namespace stylectl {

enum class GramNormalisation {
  per_position,  // (1/M) F F^T
  guided,        // F^r F^r^T with the guidance channel carrying the normalisation
};

struct GramMatrix {
  Eigen::MatrixXd values;
  GramNormalisation normalisation = GramNormalisation::per_position;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

/// Frobenius distance between two Gram matrices of equal size.
inline double gram_distance(const GramMatrix& a, const GramMatrix& b) {
  if (a.size() != b.size()) throw ConfigError("gram_distance: size mismatch");
  return (a.values - b.values).norm();
}

template <typename T>
struct LossValue {
  double value = 0.0;
  BasicTensor<T> grad;
};

/// Single-channel spatial weighting map, 1 x H x W.
using GuidanceChannel = BasicTensor<double>;

namespace detail {

inline Eigen::MatrixXd plain_gram(const RowMatrixXd& f) {
  return (f * f.transpose()) * (1.0 / static_cast<double>(f.cols()));
}

template <typename U>
Eigen::RowVectorXd guide_row(const BasicTensor<U>& guide) {
  Eigen::RowVectorXd t(static_cast<Eigen::Index>(guide.size()));
  for (std::size_t i = 0; i < guide.size(); ++i) t[static_cast<Eigen::Index>(i)] = static_cast<double>(guide[i]);
  return t;
}

template <typename U>
bool is_uniform(const BasicTensor<U>& guide) {
  const auto d = guide.data();
  return std::all_of(d.begin(), d.end(), [&](U v) { return v == d.front(); });
}

template <typename T, typename U>
void check_guide(const BasicTensor<T>& f, const BasicTensor<U>& guide, const char* what) {
  if (guide.channels() != 1 || guide.height() != f.height() || guide.width() != f.width()) {
    throw ConfigError(std::string(what) + ": guidance channel " + guide.shape().str() +
                      " does not match activation " + f.shape().str());
  }
}

// Guided statistics replace 1/M by a unit sum of squares of the guide.
inline void check_normalised(const GuidanceChannel& guide, const char* what) {
  double ss = 0.0;
  for (double v : guide.data()) ss += v * v;
  if (std::abs(ss - 1.0) > 1e-4) {
    throw ConfigError(std::string(what) + ": guidance channel is not normalised (sum of squares " +
                      std::to_string(ss) + ")");
  }
}

// One region of a (possibly guided) Gram matching term. A null guide means the
// plain per-position Gram matrix.
struct GramRegion {
  const GramMatrix* target;
  const GuidanceChannel* guide;
  double weight;
};

// Shared by style_loss and guided_style_loss so that the single-uniform-region
// case is computed by exactly the same arithmetic as the plain loss.
template <typename T>
LossValue<T> gram_match_loss(const BasicTensor<T>& f_hat, const std::vector<GramRegion>& regions,
                             double layer_weight) {
  const auto N = f_hat.channels();
  const auto M = f_hat.height() * f_hat.width();
  const double n2 = static_cast<double>(N) * static_cast<double>(N);
  const RowMatrixXd f = as_matrix(f_hat);
  RowMatrixXd grad = RowMatrixXd::Zero(f.rows(), f.cols());
  double weighted_ssq = 0.0;
  for (const auto& r : regions) {
    if (r.target->size() != N) {
      throw ConfigError("gram loss: target is " + std::to_string(r.target->size()) + "x" +
                        std::to_string(r.target->size()) + ", activation has " + std::to_string(N) +
                        " channels");
    }
    if (r.guide == nullptr || is_uniform(*r.guide)) {
      const Eigen::MatrixXd d = plain_gram(f) - r.target->values;
      weighted_ssq += r.weight * d.squaredNorm();
      const double coef = r.weight * layer_weight / (n2 * static_cast<double>(M));
      grad += coef * (d * f);
    } else {
      const Eigen::RowVectorXd t = guide_row(*r.guide);
      const RowMatrixXd fw = f.array().rowwise() * t.array();
      const Eigen::MatrixXd d = fw * fw.transpose() - r.target->values;
      weighted_ssq += r.weight * d.squaredNorm();
      const double coef = r.weight * layer_weight / n2;
      const RowMatrixXd g = (d * fw).array().rowwise() * t.array();
      grad += coef * g;
    }
  }
  return {layer_weight * weighted_ssq / (4.0 * n2), from_matrix<T>(grad, f_hat.height(), f_hat.width())};
}

}  // namespace detail

/// G = (1/M) F F^T over the M spatial positions.
template <typename T>
GramMatrix gram(const BasicTensor<T>& features) {
  if (features.height() * features.width() == 0) throw ConfigError("gram: empty activation");
  return {detail::plain_gram(detail::as_matrix(features)), GramNormalisation::per_position};
}

/// Gram matrix of the guidance-weighted features. The guide must be
/// normalised to unit sum of squares; it takes the place of the 1/M factor.
template <typename T>
GramMatrix guided_gram(const BasicTensor<T>& features, const GuidanceChannel& guide) {
  detail::check_guide(features, guide, "guided_gram");
  detail::check_normalised(guide, "guided_gram");
  if (detail::is_uniform(guide)) return {gram(features).values, GramNormalisation::guided};
  const RowMatrixXd f = detail::as_matrix(features);
  const RowMatrixXd fw = f.array().rowwise() * detail::guide_row(guide).array();
  return {fw * fw.transpose(), GramNormalisation::guided};
}

/// Gram matrix of the features stacked with R extra guidance channels,
/// (1/M) F' F'^T with F' = [F; T1; ...; TR].
template <typename T>
GramMatrix guided_sum_gram(const BasicTensor<T>& features, const std::vector<GuidanceChannel>& guides) {
  const auto N = features.channels();
  const auto M = features.height() * features.width();
  if (M == 0) throw ConfigError("guided_sum_gram: empty activation");
  RowMatrixXd stacked(static_cast<Eigen::Index>(N + guides.size()), static_cast<Eigen::Index>(M));
  stacked.topRows(static_cast<Eigen::Index>(N)) = detail::as_matrix(features);
  for (std::size_t r = 0; r < guides.size(); ++r) {
    detail::check_guide(features, guides[r], "guided_sum_gram");
    stacked.row(static_cast<Eigen::Index>(N + r)) = detail::guide_row(guides[r]);
  }
  return {detail::plain_gram(stacked), GramNormalisation::per_position};
}

/// (1/(N M)) sum (F_hat - F_target)^2 and its gradient.
template <typename T, typename U>
LossValue<T> content_loss(const BasicTensor<T>& f_hat, const BasicTensor<U>& f_target) {
  if (f_hat.shape() != f_target.shape()) {
    throw ConfigError("content_loss: shape mismatch " + f_hat.shape().str() + " vs " +
                      f_target.shape().str());
  }
  const double nm = static_cast<double>(f_hat.size());
  BasicTensor<T> grad(f_hat.shape());
  double ssq = 0.0;
  for (std::size_t i = 0; i < f_hat.size(); ++i) {
    const double d = static_cast<double>(f_hat[i]) - static_cast<double>(f_target[i]);
    ssq += d * d;
    grad[i] = static_cast<T>(2.0 * d / nm);
  }
  return {ssq / nm, std::move(grad)};
}

/// w / (4 N^2) * ||G(F_hat) - G_target||_F^2 and its gradient.
template <typename T>
LossValue<T> style_loss(const BasicTensor<T>& f_hat, const GramMatrix& target, double layer_weight = 1.0) {
  return detail::gram_match_loss(f_hat, {{&target, nullptr, 1.0}}, layer_weight);
}

struct GuidedRegion {
  GramMatrix target;        // guided Gram of the style side
  GuidanceChannel guide;    // normalised guidance of the image being optimised
  double weight = 1.0;      // region weight lambda_r
};

/// 1/(4 N^2) sum_r lambda_r ||G^r(F_hat) - G^r_target||_F^2, scaled by the layer weight.
template <typename T>
LossValue<T> guided_style_loss(const BasicTensor<T>& f_hat, const std::vector<GuidedRegion>& regions,
                               double layer_weight = 1.0) {
  std::vector<detail::GramRegion> rs;
  rs.reserve(regions.size());
  for (const auto& r : regions) {
    detail::check_guide(f_hat, r.guide, "guided_style_loss");
    detail::check_normalised(r.guide, "guided_style_loss");
    rs.push_back({&r.target, &r.guide, r.weight});
  }
  return detail::gram_match_loss(f_hat, rs, layer_weight);
}

/// Keyed form: the three maps must name the same regions.
template <typename T>
LossValue<T> guided_style_loss(const BasicTensor<T>& f_hat, const std::map<std::string, GramMatrix>& targets,
                               const std::map<std::string, GuidanceChannel>& guides,
                               const std::map<std::string, double>& weights, double layer_weight = 1.0) {
  auto keys = [](const auto& m) {
    std::set<std::string> k;
    for (const auto& [key, v] : m) k.insert(key);
    return k;
  };
  if (keys(targets) != keys(guides) || keys(targets) != keys(weights)) {
    throw ConfigError("guided_style_loss: region sets of targets, guides and weights differ");
  }
  std::vector<GuidedRegion> regions;
  for (const auto& [id, target] : targets) regions.push_back({target, guides.at(id), weights.at(id)});
  return guided_style_loss(f_hat, regions, layer_weight);
}

/// Gram loss on the guidance-augmented features, normalised with N' = N + R.
/// Only the feature rows receive gradient; guidance channels are constants.
template <typename T>
LossValue<T> guided_sum_loss(const BasicTensor<T>& f_hat, const std::vector<GuidanceChannel>& guides,
                             const GramMatrix& target, double layer_weight = 1.0) {
  const auto N = f_hat.channels();
  const auto M = f_hat.height() * f_hat.width();
  const auto NR = N + guides.size();
  if (target.size() != NR) throw ConfigError("guided_sum_loss: target size mismatch");
  RowMatrixXd stacked(static_cast<Eigen::Index>(NR), static_cast<Eigen::Index>(M));
  stacked.topRows(static_cast<Eigen::Index>(N)) = detail::as_matrix(f_hat);
  for (std::size_t r = 0; r < guides.size(); ++r) {
    detail::check_guide(f_hat, guides[r], "guided_sum_loss");
    stacked.row(static_cast<Eigen::Index>(N + r)) = detail::guide_row(guides[r]);
  }
  const Eigen::MatrixXd d = detail::plain_gram(stacked) - target.values;
  const double n2 = static_cast<double>(NR) * static_cast<double>(NR);
  const RowMatrixXd g =
      (layer_weight / (n2 * static_cast<double>(M))) * (d.topRows(static_cast<Eigen::Index>(N)) * stacked);
  return {layer_weight * d.squaredNorm() / (4.0 * n2), detail::from_matrix<T>(g, f_hat.height(), f_hat.width())};
}

// ---------------------------------------------------------------------------
// Loss programs

struct ContentTerm {
  std::string layer;
  BasicTensor<double> target;
  double weight = 1.0;
};

struct StyleTerm {
  std::string layer;
  GramMatrix target;
  double weight = 1.0;  // w_l
};

struct GuidedStyleTerm {
  std::string layer;
  std::vector<GuidedRegion> regions;
  std::vector<std::string> region_ids;
  double weight = 1.0;
};

struct GuidedSumTerm {
  std::string layer;
  GramMatrix target;
  std::vector<GuidanceChannel> guides;
  double weight = 1.0;
};

/// Declarative total loss: alpha * sum(content) + beta * sum_l w_l E_l.
struct LossProgram {
  double content_weight = 1.0;  // alpha
  double style_weight = 1.0;    // beta
  std::vector<ContentTerm> content;
  std::vector<StyleTerm> style;
  std::vector<GuidedStyleTerm> guided;
  std::vector<GuidedSumTerm> guided_sum;

  std::set<std::string, std::less<>> layers() const {
    std::set<std::string, std::less<>> out;
    for (const auto& t : content) out.insert(t.layer);
    for (const auto& t : style) out.insert(t.layer);
    for (const auto& t : guided) out.insert(t.layer);
    for (const auto& t : guided_sum) out.insert(t.layer);
    return out;
  }

  void validate(const NetworkModel& model) const {
    auto check_weight = [](double w, const std::string& what) {
      if (!std::isfinite(w) || w < 0.0) throw ConfigError("loss program: invalid weight for " + what);
    };
    check_weight(content_weight, "content (alpha)");
    check_weight(style_weight, "style (beta)");
    for (const auto& l : layers()) {
      if (!model.has_layer(l)) throw ConfigError("loss program: unknown layer '" + l + "'");
    }
    for (const auto& t : content) check_weight(t.weight, t.layer);
    for (const auto& t : style) check_weight(t.weight, t.layer);
    for (const auto& t : guided_sum) check_weight(t.weight, t.layer);
    for (const auto& t : guided) {
      check_weight(t.weight, t.layer);
      for (const auto& r : t.regions) check_weight(r.weight, t.layer + " region");
    }
  }
};

template <typename T>
struct LossEvaluation {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> terms;  // weighted contributions
  ActivationSet<T> grads;
};

template <typename T>
LossEvaluation<T> evaluate(const LossProgram& program, const ActivationSet<T>& activations) {
  LossEvaluation<T> out;
  auto features = [&](const std::string& layer) -> const BasicTensor<T>& {
    auto it = activations.find(layer);
    if (it == activations.end()) throw ConfigError("evaluate: activation '" + layer + "' was not captured");
    return it->second;
  };
  auto add = [&](const std::string& name, const std::string& layer, LossValue<T> lv, double scale) {
    const double v = scale * lv.value;
    out.terms.emplace_back(name, v);
    out.total += v;
    for (auto& g : lv.grad.data()) g = static_cast<T>(static_cast<double>(g) * scale);
    if (auto it = out.grads.find(layer); it != out.grads.end()) {
      accumulate(it->second, lv.grad);
    } else {
      out.grads.emplace(layer, std::move(lv.grad));
    }
  };

  for (const auto& t : program.content) {
    add("content/" + t.layer, t.layer, content_loss(features(t.layer), t.target),
        program.content_weight * t.weight);
  }
  for (const auto& t : program.style) {
    add("style/" + t.layer, t.layer, style_loss(features(t.layer), t.target, t.weight), program.style_weight);
  }
  for (const auto& t : program.guided) {
    add("guided/" + t.layer, t.layer, guided_style_loss(features(t.layer), t.regions, t.weight),
        program.style_weight);
  }
  for (const auto& t : program.guided_sum) {
    add("guided_sum/" + t.layer, t.layer, guided_sum_loss(features(t.layer), t.guides, t.target, t.weight),
        program.style_weight);
  }
  return out;
}

/// Total loss and pixel gradient of a program for one image (network space).
template <typename T>
struct ObjectiveValue {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  BasicTensor<T> grad;
};

template <typename T>
ObjectiveValue<T> evaluate_objective(const NetworkModel& model, const LossProgram& program,
                                     const BasicTensor<T>& image) {
  const auto layers = program.layers();
  const auto trace = forward_trace(model, image, deepest_layer(model, layers));
  ActivationSet<T> acts;
  for (const auto& l : layers) {
    const auto i = model.index_of(l);
    acts.emplace(l, i < 0 ? trace.input : trace.outputs[static_cast<std::size_t>(i)]);
  }
  auto ev = evaluate(program, acts);
  return {ev.total, std::move(ev.terms), backward(model, trace, ev.grads)};
}

}  // namespace stylectl
