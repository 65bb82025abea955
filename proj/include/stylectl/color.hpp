#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <utility>

#include "stylectl/error.hpp"
#include "stylectl/tensor.hpp"

namespace stylectl {

/// 3 x H x W RGB image with values in [0,1].
using ColorImage = Tensor;

// NTSC YIQ. Rows produce Y, I, Q from R, G, B.
inline const Eigen::Matrix3d& yiq_from_rgb() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.299, 0.587, 0.114,
                                    0.595716, -0.274453, -0.321263,
                                    0.211456, -0.522591, 0.311135).finished();
  return m;
}

inline const Eigen::Matrix3d& rgb_from_yiq() {
  static const Eigen::Matrix3d m = yiq_from_rgb().inverse();
  return m;
}

namespace detail {

template <typename T>
BasicTensor<T> apply_matrix(const BasicTensor<T>& img, const Eigen::Matrix3d& a, const Eigen::Vector3d& b) {
  if (img.channels() != 3) throw ConfigError("colour transform: expected 3 channels, got " +
                                             std::to_string(img.channels()));
  BasicTensor<T> out(img.shape());
  const auto P = img.height() * img.width();
  const auto* src = img.data().data();
  auto* dst = out.data().data();
  for (std::size_t p = 0; p < P; ++p) {
    const Eigen::Vector3d v(src[p], src[P + p], src[2 * P + p]);
    const Eigen::Vector3d r = a * v + b;
    dst[p] = static_cast<T>(r[0]);
    dst[P + p] = static_cast<T>(r[1]);
    dst[2 * P + p] = static_cast<T>(r[2]);
  }
  return out;
}

template <typename T>
void clamp_unit(BasicTensor<T>& img) {
  for (auto& v : img.data()) v = std::clamp(v, T(0), T(1));
}

}  // namespace detail

struct LuminanceSplit {
  Tensor luminance;  // 1 x H x W
  Tensor chroma;     // 2 x H x W (I, Q)
};

inline Tensor rgb_to_yiq(const ColorImage& img) {
  return detail::apply_matrix(img, yiq_from_rgb(), Eigen::Vector3d::Zero());
}

/// YIQ to RGB without clamping.
inline ColorImage yiq_to_rgb(const Tensor& yiq) {
  return detail::apply_matrix(yiq, rgb_from_yiq(), Eigen::Vector3d::Zero());
}

inline LuminanceSplit to_luminance(const ColorImage& img) {
  const Tensor yiq = rgb_to_yiq(img);
  const auto P = img.height() * img.width();
  LuminanceSplit s{Tensor(1, img.height(), img.width()), Tensor(2, img.height(), img.width())};
  std::copy_n(yiq.data().begin(), P, s.luminance.data().begin());
  std::copy_n(yiq.data().begin() + static_cast<std::ptrdiff_t>(P), 2 * P, s.chroma.data().begin());
  return s;
}

/// Stacks luminance and chroma back into YIQ.
inline Tensor stack_yiq(const Tensor& luminance, const Tensor& chroma) {
  if (luminance.channels() != 1 || chroma.channels() != 2 || luminance.height() != chroma.height() ||
      luminance.width() != chroma.width()) {
    throw ConfigError("stack_yiq: expected 1xHxW luminance and 2xHxW chroma");
  }
  Tensor yiq(3, luminance.height(), luminance.width());
  const auto P = luminance.size();
  std::copy_n(luminance.data().begin(), P, yiq.data().begin());
  std::copy_n(chroma.data().begin(), 2 * P, yiq.data().begin() + static_cast<std::ptrdiff_t>(P));
  return yiq;
}

inline ColorImage from_luminance(const Tensor& luminance, const Tensor& chroma, bool clamp = true) {
  ColorImage rgb = yiq_to_rgb(stack_yiq(luminance, chroma));
  if (clamp) detail::clamp_unit(rgb);
  return rgb;
}

/// Replicates a 1-channel image into 3 identical channels.
inline ColorImage replicate_channels(const Tensor& gray) {
  if (gray.channels() != 1) throw ConfigError("replicate_channels: expected one channel");
  ColorImage out(3, gray.height(), gray.width());
  for (std::size_t c = 0; c < 3; ++c) std::copy(gray.data().begin(), gray.data().end(), out.channel(c).begin());
  return out;
}

struct Moments1 {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

inline Moments1 moments(std::span<const float> values) {
  if (values.empty()) throw ConfigError("moments: empty input");
  double sum = 0.0;
  for (float v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (float v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

inline constexpr double luminance_sigma_epsilon = 1e-6;

/// Shifts and scales the style luminance to the content's mean and standard
/// deviation: L' = (sigma_C / sigma_S) (L_S - mu_S) + mu_C. No clamping.
inline Tensor match_luminance(const Tensor& style_l, const Tensor& content_l) {
  const auto s = moments(style_l.data());
  const auto c = moments(content_l.data());
  if (s.stddev <= luminance_sigma_epsilon) {
    throw NumericError("match_luminance: style luminance is constant");
  }
  const double gain = c.stddev / s.stddev;
  Tensor out(style_l.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(gain * (static_cast<double>(style_l[i]) - s.mean) + c.mean);
  }
  return out;
}

/// Matching policy for the luminance pipeline: pre-match when the means differ
/// by more than 0.1 or the deviation ratio leaves [0.5, 2].
struct LuminanceMatchPolicy {
  double max_mean_gap = 0.1;
  double min_sigma_ratio = 0.5;
  double max_sigma_ratio = 2.0;

  bool should_match(const Tensor& style_l, const Tensor& content_l) const {
    const auto s = moments(style_l.data());
    const auto c = moments(content_l.data());
    if (std::abs(s.mean - c.mean) > max_mean_gap) return true;
    if (s.stddev <= luminance_sigma_epsilon) return false;
    const double ratio = c.stddev / s.stddev;
    return ratio < min_sigma_ratio || ratio > max_sigma_ratio;
  }
};

/// Affine RGB map p' = A p + b.
struct ColorTransform {
  Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();

  static ColorTransform identity() { return {}; }
};

struct ColorMoments {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // population
};

template <typename T>
ColorMoments color_moments(const BasicTensor<T>& img) {
  if (img.channels() != 3) throw ConfigError("color_moments: expected 3 channels");
  const auto P = img.height() * img.width();
  if (P == 0) throw ConfigError("color_moments: empty image");
  const auto* d = img.data().data();
  ColorMoments m;
  for (std::size_t p = 0; p < P; ++p) m.mean += Eigen::Vector3d(d[p], d[P + p], d[2 * P + p]);
  m.mean /= static_cast<double>(P);
  for (std::size_t p = 0; p < P; ++p) {
    const Eigen::Vector3d v = Eigen::Vector3d(d[p], d[P + p], d[2 * P + p]) - m.mean;
    m.covariance += v * v.transpose();
  }
  m.covariance /= static_cast<double>(P);
  return m;
}

enum class MatrixRoot { eigen, cholesky };

inline constexpr double covariance_regulariser = 1e-8;

/// Transform whose output has the target's colour mean and covariance when
/// applied to the source. Eigen mode: A = S_t^{1/2} S_s^{-1/2} with symmetric
/// square roots; Cholesky mode: A = L_t L_s^{-1}. Both covariances get
/// 1e-8 I added first.
inline ColorTransform fit_color_transform(const ColorMoments& source, const ColorMoments& target,
                                          MatrixRoot root = MatrixRoot::eigen) {
  const Eigen::Matrix3d reg = covariance_regulariser * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d cs = source.covariance + reg;
  const Eigen::Matrix3d ct = target.covariance + reg;
  if (!cs.allFinite() || !ct.allFinite() || !source.mean.allFinite() || !target.mean.allFinite()) {
    throw NumericError("fit_color_transform: non-finite colour statistics");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cs);
  // A rank-deficient source (e.g. a gray ramp) is fine once regularised; a
  // source with no colour variance at all is not.
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.5 * covariance_regulariser ||
      es.eigenvalues().maxCoeff() <= 2.0 * covariance_regulariser) {
    throw NumericError("fit_color_transform: source covariance is singular");
  }
  ColorTransform t;
  if (root == MatrixRoot::eigen) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> et(ct);
    if (et.info() != Eigen::Success || et.eigenvalues().minCoeff() < 0.0) {
      throw NumericError("fit_color_transform: target covariance is not positive semi-definite");
    }
    t.a = et.operatorSqrt() * es.operatorInverseSqrt();
  } else {
    Eigen::LLT<Eigen::Matrix3d> ls(cs);
    Eigen::LLT<Eigen::Matrix3d> lt(ct);
    if (ls.info() != Eigen::Success || lt.info() != Eigen::Success) {
      throw NumericError("fit_color_transform: Cholesky factorisation failed");
    }
    const Eigen::Matrix3d lsm = ls.matrixL();
    const Eigen::Matrix3d ltm = lt.matrixL();
    t.a = ltm * lsm.inverse();
  }
  t.b = target.mean - t.a * source.mean;
  return t;
}

inline ColorTransform fit_color_transform(const ColorImage& source, const ColorImage& target,
                                          MatrixRoot root = MatrixRoot::eigen) {
  return fit_color_transform(color_moments(source), color_moments(target), root);
}

/// Applies p' = A p + b per pixel; clamps to [0,1] unless told otherwise.
inline ColorImage apply_color_transform(const ColorImage& img, const ColorTransform& t, bool clamp = true) {
  ColorImage out = detail::apply_matrix(img, t.a, t.b);
  if (clamp) detail::clamp_unit(out);
  return out;
}

}  // namespace stylectl
