#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stylectl/error.hpp"
#include "stylectl/tensor.hpp"

namespace stylectl {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Frozen 3x3 convolution, stride 1, zero padding 1.
///
/// Weights are laid out (out, in, 3, 3). A double-precision copy is kept so
/// that every kernel accumulates in 64 bits regardless of the storage type.
class ConvSpec {
 public:
  static constexpr std::size_t kernel = 3;
  static constexpr std::size_t taps = kernel * kernel;

  ConvSpec() = default;

  ConvSpec(std::size_t in_channels, std::size_t out_channels, std::vector<float> weights,
           std::vector<float> bias)
      : in_(in_channels), out_(out_channels), weights_(std::move(weights)), bias_(std::move(bias)) {
    if (in_ == 0 || out_ == 0) throw ConfigError("ConvSpec: channel counts must be positive");
    if (weights_.size() != out_ * in_ * taps) {
      throw ConfigError("ConvSpec: expected " + std::to_string(out_ * in_ * taps) +
                        " weights, got " + std::to_string(weights_.size()));
    }
    if (bias_.size() != out_) {
      throw ConfigError("ConvSpec: expected " + std::to_string(out_) + " biases, got " +
                        std::to_string(bias_.size()));
    }
    matrix_.resize(static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_ * taps));
    for (std::size_t i = 0; i < weights_.size(); ++i) matrix_.data()[i] = weights_[i];
  }

  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  const std::vector<float>& weights() const noexcept { return weights_; }
  const std::vector<float>& bias() const noexcept { return bias_; }

  float weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const noexcept {
    return weights_[((o * in_ + i) * kernel + ky) * kernel + kx];
  }

  /// (out) x (in * 9) row-major view of the weights in double precision.
  const RowMatrixXd& matrix() const noexcept { return matrix_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::vector<float> weights_;
  std::vector<float> bias_;
  RowMatrixXd matrix_;
};

enum class PoolKind { average, max };

/// 2x2 window, stride 2. Output size is floor(input / 2).
struct PoolSpec {
  PoolKind kind = PoolKind::average;
};

namespace detail {

// Upper bound on the im2col buffer, in doubles (32 MiB). Large images are
// processed in bands of output rows so memory stays flat. Not const so tests
// can force banding on small inputs.
inline std::size_t im2col_budget = std::size_t{1} << 22;

inline std::size_t band_rows(std::size_t channels, std::size_t height, std::size_t width) {
  const std::size_t per_row = channels * ConvSpec::taps * width;
  return std::clamp<std::size_t>(im2col_budget / std::max<std::size_t>(per_row, 1), 1, height);
}

// Rows index (channel, ky, kx); columns index output positions of rows [y0, y1).
template <typename T>
RowMatrixXd im2col(const BasicTensor<T>& in, std::size_t y0, std::size_t y1) {
  const auto C = in.channels();
  const auto H = in.height();
  const auto W = in.width();
  RowMatrixXd cols = RowMatrixXd::Zero(static_cast<Eigen::Index>(C * ConvSpec::taps),
                                       static_cast<Eigen::Index>((y1 - y0) * W));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* row = cols.row(static_cast<Eigen::Index>((c * 3 + ky) * 3 + kx)).data();
        for (std::size_t y = y0; y < y1; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t x = 0; x < W; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(W)) continue;
            row[(y - y0) * W + x] = static_cast<double>(in(c, static_cast<std::size_t>(sy),
                                                           static_cast<std::size_t>(sx)));
          }
        }
      }
    }
  }
  return cols;
}

template <typename T>
RowMatrixXd as_matrix(const BasicTensor<T>& t) {
  RowMatrixXd m(static_cast<Eigen::Index>(t.channels()), static_cast<Eigen::Index>(t.height() * t.width()));
  const auto src = t.data();
  for (std::size_t i = 0; i < src.size(); ++i) m.data()[i] = static_cast<double>(src[i]);
  return m;
}

template <typename T>
BasicTensor<T> from_matrix(const RowMatrixXd& m, std::size_t h, std::size_t w) {
  BasicTensor<T> out(static_cast<std::size_t>(m.rows()), h, w);
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(m.data()[i]);
  return out;
}

}  // namespace detail

template <typename T>
BasicTensor<T> conv_forward(const BasicTensor<T>& input, const ConvSpec& spec) {
  if (input.channels() != spec.in_channels()) {
    throw ConfigError("conv_forward: input has " + std::to_string(input.channels()) +
                      " channels, layer expects " + std::to_string(spec.in_channels()));
  }
  if (input.height() == 0 || input.width() == 0) throw ConfigError("conv_forward: empty input");
  require_finite(input, "conv_forward");

  const auto H = input.height();
  const auto W = input.width();
  BasicTensor<T> result(spec.out_channels(), H, W);
  const std::size_t band = detail::band_rows(input.channels(), H, W);
  for (std::size_t y0 = 0; y0 < H; y0 += band) {
    const std::size_t y1 = std::min(H, y0 + band);
    const RowMatrixXd out = spec.matrix() * detail::im2col(input, y0, y1);
    const std::size_t n = (y1 - y0) * W;
    for (std::size_t o = 0; o < spec.out_channels(); ++o) {
      const double b = static_cast<double>(spec.bias()[o]);
      const double* src = out.row(static_cast<Eigen::Index>(o)).data();
      T* dst = result.data().data() + o * H * W + y0 * W;
      for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<T>(src[i] + b);
    }
  }
  return result;
}

/// Gradient with respect to the input only; the weights are frozen.
template <typename T>
BasicTensor<T> conv_backward(const BasicTensor<T>& input, const ConvSpec& spec,
                             const BasicTensor<T>& grad_out) {
  if (input.channels() != spec.in_channels()) {
    throw ConfigError("conv_backward: input channel mismatch");
  }
  const Shape expected{spec.out_channels(), input.height(), input.width()};
  if (grad_out.shape() != expected) {
    throw ConfigError("conv_backward: grad_out shape " + grad_out.shape().str() +
                      " does not match output shape " + expected.str());
  }
  const auto H = input.height();
  const auto W = input.width();
  const auto Co = spec.out_channels();
  std::vector<double> acc(input.size(), 0.0);
  const std::size_t band = detail::band_rows(input.channels(), H, W);
  RowMatrixXd g;
  for (std::size_t y0 = 0; y0 < H; y0 += band) {
    const std::size_t y1 = std::min(H, y0 + band);
    const std::size_t n = (y1 - y0) * W;
    g.resize(static_cast<Eigen::Index>(Co), static_cast<Eigen::Index>(n));
    for (std::size_t o = 0; o < Co; ++o) {
      const T* src = grad_out.data().data() + o * H * W + y0 * W;
      double* dst = g.row(static_cast<Eigen::Index>(o)).data();
      for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<double>(src[i]);
    }
    const RowMatrixXd cols = spec.matrix().transpose() * g;
    for (std::size_t c = 0; c < input.channels(); ++c) {
      double* plane = acc.data() + c * H * W;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const double* row = cols.row(static_cast<Eigen::Index>((c * 3 + ky) * 3 + kx)).data();
          for (std::size_t y = y0; y < y1; ++y) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
            for (std::size_t x = 0; x < W; ++x) {
              const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(W)) continue;
              plane[static_cast<std::size_t>(sy) * W + static_cast<std::size_t>(sx)] += row[(y - y0) * W + x];
            }
          }
        }
      }
    }
  }
  BasicTensor<T> grad(input.shape());
  auto dst = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(acc[i]);
  return grad;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out(input.shape());
  auto src = input.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > T(0) ? src[i] : T(0);
  return out;
}

/// Subgradient at exactly zero is zero.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out) {
  require_same_shape(input, grad_out, "relu_backward");
  BasicTensor<T> out(input.shape());
  auto src = input.data();
  auto g = grad_out.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > T(0) ? g[i] : T(0);
  return out;
}

template <typename T>
BasicTensor<T> pool_forward(const BasicTensor<T>& input, const PoolSpec& spec) {
  if (input.height() < 2 || input.width() < 2) {
    throw ConfigError("pool_forward: input " + input.shape().str() + " is smaller than the 2x2 window");
  }
  const auto OH = input.height() / 2;
  const auto OW = input.width() / 2;
  BasicTensor<T> out(input.channels(), OH, OW);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    for (std::size_t y = 0; y < OH; ++y) {
      for (std::size_t x = 0; x < OW; ++x) {
        const T a = input(c, 2 * y, 2 * x);
        const T b = input(c, 2 * y, 2 * x + 1);
        const T d = input(c, 2 * y + 1, 2 * x);
        const T e = input(c, 2 * y + 1, 2 * x + 1);
        if (spec.kind == PoolKind::average) {
          out(c, y, x) = static_cast<T>((static_cast<double>(a) + static_cast<double>(b) +
                                         static_cast<double>(d) + static_cast<double>(e)) / 4.0);
        } else {
          out(c, y, x) = std::max({a, b, d, e});
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> pool_backward(const BasicTensor<T>& input, const PoolSpec& spec,
                             const BasicTensor<T>& grad_out) {
  const auto OH = input.height() / 2;
  const auto OW = input.width() / 2;
  if (grad_out.shape() != Shape{input.channels(), OH, OW}) {
    throw ConfigError("pool_backward: grad_out shape " + grad_out.shape().str() + " mismatch");
  }
  BasicTensor<T> grad(input.shape());
  for (std::size_t c = 0; c < input.channels(); ++c) {
    for (std::size_t y = 0; y < OH; ++y) {
      for (std::size_t x = 0; x < OW; ++x) {
        const T g = grad_out(c, y, x);
        if (spec.kind == PoolKind::average) {
          const T q = static_cast<T>(static_cast<double>(g) / 4.0);
          grad(c, 2 * y, 2 * x) += q;
          grad(c, 2 * y, 2 * x + 1) += q;
          grad(c, 2 * y + 1, 2 * x) += q;
          grad(c, 2 * y + 1, 2 * x + 1) += q;
        } else {
          // First index wins ties, scanning row-major within the window.
          std::size_t by = 2 * y;
          std::size_t bx = 2 * x;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              if (input(c, 2 * y + dy, 2 * x + dx) > input(c, by, bx)) {
                by = 2 * y + dy;
                bx = 2 * x + dx;
              }
            }
          }
          grad(c, by, bx) += g;
        }
      }
    }
  }
  return grad;
}

enum class ResampleMethod { bilinear, nearest };

namespace detail {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

// align_corners=false: source coordinate = (dst + 0.5) * in / out - 0.5, clamped.
inline std::vector<Tap> linear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const auto hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

inline std::vector<std::size_t> nearest_taps(std::size_t in, std::size_t out) {
  std::vector<std::size_t> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    const auto src = static_cast<std::size_t>(std::floor((static_cast<double>(i) + 0.5) * scale));
    taps[i] = std::min(src, in - 1);
  }
  return taps;
}

}  // namespace detail

/// Separable bilinear (align-corners=false) or nearest-neighbour resize.
template <typename T>
BasicTensor<T> resample(const BasicTensor<T>& input, std::size_t new_h, std::size_t new_w,
                        ResampleMethod method = ResampleMethod::bilinear) {
  if (new_h == 0 || new_w == 0) throw ConfigError("resample: target size must be positive");
  if (input.height() == 0 || input.width() == 0) throw ConfigError("resample: empty input");
  if (new_h == input.height() && new_w == input.width()) return input;

  BasicTensor<T> out(input.channels(), new_h, new_w);
  if (method == ResampleMethod::nearest) {
    const auto ty = detail::nearest_taps(input.height(), new_h);
    const auto tx = detail::nearest_taps(input.width(), new_w);
    for (std::size_t c = 0; c < input.channels(); ++c)
      for (std::size_t y = 0; y < new_h; ++y)
        for (std::size_t x = 0; x < new_w; ++x) out(c, y, x) = input(c, ty[y], tx[x]);
    return out;
  }

  const auto ty = detail::linear_taps(input.height(), new_h);
  const auto tx = detail::linear_taps(input.width(), new_w);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    for (std::size_t y = 0; y < new_h; ++y) {
      const auto& vy = ty[y];
      for (std::size_t x = 0; x < new_w; ++x) {
        const auto& vx = tx[x];
        const double top = static_cast<double>(input(c, vy.lo, vx.lo)) * (1.0 - vx.frac) +
                           static_cast<double>(input(c, vy.lo, vx.hi)) * vx.frac;
        const double bottom = static_cast<double>(input(c, vy.hi, vx.lo)) * (1.0 - vx.frac) +
                              static_cast<double>(input(c, vy.hi, vx.hi)) * vx.frac;
        out(c, y, x) = static_cast<T>(top * (1.0 - vy.frac) + bottom * vy.frac);
      }
    }
  }
  return out;
}

}  // namespace stylectl
