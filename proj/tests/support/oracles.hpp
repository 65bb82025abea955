#pragma once

// Reference implementations used as test oracles. Deliberately naive: plain
// loops over explicit index formulas, double accumulation, no shared code
// with the library beyond the tensor container.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "stylectl/tensor.hpp"

namespace oracle {

using stylectl::BasicTensor;

template <typename T = double>
BasicTensor<T> random_tensor(std::size_t c, std::size_t h, std::size_t w, std::mt19937_64& rng, double lo = -1.0,
                             double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  BasicTensor<T> t(c, h, w);
  for (auto& v : t.data()) v = static_cast<T>(u(rng));
  return t;
}

/// Zero-padded 3x3 correlation plus bias, weights laid out (out, in, 3, 3).
inline BasicTensor<double> conv3x3(const BasicTensor<double>& in, const std::vector<float>& weights,
                                   const std::vector<float>& bias, std::size_t out_channels) {
  const auto C = in.channels(), H = in.height(), W = in.width();
  BasicTensor<double> out(out_channels, H, W);
  for (std::size_t o = 0; o < out_channels; ++o)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        double s = bias[o];
        for (std::size_t i = 0; i < C; ++i)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const long yy = static_cast<long>(y) + ky - 1;
              const long xx = static_cast<long>(x) + kx - 1;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(H) || xx >= static_cast<long>(W)) continue;
              s += static_cast<double>(weights[((o * C + i) * 3 + static_cast<std::size_t>(ky)) * 3 +
                                               static_cast<std::size_t>(kx)]) *
                   in(i, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            }
        out(o, y, x) = s;
      }
  return out;
}

inline BasicTensor<double> relu(const BasicTensor<double>& in) {
  BasicTensor<double> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  return out;
}

inline BasicTensor<double> pool2x2(const BasicTensor<double>& in, bool max) {
  BasicTensor<double> out(in.channels(), in.height() / 2, in.width() / 2);
  for (std::size_t c = 0; c < out.channels(); ++c)
    for (std::size_t y = 0; y < out.height(); ++y)
      for (std::size_t x = 0; x < out.width(); ++x) {
        const double a = in(c, 2 * y, 2 * x), b = in(c, 2 * y, 2 * x + 1);
        const double d = in(c, 2 * y + 1, 2 * x), e = in(c, 2 * y + 1, 2 * x + 1);
        out(c, y, x) = max ? std::max(std::max(a, b), std::max(d, e)) : (a + b + d + e) / 4.0;
      }
  return out;
}

/// (1/M) sum_p F_i(p) F_j(p)
template <typename T>
Eigen::MatrixXd gram(const BasicTensor<T>& f) {
  const auto N = f.channels(), M = f.height() * f.width();
  Eigen::MatrixXd g(N, N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < M; ++p) s += static_cast<double>(f[i * M + p]) * static_cast<double>(f[j * M + p]);
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s / static_cast<double>(M);
    }
  return g;
}

/// sum_p T(p)^2 F_i(p) F_j(p), no 1/M.
template <typename T>
Eigen::MatrixXd guided_gram(const BasicTensor<T>& f, const BasicTensor<double>& t) {
  const auto N = f.channels(), M = f.height() * f.width();
  Eigen::MatrixXd g(N, N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < M; ++p) {
        s += t[p] * t[p] * static_cast<double>(f[i * M + p]) * static_cast<double>(f[j * M + p]);
      }
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
    }
  return g;
}

/// Builds [F; T1; ...; TR] as an explicit tensor, then takes the plain Gram.
template <typename T>
Eigen::MatrixXd stacked_gram(const BasicTensor<T>& f, const std::vector<BasicTensor<double>>& guides) {
  const auto N = f.channels(), H = f.height(), W = f.width();
  BasicTensor<double> stacked(N + guides.size(), H, W);
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) stacked(c, y, x) = static_cast<double>(f(c, y, x));
  for (std::size_t r = 0; r < guides.size(); ++r)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) stacked(N + r, y, x) = guides[r](0, y, x);
  return gram(stacked);
}

inline double content_loss(const BasicTensor<double>& f, const BasicTensor<double>& target) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] - target[i]) * (f[i] - target[i]);
  return s / static_cast<double>(f.size());
}

inline double gram_match(const Eigen::MatrixXd& g, const Eigen::MatrixXd& target, double n, double w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) s += (g(i, j) - target(i, j)) * (g(i, j) - target(i, j));
  return w * s / (4.0 * n * n);
}

/// Central finite difference of f at every coordinate of x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Unit-length random direction.
inline std::vector<double> random_direction(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> d(n);
  double s = 0.0;
  for (auto& v : d) {
    v = g(rng);
    s += v * v;
  }
  for (auto& v : d) v /= std::sqrt(s);
  return d;
}

/// Central difference along a fixed direction d: (f(x + h d) - f(x - h d)) / 2h.
inline double directional_derivative(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& x, const std::vector<double>& d, double h) {
  std::vector<double> xp(x), xm(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] += h * d[i];
    xm[i] -= h * d[i];
  }
  return (f(xp) - f(xm)) / (2.0 * h);
}

/// ||a - b|| / max(||a||, ||b||, tiny)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// Population mean and covariance of the RGB values of a 3-channel image.
template <typename T>
std::pair<Eigen::Vector3d, Eigen::Matrix3d> rgb_moments(const BasicTensor<T>& img) {
  const auto P = img.height() * img.width();
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t p = 0; p < P; ++p) mean[static_cast<Eigen::Index>(c)] += img[c * P + p];
  }
  mean /= static_cast<double>(P);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      double s = 0.0;
      for (std::size_t p = 0; p < P; ++p) {
        s += (img[a * P + p] - mean[static_cast<Eigen::Index>(a)]) * (img[b * P + p] - mean[static_cast<Eigen::Index>(b)]);
      }
      cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s / static_cast<double>(P);
    }
  return {mean, cov};
}

}  // namespace oracle
