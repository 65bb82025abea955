#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stylectl/error.hpp"

namespace stylectl {

struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane() const noexcept { return height * width; }
  std::size_t size() const noexcept { return channels * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    return "(" + std::to_string(channels) + ", " + std::to_string(height) + ", " +
           std::to_string(width) + ")";
  }
};

/// Dense (channels, height, width) array stored contiguously in row-major order.
///
/// Images, activations and gradients are all represented by this type. The
/// scalar parameter exists so that gradient checks can run the same kernels in
/// double precision; production code uses `Tensor` (float).
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  BasicTensor(std::size_t channels, std::size_t height, std::size_t width, T fill = T{})
      : shape_{channels, height, width}, data_(channels * height * width, fill) {}

  explicit BasicTensor(Shape shape, T fill = T{})
      : BasicTensor(shape.channels, shape.height, shape.width, fill) {}

  BasicTensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_.str());
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  const T& operator()(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  std::span<T> channel(std::size_t c) noexcept {
    return std::span<T>(data_).subspan(c * shape_.plane(), shape_.plane());
  }
  std::span<const T> channel(std::size_t c) const noexcept {
    return std::span<const T>(data_).subspan(c * shape_.plane(), shape_.plane());
  }

  const std::vector<T>& values() const noexcept { return data_; }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(),
                   [](T v) { return static_cast<U>(v); });
    return BasicTensor<U>(shape_, std::move(out));
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Shape shape_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

template <typename T>
bool all_finite(const BasicTensor<T>& t) {
  return std::all_of(t.data().begin(), t.data().end(),
                     [](T v) { return std::isfinite(static_cast<double>(v)); });
}

template <typename T>
void require_finite(const BasicTensor<T>& t, const char* what) {
  if (!all_finite(t)) throw NumericError(std::string(what) + ": non-finite value in input");
}

template <typename T, typename U>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<U>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                      b.shape().str());
  }
}

/// Elementwise a += b.
template <typename T>
void accumulate(BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "accumulate");
  auto dst = a.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace stylectl
