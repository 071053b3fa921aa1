// Copyright 2026 The vegscan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vegscan/errors.hpp"

namespace vegscan {

using Shape = std::vector<std::size_t>;

std::size_t shape_volume(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major N-dimensional array. Layouts used across the library:
/// images and feature stacks are C x H x W, batches are B x C x H x W.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {
    check_shape();
  }

  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.size() != shape_volume(shape_)) {
      throw InvalidArgument("tensor data length " + std::to_string(data_.size()) +
                            " does not match shape " + shape_to_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  template <typename... Idx>
  T& operator()(Idx... idx) noexcept {
    return data_[offset(idx...)];
  }
  template <typename... Idx>
  const T& operator()(Idx... idx) const noexcept {
    return data_[offset(idx...)];
  }

  /// Contiguous slice along the leading axis (e.g. one sample of a batch).
  std::span<T> slice(std::size_t i) noexcept {
    const std::size_t stride = data_.size() / shape_[0];
    return std::span<T>(data_).subspan(i * stride, stride);
  }
  std::span<const T> slice(std::size_t i) const noexcept {
    const std::size_t stride = data_.size() / shape_[0];
    return std::span<const T>(data_).subspan(i * stride, stride);
  }

  void reshape(Shape shape) {
    if (shape_volume(shape) != data_.size()) {
      throw InvalidArgument("cannot reshape " + shape_to_string(shape_) + " to " +
                            shape_to_string(shape));
    }
    shape_ = std::move(shape);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const noexcept {
    for (const T v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_shape() const {
    for (const std::size_t d : shape_) {
      if (d == 0) throw InvalidArgument("tensor dimensions must be positive: " + shape_to_string(shape_));
    }
  }

  template <typename... Idx>
  std::size_t offset(Idx... idx) const noexcept {
    const std::size_t index[] = {static_cast<std::size_t>(idx)...};
    std::size_t off = 0;
    for (std::size_t k = 0; k < sizeof...(Idx); ++k) off = off * shape_[k] + index[k];
    return off;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Planar image with a fixed channel count; values are intensities on the
/// [0, 255] scale kept as reals.
template <std::size_t Channels>
class PlanarImage {
 public:
  static constexpr std::size_t kChannels = Channels;

  PlanarImage() = default;
  PlanarImage(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), pixels_(Channels * height * width, fill) {}
  PlanarImage(std::size_t height, std::size_t width, std::vector<double> pixels)
      : height_(height), width_(width), pixels_(std::move(pixels)) {
    if (pixels_.size() != Channels * height * width) {
      throw InvalidArgument("image buffer size does not match dimensions");
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return Channels; }
  bool empty() const noexcept { return pixels_.empty(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return pixels_[(c * height_ + y) * width_ + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return pixels_[(c * height_ + y) * width_ + x];
  }
  double& at(std::size_t y, std::size_t x) noexcept
    requires(Channels == 1)
  {
    return pixels_[y * width_ + x];
  }
  double at(std::size_t y, std::size_t x) const noexcept
    requires(Channels == 1)
  {
    return pixels_[y * width_ + x];
  }

  std::span<double> plane(std::size_t c) noexcept {
    return std::span<double>(pixels_).subspan(c * height_ * width_, height_ * width_);
  }
  std::span<const double> plane(std::size_t c) const noexcept {
    return std::span<const double>(pixels_).subspan(c * height_ * width_, height_ * width_);
  }
  std::span<double> pixels() noexcept { return pixels_; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  /// True when every value lies in [0, 255] and is finite.
  bool in_range() const noexcept {
    for (const double v : pixels_) {
      if (!(v >= 0.0 && v <= 255.0)) return false;
    }
    return true;
  }

  friend bool operator==(const PlanarImage&, const PlanarImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> pixels_;
};

using RgbImage = PlanarImage<3>;
using GrayImage = PlanarImage<1>;

/// BT.601 luma, rounded half-up to an integer-valued real.
GrayImage to_grayscale(const RgbImage& img);

/// Bilinear resampling with half-pixel centers: output sample i reads the
/// source at (i + 0.5) * (in / out) - 0.5, clamped to the valid range.
template <std::size_t C>
PlanarImage<C> resize_bilinear(const PlanarImage<C>& img, std::size_t out_h, std::size_t out_w);

/// Mirror columns: x maps to (width - 1 - x).
template <std::size_t C>
PlanarImage<C> hflip(const PlanarImage<C>& img);

/// Mirror the last axis of a tensor of rank >= 2 (e.g. C x H x W).
template <typename T>
BasicTensor<T> hflip(const BasicTensor<T>& t);

/// Copy an image into a C x H x W tensor, scaling every value by \p scale.
template <std::size_t C>
Tensor image_to_tensor(const PlanarImage<C>& img, double scale = 1.0);

}  // namespace vegscan
