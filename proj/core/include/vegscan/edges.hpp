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

#include <cstdint>
#include <vector>

#include "vegscan/tensor.hpp"

namespace vegscan {

/// Per-pixel intensity gradients. Orientation is atan2(gy, gx) in (-pi, pi],
/// with y pointing down the image.
struct GradientField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> gx;
  std::vector<double> gy;
  std::vector<double> magnitude;
  std::vector<double> orientation;

  std::size_t index(std::size_t y, std::size_t x) const noexcept { return y * width + x; }
};

/// Binary edge mask, row-major, values in {0, 1}.
struct EdgeMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;

  EdgeMap() = default;
  EdgeMap(std::size_t h, std::size_t w) : height(h), width(w), values(h * w, 0) {}

  std::uint8_t& at(std::size_t y, std::size_t x) noexcept { return values[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const noexcept { return values[y * width + x]; }
  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
};

/// Central-difference gradients: gx = Y(y, x+1) - Y(y, x-1),
/// gy = Y(y+1, x) - Y(y-1, x), replicate padding at the border.
/// Requires at least a 3x3 image.
GradientField sobel_gradients(const GrayImage& img);

struct CannyConfig {
  double low = 50.0;
  double high = 150.0;
};

/// Canny edge detector: 5x5 Gaussian (sigma 1.4), 3x3 Sobel, non-maximum
/// suppression along one of four quantized directions, then hysteresis with
/// 8-connectivity. Thresholds apply to the L2 gradient magnitude of the
/// blurred image on the [0, 255] intensity scale.
///
/// Integer-valued inputs are processed in exact arithmetic, which makes the
/// output invariant to adding an integer constant and equivariant under
/// horizontal flips. On a gradient ridge that is two pixels wide, the pixel
/// on the brighter side is kept.
EdgeMap canny(const GrayImage& img, double low, double high);
inline EdgeMap canny(const GrayImage& img, const CannyConfig& cfg) { return canny(img, cfg.low, cfg.high); }

}  // namespace vegscan
