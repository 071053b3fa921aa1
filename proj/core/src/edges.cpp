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

#include "vegscan/edges.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vegscan {

std::size_t EdgeMap::count() const noexcept {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

GradientField sobel_gradients(const GrayImage& img) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  if (h < 3 || w < 3) {
    throw InvalidArgument("sobel_gradients: image must be at least 3x3, got " + std::to_string(h) +
                          "x" + std::to_string(w));
  }
  GradientField f;
  f.height = h;
  f.width = w;
  f.gx.resize(h * w);
  f.gy.resize(h * w);
  f.magnitude.resize(h * w);
  f.orientation.resize(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t ym = y == 0 ? 0 : y - 1;
    const std::size_t yp = y + 1 == h ? y : y + 1;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xm = x == 0 ? 0 : x - 1;
      const std::size_t xp = x + 1 == w ? x : x + 1;
      const double gx = img.at(y, xp) - img.at(y, xm);
      const double gy = img.at(yp, x) - img.at(ym, x);
      const std::size_t i = y * w + x;
      f.gx[i] = gx;
      f.gy[i] = gy;
      f.magnitude[i] = std::sqrt(gx * gx + gy * gy);
      f.orientation[i] = std::atan2(gy, gx);
    }
  }
  return f;
}

namespace {

// 5x5 Gaussian, sigma 1.4, integer weights summing to 159.
constexpr int kGauss[5][5] = {
    {2, 4, 5, 4, 2}, {4, 9, 12, 9, 4}, {5, 12, 15, 12, 5}, {4, 9, 12, 9, 4}, {2, 4, 5, 4, 2}};
constexpr double kGaussSum = 159.0;

inline std::size_t clamp_index(long i, std::size_t n) {
  return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
}

// Blurred image scaled by kGaussSum (exact for integer inputs).
std::vector<double> gaussian_blur_scaled(const GrayImage& img) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  std::vector<double> out(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -2; dy <= 2; ++dy) {
        const std::size_t yy = clamp_index(static_cast<long>(y) + dy, h);
        for (int dx = -2; dx <= 2; ++dx) {
          const std::size_t xx = clamp_index(static_cast<long>(x) + dx, w);
          acc += kGauss[dy + 2][dx + 2] * img.at(yy, xx);
        }
      }
      out[y * w + x] = acc;
    }
  }
  return out;
}

}  // namespace

EdgeMap canny(const GrayImage& img, double low, double high) {
  if (low < 0.0 || low > high) {
    throw InvalidArgument("canny: thresholds must satisfy 0 <= low <= high");
  }
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  EdgeMap edges(h, w);
  if (h == 0 || w == 0) return edges;

  const std::vector<double> blur = gaussian_blur_scaled(img);
  auto b = [&](long y, long x) { return blur[clamp_index(y, h) * w + clamp_index(x, w)]; };

  std::vector<double> gx(h * w);
  std::vector<double> gy(h * w);
  std::vector<double> mag2(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const long yy = static_cast<long>(y);
      const long xx = static_cast<long>(x);
      const double dx = (b(yy - 1, xx + 1) + 2.0 * b(yy, xx + 1) + b(yy + 1, xx + 1)) -
                        (b(yy - 1, xx - 1) + 2.0 * b(yy, xx - 1) + b(yy + 1, xx - 1));
      const double dy = (b(yy + 1, xx - 1) + 2.0 * b(yy + 1, xx) + b(yy + 1, xx + 1)) -
                        (b(yy - 1, xx - 1) + 2.0 * b(yy - 1, xx) + b(yy - 1, xx + 1));
      const std::size_t i = y * w + x;
      gx[i] = dx;
      gy[i] = dy;
      mag2[i] = dx * dx + dy * dy;
    }
  }

  // Squared thresholds in the scaled domain.
  const double low2 = (low * kGaussSum) * (low * kGaussSum);
  const double high2 = (high * kGaussSum) * (high * kGaussSum);
  const double tan22 = std::tan(M_PI / 8.0);
  const double tan67 = std::tan(3.0 * M_PI / 8.0);

  auto mag_at = [&](long y, long x) -> double {
    if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) return 0.0;
    return mag2[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };

  // 0 = not a candidate, 1 = weak, 2 = strong.
  std::vector<std::uint8_t> state(h * w, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      const double m = mag2[i];
      if (m == 0.0 || m < low2) continue;
      const double ax = std::fabs(gx[i]);
      const double ay = std::fabs(gy[i]);
      // Signed step toward increasing intensity along the quantized direction.
      int sx = 0;
      int sy = 0;
      if (ay < tan22 * ax) {
        sx = gx[i] > 0 ? 1 : -1;
      } else if (ay > tan67 * ax) {
        sy = gy[i] > 0 ? 1 : -1;
      } else {
        sx = gx[i] > 0 ? 1 : -1;
        sy = gy[i] > 0 ? 1 : -1;
      }
      const long yy = static_cast<long>(y);
      const long xx = static_cast<long>(x);
      const double ahead = mag_at(yy + sy, xx + sx);
      const double behind = mag_at(yy - sy, xx - sx);
      if (m > ahead && m >= behind) state[i] = m >= high2 ? 2 : 1;
    }
  }

  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < h * w; ++i) {
    if (state[i] == 2) {
      edges.values[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const long y = static_cast<long>(i / w);
    const long x = static_cast<long>(i % w);
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        const long ny = y + dy;
        const long nx = x + dx;
        if (ny < 0 || nx < 0 || ny >= static_cast<long>(h) || nx >= static_cast<long>(w)) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
        if (state[j] != 0 && edges.values[j] == 0) {
          edges.values[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  return edges;
}

}  // namespace vegscan
