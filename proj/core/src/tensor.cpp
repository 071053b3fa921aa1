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

#include "vegscan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vegscan {

std::size_t shape_volume(const Shape& shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.height(), img.width());
  const auto r = img.plane(0);
  const auto g = img.plane(1);
  const auto b = img.plane(2);
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double luma = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    dst[i] = std::clamp(std::floor(luma + 0.5), 0.0, 255.0);
  }
  return out;
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

// Source taps along one axis for half-pixel-centered bilinear sampling.
std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double max_pos = static_cast<double>(in - 1);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, max_pos);
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <std::size_t C>
PlanarImage<C> resize_bilinear(const PlanarImage<C>& img, std::size_t out_h, std::size_t out_w) {
  if (img.height() == 0 || img.width() == 0) {
    throw InvalidArgument("resize_bilinear: source image is empty");
  }
  if (out_h == 0 || out_w == 0) {
    throw InvalidArgument("resize_bilinear: output size must be at least 1x1");
  }
  if (out_h == img.height() && out_w == img.width()) return img;

  const auto ytaps = bilinear_taps(img.height(), out_h);
  const auto xtaps = bilinear_taps(img.width(), out_w);
  PlanarImage<C> out(out_h, out_w);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < out_h; ++y) {
      const Tap& ty = ytaps[y];
      for (std::size_t x = 0; x < out_w; ++x) {
        const Tap& tx = xtaps[x];
        const double top = img.at(c, ty.lo, tx.lo) * (1.0 - tx.frac) + img.at(c, ty.lo, tx.hi) * tx.frac;
        const double bot = img.at(c, ty.hi, tx.lo) * (1.0 - tx.frac) + img.at(c, ty.hi, tx.hi) * tx.frac;
        out.at(c, y, x) = top * (1.0 - ty.frac) + bot * ty.frac;
      }
    }
  }
  return out;
}

template <std::size_t C>
PlanarImage<C> hflip(const PlanarImage<C>& img) {
  PlanarImage<C> out(img.height(), img.width());
  const std::size_t w = img.width();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y, w - 1 - x);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> hflip(const BasicTensor<T>& t) {
  if (t.rank() < 2) throw InvalidArgument("hflip: tensor rank must be at least 2");
  BasicTensor<T> out(t.shape());
  const std::size_t w = t.shape().back();
  const std::size_t rows = t.size() / w;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = t.raw() + r * w;
    T* dst = out.raw() + r * w;
    for (std::size_t x = 0; x < w; ++x) dst[x] = src[w - 1 - x];
  }
  return out;
}

template <std::size_t C>
Tensor image_to_tensor(const PlanarImage<C>& img, double scale) {
  Tensor out({C, img.height(), img.width()});
  const auto src = img.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<float>(src[i] * scale);
  return out;
}

template PlanarImage<1> resize_bilinear(const PlanarImage<1>&, std::size_t, std::size_t);
template PlanarImage<3> resize_bilinear(const PlanarImage<3>&, std::size_t, std::size_t);
template PlanarImage<1> hflip(const PlanarImage<1>&);
template PlanarImage<3> hflip(const PlanarImage<3>&);
template Tensor hflip(const Tensor&);
template TensorD hflip(const TensorD&);
template Tensor image_to_tensor(const PlanarImage<1>&, double);
template Tensor image_to_tensor(const PlanarImage<3>&, double);

}  // namespace vegscan
