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

#include "vegscan/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace vegscan::nn {

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv:
      return "conv";
    case LayerKind::relu:
      return "relu";
    case LayerKind::maxpool:
      return "maxpool";
    case LayerKind::flatten:
      return "flatten";
    case LayerKind::dense:
      return "dense";
    case LayerKind::dropout:
      return "dropout";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride, std::size_t pad) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = pad;
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool(std::size_t kernel, std::size_t stride) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.kernel = kernel;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::flatten;
  return l;
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.in_features = in;
  l.out_features = out;
  return l;
}

LayerSpec LayerSpec::dropout(double p) {
  LayerSpec l;
  l.kind = LayerKind::dropout;
  l.drop_probability = p;
  return l;
}

std::vector<Shape> NetworkSpec::activation_shapes() const {
  std::vector<Shape> shapes{input_shape};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const Shape& in = shapes.back();
    auto fail = [&](const std::string& why) {
      throw InvalidArgument("layer " + std::to_string(i) + " (" + std::string(to_string(l.kind)) + "): " + why +
                            ", input shape " + shape_to_string(in));
    };
    switch (l.kind) {
      case LayerKind::conv: {
        if (in.size() != 3) fail("expects C x H x W input");
        if (l.kernel == 0 || l.stride == 0 || l.out_channels == 0) fail("kernel, stride and out_channels must be positive");
        if (in[0] != l.in_channels) fail("in_channels mismatch");
        if (in[1] + 2 * l.padding < l.kernel || in[2] + 2 * l.padding < l.kernel) fail("kernel larger than input");
        shapes.push_back({l.out_channels, (in[1] + 2 * l.padding - l.kernel) / l.stride + 1,
                          (in[2] + 2 * l.padding - l.kernel) / l.stride + 1});
        break;
      }
      case LayerKind::maxpool: {
        if (in.size() != 3) fail("expects C x H x W input");
        if (l.kernel == 0 || l.stride == 0) fail("kernel and stride must be positive");
        if (in[1] < l.kernel || in[2] < l.kernel) fail("pool window larger than input");
        shapes.push_back({in[0], (in[1] - l.kernel) / l.stride + 1, (in[2] - l.kernel) / l.stride + 1});
        break;
      }
      case LayerKind::flatten:
        shapes.push_back({shape_volume(in)});
        break;
      case LayerKind::dense:
        if (in.size() != 1) fail("expects a flattened input");
        if (in[0] != l.in_features) fail("in_features mismatch");
        if (l.out_features == 0) fail("out_features must be positive");
        shapes.push_back({l.out_features});
        break;
      case LayerKind::dropout:
        if (!(l.drop_probability >= 0.0 && l.drop_probability < 1.0)) fail("drop probability must be in [0, 1)");
        shapes.push_back(in);
        break;
      case LayerKind::relu:
        shapes.push_back(in);
        break;
    }
    if (!(l.lr_multiplier >= 0.0)) fail("lr_multiplier must be non-negative");
  }
  return shapes;
}

void NetworkSpec::validate() const {
  if (input_shape.size() != 3 || shape_volume(input_shape) == 0) {
    throw InvalidArgument("network input shape must be C x H x W");
  }
  const auto shapes = activation_shapes();
  if (shapes.back().size() != 1) throw InvalidArgument("network must end in a vector of class scores");
}

std::size_t NetworkSpec::num_outputs() const { return activation_shapes().back().at(0); }

std::uint64_t NetworkSpec::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 1099511628211ULL;
    }
  };
  for (const std::size_t d : input_shape) mix(d);
  for (const LayerSpec& l : layers) {
    mix(static_cast<std::uint64_t>(l.kind));
    mix(l.in_channels);
    mix(l.out_channels);
    mix(l.kernel);
    mix(l.stride);
    mix(l.padding);
    mix(l.in_features);
    mix(l.out_features);
    mix(static_cast<std::uint64_t>(std::llround(l.drop_probability * 1e6)));
  }
  return h;
}

std::vector<std::size_t> NetworkSpec::parameter_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].has_parameters()) out.push_back(i);
  }
  return out;
}

void NetworkSpec::set_lr_policy(double outer, double middle) {
  const auto params = parameter_layers();
  for (std::size_t k = 0; k < params.size(); ++k) {
    LayerSpec& l = layers[params[k]];
    l.lr_multiplier = (k == 0 || l.kind == LayerKind::dense) ? outer : middle;
  }
}

void NetworkSpec::freeze_middle() {
  const auto params = parameter_layers();
  for (std::size_t k = 0; k < params.size(); ++k) {
    LayerSpec& l = layers[params[k]];
    l.trainable = k == 0 || l.kind == LayerKind::dense;
  }
}

NetworkSpec NetworkSpec::small_net(std::size_t in_channels, std::size_t size, std::size_t classes) {
  if (size % 8 != 0) throw InvalidArgument("small_net: input size must be divisible by 8");
  NetworkSpec s;
  s.input_shape = {in_channels, size, size};
  const std::size_t reduced = size / 8;
  s.layers = {LayerSpec::conv(in_channels, 16, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
              LayerSpec::conv(16, 32, 3, 1, 1),           LayerSpec::relu(), LayerSpec::maxpool(2, 2),
              LayerSpec::conv(32, 64, 3, 1, 1),           LayerSpec::relu(), LayerSpec::maxpool(2, 2),
              LayerSpec::flatten(),                       LayerSpec::dense(64 * reduced * reduced, 128),
              LayerSpec::relu(),                          LayerSpec::dropout(0.5),
              LayerSpec::dense(128, classes)};
  s.set_lr_policy(1.0, 1e-3);
  return s;
}

template <typename T>
std::size_t Parameters<T>::count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

template <typename T>
Parameters<T> Parameters<T>::zeros_like() const {
  Parameters out;
  out.layers.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].weight.empty()) out.layers[i].weight = BasicTensor<T>(layers[i].weight.shape());
    if (!layers[i].bias.empty()) out.layers[i].bias = BasicTensor<T>(layers[i].bias.shape());
  }
  return out;
}

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;
template <typename T>
using CMapVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

struct ConvGeometry {
  std::size_t c, h, w, k, stride, pad, ho, wo;
  std::size_t patch() const { return c * k * k; }
  std::size_t out_plane() const { return ho * wo; }
};

ConvGeometry conv_geometry(const LayerSpec& l, const Shape& in) {
  return {in[0], in[1], in[2], l.kernel, l.stride, l.padding,
          (in[1] + 2 * l.padding - l.kernel) / l.stride + 1, (in[2] + 2 * l.padding - l.kernel) / l.stride + 1};
}

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const long pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* row = col + ((c * g.k + ky) * g.k + kx) * g.out_plane();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - pad;
          T* dst = row + oy * g.wo;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.wo, T{0});
            continue;
          }
          const T* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - pad;
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* dx) {
  const long pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* row = col + ((c * g.k + ky) * g.k + kx) * g.out_plane();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          T* dst = dx + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const T* src = row + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - pad;
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
BasicTensor<T> conv_forward(const LayerSpec& l, const LayerTensors<T>& p, const BasicTensor<T>& x) {
  const std::size_t batch = x.dim(0);
  const ConvGeometry g = conv_geometry(l, {x.dim(1), x.dim(2), x.dim(3)});
  BasicTensor<T> y({batch, l.out_channels, g.ho, g.wo});
  std::vector<T> col(g.patch() * g.out_plane());
  const CMapRM<T> wm(p.weight.raw(), static_cast<Eigen::Index>(l.out_channels), static_cast<Eigen::Index>(g.patch()));
  const CMapVec<T> bias(p.bias.raw(), static_cast<Eigen::Index>(l.out_channels));
  const CMapRM<T> cm(col.data(), static_cast<Eigen::Index>(g.patch()), static_cast<Eigen::Index>(g.out_plane()));
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(x.slice(b).data(), g, col.data());
    MapRM<T> ym(y.slice(b).data(), static_cast<Eigen::Index>(l.out_channels), static_cast<Eigen::Index>(g.out_plane()));
    ym.noalias() = wm * cm;
    ym.colwise() += bias;
  }
  return y;
}

template <typename T>
void conv_backward(const LayerSpec& l, const LayerTensors<T>& p, const BasicTensor<T>& x, const BasicTensor<T>& dy,
                   LayerTensors<T>* grads, BasicTensor<T>* dx) {
  const std::size_t batch = x.dim(0);
  const ConvGeometry g = conv_geometry(l, {x.dim(1), x.dim(2), x.dim(3)});
  const auto out = static_cast<Eigen::Index>(l.out_channels);
  const auto patch = static_cast<Eigen::Index>(g.patch());
  const auto plane = static_cast<Eigen::Index>(g.out_plane());
  std::vector<T> col(g.patch() * g.out_plane());
  const CMapRM<T> wm(p.weight.raw(), out, patch);
  MapRM<T> colm(col.data(), patch, plane);
  for (std::size_t b = 0; b < batch; ++b) {
    const CMapRM<T> dym(dy.slice(b).data(), out, plane);
    if (grads) {
      im2col(x.slice(b).data(), g, col.data());
      MapRM<T> dw(grads->weight.raw(), out, patch);
      dw.noalias() += dym * colm.transpose();
      // Plain loops: Eigen reductions peel by address alignment, which would
      // make the summation order (and the bits) depend on the heap layout.
      const T* d = dy.slice(b).data();
      for (Eigen::Index o = 0; o < out; ++o) {
        T s{0};
        for (Eigen::Index k = 0; k < plane; ++k) s += d[o * plane + k];
        grads->bias[static_cast<std::size_t>(o)] += s;
      }
    }
    if (dx) {
      colm.noalias() = wm.transpose() * dym;
      col2im_add(col.data(), g, dx->slice(b).data());
    }
  }
}

template <typename T>
BasicTensor<T> dense_forward(const LayerSpec& l, const LayerTensors<T>& p, const BasicTensor<T>& x) {
  const auto batch = static_cast<Eigen::Index>(x.dim(0));
  const auto in = static_cast<Eigen::Index>(l.in_features);
  const auto out = static_cast<Eigen::Index>(l.out_features);
  BasicTensor<T> y({x.dim(0), l.out_features});
  const CMapRM<T> xm(x.raw(), batch, in);
  const CMapRM<T> wm(p.weight.raw(), out, in);
  MapRM<T> ym(y.raw(), batch, out);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += CMapVec<T>(p.bias.raw(), out).transpose();
  return y;
}

template <typename T>
void dense_backward(const LayerSpec& l, const LayerTensors<T>& p, const BasicTensor<T>& x, const BasicTensor<T>& dy,
                    LayerTensors<T>* grads, BasicTensor<T>* dx) {
  const auto batch = static_cast<Eigen::Index>(x.dim(0));
  const auto in = static_cast<Eigen::Index>(l.in_features);
  const auto out = static_cast<Eigen::Index>(l.out_features);
  const CMapRM<T> xm(x.raw(), batch, in);
  const CMapRM<T> dym(dy.raw(), batch, out);
  if (grads) {
    MapRM<T> dw(grads->weight.raw(), out, in);
    dw.noalias() += dym.transpose() * xm;
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (Eigen::Index o = 0; o < out; ++o) grads->bias[static_cast<std::size_t>(o)] += dy[static_cast<std::size_t>(b * out + o)];
    }
  }
  if (dx) {
    const CMapRM<T> wm(p.weight.raw(), out, in);
    MapRM<T> dxm(dx->raw(), batch, in);
    dxm.noalias() = dym * wm;
  }
}

template <typename T>
BasicTensor<T> maxpool_forward(const LayerSpec& l, const BasicTensor<T>& x, std::vector<std::uint32_t>* argmax) {
  const std::size_t batch = x.dim(0);
  const std::size_t c = x.dim(1);
  const std::size_t h = x.dim(2);
  const std::size_t w = x.dim(3);
  const std::size_t ho = (h - l.kernel) / l.stride + 1;
  const std::size_t wo = (w - l.kernel) / l.stride + 1;
  BasicTensor<T> y({batch, c, ho, wo});
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t o = 0;
  for (std::size_t bc = 0; bc < batch * c; ++bc) {
    const T* src = x.raw() + bc * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox, ++o) {
        std::size_t best = oy * l.stride * w + ox * l.stride;
        for (std::size_t ky = 0; ky < l.kernel; ++ky) {
          for (std::size_t kx = 0; kx < l.kernel; ++kx) {
            const std::size_t idx = (oy * l.stride + ky) * w + ox * l.stride + kx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        y[o] = src[best];
        if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return y;
}

template <typename T>
void maxpool_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy, const std::vector<std::uint32_t>& argmax,
                      BasicTensor<T>& dx) {
  const std::size_t plane_in = x.dim(2) * x.dim(3);
  const std::size_t plane_out = dy.dim(2) * dy.dim(3);
  for (std::size_t o = 0; o < dy.size(); ++o) {
    dx[(o / plane_out) * plane_in + argmax[o]] += dy[o];
  }
}

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (layer + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename T>
void check_params(const NetworkSpec& spec, const Parameters<T>& params) {
  if (params.layers.size() != spec.layers.size()) {
    throw InvalidArgument("parameters have " + std::to_string(params.layers.size()) + " layers, spec has " +
                          std::to_string(spec.layers.size()));
  }
  const auto shapes = spec.activation_shapes();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    Shape wshape;
    Shape bshape;
    if (l.kind == LayerKind::conv) {
      wshape = {l.out_channels, l.in_channels, l.kernel, l.kernel};
      bshape = {l.out_channels};
    } else if (l.kind == LayerKind::dense) {
      wshape = {l.out_features, l.in_features};
      bshape = {l.out_features};
    } else {
      continue;
    }
    if (params.layers[i].weight.shape() != wshape || params.layers[i].bias.shape() != bshape) {
      throw InvalidArgument("parameter shape mismatch at layer " + std::to_string(i) + ": expected " +
                            shape_to_string(wshape));
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> forward(const NetworkSpec& spec, const Parameters<T>& params, const BasicTensor<T>& batch, Mode mode,
                       std::uint64_t seed, ForwardCache<T>* cache) {
  check_params(spec, params);
  if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != spec.input_shape) {
    throw InvalidArgument("forward: batch shape " + shape_to_string(batch.shape()) + " does not match input " +
                          shape_to_string(spec.input_shape));
  }
  const std::size_t n = spec.layers.size();
  if (cache) {
    cache->inputs.assign(n, {});
    cache->argmax.assign(n, {});
    cache->masks.assign(n, {});
    cache->valid = false;
  }
  BasicTensor<T> x = batch;
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = spec.layers[i];
    BasicTensor<T> y;
    switch (l.kind) {
      case LayerKind::conv:
        y = conv_forward(l, params.layers[i], x);
        break;
      case LayerKind::dense:
        y = dense_forward(l, params.layers[i], x);
        break;
      case LayerKind::relu:
        y = x;
        for (T& v : y.data()) v = v > T{0} ? v : T{0};
        break;
      case LayerKind::maxpool:
        y = maxpool_forward(l, x, cache ? &cache->argmax[i] : nullptr);
        break;
      case LayerKind::flatten:
        y = x;
        y.reshape({x.dim(0), x.size() / x.dim(0)});
        break;
      case LayerKind::dropout:
        y = x;
        if (mode == Mode::train && l.drop_probability > 0.0) {
          BasicTensor<T> mask(x.shape());
          std::mt19937_64 rng(layer_seed(seed, i));
          std::bernoulli_distribution keep(1.0 - l.drop_probability);
          const T scale = static_cast<T>(1.0 / (1.0 - l.drop_probability));
          for (std::size_t k = 0; k < mask.size(); ++k) {
            mask[k] = keep(rng) ? scale : T{0};
            y[k] *= mask[k];
          }
          if (cache) cache->masks[i] = std::move(mask);
        }
        break;
    }
    if (cache) {
      cache->inputs[i] = std::move(x);
    }
    x = std::move(y);
  }
  if (cache) {
    cache->scores = x;
    cache->valid = true;
  }
  return x;
}

double sample_cross_entropy(std::span<const double> scores, int label, double weight) {
  if (label < 0 || static_cast<std::size_t>(label) >= scores.size()) {
    throw InvalidArgument("cross entropy: label " + std::to_string(label) + " out of range");
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (const double s : scores) sum += std::exp(s - m);
  return weight * (m + std::log(sum) - scores[static_cast<std::size_t>(label)]);
}

template <typename T>
double weighted_cross_entropy(const BasicTensor<T>& scores, std::span<const int> labels, const LossSpec& loss,
                              BasicTensor<T>* grad) {
  if (scores.rank() != 2) throw InvalidArgument("cross entropy: scores must be B x K");
  const std::size_t batch = scores.dim(0);
  const std::size_t k = scores.dim(1);
  if (labels.size() != batch) throw InvalidArgument("cross entropy: label count does not match batch");
  if (loss.class_weights.size() != k) throw InvalidArgument("cross entropy: need one weight per class");
  for (const double w : loss.class_weights) {
    if (!(w > 0.0)) throw InvalidArgument("cross entropy: class weights must be positive");
  }
  std::vector<double> row(k);
  double total = 0.0;
  double weight_sum = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int c = labels[b];
    if (c < 0 || static_cast<std::size_t>(c) >= k) {
      throw InvalidArgument("cross entropy: label " + std::to_string(c) + " out of range");
    }
    for (std::size_t j = 0; j < k; ++j) row[j] = static_cast<double>(scores(b, j));
    const double w = loss.class_weights[static_cast<std::size_t>(c)];
    total += sample_cross_entropy(row, c, w);
    weight_sum += w;
  }
  if (grad) {
    *grad = BasicTensor<T>(scores.shape());
    for (std::size_t b = 0; b < batch; ++b) {
      const auto c = static_cast<std::size_t>(labels[b]);
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) m = std::max(m, static_cast<double>(scores(b, j)));
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        row[j] = std::exp(static_cast<double>(scores(b, j)) - m);
        sum += row[j];
      }
      const double scale = loss.class_weights[c] / weight_sum;
      for (std::size_t j = 0; j < k; ++j) {
        (*grad)(b, j) = static_cast<T>(scale * (row[j] / sum - (j == c ? 1.0 : 0.0)));
      }
    }
  }
  return total / weight_sum;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& scores) {
  BasicTensor<T> out(scores.shape());
  const std::size_t batch = scores.dim(0);
  const std::size_t k = scores.dim(1);
  for (std::size_t b = 0; b < batch; ++b) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) m = std::max(m, static_cast<double>(scores(b, j)));
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(scores(b, j)) - m);
    for (std::size_t j = 0; j < k; ++j) out(b, j) = static_cast<T>(std::exp(static_cast<double>(scores(b, j)) - m) / sum);
  }
  return out;
}

template <typename T>
Gradients<T> backward(const NetworkSpec& spec, const Parameters<T>& params, const ForwardCache<T>& cache,
                      const BasicTensor<T>& grad_scores, BasicTensor<T>* grad_input) {
  if (!cache.valid || cache.inputs.size() != spec.layers.size()) {
    throw InvalidArgument("backward: missing or stale forward cache");
  }
  check_params(spec, params);
  if (grad_scores.shape() != cache.scores.shape()) {
    throw InvalidArgument("backward: gradient shape does not match cached scores");
  }
  Gradients<T> grads = params.zeros_like();

  BasicTensor<T> dy = grad_scores;
  for (std::size_t ii = spec.layers.size(); ii-- > 0;) {
    const LayerSpec& l = spec.layers[ii];
    const BasicTensor<T>& x = cache.inputs[ii];
    const bool need_dx = ii > 0 || grad_input != nullptr;
    BasicTensor<T> dx;
    switch (l.kind) {
      case LayerKind::conv:
      case LayerKind::dense: {
        LayerTensors<T>* g = l.trainable ? &grads.layers[ii] : nullptr;
        if (need_dx) dx = BasicTensor<T>(x.shape());
        if (l.kind == LayerKind::conv) {
          conv_backward(l, params.layers[ii], x, dy, g, need_dx ? &dx : nullptr);
        } else {
          dense_backward(l, params.layers[ii], x, dy, g, need_dx ? &dx : nullptr);
        }
        break;
      }
      case LayerKind::relu:
        dx = dy;
        for (std::size_t k = 0; k < dx.size(); ++k) {
          if (!(x[k] > T{0})) dx[k] = T{0};
        }
        break;
      case LayerKind::maxpool:
        dx = BasicTensor<T>(x.shape());
        maxpool_backward(x, dy, cache.argmax[ii], dx);
        break;
      case LayerKind::flatten:
        dx = dy;
        dx.reshape(x.shape());
        break;
      case LayerKind::dropout:
        dx = dy;
        if (!cache.masks[ii].empty()) {
          for (std::size_t k = 0; k < dx.size(); ++k) dx[k] *= cache.masks[ii][k];
        }
        break;
    }
    if (!need_dx) break;
    dy = std::move(dx);
  }
  if (grad_input) *grad_input = std::move(dy);
  return grads;
}

template <typename T>
Gradients<T> backward(const NetworkSpec& spec, const Parameters<T>& params, const ForwardCache<T>& cache,
                      std::span<const int> labels, const LossSpec& loss) {
  if (!cache.valid) throw InvalidArgument("backward: missing forward cache");
  BasicTensor<T> grad;
  weighted_cross_entropy(cache.scores, labels, loss, &grad);
  return backward(spec, params, cache, grad);
}

template <typename T>
BasicTensor<T> salience_map(const NetworkSpec& spec, const Parameters<T>& params, const BasicTensor<T>& stack,
                            int cls) {
  if (stack.rank() != 3) throw InvalidArgument("salience_map: expected a C x H x W stack");
  BasicTensor<T> batch = stack;
  batch.reshape({1, stack.dim(0), stack.dim(1), stack.dim(2)});
  ForwardCache<T> cache;
  const BasicTensor<T> scores = forward(spec, params, batch, Mode::eval, 0, &cache);
  if (cls < 0 || static_cast<std::size_t>(cls) >= scores.dim(1)) throw InvalidArgument("salience_map: class out of range");
  BasicTensor<T> seed(scores.shape());
  seed(0, static_cast<std::size_t>(cls)) = T{1};
  // Gradients w.r.t. the input are needed even for frozen layers.
  BasicTensor<T> dinput;
  backward(spec, params, cache, seed, &dinput);

  const std::size_t c = stack.dim(0);
  const std::size_t plane = stack.dim(1) * stack.dim(2);
  BasicTensor<T> out({stack.dim(1), stack.dim(2)});
  T peak{0};
  for (std::size_t i = 0; i < plane; ++i) {
    T m{0};
    for (std::size_t ch = 0; ch < c; ++ch) m = std::max(m, static_cast<T>(std::fabs(dinput[ch * plane + i])));
    out[i] = m;
    peak = std::max(peak, m);
  }
  if (peak > T{0}) {
    for (T& v : out.data()) v /= peak;
  }
  return out;
}

template <typename T>
Parameters<T> init_params(const NetworkSpec& spec, std::uint64_t seed, const Parameters<T>* donor) {
  spec.validate();
  Parameters<T> p;
  p.layers.resize(spec.layers.size());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (!l.has_parameters()) continue;
    Shape wshape;
    std::size_t fan_in = 0;
    std::size_t out = 0;
    if (l.kind == LayerKind::conv) {
      wshape = {l.out_channels, l.in_channels, l.kernel, l.kernel};
      fan_in = l.in_channels * l.kernel * l.kernel;
      out = l.out_channels;
    } else {
      wshape = {l.out_features, l.in_features};
      fan_in = l.in_features;
      out = l.out_features;
    }
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    p.layers[i].weight = BasicTensor<T>(wshape);
    for (T& v : p.layers[i].weight.data()) v = static_cast<T>(dist(rng));
    p.layers[i].bias = BasicTensor<T>({out});
  }
  if (!donor) return p;

  if (donor->layers.size() != spec.layers.size()) {
    throw InvalidArgument("init_params: donor has a different number of layers");
  }
  const auto param_layers = spec.parameter_layers();
  for (const std::size_t i : param_layers) {
    const LayerTensors<T>& d = donor->layers[i];
    LayerTensors<T>& dst = p.layers[i];
    if (d.weight.empty()) continue;
    if (d.weight.shape() == dst.weight.shape() && d.bias.shape() == dst.bias.shape()) {
      dst = d;
      continue;
    }
    const bool first = i == param_layers.front();
    const Shape& ds = d.weight.shape();
    const Shape& ws = dst.weight.shape();
    if (first && spec.layers[i].kind == LayerKind::conv && ds.size() == 4 && ds[0] == ws[0] && ds[1] < ws[1] &&
        ds[2] == ws[2] && ds[3] == ws[3] && d.bias.shape() == dst.bias.shape()) {
      const std::size_t kk = ws[2] * ws[3];
      for (std::size_t o = 0; o < ws[0]; ++o) {
        for (std::size_t c = 0; c < ds[1]; ++c) {
          std::copy_n(d.weight.raw() + (o * ds[1] + c) * kk, kk, dst.weight.raw() + (o * ws[1] + c) * kk);
        }
      }
      dst.bias = d.bias;
      continue;
    }
    throw InvalidArgument("init_params: donor shape " + shape_to_string(ds) + " conflicts with " +
                          shape_to_string(ws) + " at layer " + std::to_string(i));
  }
  return p;
}

#define VEGSCAN_NN_INSTANTIATE(T)                                                                                \
  template struct Parameters<T>;                                                                                \
  template BasicTensor<T> forward(const NetworkSpec&, const Parameters<T>&, const BasicTensor<T>&, Mode,        \
                                  std::uint64_t, ForwardCache<T>*);                                             \
  template double weighted_cross_entropy(const BasicTensor<T>&, std::span<const int>, const LossSpec&,          \
                                         BasicTensor<T>*);                                                      \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                                       \
  template Gradients<T> backward(const NetworkSpec&, const Parameters<T>&, const ForwardCache<T>&,              \
                                 const BasicTensor<T>&, BasicTensor<T>*);                                       \
  template Gradients<T> backward(const NetworkSpec&, const Parameters<T>&, const ForwardCache<T>&,              \
                                 std::span<const int>, const LossSpec&);                                        \
  template BasicTensor<T> salience_map(const NetworkSpec&, const Parameters<T>&, const BasicTensor<T>&, int);   \
  template Parameters<T> init_params(const NetworkSpec&, std::uint64_t, const Parameters<T>*);

VEGSCAN_NN_INSTANTIATE(float)
VEGSCAN_NN_INSTANTIATE(double)

#undef VEGSCAN_NN_INSTANTIATE

}  // namespace vegscan::nn
