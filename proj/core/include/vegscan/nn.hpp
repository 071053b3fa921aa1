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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vegscan/tensor.hpp"

namespace vegscan::nn {

enum class LayerKind { conv, relu, maxpool, flatten, dense, dropout };

std::string_view to_string(LayerKind kind) noexcept;

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  // conv: channels, square kernel, stride, zero padding. maxpool: kernel, stride.
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  // dense
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  // dropout
  double drop_probability = 0.0;

  bool trainable = true;
  double lr_multiplier = 1.0;

  static LayerSpec conv(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride, std::size_t pad);
  static LayerSpec relu();
  static LayerSpec maxpool(std::size_t kernel, std::size_t stride);
  static LayerSpec flatten();
  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec dropout(double p);

  bool has_parameters() const noexcept { return kind == LayerKind::conv || kind == LayerKind::dense; }
};

/// Ordered layer stack applied to inputs of shape input_shape (C x H x W).
struct NetworkSpec {
  Shape input_shape{5, 224, 224};
  std::vector<LayerSpec> layers;

  /// Throws InvalidArgument if consecutive shapes do not line up.
  void validate() const;
  /// Per-sample activation shapes; element 0 is the input, element i + 1 the
  /// output of layer i.
  std::vector<Shape> activation_shapes() const;
  std::size_t num_outputs() const;
  /// Stable 64-bit hash of the architecture (not of the training flags).
  std::uint64_t hash() const;

  /// Indices of layers that own parameters, in order.
  std::vector<std::size_t> parameter_layers() const;

  /// First parameterized layer and the classifier (dense layers) at
  /// \p outer, everything in between at \p middle.
  void set_lr_policy(double outer = 1.0, double middle = 1e-3);
  /// Freeze every parameterized layer except the first and the dense layers.
  void freeze_middle();

  /// conv(5->16)-relu-pool-conv(16->32)-relu-pool-conv(32->64)-relu-pool-
  /// flatten-dense(64*28*28->128)-relu-dropout(0.5)-dense(128->3), with the
  /// fine-tuning learning-rate policy applied.
  static NetworkSpec small_net(std::size_t in_channels = 5, std::size_t size = 224, std::size_t classes = 3);
};

template <typename T>
struct LayerTensors {
  BasicTensor<T> weight;  // conv: out x in x k x k, dense: out x in
  BasicTensor<T> bias;    // out
};

/// One entry per layer of the spec; parameter-free layers hold empty tensors.
template <typename T>
struct Parameters {
  std::vector<LayerTensors<T>> layers;

  std::size_t count() const noexcept;
  /// Same shapes, all zero.
  Parameters zeros_like() const;
  template <typename U>
  Parameters<U> cast() const {
    Parameters<U> out;
    out.layers.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (!layers[i].weight.empty()) out.layers[i].weight = layers[i].weight.template cast<U>();
      if (!layers[i].bias.empty()) out.layers[i].bias = layers[i].bias.template cast<U>();
    }
    return out;
  }
};

template <typename T>
using Gradients = Parameters<T>;

enum class Mode { train, eval };

/// Activations retained by forward() for backward().
template <typename T>
struct ForwardCache {
  std::vector<BasicTensor<T>> inputs;                // input of each layer
  std::vector<std::vector<std::uint32_t>> argmax;    // maxpool winners per layer
  std::vector<BasicTensor<T>> masks;                 // dropout scale masks per layer
  BasicTensor<T> scores;
  bool valid = false;
};

/// Raw class scores (B x classes) for a batch B x C x H x W. Dropout is active
/// only in train mode (inverted scaling); eval mode is deterministic.
template <typename T>
BasicTensor<T> forward(const NetworkSpec& spec, const Parameters<T>& params, const BasicTensor<T>& batch, Mode mode,
                       std::uint64_t seed = 0, ForwardCache<T>* cache = nullptr);

struct LossSpec {
  std::vector<double> class_weights{1.0, 1.0, 1.0};
};

/// Per-sample loss w_c * (logsumexp(y) - y_c).
double sample_cross_entropy(std::span<const double> scores, int label, double weight);

/// Batch loss sum_i L_i / sum_i w_{c_i}. When \p grad is non-null it receives
/// dLoss/dScores with the same shape as \p scores.
template <typename T>
double weighted_cross_entropy(const BasicTensor<T>& scores, std::span<const int> labels, const LossSpec& loss,
                              BasicTensor<T>* grad = nullptr);

/// Row-wise softmax of B x K scores.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& scores);

/// Backpropagate \p grad_scores through the cached batch. Frozen layers get
/// zero gradients but still pass the error upstream. If \p grad_input is
/// non-null it receives dLoss/dInput.
template <typename T>
Gradients<T> backward(const NetworkSpec& spec, const Parameters<T>& params, const ForwardCache<T>& cache,
                      const BasicTensor<T>& grad_scores, BasicTensor<T>* grad_input = nullptr);

/// Convenience: loss gradient plus backward in one call.
template <typename T>
Gradients<T> backward(const NetworkSpec& spec, const Parameters<T>& params, const ForwardCache<T>& cache,
                      std::span<const int> labels, const LossSpec& loss);

/// |d score_c / d input| reduced by the max over channels and scaled to
/// [0, 1]; \p stack is C x H x W, the result H x W.
template <typename T>
BasicTensor<T> salience_map(const NetworkSpec& spec, const Parameters<T>& params, const BasicTensor<T>& stack,
                            int cls);

/// He-normal weights (std = sqrt(2 / fan_in)) and zero biases. With a donor,
/// tensors of matching shape are copied; the first conv layer may instead take
/// a donor with fewer input channels, which fill the leading channels.
template <typename T>
Parameters<T> init_params(const NetworkSpec& spec, std::uint64_t seed, const Parameters<T>* donor = nullptr);

}  // namespace vegscan::nn
