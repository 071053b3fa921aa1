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

#include "vegscan/optim.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <sstream>

namespace vegscan::optim {

void AdamConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("adam: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("adam: epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("adam: weight decay must be non-negative");
}

template <typename T>
AdamState<T> AdamState<T>::zeros_like(const nn::Parameters<T>& params) {
  AdamState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

namespace {

template <typename T>
void check_finite(const nn::Gradients<T>& grads) {
  for (std::size_t i = 0; i < grads.layers.size(); ++i) {
    for (const auto* t : {&grads.layers[i].weight, &grads.layers[i].bias}) {
      for (std::size_t k = 0; k < t->size(); ++k) {
        if (!std::isfinite((*t)[k])) {
          std::ostringstream os;
          os << "non-finite gradient at layer " << i << (t == &grads.layers[i].weight ? " weight" : " bias")
             << " element " << k << ": " << (*t)[k];
          throw NumericalError(os.str());
        }
      }
    }
  }
}

template <typename T>
void update(BasicTensor<T>& p, const BasicTensor<T>& g, BasicTensor<T>& m, BasicTensor<T>& v, T c1, T c2, T lr,
            T eps, T decay) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    const T grad = g[k] + decay * p[k];
    m[k] += (grad - m[k]) * c1;
    v[k] += (grad * grad - v[k]) * c2;
    p[k] -= lr * m[k] / (std::sqrt(v[k]) + eps);
  }
}

}  // namespace

template <typename T>
void adam_step(const nn::NetworkSpec& spec, nn::Parameters<T>& params, const nn::Gradients<T>& grads,
               AdamState<T>& state, const AdamConfig& cfg, double lr) {
  cfg.validate();
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("adam: learning rate must be finite and >= 0");
  const std::size_t n = spec.layers.size();
  if (params.layers.size() != n || grads.layers.size() != n) {
    throw InvalidArgument("adam: parameter/gradient layer count mismatch");
  }
  if (state.m.layers.empty() && state.step == 0) state = AdamState<T>::zeros_like(params);
  if (state.m.layers.size() != n || state.v.layers.size() != n) throw InvalidArgument("adam: state layer count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = params.layers[i];
    for (const nn::LayerTensors<T>* other :
         std::initializer_list<const nn::LayerTensors<T>*>{&grads.layers[i], &state.m.layers[i], &state.v.layers[i]}) {
      if (other->weight.shape() != p.weight.shape() || other->bias.shape() != p.bias.shape()) {
        throw InvalidArgument("adam: shape mismatch at layer " + std::to_string(i));
      }
    }
  }
  check_finite(grads);

  const std::uint64_t t = state.step + 1;
  const double b1t = std::pow(cfg.beta1, static_cast<double>(t));
  const double b2t = std::pow(cfg.beta2, static_cast<double>(t));
  const T c1 = static_cast<T>((1.0 - cfg.beta1) / (1.0 - b1t));
  const T c2 = static_cast<T>((1.0 - cfg.beta2) / (1.0 - b2t));
  const T eps = static_cast<T>(cfg.epsilon);
  for (std::size_t i = 0; i < n; ++i) {
    const nn::LayerSpec& l = spec.layers[i];
    if (!l.has_parameters() || !l.trainable) continue;
    const T layer_lr = static_cast<T>(lr * l.lr_multiplier);
    auto& p = params.layers[i];
    update(p.weight, grads.layers[i].weight, state.m.layers[i].weight, state.v.layers[i].weight, c1, c2, layer_lr, eps,
           static_cast<T>(cfg.weight_decay));
    update(p.bias, grads.layers[i].bias, state.m.layers[i].bias, state.v.layers[i].bias, c1, c2, layer_lr, eps, T{0});
  }
  state.step = t;
}

void LrSchedule::validate() const {
  if (!(alpha0 > 0.0)) throw InvalidArgument("lr schedule: alpha0 must be positive");
  if (!(tau_start >= 0.0)) throw InvalidArgument("lr schedule: tau_start must be >= 0");
  if (!(tau_max >= 1.0)) throw InvalidArgument("lr schedule: tau_max must be >= 1");
}

double lr_at(const LrSchedule& s, double tau) {
  s.validate();
  if (!(tau >= 0.0)) throw InvalidArgument("lr schedule: epoch must be >= 0");
  if (tau <= s.tau_start) return s.alpha0;
  const double elapsed = tau - s.tau_start;
  if (elapsed >= s.tau_max) return 0.0;
  return 0.5 * s.alpha0 * (1.0 + std::cos(elapsed * std::numbers::pi / s.tau_max));
}

std::vector<double> class_weights(std::span<const std::size_t> counts, double risk_multiplier, int risk_class) {
  if (counts.empty()) throw InvalidArgument("class weights: no classes");
  if (!(risk_multiplier > 0.0)) throw InvalidArgument("class weights: risk multiplier must be positive");
  if (risk_class < 0 || static_cast<std::size_t>(risk_class) >= counts.size()) {
    throw InvalidArgument("class weights: risk class out of range");
  }
  const std::size_t max_count = *std::max_element(counts.begin(), counts.end());
  std::vector<double> w(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw InvalidArgument("class weights: class " + std::to_string(c) + " has no samples");
    w[c] = static_cast<double>(max_count) / static_cast<double>(counts[c]);
  }
  w[static_cast<std::size_t>(risk_class)] *= risk_multiplier;
  return w;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(const nn::NetworkSpec&, nn::Parameters<float>&, const nn::Gradients<float>&,
                        AdamState<float>&, const AdamConfig&, double);
template void adam_step(const nn::NetworkSpec&, nn::Parameters<double>&, const nn::Gradients<double>&,
                        AdamState<double>&, const AdamConfig&, double);

}  // namespace vegscan::optim
