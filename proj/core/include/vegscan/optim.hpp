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
#include <span>
#include <vector>

#include "vegscan/nn.hpp"

namespace vegscan::optim {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 coefficient added to weight gradients

  void validate() const;
};

/// Per-parameter moment estimates. The moments are kept in bias-corrected
/// form (m_hat, v_hat), updated as
///   m_hat_t = m_hat_{t-1} + (g - m_hat_{t-1}) * (1 - b1) / (1 - b1^t),
/// which is algebraically identical to the usual EMA followed by division by
/// (1 - b1^t), but exact for constant gradients and at t = 1.
template <typename T>
struct AdamState {
  nn::Parameters<T> m;
  nn::Parameters<T> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const nn::Parameters<T>& params);
};

/// One ADAM update with learning rate \p lr scaled per layer by its
/// lr_multiplier. Frozen layers are left untouched. Weight decay applies to
/// weights, not biases. Throws NumericalError on a non-finite gradient; the
/// parameters and state are unchanged in that case.
template <typename T>
void adam_step(const nn::NetworkSpec& spec, nn::Parameters<T>& params, const nn::Gradients<T>& grads,
               AdamState<T>& state, const AdamConfig& cfg, double lr);

struct LrSchedule {
  double alpha0 = 1e-3;
  double tau_start = 10;
  double tau_max = 30;

  void validate() const;
};

/// alpha0 up to tau_start, then half-cosine decay over tau_max epochs,
/// clamped at zero afterwards.
double lr_at(const LrSchedule& schedule, double tau);

/// w_c = max(N) / N_c, with class \p risk_class additionally multiplied by
/// \p risk_multiplier. Throws on a zero count.
std::vector<double> class_weights(std::span<const std::size_t> counts, double risk_multiplier = 1.0,
                                  int risk_class = 2);

}  // namespace vegscan::optim
