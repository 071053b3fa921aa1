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

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vegscan::testing {

double relative_error(double analytic, double numeric, double floor) {
  return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), floor});
}

TensorD random_tensor(const Shape& shape, std::uint64_t seed) {
  TensorD t(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.storage()) v = u(rng);
  return t;
}

GradCheckResult gradient_check(const nn::NetworkSpec& spec, const nn::Parameters<double>& params,
                               const TensorD& batch, const std::vector<int>& labels,
                               const nn::LossSpec& loss, double h, std::uint64_t seed) {
  const bool use_ce = !labels.empty();
  TensorD probe;

  auto loss_of = [&](const nn::Parameters<double>& p, const TensorD& x) {
    const TensorD scores = nn::forward(spec, p, x, nn::Mode::train, seed);
    if (use_ce) return nn::weighted_cross_entropy(scores, labels, loss);
    double s = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) s += probe[i] * scores[i];
    return s;
  };

  nn::ForwardCache<double> cache;
  const TensorD scores = nn::forward(spec, params, batch, nn::Mode::train, seed, &cache);
  TensorD grad_scores;
  if (use_ce) {
    nn::weighted_cross_entropy(scores, labels, loss, &grad_scores);
  } else {
    probe = random_tensor(scores.shape(), seed + 99);
    grad_scores = probe;
  }
  TensorD grad_input;
  const nn::Gradients<double> grads = nn::backward(spec, params, cache, grad_scores, &grad_input);

  GradCheckResult result;
  nn::Parameters<double> p = params;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (const bool is_bias : {false, true}) {
      TensorD& t = is_bias ? p.layers[l].bias : p.layers[l].weight;
      const TensorD& g = is_bias ? grads.layers[l].bias : grads.layers[l].weight;
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double orig = t[i];
        t[i] = orig + h;
        const double up = loss_of(p, batch);
        t[i] = orig - h;
        const double down = loss_of(p, batch);
        t[i] = orig;
        result.max_rel_error = std::max(result.max_rel_error, relative_error(g[i], (up - down) / (2 * h)));
        ++result.checked;
      }
    }
  }
  TensorD x = batch;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = loss_of(params, x);
    x[i] = orig - h;
    const double down = loss_of(params, x);
    x[i] = orig;
    result.max_rel_error = std::max(result.max_rel_error, relative_error(grad_input[i], (up - down) / (2 * h)));
    ++result.checked;
  }
  return result;
}

}  // namespace vegscan::testing
