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

#include <benchmark/benchmark.h>

#include <random>

#include "vegscan/nn.hpp"
#include "vegscan/optim.hpp"

namespace {

vegscan::Tensor random_batch(std::size_t b) {
  vegscan::Tensor t({b, 5, 224, 224});
  std::mt19937 rng(1);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (float& v : t.data()) v = n(rng);
  return t;
}

void BM_SmallNetForward(benchmark::State& state) {
  const auto spec = vegscan::nn::NetworkSpec::small_net();
  const auto params = vegscan::nn::init_params<float>(spec, 1);
  const auto batch = random_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(vegscan::nn::forward(spec, params, batch, vegscan::nn::Mode::eval));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SmallNetForward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SmallNetTrainStep(benchmark::State& state) {
  const auto spec = vegscan::nn::NetworkSpec::small_net();
  auto params = vegscan::nn::init_params<float>(spec, 1);
  const std::size_t b = static_cast<std::size_t>(state.range(0));
  const auto batch = random_batch(b);
  std::vector<int> labels(b);
  for (std::size_t i = 0; i < b; ++i) labels[i] = static_cast<int>(i % 3);
  auto adam = vegscan::optim::AdamState<float>::zeros_like(params);
  const vegscan::optim::AdamConfig cfg;
  for (auto _ : state) {
    vegscan::nn::ForwardCache<float> cache;
    vegscan::nn::forward(spec, params, batch, vegscan::nn::Mode::train, 7, &cache);
    const auto grads = vegscan::nn::backward(spec, params, cache, labels, vegscan::nn::LossSpec{});
    vegscan::optim::adam_step(spec, params, grads, adam, cfg, 1e-3);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SmallNetTrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
