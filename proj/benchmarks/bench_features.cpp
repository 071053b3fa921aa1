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

#include <cmath>
#include <random>

#include "vegscan/featurestack.hpp"

namespace {

vegscan::RgbImage scene(std::size_t size) {
  vegscan::RgbImage img(size, size);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> noise(0.0, 20.0);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const bool line = std::abs(static_cast<long>(y) - static_cast<long>(size / 3 + x / 4)) < 2;
      const bool pole = x > size / 2 && x < size / 2 + 6;
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = (line || pole ? 40.0 : 190.0) + noise(rng);
    }
  }
  return img;
}

void BM_Canny224(benchmark::State& state) {
  const auto gray = vegscan::to_grayscale(scene(224));
  for (auto _ : state) benchmark::DoNotOptimize(vegscan::canny(gray, 50, 150));
}
BENCHMARK(BM_Canny224);

void BM_HogChannel224(benchmark::State& state) {
  const auto gray = vegscan::to_grayscale(scene(224));
  const vegscan::HogConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(vegscan::hog_channel(gray, cfg));
}
BENCHMARK(BM_HogChannel224);

void BM_HoughChannel224(benchmark::State& state) {
  const auto gray = vegscan::to_grayscale(scene(224));
  vegscan::HoughConfig cfg;
  cfg.mode = state.range(0) == 0 ? vegscan::HoughMode::probabilistic : vegscan::HoughMode::classical;
  for (auto _ : state) benchmark::DoNotOptimize(vegscan::hough_channel(gray, vegscan::CannyConfig{}, cfg));
}
BENCHMARK(BM_HoughChannel224)->Arg(0)->Arg(1);

void BM_Featurize640(benchmark::State& state) {
  const auto img = scene(640);
  const vegscan::FeatureConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(vegscan::featurize(img, cfg, std::nullopt));
}
BENCHMARK(BM_Featurize640)->Unit(benchmark::kMillisecond);

}  // namespace
