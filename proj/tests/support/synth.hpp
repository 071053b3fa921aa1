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

// Synthetic images, edge maps and corpora shared by the unit and acceptance
// tests.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "vegscan/edges.hpp"
#include "vegscan/manifest.hpp"
#include "vegscan/tensor.hpp"
#include "vegscan/trainer.hpp"

namespace vegscan::testing {

/// Straight line r = x cos(theta) + y sin(theta) (top-left origin) clipped
/// to the image rectangle.
struct LineTruth {
  double r = 0.0;
  double theta = 0.0;  // [0, pi)
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double length() const;
};

/// Random line whose clipped length is at least \p min_length pixels.
LineTruth random_line(std::mt19937_64& rng, std::size_t h, std::size_t w, double min_length);

/// Mark the pixels nearest to the segment, one per step along its major axis.
void draw_line(EdgeMap& edges, double x1, double y1, double x2, double y2);

/// Set a fraction of all pixels to 1.
void add_salt(EdgeMap& edges, double fraction, std::mt19937_64& rng);

/// Gray image of axis-aligned and slanted bands/rectangles on a flat
/// background; neighboring regions differ by at least \p min_contrast.
GrayImage blocky_image(std::mt19937_64& rng, std::size_t h, std::size_t w, double min_contrast);

GrayImage constant_gray(std::size_t h, std::size_t w, double value);
RgbImage constant_rgb(std::size_t h, std::size_t w, double r, double g, double b);

/// Street-like scene for class 0 (no utility), 1 (pole and wires) or
/// 2 (pole and wires with foliage blobs).
RgbImage street_scene(int cls, std::mt19937_64& rng, std::size_t size = 224);

/// Balanced labeled corpus with in-memory 5-channel stacks: ids s000.., split
/// into train/dev/test and augmented with mirrored copies.
struct SyntheticCorpus {
  Manifest manifest;
  InMemoryFeatures features;
};
SyntheticCorpus make_corpus(std::size_t images, std::uint64_t seed, std::size_t size = 224);

}  // namespace vegscan::testing
