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

#include "vegscan/edges.hpp"
#include "vegscan/tensor.hpp"

namespace vegscan {

/// Where (x, y) = (0, 0) sits when evaluating r = x cos(theta) + y sin(theta).
enum class HoughOrigin { top_left, center };

/// How hough_channel turns edges into a raster.
enum class HoughMode {
  probabilistic,  // seeded progressive probabilistic segments, Bresenham strokes
  classical       // edge pixels supporting accumulator peaks; deterministic
};

struct HoughConfig {
  std::size_t n_radii = 0;  // 0 selects 1 px radius resolution; otherwise odd and >= 3
  std::size_t n_angles = 180;
  int accumulator_threshold = 30;
  double min_line_length = 30.0;
  double max_line_gap = 10.0;
  std::uint64_t rng_seed = 0;
  HoughOrigin origin = HoughOrigin::top_left;
  HoughMode mode = HoughMode::probabilistic;
  // Peaks closer than this to a stronger peak are dropped by find_peaks.
  double peak_min_distance = 9.0;
  double peak_min_angle_deg = 10.0;

  void validate() const;
};

struct HoughPeak {
  double r = 0.0;
  double theta = 0.0;  // radians in [0, pi)
  int votes = 0;
  std::size_t r_index = 0;
  std::size_t theta_index = 0;
};

struct LineSegment {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  double length() const noexcept;
  friend bool operator==(const LineSegment&, const LineSegment&) = default;
};

/// M x N vote array over r in [-r_max, r_max] and theta_j = j * pi / N.
class HoughAccumulator {
 public:
  HoughAccumulator(std::size_t height, std::size_t width, const HoughConfig& cfg);

  std::size_t n_radii() const noexcept { return n_radii_; }
  std::size_t n_angles() const noexcept { return n_angles_; }
  double r_max() const noexcept { return r_max_; }
  double r_step() const noexcept { return r_step_; }

  double radius(std::size_t r_index) const noexcept;
  double theta(std::size_t theta_index) const noexcept;
  /// Signed distance of pixel (x, y) from the origin along the normal at theta_j.
  double radius_of(double x, double y, std::size_t theta_index) const noexcept;
  std::size_t radius_index(double r) const noexcept;

  int votes(std::size_t r_index, std::size_t theta_index) const noexcept {
    return bins_[r_index * n_angles_ + theta_index];
  }
  std::int64_t total_votes() const noexcept;

  /// Add \p delta votes for pixel (x, y) at every angle.
  void vote(std::size_t x, std::size_t y, int delta = 1) noexcept;

  /// Normalized heat map (1 x M x N) for debugging dumps.
  Tensor heatmap() const;

 private:
  std::size_t n_radii_ = 0;
  std::size_t n_angles_ = 0;
  std::size_t half_ = 0;
  double r_max_ = 0.0;
  double r_step_ = 1.0;
  double x0_ = 0.0;
  double y0_ = 0.0;
  std::vector<double> cos_;
  std::vector<double> sin_;
  std::vector<int> bins_;
};

/// Classical accumulation: each edge pixel votes once per angle into its
/// nearest radius bin.
HoughAccumulator hough_accumulate(const EdgeMap& edges, const HoughConfig& cfg);

/// Bins with at least \p threshold votes that no bin exceeds within
/// cfg.peak_min_distance px and cfg.peak_min_angle_deg (the angle axis wraps
/// with r negated). Ordered by votes descending, then |r|,
/// then theta. A peak within cfg.peak_min_distance px and
/// cfg.peak_min_angle_deg of an earlier peak is dropped. max_peaks = 0 keeps all.
std::vector<HoughPeak> find_peaks(const HoughAccumulator& acc, int threshold, std::size_t max_peaks,
                                  const HoughConfig& cfg = {});

/// Progressive probabilistic Hough transform. Edge pixels are visited in a
/// seeded random order; once a pixel pushes a bin to the accumulator
/// threshold, the supporting pixels are line-fitted and walked in both
/// directions inside a 3 px corridor, bridging gaps up to max_line_gap.
/// Segments at least min_line_length long are emitted and their pixels
/// withdrawn from the pool and the accumulator.
std::vector<LineSegment> probabilistic_hough(const EdgeMap& edges, const HoughConfig& cfg);

/// Canny, then line extraction per cfg.mode, rendered as a {0, 1} channel of
/// shape 1 x H x W.
Tensor hough_channel(const GrayImage& img, const CannyConfig& canny_cfg, const HoughConfig& hough_cfg);

/// 1-px Bresenham raster of \p seg into a row-major canvas of \p width columns.
void rasterize_segment(const LineSegment& seg, std::size_t height, std::size_t width, std::span<float> canvas,
                       float value = 1.0f);

}  // namespace vegscan
