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

#include <span>
#include <vector>

#include "vegscan/edges.hpp"
#include "vegscan/tensor.hpp"

namespace vegscan {

enum class BlockNorm { l1, l2 };

struct HogConfig {
  std::size_t cell_size = 8;
  std::size_t bins = 9;
  std::size_t block_size = 2;    // cells per block side
  std::size_t block_stride = 1;  // in cells
  BlockNorm norm = BlockNorm::l2;
  bool signed_orientation = false;
  double epsilon = 1e-5;

  /// Throws InvalidArgument unless the geometry fits an image of h x w.
  void validate(std::size_t height, std::size_t width) const;

  double angular_range() const noexcept;
  double bin_width() const noexcept { return angular_range() / static_cast<double>(bins); }
  /// Orientation (radians) at the center of bin \p b.
  double bin_center(std::size_t b) const noexcept {
    return (static_cast<double>(b) + 0.5) * bin_width();
  }
};

/// Per-cell orientation histograms, row-major over cells.
struct CellGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t bins = 0;
  std::vector<double> values;

  std::span<double> cell(std::size_t r, std::size_t c) noexcept {
    return std::span<double>(values).subspan((r * cols + c) * bins, bins);
  }
  std::span<const double> cell(std::size_t r, std::size_t c) const noexcept {
    return std::span<const double>(values).subspan((r * cols + c) * bins, bins);
  }
};

struct HogDescriptor {
  CellGrid cells;
  std::size_t block_rows = 0;
  std::size_t block_cols = 0;
  std::size_t block_length = 0;  // block_size^2 * bins
  std::vector<double> blocks;    // normalized concatenations, row-major over blocks

  std::span<const double> block(std::size_t r, std::size_t c) const noexcept {
    return std::span<const double>(blocks).subspan((r * block_cols + c) * block_length, block_length);
  }
};

/// Each pixel adds its gradient magnitude to the two bins whose centers
/// bracket its orientation, split by linear interpolation (bins wrap around).
CellGrid cell_histograms(const GradientField& field, const HogConfig& cfg);

/// Overlapping blocks of cells, each concatenated and scaled by
/// 1 / (norm + epsilon).
HogDescriptor block_normalize(const CellGrid& grid, const HogConfig& cfg);

HogDescriptor compute_hog(const GrayImage& img, const HogConfig& cfg);

/// Render the descriptor as one image channel (1 x H x W, values in [0, 1]).
/// Every cell gets one anti-aliased stroke per bin through its center,
/// perpendicular to the bin's gradient orientation, weighted by the bin value
/// averaged over all blocks that contain the cell.
Tensor hog_channel(const GrayImage& img, const HogConfig& cfg);

}  // namespace vegscan
