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

#include "vegscan/hog.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vegscan {

double HogConfig::angular_range() const noexcept { return signed_orientation ? 2.0 * M_PI : M_PI; }

void HogConfig::validate(std::size_t height, std::size_t width) const {
  if (cell_size == 0 || bins < 2 || block_size == 0 || block_stride == 0) {
    throw InvalidArgument("HogConfig: cell_size, block_size and block_stride must be positive and bins >= 2");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("HogConfig: epsilon must be positive");
  if (height % cell_size != 0 || width % cell_size != 0) {
    throw InvalidArgument("HogConfig: image " + std::to_string(height) + "x" + std::to_string(width) +
                          " is not divisible by cell_size " + std::to_string(cell_size));
  }
  if (height / cell_size < block_size || width / cell_size < block_size) {
    throw InvalidArgument("HogConfig: image has fewer cells than one block");
  }
}

CellGrid cell_histograms(const GradientField& field, const HogConfig& cfg) {
  if (cfg.cell_size == 0 || cfg.bins < 2) throw InvalidArgument("HogConfig: invalid cell_size or bins");
  if (field.height % cfg.cell_size != 0 || field.width % cfg.cell_size != 0) {
    throw InvalidArgument("cell_histograms: dimensions " + std::to_string(field.height) + "x" +
                          std::to_string(field.width) + " not divisible by cell_size " +
                          std::to_string(cfg.cell_size));
  }
  CellGrid grid;
  grid.rows = field.height / cfg.cell_size;
  grid.cols = field.width / cfg.cell_size;
  grid.bins = cfg.bins;
  grid.values.assign(grid.rows * grid.cols * grid.bins, 0.0);

  const double range = cfg.angular_range();
  const double width = cfg.bin_width();
  const auto nbins = static_cast<long>(cfg.bins);
  for (std::size_t y = 0; y < field.height; ++y) {
    for (std::size_t x = 0; x < field.width; ++x) {
      const std::size_t i = field.index(y, x);
      const double mag = field.magnitude[i];
      if (mag == 0.0) continue;
      double theta = std::fmod(field.orientation[i], range);
      if (theta < 0.0) theta += range;
      if (theta >= range) theta -= range;
      const double pos = theta / width - 0.5;
      const double lo = std::floor(pos);
      const double frac = pos - lo;
      const long b0 = ((static_cast<long>(lo) % nbins) + nbins) % nbins;
      const long b1 = (b0 + 1) % nbins;
      auto hist = grid.cell(y / cfg.cell_size, x / cfg.cell_size);
      hist[static_cast<std::size_t>(b0)] += mag * (1.0 - frac);
      hist[static_cast<std::size_t>(b1)] += mag * frac;
    }
  }
  return grid;
}

HogDescriptor block_normalize(const CellGrid& grid, const HogConfig& cfg) {
  if (grid.rows < cfg.block_size || grid.cols < cfg.block_size) {
    throw InvalidArgument("block_normalize: grid smaller than one block");
  }
  if (cfg.block_stride == 0) throw InvalidArgument("block_normalize: block_stride must be positive");
  HogDescriptor d;
  d.cells = grid;
  d.block_rows = (grid.rows - cfg.block_size) / cfg.block_stride + 1;
  d.block_cols = (grid.cols - cfg.block_size) / cfg.block_stride + 1;
  d.block_length = cfg.block_size * cfg.block_size * grid.bins;
  d.blocks.assign(d.block_rows * d.block_cols * d.block_length, 0.0);

  for (std::size_t br = 0; br < d.block_rows; ++br) {
    for (std::size_t bc = 0; bc < d.block_cols; ++bc) {
      double* v = d.blocks.data() + (br * d.block_cols + bc) * d.block_length;
      std::size_t k = 0;
      for (std::size_t cr = 0; cr < cfg.block_size; ++cr) {
        for (std::size_t cc = 0; cc < cfg.block_size; ++cc) {
          const auto hist = grid.cell(br * cfg.block_stride + cr, bc * cfg.block_stride + cc);
          for (const double h : hist) v[k++] = h;
        }
      }
      double norm = 0.0;
      if (cfg.norm == BlockNorm::l2) {
        for (std::size_t j = 0; j < d.block_length; ++j) norm += v[j] * v[j];
        norm = std::sqrt(norm);
      } else {
        for (std::size_t j = 0; j < d.block_length; ++j) norm += std::fabs(v[j]);
      }
      const double scale = 1.0 / (norm + cfg.epsilon);
      for (std::size_t j = 0; j < d.block_length; ++j) v[j] *= scale;
    }
  }
  return d;
}

HogDescriptor compute_hog(const GrayImage& img, const HogConfig& cfg) {
  cfg.validate(img.height(), img.width());
  return block_normalize(cell_histograms(sobel_gradients(img), cfg), cfg);
}

Tensor hog_channel(const GrayImage& img, const HogConfig& cfg) {
  const HogDescriptor d = compute_hog(img, cfg);
  const CellGrid& grid = d.cells;
  const std::size_t nb = cfg.bins;

  // Average each cell's normalized histogram over the blocks that cover it.
  std::vector<double> weights(grid.values.size(), 0.0);
  std::vector<double> cover(grid.rows * grid.cols, 0.0);
  for (std::size_t br = 0; br < d.block_rows; ++br) {
    for (std::size_t bc = 0; bc < d.block_cols; ++bc) {
      const auto v = d.block(br, bc);
      std::size_t k = 0;
      for (std::size_t cr = 0; cr < cfg.block_size; ++cr) {
        for (std::size_t cc = 0; cc < cfg.block_size; ++cc) {
          const std::size_t cell = (br * cfg.block_stride + cr) * grid.cols + bc * cfg.block_stride + cc;
          cover[cell] += 1.0;
          for (std::size_t b = 0; b < nb; ++b) weights[cell * nb + b] += v[k++];
        }
      }
    }
  }

  std::vector<double> dir_x(nb);
  std::vector<double> dir_y(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const double phi = cfg.bin_center(b);
    dir_x[b] = -std::sin(phi);
    dir_y[b] = std::cos(phi);
  }

  const std::size_t h = img.height();
  const std::size_t w = img.width();
  const double cs = static_cast<double>(cfg.cell_size);
  const double half_len = cs / 2.0 - 0.5;
  std::vector<double> canvas(h * w, 0.0);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const std::size_t cell = r * grid.cols + c;
      if (cover[cell] == 0.0) continue;
      const double cy = static_cast<double>(r) * cs + cs / 2.0 - 0.5;
      const double cx = static_cast<double>(c) * cs + cs / 2.0 - 0.5;
      for (std::size_t b = 0; b < nb; ++b) {
        const double wb = weights[cell * nb + b] / cover[cell];
        if (wb <= 0.0) continue;
        for (std::size_t py = 0; py < cfg.cell_size; ++py) {
          for (std::size_t px = 0; px < cfg.cell_size; ++px) {
            const std::size_t y = r * cfg.cell_size + py;
            const std::size_t x = c * cfg.cell_size + px;
            const double ox = static_cast<double>(x) - cx;
            const double oy = static_cast<double>(y) - cy;
            const double t = std::clamp(ox * dir_x[b] + oy * dir_y[b], -half_len, half_len);
            const double ex = ox - t * dir_x[b];
            const double ey = oy - t * dir_y[b];
            const double coverage = 1.0 - std::sqrt(ex * ex + ey * ey);
            if (coverage > 0.0) canvas[y * w + x] += wb * coverage;
          }
        }
      }
    }
  }

  const double peak = *std::max_element(canvas.begin(), canvas.end());
  Tensor out({1, h, w});
  if (peak > 0.0) {
    for (std::size_t i = 0; i < canvas.size(); ++i) out[i] = static_cast<float>(canvas[i] / peak);
  }
  return out;
}

}  // namespace vegscan
