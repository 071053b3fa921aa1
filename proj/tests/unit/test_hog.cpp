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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "synth.hpp"
#include "vegscan/hog.hpp"

namespace vegscan {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

GradientField single_pixel_field(std::size_t n, std::size_t y, std::size_t x, double mag, double angle) {
  GradientField f;
  f.height = n;
  f.width = n;
  f.gx.assign(n * n, 0.0);
  f.gy.assign(n * n, 0.0);
  f.magnitude.assign(n * n, 0.0);
  f.orientation.assign(n * n, 0.0);
  const std::size_t i = f.index(y, x);
  f.gx[i] = mag * std::cos(angle);
  f.gy[i] = mag * std::sin(angle);
  f.magnitude[i] = mag;
  f.orientation[i] = angle;
  return f;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

TEST(HogConfig, BinCenters) {
  const HogConfig cfg;
  EXPECT_NEAR(cfg.bin_width(), 20 * kDeg, 1e-15);
  EXPECT_NEAR(cfg.bin_center(0), 10 * kDeg, 1e-15);
  EXPECT_NEAR(cfg.bin_center(3), 70 * kDeg, 1e-15);
}

TEST(HogConfig, RejectsMisfittingGeometry) {
  HogConfig cfg;
  EXPECT_THROW(cfg.validate(12, 16), InvalidArgument);
  cfg.bins = 0;
  EXPECT_THROW(cfg.validate(16, 16), InvalidArgument);
}

TEST(CellHistograms, ZeroFieldGivesZeroHistograms) {
  const GradientField f = single_pixel_field(16, 0, 0, 0.0, 0.0);
  const CellGrid g = cell_histograms(f, HogConfig{});
  for (const double v : g.values) EXPECT_EQ(v, 0.0);
}

TEST(CellHistograms, OrientationAtBinCenterFillsOneBin) {
  const GradientField f = single_pixel_field(16, 3, 4, 10.0, 70 * kDeg);
  const CellGrid g = cell_histograms(f, HogConfig{});
  ASSERT_EQ(g.rows, 2u);
  ASSERT_EQ(g.cols, 2u);
  const auto cell = g.cell(0, 0);
  for (std::size_t b = 0; b < 9; ++b) EXPECT_NEAR(cell[b], b == 3 ? 10.0 : 0.0, 1e-12) << b;
}

TEST(CellHistograms, MidwayOrientationSplitsEvenly) {
  const GradientField f = single_pixel_field(16, 9, 12, 10.0, 80 * kDeg);
  const CellGrid g = cell_histograms(f, HogConfig{});
  const auto cell = g.cell(1, 1);
  EXPECT_NEAR(cell[3], 5.0, 1e-12);
  EXPECT_NEAR(cell[4], 5.0, 1e-12);
}

TEST(CellHistograms, BinsWrapAroundForUnsignedOrientation) {
  // 180 degrees is the same unsigned direction as 0 and sits midway between
  // the centers of the last and the first bin.
  for (const double angle : {0.0, 180 * kDeg, -180 * kDeg}) {
    const GradientField f = single_pixel_field(16, 0, 0, 4.0, angle);
    const CellGrid g = cell_histograms(f, HogConfig{});
    const auto cell = g.cell(0, 0);
    EXPECT_NEAR(cell[0], 2.0, 1e-9);
    EXPECT_NEAR(cell[8], 2.0, 1e-9);
  }
}

TEST(CellHistograms, MassIsConserved) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    const GrayImage img = testing::blocky_image(rng, 32, 48, 30.0);
    const GradientField f = sobel_gradients(img);
    const CellGrid g = cell_histograms(f, HogConfig{});
    double hist = 0.0;
    double mag = 0.0;
    for (const double v : g.values) hist += v;
    for (const double v : f.magnitude) mag += v;
    EXPECT_NEAR(hist, mag, 1e-9 * std::max(1.0, mag));
  }
}

TEST(BlockNormalize, NonzeroBlockHasUnitNormUnderL2) {
  std::mt19937_64 rng(8);
  const GrayImage img = testing::blocky_image(rng, 32, 32, 60.0);
  const HogDescriptor d = compute_hog(img, HogConfig{});
  ASSERT_EQ(d.block_rows, 3u);
  ASSERT_EQ(d.block_length, 36u);
  for (std::size_t r = 0; r < d.block_rows; ++r) {
    for (std::size_t c = 0; c < d.block_cols; ++c) {
      double n2 = 0.0;
      for (const double v : d.block(r, c)) n2 += v * v;
      if (n2 > 0) EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-6);
    }
  }
}

TEST(BlockNormalize, ZeroBlockStaysZero) {
  const HogDescriptor d = compute_hog(GrayImage(16, 16, 9.0), HogConfig{});
  for (const double v : d.blocks) EXPECT_EQ(v, 0.0);
}

TEST(BlockNormalize, L1NormIsOne) {
  HogConfig cfg;
  cfg.norm = BlockNorm::l1;
  std::mt19937_64 rng(2);
  const HogDescriptor d = compute_hog(testing::blocky_image(rng, 32, 32, 60.0), cfg);
  for (std::size_t r = 0; r < d.block_rows; ++r) {
    for (std::size_t c = 0; c < d.block_cols; ++c) {
      double n1 = 0.0;
      for (const double v : d.block(r, c)) n1 += std::fabs(v);
      if (n1 > 0) EXPECT_NEAR(n1, 1.0, 1e-6);
    }
  }
}

TEST(BlockNormalize, HalvingIntensityLeavesDescriptorUnchanged) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 10; ++k) {
    const GrayImage img = testing::blocky_image(rng, 64, 64, 60.0);
    GrayImage half = img;
    for (double& v : half.pixels()) v *= 0.5;
    const HogDescriptor a = compute_hog(img, HogConfig{});
    const HogDescriptor b = compute_hog(half, HogConfig{});
    EXPECT_LT(max_abs_diff(a.blocks, b.blocks), 1e-6);
  }
}

TEST(HogChannel, ZeroGradientImageGivesZeroChannel) {
  const Tensor t = hog_channel(GrayImage(32, 32, 128.0), HogConfig{});
  ASSERT_EQ(t.shape(), (Shape{1, 32, 32}));
  for (const float v : t.data()) EXPECT_EQ(v, 0.0f);
}

TEST(HogChannel, ValuesInUnitRange) {
  std::mt19937_64 rng(12);
  const Tensor t = hog_channel(testing::blocky_image(rng, 64, 64, 50.0), HogConfig{});
  float hi = 0.0f;
  for (const float v : t.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
    hi = std::max(hi, v);
  }
  EXPECT_GT(hi, 0.0f);
}

TEST(HogChannel, VerticalLineGivesHorizontalGradientBins) {
  GrayImage img(32, 32, 0.0);
  for (std::size_t y = 0; y < 32; ++y) img.at(y, 12) = 255.0;
  const HogDescriptor d = compute_hog(img, HogConfig{});
  // Cells in column 1 contain the line; horizontal gradients sit between the
  // first and last bin centers.
  for (std::size_t r = 0; r < d.cells.rows; ++r) {
    const auto cell = d.cells.cell(r, 1);
    const auto best = static_cast<std::size_t>(std::max_element(cell.begin(), cell.end()) - cell.begin());
    EXPECT_TRUE(best == 0 || best == 8) << best;
    EXPECT_NEAR(cell[0], cell[8], 1e-9);
    for (std::size_t b = 1; b < 8; ++b) EXPECT_EQ(cell[b], 0.0);
  }
  // The rendered stroke for those cells is vertical: the line's column is lit
  // at the cell centers' rows.
  const Tensor t = hog_channel(img, HogConfig{});
  EXPECT_GT(t(0, 4, 11), t(0, 4, 8));
}

TEST(HogChannel, FlipEquivariant) {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 5; ++k) {
    const GrayImage img = testing::blocky_image(rng, 64, 64, 60.0);
    const Tensor a = hog_channel(hflip(img), HogConfig{});
    const Tensor b = hflip(hog_channel(img, HogConfig{}));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, static_cast<double>(std::fabs(a[i] - b[i])));
    EXPECT_LT(m, 1e-6);
  }
}

}  // namespace
}  // namespace vegscan
