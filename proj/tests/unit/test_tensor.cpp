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

#include <algorithm>
#include <random>

#include "vegscan/image_io.hpp"
#include "vegscan/tensor.hpp"

namespace vegscan {
namespace {

TEST(Grayscale, WhiteAndBlackArePreserved) {
  RgbImage white(4, 5, 255.0);
  RgbImage black(4, 5, 0.0);
  const GrayImage gw = to_grayscale(white);
  const GrayImage gb = to_grayscale(black);
  for (const double v : gw.pixels()) EXPECT_EQ(v, 255.0);
  for (const double v : gb.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(Grayscale, PureRedRoundsTo76) {
  RgbImage img(1, 1, 0.0);
  img.at(0, 0, 0) = 255.0;
  EXPECT_EQ(to_grayscale(img).at(0, 0), 76.0);
}

TEST(Grayscale, MatchesWeightedSumOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(0, 255);
  RgbImage img(7, 9);
  for (double& v : img.pixels()) v = d(rng);
  const GrayImage g = to_grayscale(img);
  for (std::size_t y = 0; y < 7; ++y) {
    for (std::size_t x = 0; x < 9; ++x) {
      const double luma = 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
      EXPECT_NEAR(g.at(y, x), std::floor(luma + 0.5), 1e-9);
    }
  }
}

TEST(Resize, SameSizeIsIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0, 255);
  RgbImage img(6, 8);
  for (double& v : img.pixels()) v = d(rng);
  EXPECT_EQ(resize_bilinear(img, 6, 8), img);
}

TEST(Resize, ConstantStaysConstant) {
  GrayImage img(13, 7, 42.0);
  for (const auto [h, w] : {std::pair{1, 1}, std::pair{5, 20}, std::pair{26, 3}}) {
    const GrayImage out = resize_bilinear(img, h, w);
    ASSERT_EQ(out.height(), static_cast<std::size_t>(h));
    ASSERT_EQ(out.width(), static_cast<std::size_t>(w));
    for (const double v : out.pixels()) EXPECT_NEAR(v, 42.0, 1e-12);
  }
}

TEST(Resize, TwoByTwoToOneIsTheAverage) {
  GrayImage img(2, 2, std::vector<double>{0, 100, 100, 0});
  EXPECT_NEAR(resize_bilinear(img, 1, 1).at(0, 0), 50.0, 1e-12);
}

TEST(Resize, UpsamplingMatchesHalfPixelOracle) {
  GrayImage img(2, 3, std::vector<double>{0, 10, 20, 30, 40, 50});
  const GrayImage out = resize_bilinear(img, 4, 6);
  auto sample = [&](double sy, double sx) {
    sy = std::clamp(sy, 0.0, 1.0);
    sx = std::clamp(sx, 0.0, 2.0);
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const auto x0 = static_cast<std::size_t>(std::floor(sx));
    const std::size_t y1 = std::min<std::size_t>(y0 + 1, 1);
    const std::size_t x1 = std::min<std::size_t>(x0 + 1, 2);
    const double fy = sy - y0;
    const double fx = sx - x0;
    return (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
           fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
  };
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 6; ++x) {
      EXPECT_NEAR(out.at(y, x), sample((y + 0.5) * 0.5 - 0.5, (x + 0.5) * 0.5 - 0.5), 1e-12);
    }
  }
}

TEST(Resize, RejectsZeroTarget) { EXPECT_THROW(resize_bilinear(GrayImage(2, 2), 0, 3), InvalidArgument); }

TEST(Flip, RowIsReversed) {
  GrayImage img(1, 2, std::vector<double>{3, 9});
  const GrayImage f = hflip(img);
  EXPECT_EQ(f.at(0, 0), 9.0);
  EXPECT_EQ(f.at(0, 1), 3.0);
}

TEST(Flip, IsAnInvolution) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0, 255);
  RgbImage img(5, 7);
  for (double& v : img.pixels()) v = d(rng);
  EXPECT_EQ(hflip(hflip(img)), img);

  Tensor t({2, 3, 4});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
  const Tensor f = hflip(t);
  EXPECT_EQ(f(1, 2, 0), t(1, 2, 3));
  EXPECT_EQ(hflip(f), t);
}

TEST(TensorBasics, ShapeChecks) {
  EXPECT_THROW(Tensor({2, 0}), InvalidArgument);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), InvalidArgument);
  Tensor t({2, 6});
  EXPECT_THROW(t.reshape({5}), InvalidArgument);
  t.reshape({3, 4});
  EXPECT_EQ(t.shape(), (Shape{3, 4}));
}

TEST(ImageIo, PngRoundTripIsLossless) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> d(0, 255);
  RgbImage img(9, 4);
  for (double& v : img.pixels()) v = d(rng);
  const auto bytes = encode_png(img);
  EXPECT_EQ(decode_image(bytes), img);
}

TEST(ImageIo, GarbageIsRejected) {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  EXPECT_ANY_THROW(decode_image(junk));
}

}  // namespace
}  // namespace vegscan
