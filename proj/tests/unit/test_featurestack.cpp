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

#include <filesystem>
#include <random>

#include "synth.hpp"
#include "vegscan/featurestack.hpp"
#include "vegscan/image_io.hpp"

namespace vegscan {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vegscan_fs_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Featurize, ShapeAndChannelLayout) {
  std::mt19937_64 rng(1);
  const RgbImage img = testing::street_scene(1, rng, 320);
  FeatureConfig cfg;
  const FeatureStack s = featurize(img, cfg, ChannelStats::identity());
  ASSERT_EQ(s.tensor.shape(), (Shape{5, 224, 224}));
  EXPECT_EQ(kChannelOrder[3], "HOG");
  EXPECT_EQ(kChannelOrder[4], "Hough");

  // Identity stats leave RGB as x / 255 of the resized image.
  const RgbImage resized = resize_bilinear(img, 224, 224);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < 224; y += 37) {
      for (std::size_t x = 0; x < 224; x += 41) {
        EXPECT_NEAR(s.tensor(c, y, x), resized.at(c, y, x) / 255.0, 1e-6);
      }
    }
  }
  const GrayImage gray = to_grayscale(resized);
  EXPECT_EQ(hog_channel(gray, cfg.hog).storage(),
            std::vector<float>(s.tensor.raw() + 3 * 224 * 224, s.tensor.raw() + 4 * 224 * 224));
  EXPECT_EQ(hough_channel(gray, cfg.canny, cfg.hough).storage(),
            std::vector<float>(s.tensor.raw() + 4 * 224 * 224, s.tensor.raw() + 5 * 224 * 224));
}

TEST(Featurize, StandardizesWithStats) {
  ChannelStats st;
  st.mean = {0.5, 0.25, 0.0};
  st.stddev = {0.5, 0.25, 2.0};
  FeatureConfig cfg;
  cfg.size = 32;
  const FeatureStack s = featurize(testing::constant_rgb(32, 32, 255, 255, 255), cfg, st);
  EXPECT_NEAR(s.tensor(0, 5, 5), 1.0, 1e-6);
  EXPECT_NEAR(s.tensor(1, 5, 5), 3.0, 1e-6);
  EXPECT_NEAR(s.tensor(2, 5, 5), 0.5, 1e-6);
}

TEST(Featurize, StrictModeRequiresStats) {
  FeatureConfig cfg;
  cfg.size = 32;
  cfg.strict_stats = true;
  EXPECT_THROW(featurize(RgbImage(32, 32), cfg, std::nullopt), InvalidArgument);
  EXPECT_NO_THROW(featurize(RgbImage(32, 32), cfg, ChannelStats::identity()));
}

TEST(Featurize, BlankImageHasEmptyFeatureChannels) {
  FeatureConfig cfg;
  cfg.size = 64;
  const FeatureStack s = featurize(testing::constant_rgb(64, 64, 10, 200, 30), cfg, std::nullopt);
  for (std::size_t i = 3 * 64 * 64; i < s.tensor.size(); ++i) ASSERT_EQ(s.tensor[i], 0.0f);
}

TEST(Featurize, ClassicalModeIsFlipEquivariant) {
  std::mt19937_64 rng(6);
  FeatureConfig cfg;
  cfg.hough.mode = HoughMode::classical;
  for (int cls = 0; cls < 3; ++cls) {
    const RgbImage img = testing::street_scene(cls, rng, 224);
    const Tensor a = featurize(hflip(img), cfg, std::nullopt).tensor;
    const Tensor b = hflip(featurize(img, cfg, std::nullopt).tensor);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, static_cast<double>(std::fabs(a[i] - b[i])));
    EXPECT_LT(m, 1e-6) << "class " << cls;
  }
}

TEST(ChannelStats, AllBlackHitsTheFloor) {
  const std::vector<RgbImage> imgs{RgbImage(8, 8, 0.0), RgbImage(8, 8, 0.0)};
  const ChannelStats st = compute_channel_stats(imgs, 8);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(st.mean[c], 0.0);
    EXPECT_EQ(st.stddev[c], kMinStddev);
  }
}

TEST(ChannelStats, ConstantGrayMean) {
  const std::vector<RgbImage> imgs{RgbImage(10, 10, 128.0)};
  const ChannelStats st = compute_channel_stats(imgs, 10);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(st.mean[c], 128.0 / 255.0, 1e-12);
}

TEST(ChannelStats, MatchesPopulationOracle) {
  std::mt19937_64 rng(4);
  std::vector<RgbImage> imgs;
  for (int k = 0; k < 3; ++k) imgs.push_back(testing::street_scene(k, rng, 16));
  const ChannelStats st = compute_channel_stats(imgs, 16);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, s2 = 0, n = 0;
    for (const auto& img : imgs) {
      for (const double v : img.plane(c)) {
        s += v / 255.0;
        s2 += (v / 255.0) * (v / 255.0);
        ++n;
      }
    }
    const double mean = s / n;
    EXPECT_NEAR(st.mean[c], mean, 1e-12);
    EXPECT_NEAR(st.stddev[c], std::sqrt(s2 / n - mean * mean), 1e-9);
  }
}

TEST(ChannelStats, EmptySetIsAnError) {
  EXPECT_THROW(compute_channel_stats(std::span<const RgbImage>{}, 8), InvalidArgument);
}

TEST(ChannelStats, JsonRoundTripAndId) {
  ChannelStats st;
  st.mean = {0.1, 0.2, 0.3};
  st.stddev = {0.4, 0.5, 0.6};
  EXPECT_EQ(ChannelStats::from_json(st.to_json()), st);
  EXPECT_NE(st.id(), ChannelStats::identity().id());
  const fs::path dir = scratch_dir("stats");
  write_stats(dir / "stats.json", st);
  EXPECT_EQ(read_stats(dir / "stats.json"), st);
}

TEST(FeatureCache, RoundTripIsExact) {
  const fs::path dir = scratch_dir("cache");
  std::mt19937_64 rng(2);
  FeatureConfig cfg;
  cfg.size = 64;
  ChannelStats st;
  st.mean = {0.3, 0.3, 0.3};
  const FeatureStack s = featurize(testing::street_scene(2, rng, 64), cfg, st);
  EXPECT_FALSE(has_feature_cache(dir, "abc"));
  write_feature_cache(dir, "abc", s);
  EXPECT_TRUE(has_feature_cache(dir, "abc"));
  std::string stats_id;
  const Tensor back = read_feature_cache(dir, "abc", &stats_id);
  EXPECT_EQ(back, s.tensor);
  EXPECT_EQ(stats_id, st.id());
}

TEST(FeatureCache, MissingOrTruncatedIsAnError) {
  const fs::path dir = scratch_dir("cache_bad");
  EXPECT_THROW(read_feature_cache(dir, "nope"), RuntimeError);
  FeatureConfig cfg;
  cfg.size = 16;
  write_feature_cache(dir, "x", featurize(RgbImage(16, 16), cfg, std::nullopt));
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") fs::resize_file(entry.path(), 10);
  }
  EXPECT_THROW(read_feature_cache(dir, "x"), RuntimeError);
}

}  // namespace
}  // namespace vegscan
