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

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vegscan/edges.hpp"
#include "vegscan/hog.hpp"
#include "vegscan/hough.hpp"
#include "vegscan/manifest.hpp"
#include "vegscan/tensor.hpp"

namespace vegscan {

inline constexpr std::array<std::string_view, 5> kChannelOrder = {"R", "G", "B", "HOG", "Hough"};
inline constexpr std::size_t kStackChannels = kChannelOrder.size();
inline constexpr std::size_t kInputSize = 224;

/// Per-channel mean and standard deviation of RGB intensities scaled to [0, 1].
struct ChannelStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};

  static ChannelStats identity() { return {}; }
  /// Stable short identifier derived from the values.
  std::string id() const;

  nlohmann::json to_json() const;
  static ChannelStats from_json(const nlohmann::json& j);

  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

inline constexpr double kMinStddev = 1e-6;

struct FeatureConfig {
  std::size_t size = kInputSize;
  HogConfig hog;
  CannyConfig canny;
  HoughConfig hough;
  bool strict_stats = false;  // refuse to featurize without training-set stats
};

struct FeatureStack {
  Tensor tensor;  // 5 x size x size, channel order kChannelOrder
  ChannelStats stats;
};

/// Resize to cfg.size, standardize RGB with \p stats, append the HOG and
/// Hough channels computed from the grayscale of the resized image. Without
/// stats the identity is used unless cfg.strict_stats is set.
FeatureStack featurize(const RgbImage& img, const FeatureConfig& cfg, const std::optional<ChannelStats>& stats);

/// Load the record's image, mirror it when the record is a flipped copy, and
/// featurize it.
FeatureStack featurize_record(const SampleRecord& rec, const FeatureConfig& cfg,
                              const std::optional<ChannelStats>& stats);

/// Statistics over the given images after resizing to \p size.
ChannelStats compute_channel_stats(std::span<const RgbImage> images, std::size_t size = kInputSize);

/// Statistics over the unflipped records of one split (train by default).
ChannelStats compute_channel_stats(const Manifest& manifest, const FeatureConfig& cfg, Split split = Split::train);

// Feature cache: <dir>/<id>.f32 holds little-endian float32 values and
// <dir>/<id>.json the sidecar {shape, channel_order, stats_id}.
void write_feature_cache(const std::filesystem::path& dir, const std::string& id, const FeatureStack& stack);
Tensor read_feature_cache(const std::filesystem::path& dir, const std::string& id,
                          std::string* stats_id = nullptr);
bool has_feature_cache(const std::filesystem::path& dir, const std::string& id);

void write_stats(const std::filesystem::path& path, const ChannelStats& stats);
ChannelStats read_stats(const std::filesystem::path& path);

}  // namespace vegscan
