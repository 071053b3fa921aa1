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

#include "vegscan/featurestack.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "vegscan/image_io.hpp"

namespace vegscan {

namespace {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
  }
  return v;
}

std::string text_of(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

std::string ChannelStats::id() const {
  std::uint64_t h = fnv1a(mean.data(), sizeof(double) * mean.size());
  h = fnv1a(stddev.data(), sizeof(double) * stddev.size(), h);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json ChannelStats::to_json() const {
  return {{"mean", mean}, {"std", stddev}, {"id", id()}};
}

ChannelStats ChannelStats::from_json(const nlohmann::json& j) {
  ChannelStats s;
  s.mean = j.at("mean").get<std::array<double, 3>>();
  s.stddev = j.at("std").get<std::array<double, 3>>();
  for (const double v : s.stddev) {
    if (!(v > 0.0)) throw InvalidArgument("channel stats: std must be positive");
  }
  return s;
}

FeatureStack featurize(const RgbImage& img, const FeatureConfig& cfg, const std::optional<ChannelStats>& stats) {
  if (img.empty()) throw InvalidArgument("featurize: empty image");
  if (!stats && cfg.strict_stats) throw InvalidArgument("featurize: channel stats required in strict mode");
  const ChannelStats st = stats.value_or(ChannelStats::identity());

  const RgbImage resized = resize_bilinear(img, cfg.size, cfg.size);
  const GrayImage gray = to_grayscale(resized);
  const Tensor hog = hog_channel(gray, cfg.hog);
  const Tensor hough = hough_channel(gray, cfg.canny, cfg.hough);

  const std::size_t plane = cfg.size * cfg.size;
  FeatureStack out{Tensor({kStackChannels, cfg.size, cfg.size}), st};
  float* dst = out.tensor.raw();
  for (std::size_t c = 0; c < 3; ++c) {
    const auto src = resized.plane(c);
    for (std::size_t i = 0; i < plane; ++i) {
      dst[c * plane + i] = static_cast<float>((src[i] / 255.0 - st.mean[c]) / st.stddev[c]);
    }
  }
  std::copy(hog.data().begin(), hog.data().end(), dst + 3 * plane);
  std::copy(hough.data().begin(), hough.data().end(), dst + 4 * plane);
  return out;
}

FeatureStack featurize_record(const SampleRecord& rec, const FeatureConfig& cfg,
                              const std::optional<ChannelStats>& stats) {
  RgbImage img = read_image(rec.path);
  if (rec.flipped) img = hflip(img);
  return featurize(img, cfg, stats);
}

ChannelStats compute_channel_stats(std::span<const RgbImage> images, std::size_t size) {
  if (images.empty()) throw InvalidArgument("compute_channel_stats: no images in split");
  std::array<double, 3> sum{};
  std::array<double, 3> sum_sq{};
  double count = 0.0;
  for (const RgbImage& img : images) {
    const RgbImage r = resize_bilinear(img, size, size);
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      double s2 = 0.0;
      for (const double v : r.plane(c)) {
        const double x = v / 255.0;
        s += x;
        s2 += x * x;
      }
      sum[c] += s;
      sum_sq[c] += s2;
    }
    count += static_cast<double>(size * size);
  }
  ChannelStats st;
  for (std::size_t c = 0; c < 3; ++c) {
    st.mean[c] = sum[c] / count;
    const double var = std::max(0.0, sum_sq[c] / count - st.mean[c] * st.mean[c]);
    st.stddev[c] = std::max(std::sqrt(var), kMinStddev);
  }
  return st;
}

ChannelStats compute_channel_stats(const Manifest& manifest, const FeatureConfig& cfg, Split split) {
  std::vector<RgbImage> images;
  for (const SampleRecord& rec : manifest) {
    if (rec.split == split && !rec.flipped) images.push_back(read_image(rec.path));
  }
  if (images.empty()) {
    throw InvalidArgument("compute_channel_stats: split '" + std::string(to_string(split)) + "' is empty");
  }
  return compute_channel_stats(images, cfg.size);
}

void write_feature_cache(const std::filesystem::path& dir, const std::string& id, const FeatureStack& stack) {
  std::filesystem::create_directories(dir);
  const Tensor& t = stack.tensor;
  std::vector<std::uint8_t> bytes(t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::uint32_t v = to_little(std::bit_cast<std::uint32_t>(t[i]));
    std::memcpy(bytes.data() + 4 * i, &v, 4);
  }
  write_file_atomic(dir / (id + ".f32"), bytes);
  nlohmann::json side{{"shape", t.shape()},
                      {"channel_order", std::vector<std::string>(kChannelOrder.begin(), kChannelOrder.end())},
                      {"stats_id", stack.stats.id()}};
  write_text(dir / (id + ".json"), text_of(side));
}

bool has_feature_cache(const std::filesystem::path& dir, const std::string& id) {
  return std::filesystem::exists(dir / (id + ".f32")) && std::filesystem::exists(dir / (id + ".json"));
}

Tensor read_feature_cache(const std::filesystem::path& dir, const std::string& id, std::string* stats_id) {
  std::ifstream side_in(dir / (id + ".json"));
  if (!side_in) throw RuntimeError("missing feature sidecar for '" + id + "' in " + dir.string());
  const nlohmann::json side = nlohmann::json::parse(side_in);
  const Shape shape = side.at("shape").get<Shape>();
  if (stats_id) *stats_id = side.value("stats_id", "");
  const auto bytes = read_file_bytes(dir / (id + ".f32"));
  if (bytes.size() != shape_volume(shape) * 4) {
    throw RuntimeError("feature blob for '" + id + "' has " + std::to_string(bytes.size()) +
                       " bytes, expected " + std::to_string(shape_volume(shape) * 4));
  }
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t v = 0;
    std::memcpy(&v, bytes.data() + 4 * i, 4);
    t[i] = std::bit_cast<float>(to_little(v));
  }
  return t;
}

void write_stats(const std::filesystem::path& path, const ChannelStats& stats) {
  write_text(path, text_of(stats.to_json()));
}

ChannelStats read_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open stats file " + path.string());
  return ChannelStats::from_json(nlohmann::json::parse(in));
}

}  // namespace vegscan
