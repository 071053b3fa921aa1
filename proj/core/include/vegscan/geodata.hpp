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
#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vegscan/errors.hpp"
#include "vegscan/manifest.hpp"

namespace vegscan::geo {

inline constexpr double kEarthRadiusM = 6371000.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// Distance in meters under the equirectangular approximation (cosine of
/// the mean latitude scales longitude).
double equirect_distance(LatLon a, LatLon b);
/// Initial great-circle bearing from \p a to \p b in degrees, [0, 360).
double initial_bearing(LatLon a, LatLon b);

struct StreetSpec {
  std::string name;
  LatLon start;
  LatLon end;
  double interval = 10.0;  // meters
  int label = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static StreetSpec from_json(const nlohmann::json& j);
};

/// JSON array of street objects {name?, start: [lat, lon], end: [lat, lon],
/// interval, label}.
std::vector<StreetSpec> read_streets(const std::filesystem::path& path);

struct ImageRequest {
  double lat = 0.0;
  double lon = 0.0;
  double heading = 0.0;  // degrees, [0, 360)
  double pitch = 0.0;
  double fov = 90.0;     // (0, 120]
  int width = 640;       // <= 640
  int height = 640;
  int label = 0;         // default class of the street it came from

  void validate() const;
  /// Canonical text of the acquisition parameters; equal requests share it.
  std::string key() const;
  /// Stable identifier derived from key().
  std::string id() const;
};

enum class HeadingMode { along_street, fixed };

struct InterpolationOptions {
  HeadingMode heading_mode = HeadingMode::along_street;
  double fixed_heading = 0.0;
  double pitch = 0.0;
  double fov = 90.0;
  int size = 640;
};

/// Points every spec.interval meters from start to end, both included. The
/// end point is added unless the last regular sample lies within half an
/// interval of it. Along-street headings point to the next sample; the last
/// one repeats the previous heading.
std::vector<ImageRequest> interpolate_street(const StreetSpec& spec, const InterpolationOptions& opts = {});

// ---------------------------------------------------------------------------
// Providers

/// A single request failed; the batch continues.
class ProviderError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

/// Misconfiguration (credentials, base URL); aborts the batch.
class ProviderConfigError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class ImageProvider {
 public:
  virtual ~ImageProvider() = default;
  /// Encoded image bytes (PNG or JPEG). Must be safe to call concurrently.
  virtual std::vector<std::uint8_t> fetch(const ImageRequest& request) const = 0;
};

/// Serves canned files from a directory. With an index.json mapping request
/// ids to file names (or to null for a simulated failure) lookups are exact;
/// otherwise the sorted image files are assigned by hashing the request key.
class FixtureProvider final : public ImageProvider {
 public:
  explicit FixtureProvider(std::filesystem::path dir);
  std::vector<std::uint8_t> fetch(const ImageRequest& request) const override;

 private:
  std::filesystem::path dir_;
  nlohmann::json index_;
  std::vector<std::filesystem::path> files_;
};

struct HttpProviderConfig {
  std::string base_url;
  std::string api_key_env = "VEGSCAN_API_KEY";
  long timeout_seconds = 30;
};

/// Street-level imagery over HTTP(S). The key is read from the environment
/// variable named in the config and never appears in messages.
class HttpProvider final : public ImageProvider {
 public:
  explicit HttpProvider(HttpProviderConfig cfg);
  ~HttpProvider() override;
  std::vector<std::uint8_t> fetch(const ImageRequest& request) const override;
  /// Request URL without credentials.
  std::string public_url(const ImageRequest& request) const;

 private:
  HttpProviderConfig cfg_;
  std::string key_;
};

struct FetchOptions {
  std::size_t max_concurrency = 4;
};

struct FetchFailure {
  std::string request_id;
  std::string message;
};

struct FetchResult {
  Manifest records;
  std::vector<FetchFailure> failures;

  nlohmann::json failure_report() const;
};

/// Fetch every distinct request into \p out_dir. Files are named
/// <request id>_<content hash>.<ext>; repeated requests yield one row.
/// Per-request failures are collected, configuration errors rethrown.
FetchResult fetch_images(const ImageProvider& provider, const std::vector<ImageRequest>& requests,
                         const std::filesystem::path& out_dir, const FetchOptions& opts = {});

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);

}  // namespace vegscan::geo
