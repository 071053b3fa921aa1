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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vegscan {

enum class Split { unassigned, train, dev, test };

std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view name);

inline constexpr int kNumClasses = 3;
inline constexpr std::string_view kFlipSuffix = "_flip";

/// One manifest row: an image with its geotag, acquisition parameters,
/// label, split and flip flag.
struct SampleRecord {
  std::string id;
  std::string path;
  double lat = 0.0;
  double lon = 0.0;
  double heading = 0.0;
  double pitch = 0.0;
  double fov = 90.0;
  int label = 0;
  bool flipped = false;
  Split split = Split::unassigned;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

using Manifest = std::vector<SampleRecord>;

nlohmann::json to_json(const SampleRecord& rec);
/// Throws InvalidArgument when a field is missing or has the wrong type.
SampleRecord record_from_json(const nlohmann::json& j);

/// Compact single-line JSON for one record (keys in sorted order).
std::string manifest_line(const SampleRecord& rec);

Manifest read_manifest(const std::filesystem::path& path);
/// Raw lines alongside the parsed records; blank lines are skipped.
std::vector<std::string> read_manifest_lines(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Id of the horizontally mirrored copy of a record.
std::string mirror_id(std::string_view id);
/// Id of the unflipped original a record was derived from.
std::string original_id(const SampleRecord& rec);

}  // namespace vegscan
