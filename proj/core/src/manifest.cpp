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

#include "vegscan/manifest.hpp"

#include <fstream>
#include <sstream>

#include "vegscan/errors.hpp"
#include "vegscan/image_io.hpp"

namespace vegscan {

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::train:
      return "train";
    case Split::dev:
      return "dev";
    case Split::test:
      return "test";
    case Split::unassigned:
      break;
  }
  return "unassigned";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "dev") return Split::dev;
  if (name == "test") return Split::test;
  if (name == "unassigned" || name.empty()) return Split::unassigned;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

nlohmann::json to_json(const SampleRecord& rec) {
  return nlohmann::json{{"id", rec.id},           {"path", rec.path},       {"lat", rec.lat},
                        {"lon", rec.lon},         {"heading", rec.heading}, {"pitch", rec.pitch},
                        {"fov", rec.fov},         {"label", rec.label},     {"flipped", rec.flipped},
                        {"split", to_string(rec.split)}};
}

SampleRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("manifest record must be a JSON object");
  auto require = [&](const char* key) -> const nlohmann::json& {
    const auto it = j.find(key);
    if (it == j.end()) throw InvalidArgument(std::string("manifest record missing '") + key + "'");
    return *it;
  };
  auto number = [&](const char* key) {
    const auto& v = require(key);
    if (!v.is_number()) throw InvalidArgument(std::string("manifest field '") + key + "' must be a number");
    return v.get<double>();
  };
  SampleRecord rec;
  const auto& id = require("id");
  const auto& path = require("path");
  if (!id.is_string() || !path.is_string()) throw InvalidArgument("manifest 'id' and 'path' must be strings");
  rec.id = id.get<std::string>();
  rec.path = path.get<std::string>();
  rec.lat = number("lat");
  rec.lon = number("lon");
  rec.heading = number("heading");
  rec.pitch = number("pitch");
  rec.fov = number("fov");
  const auto& label = require("label");
  if (!label.is_number_integer()) throw InvalidArgument("manifest 'label' must be an integer");
  rec.label = label.get<int>();
  if (rec.label < 0 || rec.label >= kNumClasses) {
    throw InvalidArgument("manifest record '" + rec.id + "' has label outside {0,1,2}");
  }
  const auto& flipped = require("flipped");
  if (!flipped.is_boolean()) throw InvalidArgument("manifest 'flipped' must be a boolean");
  rec.flipped = flipped.get<bool>();
  const auto& split = require("split");
  if (!split.is_string()) throw InvalidArgument("manifest 'split' must be a string");
  rec.split = parse_split(split.get<std::string>());
  return rec;
}

std::string manifest_line(const SampleRecord& rec) { return to_json(rec).dump(); }

std::vector<std::string> read_manifest_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open manifest " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

Manifest read_manifest(const std::filesystem::path& path) {
  Manifest out;
  std::size_t n = 0;
  for (const std::string& line : read_manifest_lines(path)) {
    ++n;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(path.string() + ": record " + std::to_string(n) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ": record " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::string text;
  for (const SampleRecord& rec : manifest) {
    text += manifest_line(rec);
    text += '\n';
  }
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string mirror_id(std::string_view id) { return std::string(id) + std::string(kFlipSuffix); }

std::string original_id(const SampleRecord& rec) {
  if (rec.flipped && rec.id.size() > kFlipSuffix.size() && rec.id.ends_with(kFlipSuffix)) {
    return rec.id.substr(0, rec.id.size() - kFlipSuffix.size());
  }
  return rec.id;
}

}  // namespace vegscan
