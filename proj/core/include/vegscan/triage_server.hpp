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
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "vegscan/featurestack.hpp"
#include "vegscan/nn.hpp"
#include "vegscan/triage.hpp"

namespace vegscan::triage {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path report_path;    // evaluation report JSON (required)
  std::filesystem::path log_path;       // review log (JSON Lines)
  std::filesystem::path manifest_path;  // used for export and image lookup
  std::filesystem::path export_dir;     // where exported manifests go
  std::filesystem::path checkpoint;     // optional, enables salience overlays
  std::filesystem::path stats_path;     // optional channel stats for salience
  std::filesystem::path static_dir;     // optional UI bundle served at /

  /// Keys: host, port, report, log, manifest, export_dir, checkpoint,
  /// stats, static_dir. Relative paths stay relative to the working directory.
  void merge_json(const nlohmann::json& j);
};

struct ApiRequest {
  std::string method;  // GET or POST
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Transport-independent request handling for the triage endpoints.
class TriageApi {
 public:
  explicit TriageApi(ServerConfig cfg);
  ~TriageApi();

  ApiResponse handle(const ApiRequest& req);
  TriageStore& store() noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP front end. start() binds (port 0 picks a free port) and serves on a
/// background thread until stop().
class TriageServer {
 public:
  explicit TriageServer(ServerConfig cfg);
  ~TriageServer();

  /// Returns the bound port.
  int start();
  /// Blocks in the caller's thread.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vegscan::triage
