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

#include "vegscan/triage_server.hpp"

#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "vegscan/checkpoint.hpp"
#include "vegscan/image_io.hpp"
#include "vegscan/manifest.hpp"

namespace vegscan::triage {
namespace {

ApiResponse json_response(int status, const nlohmann::json& j) { return {status, "application/json", j.dump()}; }

ApiResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

std::string content_type_for(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

std::size_t parse_count(const std::map<std::string, std::string>& q, const std::string& key, std::size_t fallback) {
  const auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return fallback;
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(it->second, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != it->second.size() || v < 0) throw InvalidArgument(key + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

}  // namespace

void ServerConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("serve config must be a JSON object");
  try {
    host = j.value("host", host);
    port = j.value("port", port);
    auto path = [&](const char* key, std::filesystem::path& field) {
      if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    path("report", report_path);
    path("log", log_path);
    path("manifest", manifest_path);
    path("export_dir", export_dir);
    path("checkpoint", checkpoint);
    path("stats", stats_path);
    path("static_dir", static_dir);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("serve config: ") + e.what());
  }
}

struct TriageApi::Impl {
  ServerConfig cfg;
  nlohmann::json report;
  std::unique_ptr<TriageStore> store;
  std::map<std::string, std::string> image_paths;  // id -> path
  std::map<std::string, SampleRecord> records;
  std::mutex overlay_mu;
  std::map<std::string, std::vector<std::uint8_t>> overlay_cache;
  std::optional<nn::NetworkSpec> spec;
  std::optional<nn::Parameters<float>> params;
  std::optional<ChannelStats> stats;

  explicit Impl(ServerConfig c) : cfg(std::move(c)) {
    if (cfg.report_path.empty()) throw InvalidArgument("serve: an evaluation report is required");
    report = load_json(cfg.report_path);
    std::vector<FlaggedEntry> flagged;
    if (report.contains("flagged")) {
      for (const auto& f : report.at("flagged")) flagged.push_back(flagged_from_json(f));
    }
    for (const auto& f : flagged) image_paths[f.id] = f.path;
    if (!cfg.manifest_path.empty()) {
      for (auto& rec : read_manifest(cfg.manifest_path)) {
        image_paths.try_emplace(rec.id, rec.path);
        records.emplace(rec.id, std::move(rec));
      }
    }
    if (cfg.log_path.empty()) cfg.log_path = "reviews.jsonl";
    store = std::make_unique<TriageStore>(std::move(flagged), cfg.log_path);
    if (!cfg.checkpoint.empty()) {
      spec = nn::NetworkSpec::small_net();
      params = read_checkpoint(cfg.checkpoint, *spec).params;
      if (!cfg.stats_path.empty()) stats = read_stats(cfg.stats_path);
    }
  }

  RgbImage load_sample(const std::string& id) const {
    const auto it = image_paths.find(id);
    if (it == image_paths.end()) throw UnknownSample("unknown sample " + id);
    RgbImage img = read_image(it->second);
    const auto rec = records.find(id);
    if (rec != records.end() && rec->second.flipped) img = hflip(img);
    return img;
  }

  std::vector<std::uint8_t> overlay(const std::string& id, const std::string& kind) {
    const std::string key = id + "/" + kind;
    {
      std::lock_guard lock(overlay_mu);
      const auto it = overlay_cache.find(key);
      if (it != overlay_cache.end()) return it->second;
    }
    const RgbImage img = resize_bilinear(load_sample(id), kInputSize, kInputSize);
    const GrayImage gray = to_grayscale(img);
    const FeatureConfig fc;
    std::vector<std::uint8_t> png;
    if (kind == "hog") {
      png = encode_unit_png(hog_channel(gray, fc.hog));
    } else if (kind == "hough") {
      png = encode_unit_png(hough_channel(gray, fc.canny, fc.hough));
    } else {
      if (!params) throw RuntimeError("salience overlays need a checkpoint in the serve config");
      const FeatureStack stack = featurize(img, fc, stats);
      png = encode_unit_png(nn::salience_map(*spec, *params, stack.tensor, 2));
    }
    std::lock_guard lock(overlay_mu);
    overlay_cache[key] = png;
    return png;
  }

  ApiResponse route(const ApiRequest& req) {
    const std::string& p = req.path;
    if (req.method == "GET" && p == "/api/flagged") {
      std::optional<ReviewStatus> status;
      const auto it = req.query.find("status");
      if (it != req.query.end() && !it->second.empty() && it->second != "all") status = parse_status(it->second);
      const Page page = store->list_flagged(parse_count(req.query, "limit", 50), parse_count(req.query, "offset", 0),
                                            status);
      return json_response(200, page.to_json());
    }
    if (req.method == "GET" && p == "/api/metrics") {
      nlohmann::json j = report;
      j.erase("flagged");
      return json_response(200, j);
    }
    if (req.method == "POST" && p == "/api/reviews") {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception& e) {
        return error_response(400, std::string("body is not JSON: ") + e.what());
      }
      return json_response(200, store->record_review(ReviewVerdict::from_json(body)).to_json());
    }
    if (req.method == "POST" && p == "/api/export") {
      if (cfg.manifest_path.empty()) return error_response(409, "no manifest configured for export");
      const ExportResult result =
          export_relabeled_manifest(read_manifest_lines(cfg.manifest_path), read_review_log(cfg.log_path));
      const std::filesystem::path dir = cfg.export_dir.empty() ? cfg.manifest_path.parent_path() : cfg.export_dir;
      if (!dir.empty()) std::filesystem::create_directories(dir);
      const std::filesystem::path out = dir / (cfg.manifest_path.stem().string() + ".relabeled.jsonl");
      write_export(out, result);
      return json_response(200, {{"path", out.string()}, {"changed", result.changed}, {"attention", result.attention}});
    }
    const std::string prefix = "/api/samples/";
    if (req.method == "GET" && p.rfind(prefix, 0) == 0) {
      const std::string rest = p.substr(prefix.size());
      const auto slash = rest.find('/');
      if (slash == std::string::npos) return error_response(404, "not found");
      const std::string id = rest.substr(0, slash);
      const std::string tail = rest.substr(slash + 1);
      if (!image_paths.count(id)) return error_response(404, "unknown sample " + id);
      if (tail == "image") {
        const auto& path = image_paths.at(id);
        if (!std::filesystem::exists(path)) return error_response(404, "image file missing for " + id);
        const auto bytes = read_file_bytes(path);
        return {200, content_type_for(path), std::string(bytes.begin(), bytes.end())};
      }
      if (tail == "overlays") {
        const std::string base = prefix + id + "/overlays/";
        return json_response(200, {{"hog_png", base + "hog"},
                                   {"hough_png", base + "hough"},
                                   {"salience_png", params ? nlohmann::json(base + "salience") : nlohmann::json()}});
      }
      if (tail == "overlays/hog" || tail == "overlays/hough" || tail == "overlays/salience") {
        const auto png = overlay(id, tail.substr(tail.find('/') + 1));
        return {200, "image/png", std::string(png.begin(), png.end())};
      }
      return error_response(404, "not found");
    }
    if (req.method == "GET" && !cfg.static_dir.empty() && p.rfind("/api/", 0) != 0) {
      std::filesystem::path rel = p == "/" ? "index.html" : p.substr(1);
      if (rel.lexically_normal().string().rfind("..", 0) == 0) return error_response(404, "not found");
      const auto full = cfg.static_dir / rel;
      if (std::filesystem::is_regular_file(full)) {
        const auto bytes = read_file_bytes(full);
        return {200, content_type_for(full), std::string(bytes.begin(), bytes.end())};
      }
    }
    return error_response(404, "no route for " + req.method + " " + p);
  }
};

TriageApi::TriageApi(ServerConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
TriageApi::~TriageApi() = default;

TriageStore& TriageApi::store() noexcept { return *impl_->store; }

ApiResponse TriageApi::handle(const ApiRequest& req) {
  try {
    return impl_->route(req);
  } catch (const UnknownSample& e) {
    return error_response(404, e.what());
  } catch (const InvalidArgument& e) {
    return error_response(400, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

struct TriageServer::Impl {
  ServerConfig cfg;
  TriageApi api;
  httplib::Server server;
  std::thread thread;

  explicit Impl(ServerConfig c) : cfg(c), api(std::move(c)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      ApiRequest r;
      r.method = req.method;
      r.path = req.path;
      for (const auto& [k, v] : req.params) r.query[k] = v;
      r.body = req.body;
      const ApiResponse out = api.handle(r);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
  }
};

TriageServer::TriageServer(ServerConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

TriageServer::~TriageServer() { stop(); }

int TriageServer::start() {
  int port = impl_->cfg.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->cfg.host);
  } else if (!impl_->server.bind_to_port(impl_->cfg.host, port)) {
    port = -1;
  }
  if (port < 0) throw RuntimeError("cannot bind " + impl_->cfg.host + ":" + std::to_string(impl_->cfg.port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void TriageServer::run() {
  if (!impl_->server.listen(impl_->cfg.host, impl_->cfg.port)) {
    throw RuntimeError("cannot listen on " + impl_->cfg.host + ":" + std::to_string(impl_->cfg.port));
  }
}

void TriageServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace vegscan::triage
