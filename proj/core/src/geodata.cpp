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

#include "vegscan/geodata.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "vegscan/image_io.hpp"

namespace vegscan::geo {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void check_coordinate(LatLon p, const char* what) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon)) {
    throw InvalidArgument(std::string(what) + ": coordinates must be finite");
  }
  if (std::fabs(p.lat) > 90.0 || std::fabs(p.lon) > 180.0) {
    throw InvalidArgument(std::string(what) + ": latitude must be within +-90 and longitude within +-180");
  }
}

double wrap_lon_delta(double d) {
  if (d > 180.0) return d - 360.0;
  if (d < -180.0) return d + 360.0;
  return d;
}

double normalize_lon(double lon) {
  if (lon >= 180.0) return lon - 360.0;
  if (lon < -180.0) return lon + 360.0;
  return lon;
}

std::string hex(std::uint64_t v, int digits) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str().substr(0, static_cast<std::size_t>(digits));
}

LatLon parse_point(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
  if (v.is_object()) return {v.at("lat").get<double>(), v.at("lon").get<double>()};
  throw InvalidArgument(std::string("street field '") + key + "' must be [lat, lon] or {lat, lon}");
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

double equirect_distance(LatLon a, LatLon b) {
  const double phi_m = 0.5 * (a.lat + b.lat) * kDeg;
  const double x = wrap_lon_delta(b.lon - a.lon) * kDeg * std::cos(phi_m);
  const double y = (b.lat - a.lat) * kDeg;
  return kEarthRadiusM * std::sqrt(x * x + y * y);
}

double initial_bearing(LatLon a, LatLon b) {
  const double p1 = a.lat * kDeg;
  const double p2 = b.lat * kDeg;
  const double dl = wrap_lon_delta(b.lon - a.lon) * kDeg;
  const double y = std::sin(dl) * std::cos(p2);
  const double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
  double deg = std::atan2(y, x) / kDeg;
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

void StreetSpec::validate() const {
  check_coordinate(start, "street start");
  check_coordinate(end, "street end");
  if (!(interval > 0.0) || !std::isfinite(interval)) throw InvalidArgument("street interval must be positive");
  if (label < 0 || label >= kNumClasses) throw InvalidArgument("street label must be 0, 1 or 2");
}

nlohmann::json StreetSpec::to_json() const {
  return {{"name", name},
          {"start", {start.lat, start.lon}},
          {"end", {end.lat, end.lon}},
          {"interval", interval},
          {"label", label}};
}

StreetSpec StreetSpec::from_json(const nlohmann::json& j) {
  try {
    StreetSpec s;
    s.name = j.value("name", std::string());
    s.start = parse_point(j, "start");
    s.end = parse_point(j, "end");
    s.interval = j.value("interval", 10.0);
    s.label = j.value("label", 0);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad street: ") + e.what());
  }
}

std::vector<StreetSpec> read_streets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open street list " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw InvalidArgument(path.string() + ": expected a JSON array of streets");
  std::vector<StreetSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      out.push_back(StreetSpec::from_json(j[i]));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ": street " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

void ImageRequest::validate() const {
  check_coordinate({lat, lon}, "image request");
  if (!(heading >= 0.0 && heading < 360.0)) throw InvalidArgument("heading must lie in [0, 360)");
  if (!(pitch >= -90.0 && pitch <= 90.0)) throw InvalidArgument("pitch must lie in [-90, 90]");
  if (!(fov > 0.0 && fov <= 120.0)) throw InvalidArgument("fov must lie in (0, 120]");
  if (width < 1 || height < 1 || width > 640 || height > 640) throw InvalidArgument("image size must be 1..640");
}

std::string ImageRequest::key() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(7) << lat << ',' << lon << std::setprecision(2) << ";h=" << heading
     << ";p=" << pitch << ";f=" << fov << ";s=" << width << 'x' << height;
  return os.str();
}

std::string ImageRequest::id() const { return "sv_" + hex(fnv1a(key()), 12); }

std::vector<ImageRequest> interpolate_street(const StreetSpec& spec, const InterpolationOptions& opts) {
  spec.validate();
  const double distance = equirect_distance(spec.start, spec.end);
  const double dlat = spec.end.lat - spec.start.lat;
  const double dlon = wrap_lon_delta(spec.end.lon - spec.start.lon);

  std::vector<double> fractions;
  if (distance <= 0.0) {
    fractions.push_back(0.0);
  } else {
    const auto n = static_cast<std::size_t>(std::floor(distance / spec.interval)) + 1;
    for (std::size_t k = 0; k < n; ++k) fractions.push_back(static_cast<double>(k) * spec.interval / distance);
    const double last = static_cast<double>(n - 1) * spec.interval;
    if (distance - last > 0.5 * spec.interval) fractions.push_back(1.0);
  }

  std::vector<ImageRequest> out;
  out.reserve(fractions.size());
  for (const double f : fractions) {
    ImageRequest r;
    r.lat = spec.start.lat + f * dlat;
    r.lon = normalize_lon(spec.start.lon + f * dlon);
    r.pitch = opts.pitch;
    r.fov = opts.fov;
    r.width = r.height = opts.size;
    r.label = spec.label;
    out.push_back(r);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (opts.heading_mode == HeadingMode::fixed) {
      out[i].heading = opts.fixed_heading;
    } else if (out.size() == 1) {
      out[i].heading = initial_bearing(spec.start, spec.end);
      if (distance <= 0.0) out[i].heading = 0.0;
    } else if (i + 1 < out.size()) {
      out[i].heading = initial_bearing({out[i].lat, out[i].lon}, {out[i + 1].lat, out[i + 1].lon});
    } else {
      out[i].heading = out[i - 1].heading;
    }
    out[i].validate();
  }
  return out;
}

// ---------------------------------------------------------------------------

FixtureProvider::FixtureProvider(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw ProviderConfigError("fixture directory " + dir_.string() + " does not exist");
  }
  const auto index_path = dir_ / "index.json";
  if (std::filesystem::exists(index_path)) {
    std::ifstream in(index_path);
    try {
      index_ = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ProviderConfigError(index_path.string() + ": " + e.what());
    }
    if (!index_.is_object()) throw ProviderConfigError(index_path.string() + ": expected an object");
    return;
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw ProviderConfigError("fixture directory " + dir_.string() + " holds no images");
}

std::vector<std::uint8_t> FixtureProvider::fetch(const ImageRequest& request) const {
  if (!index_.is_null()) {
    const std::string id = request.id();
    if (!index_.contains(id)) throw ProviderError("no fixture for request " + id);
    const auto& entry = index_.at(id);
    if (entry.is_null()) throw ProviderError("fixture marks request " + id + " as unavailable");
    return read_file_bytes(dir_ / entry.get<std::string>());
  }
  return read_file_bytes(files_[fnv1a(request.key()) % files_.size()]);
}

// ---------------------------------------------------------------------------

nlohmann::json FetchResult::failure_report() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : failures) arr.push_back({{"request_id", f.request_id}, {"error", f.message}});
  return {{"failed", failures.size()}, {"succeeded", records.size()}, {"failures", arr}};
}

FetchResult fetch_images(const ImageProvider& provider, const std::vector<ImageRequest>& requests,
                         const std::filesystem::path& out_dir, const FetchOptions& opts) {
  std::vector<ImageRequest> unique;
  std::set<std::string> seen;
  for (const ImageRequest& r : requests) {
    r.validate();
    if (seen.insert(r.id()).second) unique.push_back(r);
  }
  std::filesystem::create_directories(out_dir);

  struct Outcome {
    std::optional<SampleRecord> record;
    std::string error;
  };
  std::vector<Outcome> outcomes(unique.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= unique.size() || abort.load()) return;
      const ImageRequest& req = unique[i];
      try {
        const std::vector<std::uint8_t> bytes = provider.fetch(req);
        const ImageFormat fmt = detect_format(bytes);
        const char* ext = fmt == ImageFormat::png ? ".png" : ".jpg";
        if (fmt == ImageFormat::unknown) throw ProviderError("provider returned data that is neither PNG nor JPEG");
        const std::string name = req.id() + "_" + hex(fnv1a(bytes), 8) + ext;
        const auto path = out_dir / name;
        if (!std::filesystem::exists(path)) write_file_atomic(path, bytes);
        SampleRecord rec;
        rec.id = req.id();
        rec.path = path.string();
        rec.lat = req.lat;
        rec.lon = req.lon;
        rec.heading = req.heading;
        rec.pitch = req.pitch;
        rec.fov = req.fov;
        rec.label = req.label;
        outcomes[i].record = std::move(rec);
      } catch (const ProviderConfigError&) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(opts.max_concurrency, 1, std::max<std::size_t>(1, unique.size()));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (fatal) std::rethrow_exception(fatal);

  FetchResult result;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    if (outcomes[i].record) {
      result.records.push_back(std::move(*outcomes[i].record));
    } else {
      result.failures.push_back({unique[i].id(), outcomes[i].error});
    }
  }
  return result;
}

}  // namespace vegscan::geo
