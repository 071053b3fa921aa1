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

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "vegscan/geodata.hpp"
#include "vegscan/image_io.hpp"

namespace vegscan::geo {
namespace {

namespace fs = std::filesystem;

constexpr double kRad = std::numbers::pi / 180.0;

double haversine(LatLon a, LatLon b) {
  const double dlat = (b.lat - a.lat) * kRad;
  const double dlon = (b.lon - a.lon) * kRad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2 * kEarthRadiusM * std::asin(std::sqrt(h));
}

// Point at distance d (m) and bearing (deg) from a, on the sphere.
LatLon destination(LatLon a, double d, double bearing) {
  const double delta = d / kEarthRadiusM;
  const double th = bearing * kRad;
  const double p1 = a.lat * kRad;
  const double l1 = a.lon * kRad;
  const double p2 = std::asin(std::sin(p1) * std::cos(delta) + std::cos(p1) * std::sin(delta) * std::cos(th));
  const double l2 = l1 + std::atan2(std::sin(th) * std::sin(delta) * std::cos(p1),
                                    std::cos(delta) - std::sin(p1) * std::sin(p2));
  return {p2 / kRad, l2 / kRad};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vegscan_geo_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> tiny_png(int shade) {
  RgbImage img(4, 4, static_cast<double>(shade));
  return encode_png(img);
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TEST(Distance, MatchesHaversineOnShortSpans) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> lat(-60, 60), lon(-180, 180), dist(1, 5000), brg(0, 360);
  for (int i = 0; i < 200; ++i) {
    const LatLon a{lat(rng), lon(rng)};
    const LatLon b = destination(a, dist(rng), brg(rng));
    EXPECT_NEAR(equirect_distance(a, b), haversine(a, b), 0.05);
  }
}

TEST(Bearing, CardinalDirections) {
  EXPECT_NEAR(initial_bearing({0, 0}, {0.01, 0}), 0.0, 1e-9);
  EXPECT_NEAR(initial_bearing({0, 0}, {0, 0.01}), 90.0, 1e-9);
  EXPECT_NEAR(initial_bearing({0, 0}, {-0.01, 0}), 180.0, 1e-9);
  EXPECT_NEAR(initial_bearing({0, 0}, {0, -0.01}), 270.0, 1e-9);
}

TEST(Interpolate, StartEqualsEndGivesOnePoint) {
  StreetSpec s{"dot", {38.5, -121.7}, {38.5, -121.7}, 10, 1};
  const auto pts = interpolate_street(s);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].lat, 38.5);
  EXPECT_EQ(pts[0].label, 1);
}

TEST(Interpolate, OneKilometerNorth) {
  const LatLon a{38.0, -121.0};
  StreetSpec s{"north", a, destination(a, 1000, 0), 100, 0};
  const auto pts = interpolate_street(s);
  ASSERT_EQ(pts.size(), 11u);
  for (const auto& p : pts) EXPECT_NEAR(p.heading, 0.0, 0.1);
}

TEST(Interpolate, OneKilometerEastAtEquator) {
  const LatLon a{0.0, 10.0};
  StreetSpec s{"east", a, destination(a, 1000, 90), 100, 0};
  const auto pts = interpolate_street(s);
  ASSERT_EQ(pts.size(), 11u);
  for (const auto& p : pts) EXPECT_NEAR(p.heading, 90.0, 0.1);
}

TEST(Interpolate, SpacingAndCountAgainstHaversine) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> lat(-60, 60), lon(-170, 170), dist(20, 4999), brg(0, 360), iv(5, 50);
  for (int i = 0; i < 50; ++i) {
    const LatLon a{lat(rng), lon(rng)};
    StreetSpec s{"s", a, destination(a, dist(rng), brg(rng)), iv(rng), 0};
    const double d = haversine(s.start, s.end);
    const double rem = std::fmod(d, s.interval);
    const std::size_t expect = static_cast<std::size_t>(std::floor(d / s.interval)) + 1 + (rem > s.interval / 2 ? 1 : 0);
    const auto pts = interpolate_street(s);
    ASSERT_EQ(pts.size(), expect);
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
      EXPECT_NEAR(haversine({pts[k - 1].lat, pts[k - 1].lon}, {pts[k].lat, pts[k].lon}), s.interval, 1.0);
    }
    EXPECT_NEAR(pts.front().lat, s.start.lat, 1e-12);
  }
}

TEST(Interpolate, FixedHeadingAndOptions) {
  const LatLon a{10.0, 10.0};
  StreetSpec s{"s", a, destination(a, 100, 45), 10, 2};
  InterpolationOptions o;
  o.heading_mode = HeadingMode::fixed;
  o.fixed_heading = 123.0;
  o.pitch = 5;
  o.fov = 60;
  o.size = 320;
  for (const auto& p : interpolate_street(s, o)) {
    EXPECT_EQ(p.heading, 123.0);
    EXPECT_EQ(p.pitch, 5.0);
    EXPECT_EQ(p.fov, 60.0);
    EXPECT_EQ(p.width, 320);
    EXPECT_EQ(p.label, 2);
  }
}

TEST(StreetSpec, Validation) {
  StreetSpec s{"s", {0, 0}, {0, 0.01}, 10, 0};
  EXPECT_NO_THROW(s.validate());
  s.interval = 0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = StreetSpec{"s", {95, 0}, {0, 0}, 10, 0};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = StreetSpec{"s", {0, 0}, {0, 0.01}, 10, 3};
  EXPECT_THROW(s.validate(), InvalidArgument);
  const auto j = nlohmann::json::parse(R"({"name":"x","start":[1,2],"end":{"lat":1.1,"lon":2.1},"interval":20,"label":1})");
  const StreetSpec p = StreetSpec::from_json(j);
  EXPECT_EQ(p.start, (LatLon{1, 2}));
  EXPECT_EQ(p.end, (LatLon{1.1, 2.1}));
  EXPECT_EQ(StreetSpec::from_json(p.to_json()).to_json(), p.to_json());
}

TEST(ImageRequest, ValidationAndStableIds) {
  ImageRequest r;
  r.lat = 38.1;
  r.lon = -121.2;
  EXPECT_NO_THROW(r.validate());
  ImageRequest same = r;
  EXPECT_EQ(r.id(), same.id());
  same.heading = 10;
  EXPECT_NE(r.id(), same.id());
  EXPECT_EQ(r.id().rfind("sv_", 0), 0u);
  r.fov = 150;
  EXPECT_THROW(r.validate(), InvalidArgument);
  r.fov = 90;
  r.width = 1000;
  EXPECT_THROW(r.validate(), InvalidArgument);
}

std::vector<ImageRequest> some_requests(std::size_t n) {
  const LatLon a{38.0, -121.0};
  StreetSpec s{"s", a, destination(a, 10.0 * static_cast<double>(n - 1), 0), 10, 1};
  auto reqs = interpolate_street(s);
  reqs.resize(n);
  return reqs;
}

TEST(Fetch, FixtureProviderWritesOneRowPerRequest) {
  const fs::path fixtures = scratch_dir("fixtures5");
  for (int i = 0; i < 5; ++i) write_bytes(fixtures / ("img" + std::to_string(i) + ".png"), tiny_png(40 * i));
  const fs::path out = scratch_dir("out5");
  const auto reqs = some_requests(5);
  const FetchResult r = fetch_images(FixtureProvider(fixtures), reqs, out);
  ASSERT_EQ(r.records.size(), 5u);
  EXPECT_TRUE(r.failures.empty());
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.records[i].id, reqs[i].id());
    EXPECT_EQ(r.records[i].lat, reqs[i].lat);
    EXPECT_EQ(r.records[i].lon, reqs[i].lon);
    EXPECT_EQ(r.records[i].heading, reqs[i].heading);
    EXPECT_EQ(r.records[i].label, 1);
    EXPECT_TRUE(fs::exists(r.records[i].path));
    EXPECT_NO_THROW(read_image(r.records[i].path));
  }
}

class FlakyProvider final : public ImageProvider {
 public:
  explicit FlakyProvider(std::set<std::string> failing) : failing_(std::move(failing)) {}
  std::vector<std::uint8_t> fetch(const ImageRequest& r) const override {
    ++calls;
    if (failing_.count(r.id())) throw ProviderError("simulated outage");
    return tiny_png(static_cast<int>(r.lat * 1000) % 256);
  }
  mutable std::atomic<int> calls{0};

 private:
  std::set<std::string> failing_;
};

TEST(Fetch, FailuresAreReportedNotFatal) {
  const auto reqs = some_requests(10);
  FlakyProvider p({reqs[2].id(), reqs[7].id()});
  const FetchResult r = fetch_images(p, reqs, scratch_dir("flaky"));
  EXPECT_EQ(r.records.size(), 8u);
  ASSERT_EQ(r.failures.size(), 2u);
  const std::set<std::string> failed{r.failures[0].request_id, r.failures[1].request_id};
  EXPECT_EQ(failed, (std::set<std::string>{reqs[2].id(), reqs[7].id()}));
  const auto rep = r.failure_report();
  EXPECT_EQ(rep.at("failed").get<int>(), 2);
  EXPECT_EQ(rep.at("succeeded").get<int>(), 8);
}

TEST(Fetch, RepeatedRequestIsIdempotent) {
  const auto one = some_requests(1);
  const std::vector<ImageRequest> reqs{one[0], one[0], one[0]};
  const fs::path out = scratch_dir("idem");
  FlakyProvider p({});
  const FetchResult a = fetch_images(p, reqs, out);
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_EQ(p.calls.load(), 1);
  const FetchResult b = fetch_images(p, reqs, out);
  EXPECT_EQ(a.records[0].path, b.records[0].path);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(out)) ++files;
  EXPECT_EQ(files, 1u);
  // The file name carries the content hash.
  const std::string name = fs::path(a.records[0].path).filename().string();
  EXPECT_EQ(name.rfind(one[0].id() + "_", 0), 0u);
}

TEST(Fetch, FixtureIndexMarksFailures) {
  const fs::path fixtures = scratch_dir("indexed");
  write_bytes(fixtures / "a.png", tiny_png(10));
  const auto reqs = some_requests(3);
  nlohmann::json index{{reqs[0].id(), "a.png"}, {reqs[1].id(), nullptr}};
  std::ofstream(fixtures / "index.json") << index.dump();
  const FetchResult r = fetch_images(FixtureProvider(fixtures), reqs, scratch_dir("indexed_out"));
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.failures.size(), 2u);
}

TEST(Fetch, MissingFixtureDirectoryIsAConfigError) {
  EXPECT_THROW(FixtureProvider(fs::temp_directory_path() / "vegscan_no_such_dir"), ProviderConfigError);
}

TEST(Fetch, NonImageBytesAreAFailure) {
  class Junk final : public ImageProvider {
   public:
    std::vector<std::uint8_t> fetch(const ImageRequest&) const override { return {1, 2, 3}; }
  };
  const FetchResult r = fetch_images(Junk{}, some_requests(2), scratch_dir("junk"));
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.failures.size(), 2u);
}

class HttpProviderTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Get("/img", [](const httplib::Request& req, httplib::Response& res) {
      const std::string key = req.get_param_value("key");
      if (key != "s3cr3t/+") {
        res.status = 403;
        return;
      }
      if (req.get_param_value("heading") == "90.00") {
        res.status = 500;
        return;
      }
      const auto png = tiny_png(99);
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    ::setenv("VEGSCAN_TEST_KEY", "s3cr3t/+", 1);
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  HttpProviderConfig config() const {
    HttpProviderConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/img";
    c.api_key_env = "VEGSCAN_TEST_KEY";
    c.timeout_seconds = 10;
    return c;
  }
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(HttpProviderTest, FetchesBytesAndKeepsTheKeyOutOfMessages) {
  HttpProvider p(config());
  ImageRequest r = some_requests(1)[0];
  r.heading = 0;
  EXPECT_EQ(p.fetch(r), tiny_png(99));
  EXPECT_EQ(p.public_url(r).find("s3cr3t"), std::string::npos);

  r.heading = 90;
  try {
    p.fetch(r);
    FAIL() << "expected ProviderError";
  } catch (const ProviderConfigError&) {
    FAIL() << "a server error is not a configuration error";
  } catch (const ProviderError& e) {
    EXPECT_EQ(std::string(e.what()).find("s3cr3t"), std::string::npos);
  }
}

TEST_F(HttpProviderTest, RejectedCredentialsAbortTheRun) {
  ::setenv("VEGSCAN_TEST_KEY", "wrong", 1);
  HttpProvider p(config());
  EXPECT_THROW(fetch_images(p, some_requests(3), scratch_dir("http_bad")), ProviderConfigError);
}

TEST(HttpProviderConfig, MissingKeyIsAConfigError) {
  ::unsetenv("VEGSCAN_UNSET_KEY");
  HttpProviderConfig c;
  c.base_url = "http://127.0.0.1:1/img";
  c.api_key_env = "VEGSCAN_UNSET_KEY";
  EXPECT_THROW(HttpProvider{c}, ProviderConfigError);
}

}  // namespace
}  // namespace vegscan::geo
