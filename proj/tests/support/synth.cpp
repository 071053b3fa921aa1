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

#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vegscan/featurestack.hpp"

namespace vegscan::testing {

double LineTruth::length() const { return std::hypot(x2 - x1, y2 - y1); }

LineTruth random_line(std::mt19937_64& rng, std::size_t h, std::size_t w, double min_length) {
  std::uniform_real_distribution<double> ang(0.0, std::numbers::pi);
  const double W = static_cast<double>(w - 1);
  const double H = static_cast<double>(h - 1);
  for (;;) {
    LineTruth t;
    t.theta = ang(rng);
    const double c = std::cos(t.theta);
    const double s = std::sin(t.theta);
    // r range spanned by the image corners.
    double lo = 1e300, hi = -1e300;
    for (const double x : {0.0, W}) {
      for (const double y : {0.0, H}) {
        lo = std::min(lo, x * c + y * s);
        hi = std::max(hi, x * c + y * s);
      }
    }
    t.r = std::uniform_real_distribution<double>(lo, hi)(rng);
    // Intersections with the four borders.
    std::vector<std::pair<double, double>> pts;
    auto add = [&](double x, double y) {
      if (x < -1e-9 || x > W + 1e-9 || y < -1e-9 || y > H + 1e-9) return;
      for (const auto& p : pts) {
        if (std::hypot(p.first - x, p.second - y) < 1e-6) return;
      }
      pts.emplace_back(x, y);
    };
    if (std::fabs(s) > 1e-9) {
      add(0.0, t.r / s);
      add(W, (t.r - W * c) / s);
    }
    if (std::fabs(c) > 1e-9) {
      add(t.r / c, 0.0);
      add((t.r - H * s) / c, H);
    }
    if (pts.size() < 2) continue;
    t.x1 = pts[0].first;
    t.y1 = pts[0].second;
    t.x2 = pts[1].first;
    t.y2 = pts[1].second;
    if (t.length() >= min_length) return t;
  }
}

void draw_line(EdgeMap& edges, double x1, double y1, double x2, double y2) {
  const double dx = x2 - x1;
  const double dy = y2 - y1;
  const auto steps = static_cast<int>(std::ceil(std::max(std::fabs(dx), std::fabs(dy))));
  for (int i = 0; i <= steps; ++i) {
    const double f = steps == 0 ? 0.0 : static_cast<double>(i) / steps;
    const long x = std::lround(x1 + f * dx);
    const long y = std::lround(y1 + f * dy);
    if (x >= 0 && y >= 0 && x < static_cast<long>(edges.width) && y < static_cast<long>(edges.height)) {
      edges.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1;
    }
  }
}

void add_salt(EdgeMap& edges, double fraction, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(edges.values.size())));
  std::uniform_int_distribution<std::size_t> pick(0, edges.values.size() - 1);
  for (std::size_t i = 0; i < n; ++i) edges.values[pick(rng)] = 1;
}

GrayImage blocky_image(std::mt19937_64& rng, std::size_t h, std::size_t w, double min_contrast) {
  // Levels are multiples of min_contrast so any two distinct ones differ
  // by at least that much.
  const int levels = static_cast<int>(std::floor(255.0 / min_contrast));
  std::uniform_int_distribution<int> level(0, levels);
  GrayImage img(h, w, level(rng) * min_contrast);
  std::uniform_int_distribution<int> shape(0, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int count = 3 + static_cast<int>(u(rng) * 4);
  for (int k = 0; k < count; ++k) {
    const double v = level(rng) * min_contrast;
    const int kind = shape(rng);
    const double cx = u(rng) * static_cast<double>(w);
    const double cy = u(rng) * static_cast<double>(h);
    const double a = 8 + u(rng) * static_cast<double>(w) / 3;
    const double b = 8 + u(rng) * static_cast<double>(h) / 3;
    const double ang = u(rng) * std::numbers::pi;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double px = static_cast<double>(x) - cx;
        const double py = static_cast<double>(y) - cy;
        bool inside = false;
        if (kind == 0) {
          inside = std::fabs(px) < a && std::fabs(py) < b;
        } else if (kind == 1) {
          inside = std::fabs(px * std::cos(ang) + py * std::sin(ang)) < 4 + b / 10;
        } else {
          inside = (px * px) / (a * a) + (py * py) / (b * b) < 1.0;
        }
        if (inside) img.at(y, x) = v;
      }
    }
  }
  return img;
}

GrayImage constant_gray(std::size_t h, std::size_t w, double value) { return GrayImage(h, w, value); }

RgbImage constant_rgb(std::size_t h, std::size_t w, double r, double g, double b) {
  RgbImage img(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  }
  return img;
}

namespace {

void paint(RgbImage& img, std::size_t y, std::size_t x, double r, double g, double b) {
  img.at(0, y, x) = r;
  img.at(1, y, x) = g;
  img.at(2, y, x) = b;
}

}  // namespace

RgbImage street_scene(int cls, std::mt19937_64& rng, std::size_t size) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double S = static_cast<double>(size);
  const double horizon = S * (0.55 + 0.1 * u(rng));
  const double sky = 170 + 60 * u(rng);
  const double ground = 70 + 40 * u(rng);
  RgbImage img(size, size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double t = static_cast<double>(y) / S;
      if (static_cast<double>(y) < horizon) {
        paint(img, y, x, sky - 40 * t, sky - 25 * t, std::min(255.0, sky + 20 - 10 * t));
      } else {
        paint(img, y, x, ground, ground - 5, ground - 10);
      }
    }
  }
  if (cls >= 1) {
    // Pole.
    const double px = S * (0.2 + 0.6 * u(rng));
    const double pw = S * (0.02 + 0.015 * u(rng));
    const double top = S * (0.08 + 0.1 * u(rng));
    for (std::size_t y = static_cast<std::size_t>(top); y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        if (std::fabs(static_cast<double>(x) - px) <= pw) paint(img, y, x, 95, 70, 45);
      }
    }
    // Wires: two or three nearly parallel dark lines through the pole top.
    const int wires = 2 + static_cast<int>(u(rng) * 2);
    const double slope = (u(rng) - 0.5) * 0.5;
    for (int k = 0; k < wires; ++k) {
      const double y0 = top + 6 + k * S * 0.04;
      for (std::size_t x = 0; x < size; ++x) {
        const double yc = y0 + slope * (static_cast<double>(x) - px);
        for (int d = -1; d <= 0; ++d) {
          const long y = std::lround(yc) + d;
          if (y >= 0 && y < static_cast<long>(size)) paint(img, static_cast<std::size_t>(y), x, 25, 25, 30);
        }
      }
    }
    if (cls == 2) {
      const int blobs = 5 + static_cast<int>(u(rng) * 4);
      for (int k = 0; k < blobs; ++k) {
        const double bx = px + (u(rng) - 0.5) * S * 0.5;
        const double by = top + u(rng) * S * 0.3;
        const double rad = S * (0.05 + 0.06 * u(rng));
        const double shade = 0.7 + 0.3 * u(rng);
        for (std::size_t y = 0; y < size; ++y) {
          for (std::size_t x = 0; x < size; ++x) {
            const double dx = static_cast<double>(x) - bx;
            const double dy = static_cast<double>(y) - by;
            if (dx * dx + dy * dy < rad * rad) paint(img, y, x, 40 * shade, 130 * shade, 45 * shade);
          }
        }
      }
    }
  }
  // Mild sensor noise.
  std::normal_distribution<double> noise(0.0, 4.0);
  for (double& v : img.pixels()) v = std::clamp(v + noise(rng), 0.0, 255.0);
  return img;
}

SyntheticCorpus make_corpus(std::size_t images, std::uint64_t seed, std::size_t size) {
  SyntheticCorpus corpus;
  std::mt19937_64 rng(seed);
  std::vector<RgbImage> pixels;
  Manifest m;
  for (std::size_t i = 0; i < images; ++i) {
    SampleRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "s%03zu", i);
    rec.id = id;
    rec.path = std::string(id) + ".png";
    rec.label = static_cast<int>(i % 3);
    rec.lat = 38.5 + 0.001 * static_cast<double>(i);
    rec.lon = -121.5;
    m.push_back(rec);
    pixels.push_back(street_scene(rec.label, rng, size));
  }
  m = add_flipped_copies(split_dataset(m, SplitRatios{}, seed));

  std::vector<RgbImage> train_images;
  for (std::size_t i = 0; i < images; ++i) {
    if (m[i].split == Split::train) train_images.push_back(pixels[i]);
  }
  FeatureConfig fc;
  fc.size = size;
  const ChannelStats stats = compute_channel_stats(train_images, size);
  for (const SampleRecord& rec : m) {
    const std::size_t src = static_cast<std::size_t>(std::stoul(original_id(rec).substr(1)));
    const RgbImage img = rec.flipped ? hflip(pixels[src]) : pixels[src];
    corpus.features.add(rec.id, featurize(img, fc, stats).tensor);
  }
  corpus.manifest = std::move(m);
  return corpus;
}

}  // namespace vegscan::testing
