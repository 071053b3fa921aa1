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

#include "vegscan/hough.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace vegscan {

void HoughConfig::validate() const {
  if (n_angles < 1) throw InvalidArgument("HoughConfig: n_angles must be >= 1");
  if (n_radii != 0 && (n_radii < 3 || n_radii % 2 == 0)) {
    throw InvalidArgument("HoughConfig: n_radii must be 0 (auto) or an odd count >= 3");
  }
  if (accumulator_threshold < 0 || min_line_length < 0.0 || max_line_gap < 0.0) {
    throw InvalidArgument("HoughConfig: thresholds must be non-negative");
  }
}

double LineSegment::length() const noexcept {
  return std::hypot(static_cast<double>(x2 - x1), static_cast<double>(y2 - y1));
}

HoughAccumulator::HoughAccumulator(std::size_t height, std::size_t width, const HoughConfig& cfg) {
  cfg.validate();
  n_angles_ = cfg.n_angles;
  r_max_ = std::hypot(static_cast<double>(height), static_cast<double>(width));
  if (cfg.n_radii == 0) {
    half_ = static_cast<std::size_t>(std::ceil(r_max_));
    r_step_ = 1.0;
  } else {
    half_ = (cfg.n_radii - 1) / 2;
    r_step_ = r_max_ / static_cast<double>(half_);
  }
  n_radii_ = 2 * half_ + 1;
  if (cfg.origin == HoughOrigin::center) {
    x0_ = (static_cast<double>(width) - 1.0) / 2.0;
    y0_ = (static_cast<double>(height) - 1.0) / 2.0;
  }
  // Tables are built so that theta_{N-j} = pi - theta_j holds bit-exactly,
  // which keeps mirrored images voting into mirrored bins.
  cos_.resize(n_angles_);
  sin_.resize(n_angles_);
  const double n = static_cast<double>(n_angles_);
  for (std::size_t j = 0; j < n_angles_; ++j) {
    if (2 * j == n_angles_) {
      cos_[j] = 0.0;
      sin_[j] = 1.0;
    } else if (2 * j > n_angles_) {
      cos_[j] = -cos_[n_angles_ - j];
      sin_[j] = sin_[n_angles_ - j];
    } else {
      const double t = static_cast<double>(j) * M_PI / n;
      cos_[j] = std::cos(t);
      sin_[j] = std::sin(t);
    }
  }
  bins_.assign(n_radii_ * n_angles_, 0);
}

double HoughAccumulator::radius(std::size_t r_index) const noexcept {
  return (static_cast<double>(r_index) - static_cast<double>(half_)) * r_step_;
}

double HoughAccumulator::theta(std::size_t theta_index) const noexcept {
  return static_cast<double>(theta_index) * M_PI / static_cast<double>(n_angles_);
}

double HoughAccumulator::radius_of(double x, double y, std::size_t j) const noexcept {
  return (x - x0_) * cos_[j] + (y - y0_) * sin_[j];
}

std::size_t HoughAccumulator::radius_index(double r) const noexcept {
  const long idx = std::lround(r / r_step_) + static_cast<long>(half_);
  return static_cast<std::size_t>(std::clamp<long>(idx, 0, static_cast<long>(n_radii_) - 1));
}

std::int64_t HoughAccumulator::total_votes() const noexcept {
  std::int64_t total = 0;
  for (const int v : bins_) total += v;
  return total;
}

void HoughAccumulator::vote(std::size_t x, std::size_t y, int delta) noexcept {
  const double fx = static_cast<double>(x);
  const double fy = static_cast<double>(y);
  for (std::size_t j = 0; j < n_angles_; ++j) {
    bins_[radius_index(radius_of(fx, fy, j)) * n_angles_ + j] += delta;
  }
}

Tensor HoughAccumulator::heatmap() const {
  Tensor out({1, n_radii_, n_angles_});
  const int peak = *std::max_element(bins_.begin(), bins_.end());
  if (peak > 0) {
    for (std::size_t i = 0; i < bins_.size(); ++i) out[i] = static_cast<float>(bins_[i]) / static_cast<float>(peak);
  }
  return out;
}

HoughAccumulator hough_accumulate(const EdgeMap& edges, const HoughConfig& cfg) {
  HoughAccumulator acc(edges.height, edges.width, cfg);
  for (std::size_t y = 0; y < edges.height; ++y) {
    for (std::size_t x = 0; x < edges.width; ++x) {
      if (edges.at(y, x)) acc.vote(x, y);
    }
  }
  return acc;
}

namespace {

// Bins that no bin within +-wr radius bins and +-wt angle bins exceeds.
// Stepping past either end of the angle axis lands on the opposite end with
// the radius mirrored (theta + pi, -r).
bool dominates_window(const HoughAccumulator& acc, long ri, long ti, long wr, long wt, int v) {
  const long m = static_cast<long>(acc.n_radii());
  const long n = static_cast<long>(acc.n_angles());
  for (long dt = -wt; dt <= wt; ++dt) {
    for (long dr = -wr; dr <= wr; ++dr) {
      if (dr == 0 && dt == 0) continue;
      long r2 = ri + dr;
      long t2 = ti + dt;
      if (t2 < 0 || t2 >= n) {
        t2 = t2 < 0 ? t2 + n : t2 - n;
        r2 = m - 1 - r2;
      }
      if (r2 < 0 || r2 >= m || t2 < 0 || t2 >= n) continue;
      if (acc.votes(static_cast<std::size_t>(r2), static_cast<std::size_t>(t2)) > v) return false;
    }
  }
  return true;
}

std::vector<HoughPeak> local_maxima(const HoughAccumulator& acc, int threshold, const HoughConfig& cfg) {
  const long m = static_cast<long>(acc.n_radii());
  const long n = static_cast<long>(acc.n_angles());
  const long wr = std::max(1L, static_cast<long>(std::floor(cfg.peak_min_distance / acc.r_step())));
  const long wt = std::max(1L, static_cast<long>(std::floor(cfg.peak_min_angle_deg * static_cast<double>(n) / 180.0)));
  std::vector<HoughPeak> out;
  for (long ri = 0; ri < m; ++ri) {
    for (long ti = 0; ti < n; ++ti) {
      const int v = acc.votes(static_cast<std::size_t>(ri), static_cast<std::size_t>(ti));
      if (v < threshold || v == 0) continue;
      bool is_max = true;
      for (long dr = -1; dr <= 1 && is_max; ++dr) {
        for (long dt = -1; dt <= 1; ++dt) {
          if (dr == 0 && dt == 0) continue;
          long r2 = ri + dr;
          long t2 = ti + dt;
          if (t2 < 0 || t2 >= n) {
            t2 = t2 < 0 ? t2 + n : t2 - n;
            r2 = m - 1 - r2;
          }
          if (r2 < 0 || r2 >= m) continue;
          if (acc.votes(static_cast<std::size_t>(r2), static_cast<std::size_t>(t2)) > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max && dominates_window(acc, ri, ti, wr, std::min(wt, n - 1), v)) {
        out.push_back({acc.radius(static_cast<std::size_t>(ri)), acc.theta(static_cast<std::size_t>(ti)), v,
                       static_cast<std::size_t>(ri), static_cast<std::size_t>(ti)});
      }
    }
  }
  return out;
}

bool near_peak(const HoughPeak& a, const HoughPeak& b, double min_dist, double min_angle) {
  const double dtheta = std::fabs(a.theta - b.theta) * 180.0 / M_PI;
  if (std::fabs(a.r - b.r) <= min_dist && dtheta <= min_angle) return true;
  return std::fabs(a.r + b.r) <= min_dist && 180.0 - dtheta <= min_angle;
}

}  // namespace

std::vector<HoughPeak> find_peaks(const HoughAccumulator& acc, int threshold, std::size_t max_peaks,
                                  const HoughConfig& cfg) {
  if (threshold < 1) throw InvalidArgument("find_peaks: threshold must be >= 1");
  std::vector<HoughPeak> candidates = local_maxima(acc, threshold, cfg);
  std::sort(candidates.begin(), candidates.end(), [](const HoughPeak& a, const HoughPeak& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    if (std::fabs(a.r) != std::fabs(b.r)) return std::fabs(a.r) < std::fabs(b.r);
    if (a.theta_index != b.theta_index) return a.theta_index < b.theta_index;
    return a.r < b.r;
  });
  std::vector<HoughPeak> peaks;
  for (const HoughPeak& c : candidates) {
    if (max_peaks != 0 && peaks.size() >= max_peaks) break;
    const bool suppressed = std::any_of(peaks.begin(), peaks.end(), [&](const HoughPeak& p) {
      return near_peak(c, p, cfg.peak_min_distance, cfg.peak_min_angle_deg);
    });
    if (!suppressed) peaks.push_back(c);
  }
  return peaks;
}

namespace {

struct Point {
  double x;
  double y;
};

// Total least squares line through the points: centroid plus unit direction.
bool fit_line(const std::vector<Point>& pts, Point& centroid, Point& dir) {
  if (pts.size() < 2) return false;
  double mx = 0.0;
  double my = 0.0;
  for (const Point& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (const Point& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  if (sxx + syy == 0.0) return false;
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  centroid = {mx, my};
  dir = {std::cos(angle), std::sin(angle)};
  return true;
}

class SegmentExtractor {
 public:
  SegmentExtractor(const EdgeMap& edges, const HoughConfig& cfg)
      : cfg_(cfg),
        h_(edges.height),
        w_(edges.width),
        mask_(edges.values),
        voted_(edges.values.size(), 0),
        acc_(edges.height, edges.width, cfg) {
    for (std::size_t i = 0; i < mask_.size(); ++i) {
      if (mask_[i]) points_.push_back(i);
    }
  }

  std::vector<LineSegment> run() {
    std::vector<std::size_t> order = points_;
    std::mt19937_64 rng(cfg_.rng_seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<LineSegment> segments;
    for (const std::size_t idx : order) {
      if (!mask_[idx]) continue;
      const std::size_t px = idx % w_;
      const std::size_t py = idx / w_;
      acc_.vote(px, py, 1);
      voted_[idx] = 1;

      int best = 0;
      std::size_t best_t = 0;
      for (std::size_t t = 0; t < acc_.n_angles(); ++t) {
        const int v = acc_.votes(acc_.radius_index(acc_.radius_of(static_cast<double>(px), static_cast<double>(py), t)), t);
        if (v > best) {
          best = v;
          best_t = t;
        }
      }
      if (best < cfg_.accumulator_threshold || best == 0) continue;

      LineSegment seg;
      if (extract(px, py, best_t, seg)) segments.push_back(seg);
    }
    return segments;
  }

 private:
  bool inside(long x, long y) const {
    return x >= 0 && y >= 0 && x < static_cast<long>(w_) && y < static_cast<long>(h_);
  }
  bool edge_at(long x, long y) const { return inside(x, y) && mask_[static_cast<std::size_t>(y) * w_ + x]; }

  void collect_band(const Point& origin, const Point& dir, double band, std::vector<Point>& out) const {
    out.clear();
    const double nx = -dir.y;
    const double ny = dir.x;
    for (const std::size_t i : points_) {
      if (!mask_[i]) continue;
      const double x = static_cast<double>(i % w_);
      const double y = static_cast<double>(i / w_);
      if (std::fabs((x - origin.x) * nx + (y - origin.y) * ny) <= band) out.push_back({x, y});
    }
  }

  // Walk from the anchor in direction sign, returning the last step with a hit.
  long walk(const Point& anchor, const Point& step, bool x_major, int sign) const {
    long last_hit = 0;
    double gap = 0.0;
    for (long k = 1;; ++k) {
      const double qx = anchor.x + sign * k * step.x;
      const double qy = anchor.y + sign * k * step.y;
      const long ix = std::lround(qx);
      const long iy = std::lround(qy);
      if (!inside(ix, iy)) break;
      bool hit = false;
      for (long o = -1; o <= 1 && !hit; ++o) {
        hit = x_major ? edge_at(ix, iy + o) : edge_at(ix + o, iy);
      }
      if (hit) {
        last_hit = k;
        gap = 0.0;
      } else if (++gap > cfg_.max_line_gap) {
        break;
      }
    }
    return last_hit;
  }

  void withdraw(long x, long y) {
    if (!inside(x, y)) return;
    const std::size_t i = static_cast<std::size_t>(y) * w_ + static_cast<std::size_t>(x);
    if (!mask_[i]) return;
    mask_[i] = 0;
    if (voted_[i]) {
      acc_.vote(static_cast<std::size_t>(x), static_cast<std::size_t>(y), -1);
      voted_[i] = 0;
    }
  }

  bool extract(std::size_t px, std::size_t py, std::size_t theta_index, LineSegment& seg) {
    const Point p{static_cast<double>(px), static_cast<double>(py)};
    const double theta = acc_.theta(theta_index);
    Point centroid = p;
    Point dir{-std::sin(theta), std::cos(theta)};

    // Refine the bin's direction with the pixels near the hypothesis.
    std::vector<Point> band;
    for (const double width : {2.0, 1.5}) {
      collect_band(centroid, dir, width, band);
      Point c{};
      Point d{};
      if (!fit_line(band, c, d)) break;
      centroid = c;
      dir = d;
    }

    const double along = (p.x - centroid.x) * dir.x + (p.y - centroid.y) * dir.y;
    const Point anchor{centroid.x + along * dir.x, centroid.y + along * dir.y};
    const bool x_major = std::fabs(dir.x) >= std::fabs(dir.y);
    const double major = std::max(std::fabs(dir.x), std::fabs(dir.y));
    const Point step{dir.x / major, dir.y / major};

    const long fwd = walk(anchor, step, x_major, 1);
    const long back = walk(anchor, step, x_major, -1);
    seg = {static_cast<int>(std::lround(anchor.x - back * step.x)), static_cast<int>(std::lround(anchor.y - back * step.y)),
           static_cast<int>(std::lround(anchor.x + fwd * step.x)), static_cast<int>(std::lround(anchor.y + fwd * step.y))};
    if (seg.length() < cfg_.min_line_length) return false;

    for (long k = -back; k <= fwd; ++k) {
      const long ix = std::lround(anchor.x + k * step.x);
      const long iy = std::lround(anchor.y + k * step.y);
      for (long o = -1; o <= 1; ++o) {
        if (x_major) {
          withdraw(ix, iy + o);
        } else {
          withdraw(ix + o, iy);
        }
      }
    }
    withdraw(static_cast<long>(px), static_cast<long>(py));
    return true;
  }

  const HoughConfig& cfg_;
  std::size_t h_;
  std::size_t w_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::uint8_t> voted_;
  std::vector<std::size_t> points_;
  HoughAccumulator acc_;
};

}  // namespace

std::vector<LineSegment> probabilistic_hough(const EdgeMap& edges, const HoughConfig& cfg) {
  cfg.validate();
  if (edges.values.empty()) return {};
  return SegmentExtractor(edges, cfg).run();
}

void rasterize_segment(const LineSegment& seg, std::size_t height, std::size_t width, std::span<float> canvas,
                       float value) {
  long x0 = seg.x1;
  long y0 = seg.y1;
  const long x1 = seg.x2;
  const long y1 = seg.y2;
  const long dx = std::labs(x1 - x0);
  const long dy = -std::labs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1;
  const long sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  for (;;) {
    if (x0 >= 0 && y0 >= 0 && x0 < static_cast<long>(width) && y0 < static_cast<long>(height)) {
      canvas[static_cast<std::size_t>(y0) * width + static_cast<std::size_t>(x0)] = value;
    }
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

Tensor hough_channel(const GrayImage& img, const CannyConfig& canny_cfg, const HoughConfig& hough_cfg) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  Tensor out({1, h, w});
  const EdgeMap edges = canny(img, canny_cfg);
  if (edges.empty()) return out;

  if (hough_cfg.mode == HoughMode::probabilistic) {
    for (const LineSegment& seg : probabilistic_hough(edges, hough_cfg)) {
      rasterize_segment(seg, h, w, out.data());
    }
    return out;
  }

  HoughConfig centered = hough_cfg;
  centered.origin = HoughOrigin::center;
  const HoughAccumulator acc = hough_accumulate(edges, centered);
  const int threshold = std::max(1, hough_cfg.accumulator_threshold);
  const std::vector<HoughPeak> peaks = local_maxima(acc, threshold, centered);
  if (peaks.empty()) return out;

  // Peak radius bins per angle, as a bitmap for O(1) membership.
  std::vector<std::uint8_t> is_peak(acc.n_radii() * acc.n_angles(), 0);
  std::vector<std::size_t> angles;
  for (const HoughPeak& p : peaks) {
    if (!is_peak[p.theta_index * acc.n_radii() + p.r_index]) {
      is_peak[p.theta_index * acc.n_radii() + p.r_index] = 1;
    }
    angles.push_back(p.theta_index);
  }
  std::sort(angles.begin(), angles.end());
  angles.erase(std::unique(angles.begin(), angles.end()), angles.end());

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!edges.at(y, x)) continue;
      for (const std::size_t t : angles) {
        const std::size_t ri = acc.radius_index(acc.radius_of(static_cast<double>(x), static_cast<double>(y), t));
        if (is_peak[t * acc.n_radii() + ri]) {
          out[y * w + x] = 1.0f;
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace vegscan
