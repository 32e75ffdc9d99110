// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ogd {

/// Axis-aligned box over the half-open rectangle [x, x+w) x [y, y+h).
/// Edge-touching boxes therefore have zero intersection.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x2() const { return x + w; }
  double y2() const { return y + h; }
  double area() const { return w * h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }

  bool valid() const {
    return w > 0.0 && h > 0.0 && std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
           std::isfinite(h);
  }
};

inline void validate_bbox(const BBox& b, const char* what = "bbox") {
  if (!b.valid()) throw std::invalid_argument(std::string(what) + ": w and h must be positive and all fields finite");
}

struct Annotation {
  BBox bbox;
  int category = 0;
  std::optional<double> occlusion_ratio;  // in [0,1] when present
};

struct Detection {
  BBox bbox;
  int category = 0;
  double score = 0.0;  // in [0,1]
};

struct Size {
  double w = 0.0;
  double h = 0.0;
};

inline std::optional<BBox> intersection_rect(const BBox& a, const BBox& b) {
  const double x1 = std::max(a.x, b.x);
  const double y1 = std::max(a.y, b.y);
  const double x2 = std::min(a.x2(), b.x2());
  const double y2 = std::min(a.y2(), b.y2());
  if (x2 - x1 <= 0.0 || y2 - y1 <= 0.0) return std::nullopt;
  return BBox{x1, y1, x2 - x1, y2 - y1};
}

inline double iou(const BBox& a, const BBox& b) {
  // areas come from the same edge differences as the intersection, so
  // iou(a, a) is exactly 1
  const double ax2 = a.x2(), ay2 = a.y2(), bx2 = b.x2(), by2 = b.y2();
  const double iw = std::min(ax2, bx2) - std::max(a.x, b.x);
  const double ih = std::min(ay2, by2) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double ia = iw * ih;
  const double aa = (ax2 - a.x) * (ay2 - a.y);
  const double ab = (bx2 - b.x) * (by2 - b.y);
  return ia / (aa + ab - ia);
}

/// Fraction of `target`'s area covered by the union of `covers`.
/// Exact union area by coordinate compression; never sums pairwise overlaps.
inline double covered_fraction(const BBox& target, std::span<const BBox> covers) {
  std::vector<BBox> clipped;
  clipped.reserve(covers.size());
  for (const BBox& c : covers) {
    if (auto r = intersection_rect(target, c)) clipped.push_back(*r);
  }
  if (clipped.empty()) return 0.0;

  std::vector<double> xs, ys;
  xs.reserve(clipped.size() * 2);
  ys.reserve(clipped.size() * 2);
  for (const BBox& c : clipped) {
    xs.push_back(c.x);
    xs.push_back(c.x2());
    ys.push_back(c.y);
    ys.push_back(c.y2());
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  double covered = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double cw = xs[i + 1] - xs[i];
      const double ch = ys[j + 1] - ys[j];
      const double mx = xs[i] + 0.5 * cw;
      const double my = ys[j] + 0.5 * ch;
      for (const BBox& c : clipped) {
        if (mx > c.x && mx < c.x2() && my > c.y && my < c.y2()) {
          covered += cw * ch;
          break;
        }
      }
    }
  }
  return std::clamp(covered / target.area(), 0.0, 1.0);
}

/// Map a box given in the coordinates of a `fine`-sized image of `region`
/// back into source coordinates. The result is clamped to `region`, which by
/// contract lies inside the source image.
inline BBox remap_box(const BBox& b, const BBox& region, Size fine) {
  if (fine.w <= 0.0 || fine.h <= 0.0) throw std::invalid_argument("remap_box: fine size must be positive");
  const double sx = region.w / fine.w;
  const double sy = region.h / fine.h;
  double x1 = region.x + b.x * sx;
  double y1 = region.y + b.y * sy;
  double x2 = region.x + b.x2() * sx;
  double y2 = region.y + b.y2() * sy;
  x1 = std::clamp(x1, region.x, region.x2());
  x2 = std::clamp(x2, region.x, region.x2());
  y1 = std::clamp(y1, region.y, region.y2());
  y2 = std::clamp(y2, region.y, region.y2());
  return BBox{x1, y1, x2 - x1, y2 - y1};
}

/// Inverse of remap_box: source coordinates into the fine image of `region`.
inline BBox remap_box_inverse(const BBox& b, const BBox& region, Size fine) {
  if (region.w <= 0.0 || region.h <= 0.0) throw std::invalid_argument("remap_box_inverse: empty region");
  const double sx = fine.w / region.w;
  const double sy = fine.h / region.h;
  return BBox{(b.x - region.x) * sx, (b.y - region.y) * sy, b.w * sx, b.h * sy};
}

}  // namespace ogd
