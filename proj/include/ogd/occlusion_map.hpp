// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ogd/geometry.hpp"

namespace ogd {

/// Strided 2-D grid of occlusion confidence over a source image.
/// Cell (r, c) covers source pixels [c*stride, (c+1)*stride) x [r*stride, (r+1)*stride).
/// Immutable by convention after construction; safe for concurrent reads.
struct OcclusionMap {
  int img_w = 0;
  int img_h = 0;
  int stride = 1;
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major, each in [0,1]

  OcclusionMap() = default;

  OcclusionMap(int img_w_, int img_h_, int stride_)
      : img_w(img_w_), img_h(img_h_), stride(stride_) {
    if (stride < 1 || img_w <= 0 || img_h <= 0)
      throw std::invalid_argument("OcclusionMap: stride must be >= 1 and image dims positive");
    rows = (img_h + stride - 1) / stride;
    cols = (img_w + stride - 1) / stride;
    values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  }

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }

  /// Inclusive cell index range touched by a box under the any-overlap rule,
  /// after clipping to the image. Returns false if the clipped box is empty.
  bool cell_range(const BBox& b, int& r0, int& r1, int& c0, int& c1) const {
    const double x1 = std::max(b.x, 0.0);
    const double y1 = std::max(b.y, 0.0);
    const double x2 = std::min(b.x2(), static_cast<double>(img_w));
    const double y2 = std::min(b.y2(), static_cast<double>(img_h));
    if (x2 - x1 <= 0.0 || y2 - y1 <= 0.0) return false;
    c0 = static_cast<int>(std::floor(x1 / stride));
    r0 = static_cast<int>(std::floor(y1 / stride));
    c1 = std::min(static_cast<int>(std::ceil(x2 / stride)) - 1, cols - 1);
    r1 = std::min(static_cast<int>(std::ceil(y2 / stride)) - 1, rows - 1);
    return c1 >= c0 && r1 >= r0;
  }
};

enum class TruthStyle {
  OcclusionOnly,          // paint only pairwise GT-box intersections
  HighlightedOcclusion,   // additionally paint box interiors at a base value
};

struct MapParams {
  double base_value = 0.3;       // box interior intensity before blur (highlighted style)
  double occlusion_value = 1.0;  // intersection intensity before blur
  double sigma = 2.0;            // Gaussian blur, in map cells; 0 disables
  int kernel_radius = 5;
};

/// Separable Gaussian blur with a kernel truncated at `kernel_radius` and
/// normalized to sum 1. Borders are zero-padded. sigma == 0 is the identity.
inline OcclusionMap gaussian_blur(const OcclusionMap& map, double sigma, int kernel_radius) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return map;
  if (kernel_radius < 1) throw std::invalid_argument("gaussian_blur: kernel_radius must be >= 1");

  std::vector<double> k(static_cast<std::size_t>(2 * kernel_radius + 1));
  double sum = 0.0;
  for (int i = -kernel_radius; i <= kernel_radius; ++i) {
    const double v = std::exp(-0.5 * (static_cast<double>(i) * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + kernel_radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;

  OcclusionMap tmp = map;
  // horizontal pass
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      double acc = 0.0;
      for (int i = -kernel_radius; i <= kernel_radius; ++i) {
        const int cc = c + i;
        if (cc < 0 || cc >= map.cols) continue;
        acc += k[static_cast<std::size_t>(i + kernel_radius)] * map.at(r, cc);
      }
      tmp.at(r, c) = acc;
    }
  }
  OcclusionMap out = map;
  // vertical pass
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      double acc = 0.0;
      for (int i = -kernel_radius; i <= kernel_radius; ++i) {
        const int rr = r + i;
        if (rr < 0 || rr >= map.rows) continue;
        acc += k[static_cast<std::size_t>(i + kernel_radius)] * tmp.at(rr, c);
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

/// Occlusion ground-truth map from annotations. OcclusionOnly paints all
/// pairwise box intersections; HighlightedOcclusion first paints box interiors
/// at `params.base_value`. Both styles then blur and clamp to [0,1].
/// Boxes may extend past the image; they are clipped first.
inline OcclusionMap generate_truth_map(std::span<const Annotation> annotations, int img_w,
                                       int img_h, int stride, TruthStyle style,
                                       const MapParams& params = {}) {
  OcclusionMap map(img_w, img_h, stride);  // validates stride and dims

  std::vector<BBox> clipped;
  clipped.reserve(annotations.size());
  const BBox frame{0.0, 0.0, static_cast<double>(img_w), static_cast<double>(img_h)};
  for (const Annotation& a : annotations) {
    if (auto r = intersection_rect(a.bbox, frame)) clipped.push_back(*r);
  }

  auto paint = [&map](const BBox& b, double value) {
    int r0, r1, c0, c1;
    if (!map.cell_range(b, r0, r1, c0, c1)) return;
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) map.at(r, c) = std::max(map.at(r, c), value);
  };

  if (style == TruthStyle::HighlightedOcclusion) {
    for (const BBox& b : clipped) paint(b, params.base_value);
  }
  for (std::size_t i = 0; i < clipped.size(); ++i) {
    for (std::size_t j = i + 1; j < clipped.size(); ++j) {
      if (auto r = intersection_rect(clipped[i], clipped[j])) paint(*r, params.occlusion_value);
    }
  }

  OcclusionMap out = gaussian_blur(map, params.sigma, params.kernel_radius);
  for (double& v : out.values) v = std::clamp(v, 0.0, 1.0);
  return out;
}

/// Sum of map cell values whose cell rectangles overlap the box (clipped to
/// the image). The raw-sum scale depends on stride and box size; the default
/// weighting threshold below is calibrated for the default stride only.
inline double instance_occlusion_score(const BBox& box, const OcclusionMap& map) {
  int r0, r1, c0, c1;
  if (!map.cell_range(box, r0, r1, c0, c1)) return 0.0;
  double sum = 0.0;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) sum += map.at(r, c);
  return sum;
}

/// Hard-example weight: 2 when the instance occlusion score reaches thr_occ
/// (boundary inclusive), else 1.
inline int occlusion_weight(const BBox& box, const OcclusionMap& map, double thr_occ) {
  if (thr_occ <= 0.0) throw std::invalid_argument("occlusion_weight: thr_occ must be > 0");
  return instance_occlusion_score(box, map) >= thr_occ ? 2 : 1;
}

}  // namespace ogd
