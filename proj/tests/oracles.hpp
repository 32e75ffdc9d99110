// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used only by tests. Everything here
// deliberately avoids the library's computation paths: areas come from
// rasterization, convolutions are direct 2-D sums, suppression and matching
// are naive scans.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "ogd/geometry.hpp"
#include "ogd/occlusion_map.hpp"
#include "ogd/region_select.hpp"
#include "ogd/tensor.hpp"

namespace oracles {

/// 1-D measure of the union of intervals.
inline double interval_union_length(std::vector<std::pair<double, double>> spans) {
  std::sort(spans.begin(), spans.end());
  double total = 0.0, cur_lo = 0.0, cur_hi = -std::numeric_limits<double>::infinity();
  bool open = false;
  for (const auto& [lo, hi] : spans) {
    if (hi <= lo) continue;
    if (!open || lo > cur_hi) {
      if (open) total += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
      open = true;
    } else {
      cur_hi = std::max(cur_hi, hi);
    }
  }
  if (open) total += cur_hi - cur_lo;
  return total;
}

/// Covered fraction by scanline rasterization: n sampled rows across the
/// target, exact union measure of the cover x-intervals per row.
inline double raster_covered_fraction(const ogd::BBox& target, std::span<const ogd::BBox> covers,
                                      int n = 4000) {
  double covered = 0.0;
  const double row_h = target.h / n;
  std::vector<std::pair<double, double>> spans;
  for (int j = 0; j < n; ++j) {
    const double py = target.y + (j + 0.5) * row_h;
    spans.clear();
    for (const ogd::BBox& c : covers) {
      if (py < c.y || py >= c.y2()) continue;
      spans.emplace_back(std::max(c.x, target.x), std::min(c.x2(), target.x2()));
    }
    covered += interval_union_length(spans) * row_h;
  }
  return covered / target.area();
}

/// IoU by scanline rasterization over the joint bounding box.
inline double raster_iou(const ogd::BBox& a, const ogd::BBox& b, int n = 4000) {
  const double y0 = std::min(a.y, b.y), y1 = std::max(a.y2(), b.y2());
  const double row_h = (y1 - y0) / n;
  double inter = 0.0, uni = 0.0;
  for (int j = 0; j < n; ++j) {
    const double py = y0 + (j + 0.5) * row_h;
    const bool in_a = py >= a.y && py < a.y2();
    const bool in_b = py >= b.y && py < b.y2();
    if (in_a && in_b) {
      const double lo = std::max(a.x, b.x), hi = std::min(a.x2(), b.x2());
      if (hi > lo) inter += (hi - lo) * row_h;
    }
    std::vector<std::pair<double, double>> spans;
    if (in_a) spans.emplace_back(a.x, a.x2());
    if (in_b) spans.emplace_back(b.x, b.x2());
    uni += interval_union_length(spans) * row_h;
  }
  return uni == 0.0 ? 0.0 : inter / uni;
}

/// Direct (non-separable) 2-D Gaussian convolution with zero padding.
inline ogd::OcclusionMap direct_gaussian_2d(const ogd::OcclusionMap& map, double sigma, int radius) {
  if (sigma == 0.0) return map;
  std::vector<double> k;
  double sum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const double v = std::exp(-0.5 * (dy * dy + dx * dx) / (sigma * sigma));
      k.push_back(v);
      sum += v;
    }
  for (double& v : k) v /= sum;
  ogd::OcclusionMap out = map;
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) {
      double acc = 0.0;
      std::size_t ki = 0;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx, ++ki) {
          const int rr = r + dy, cc = c + dx;
          if (rr < 0 || rr >= map.rows || cc < 0 || cc >= map.cols) continue;
          acc += k[ki] * map.at(rr, cc);
        }
      out.at(r, c) = acc;
    }
  return out;
}

/// Does map cell (r, c) overlap rect under the half-open convention?
inline bool cell_overlaps(const ogd::OcclusionMap& map, int r, int c, const ogd::BBox& rect) {
  const double cx0 = static_cast<double>(c) * map.stride;
  const double cy0 = static_cast<double>(r) * map.stride;
  const ogd::BBox cell{cx0, cy0, static_cast<double>(map.stride), static_cast<double>(map.stride)};
  return ogd::intersection_rect(cell, rect).has_value();
}

/// Cell-level truth membership by brute force: for each cell, test overlap
/// against every pairwise intersection (OcclusionOnly) or any box
/// (Highlighted support).
inline std::vector<std::uint8_t> brute_intersection_cells(std::span<const ogd::Annotation> anns,
                                                          const ogd::OcclusionMap& grid) {
  std::vector<ogd::BBox> clipped;
  const ogd::BBox frame{0, 0, static_cast<double>(grid.img_w), static_cast<double>(grid.img_h)};
  for (const auto& a : anns)
    if (auto r = ogd::intersection_rect(a.bbox, frame)) clipped.push_back(*r);
  std::vector<ogd::BBox> inters;
  for (std::size_t i = 0; i < clipped.size(); ++i)
    for (std::size_t j = i + 1; j < clipped.size(); ++j)
      if (auto r = ogd::intersection_rect(clipped[i], clipped[j])) inters.push_back(*r);
  std::vector<std::uint8_t> out(grid.values.size(), 0);
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c)
      for (const ogd::BBox& b : inters)
        if (cell_overlaps(grid, r, c, b)) {
          out[static_cast<std::size_t>(r) * grid.cols + c] = 1;
          break;
        }
  return out;
}

/// Naive greedy NMS: repeatedly take the highest-score unsuppressed box
/// (ties by input order) and suppress same-category overlaps.
inline std::vector<ogd::Detection> brute_nms(const std::vector<ogd::Detection>& dets,
                                             double iou_thr, int max_dets) {
  std::vector<bool> removed(dets.size(), false), kept(dets.size(), false);
  std::vector<ogd::Detection> out;
  while (static_cast<int>(out.size()) < max_dets) {
    int best = -1;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (removed[i] || kept[i]) continue;
      if (best < 0 || dets[i].score > dets[static_cast<std::size_t>(best)].score)
        best = static_cast<int>(i);
    }
    if (best < 0) break;
    kept[static_cast<std::size_t>(best)] = true;
    out.push_back(dets[static_cast<std::size_t>(best)]);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (removed[i] || kept[i]) continue;
      if (dets[i].category == dets[static_cast<std::size_t>(best)].category &&
          ogd::iou(dets[i].bbox, dets[static_cast<std::size_t>(best)].bbox) > iou_thr)
        removed[i] = true;
    }
  }
  return out;
}

/// 8-connected component count of a cell mask.
inline int mask_components(const ogd::CellMask& mask) {
  std::vector<int> label(mask.cells.size(), -1);
  int count = 0;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < mask.rows; ++r)
    for (int c = 0; c < mask.cols; ++c) {
      const std::size_t id = static_cast<std::size_t>(r) * mask.cols + c;
      if (!mask.cells[id] || label[id] != -1) continue;
      stack.push_back({r, c});
      label[id] = count;
      while (!stack.empty()) {
        auto [cr, cc] = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = cr + dr, nc = cc + dc;
            if (nr < 0 || nr >= mask.rows || nc < 0 || nc >= mask.cols) continue;
            const std::size_t nid = static_cast<std::size_t>(nr) * mask.cols + nc;
            if (mask.cells[nid] && label[nid] == -1) {
              label[nid] = count;
              stack.push_back({nr, nc});
            }
          }
      }
      ++count;
    }
  return count;
}

/// Greedy matching oracle: instead of pre-sorting, repeatedly scan for the
/// highest-scored unprocessed detection (ties by input order) and give it the
/// best unmatched ground truth of its category.
inline std::vector<int> brute_match(std::span<const ogd::Detection> dets,
                                    std::span<const ogd::Annotation> gts, double thr) {
  std::vector<int> det_to_gt(dets.size(), -1);
  std::vector<bool> det_done(dets.size(), false), gt_taken(gts.size(), false);
  for (;;) {
    int pick = -1;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (det_done[i]) continue;
      if (pick < 0 || dets[i].score > dets[static_cast<std::size_t>(pick)].score)
        pick = static_cast<int>(i);
    }
    if (pick < 0) break;
    det_done[static_cast<std::size_t>(pick)] = true;
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g] || gts[g].category != dets[static_cast<std::size_t>(pick)].category) continue;
      const double v = ogd::iou(dets[static_cast<std::size_t>(pick)].bbox, gts[g].bbox);
      if (v >= thr && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      det_to_gt[static_cast<std::size_t>(pick)] = best_gt;
      gt_taken[static_cast<std::size_t>(best_gt)] = true;
    }
  }
  return det_to_gt;
}

}  // namespace oracles
