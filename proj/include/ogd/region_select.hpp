// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "ogd/geometry.hpp"
#include "ogd/occlusion_map.hpp"
#include "ogd/rng.hpp"

namespace ogd {

/// How the minimum sub-region size is derived. The fixed floor and the
/// quarter-of-image rule disagree in general; the default takes the max.
enum class MinSizeRule {
  MaxOfFixedAndQuarter,
  FixedOnly,
  QuarterOnly,
};

struct SelectParams {
  double min_region_w = 300.0;  // source pixels
  double min_region_h = 300.0;
  int window_w = 40;            // map cells
  int window_h = 40;
  double window_threshold = 45.0;  // window sum must strictly exceed this
  int n_regions = 3;
  MinSizeRule min_size_rule = MinSizeRule::MaxOfFixedAndQuarter;

  void validate() const {
    if (min_region_w <= 0 || min_region_h <= 0 || window_w < 1 || window_h < 1 ||
        window_threshold <= 0 || n_regions < 1)
      throw std::invalid_argument("SelectParams: all fields must be positive");
  }
};

/// Corrected occlusion sub-region, in source-pixel coordinates.
struct Region {
  BBox rect;
};

struct CellMask {
  int rows = 0, cols = 0;
  std::vector<std::uint8_t> cells;

  CellMask() = default;
  CellMask(int rows_, int cols_) : rows(rows_), cols(cols_) {
    cells.assign(static_cast<std::size_t>(rows) * cols, 0);
  }
  std::uint8_t at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }
  std::uint8_t& at(int r, int c) { return cells[static_cast<std::size_t>(r) * cols + c]; }
  bool any() const {
    return std::any_of(cells.begin(), cells.end(), [](std::uint8_t v) { return v != 0; });
  }
};

/// Tile the map into non-overlapping windows stepping by (window_h, window_w)
/// from the origin, ragged last windows included. A window whose cell sum
/// strictly exceeds the threshold sets all of its cells to 1.
inline CellMask occlusion_mask(const OcclusionMap& map, const SelectParams& params) {
  params.validate();
  CellMask mask(map.rows, map.cols);
  for (int p = 0; p < map.rows; p += params.window_h) {
    const int r_end = std::min(p + params.window_h, map.rows);
    for (int q = 0; q < map.cols; q += params.window_w) {
      const int c_end = std::min(q + params.window_w, map.cols);
      double sum = 0.0;
      for (int r = p; r < r_end; ++r)
        for (int c = q; c < c_end; ++c) sum += map.at(r, c);
      if (sum > params.window_threshold) {
        for (int r = p; r < r_end; ++r)
          for (int c = q; c < c_end; ++c) mask.at(r, c) = 1;
      }
    }
  }
  return mask;
}

namespace detail {

struct KmeansResult {
  std::vector<std::pair<int, int>> points;  // (row, col)
  std::vector<int> assignment;              // point -> cluster
  int k = 0;
};

/// Lloyd k-means over integer cell coordinates with seeded k-means++ init.
/// Squared Euclidean distance; ties break to the lowest cluster index; empty
/// clusters are re-seeded at the cell farthest from all centroids. Runs to
/// centroid movement < 1e-6 or 100 iterations. Single-threaded and fully
/// deterministic for a given seed.
inline KmeansResult kmeans_cells(const std::vector<std::pair<int, int>>& points, int k,
                                 SeededRng& rng) {
  KmeansResult res;
  res.points = points;
  res.k = k;
  const std::size_t P = points.size();
  res.assignment.assign(P, 0);
  if (k <= 1 || P == 0) return res;

  auto d2 = [](double cr, double cc, const std::pair<int, int>& p) {
    const double dr = cr - p.first;
    const double dc = cc - p.second;
    return dr * dr + dc * dc;
  };

  // k-means++ seeding
  std::vector<double> cr(static_cast<std::size_t>(k)), cc(static_cast<std::size_t>(k));
  std::size_t first = rng.next_below(P);
  cr[0] = points[first].first;
  cc[0] = points[first].second;
  std::vector<double> dist(P);
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < j; ++c) best = std::min(best, d2(cr[c], cc[c], points[i]));
      dist[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double t = rng.next_double() * total;
      double run = 0.0;
      pick = P - 1;
      for (std::size_t i = 0; i < P; ++i) {
        run += dist[i];
        if (run >= t) {
          pick = i;
          break;
        }
      }
    }
    cr[static_cast<std::size_t>(j)] = points[pick].first;
    cc[static_cast<std::size_t>(j)] = points[pick].second;
  }

  // Lloyd iterations
  std::vector<double> nr(static_cast<std::size_t>(k)), nc(static_cast<std::size_t>(k));
  std::vector<std::size_t> cnt(static_cast<std::size_t>(k));
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < P; ++i) {
      int best = 0;
      double bestd = d2(cr[0], cc[0], points[i]);
      for (int c = 1; c < k; ++c) {
        const double d = d2(cr[static_cast<std::size_t>(c)], cc[static_cast<std::size_t>(c)], points[i]);
        if (d < bestd) {
          bestd = d;
          best = c;
        }
      }
      res.assignment[i] = best;
    }
    std::fill(nr.begin(), nr.end(), 0.0);
    std::fill(nc.begin(), nc.end(), 0.0);
    std::fill(cnt.begin(), cnt.end(), 0);
    for (std::size_t i = 0; i < P; ++i) {
      const auto c = static_cast<std::size_t>(res.assignment[i]);
      nr[c] += points[i].first;
      nc[c] += points[i].second;
      ++cnt[c];
    }
    double moved = 0.0;
    for (int c = 0; c < k; ++c) {
      const auto cs = static_cast<std::size_t>(c);
      if (cnt[cs] == 0) {
        // re-seed at the point farthest from all centroids
        std::size_t far = 0;
        double fard = -1.0;
        for (std::size_t i = 0; i < P; ++i) {
          double best = std::numeric_limits<double>::infinity();
          for (int c2 = 0; c2 < k; ++c2)
            best = std::min(best, d2(cr[static_cast<std::size_t>(c2)],
                                     cc[static_cast<std::size_t>(c2)], points[i]));
          if (best > fard) {
            fard = best;
            far = i;
          }
        }
        moved += 1.0;
        cr[cs] = res.points[far].first;
        cc[cs] = res.points[far].second;
        continue;
      }
      const double rr = nr[cs] / static_cast<double>(cnt[cs]);
      const double ccv = nc[cs] / static_cast<double>(cnt[cs]);
      moved = std::max(moved, std::abs(rr - cr[cs]) + std::abs(ccv - cc[cs]));
      cr[cs] = rr;
      cc[cs] = ccv;
    }
    if (moved < 1e-6) break;
  }
  // final assignment against converged centroids
  for (std::size_t i = 0; i < P; ++i) {
    int best = 0;
    double bestd = d2(cr[0], cc[0], points[i]);
    for (int c = 1; c < k; ++c) {
      const double d = d2(cr[static_cast<std::size_t>(c)], cc[static_cast<std::size_t>(c)], points[i]);
      if (d < bestd) {
        bestd = d;
        best = c;
      }
    }
    res.assignment[i] = best;
  }
  return res;
}

}  // namespace detail

/// Cluster the mask-1 cells into at most n groups and return each group's
/// tight bounding rectangle in source pixels. k = min(n, number of cells).
inline std::vector<BBox> cluster_mask(const CellMask& mask, int n, int stride, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("cluster_mask: n must be >= 1");
  std::vector<std::pair<int, int>> cells;
  for (int r = 0; r < mask.rows; ++r)
    for (int c = 0; c < mask.cols; ++c)
      if (mask.at(r, c)) cells.emplace_back(r, c);
  if (cells.empty()) return {};

  const int k = std::min<int>(n, static_cast<int>(cells.size()));
  SeededRng rng(seed);
  const auto km = detail::kmeans_cells(cells, k, rng);

  struct Extent {
    int rmin, rmax, cmin, cmax;
    bool used = false;
  };
  std::vector<Extent> ext(static_cast<std::size_t>(k), Extent{0, 0, 0, 0, false});
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Extent& e = ext[static_cast<std::size_t>(km.assignment[i])];
    const auto [r, c] = cells[i];
    if (!e.used) {
      e = Extent{r, r, c, c, true};
    } else {
      e.rmin = std::min(e.rmin, r);
      e.rmax = std::max(e.rmax, r);
      e.cmin = std::min(e.cmin, c);
      e.cmax = std::max(e.cmax, c);
    }
  }
  std::vector<BBox> rects;
  for (const Extent& e : ext) {
    if (!e.used) continue;
    rects.push_back(BBox{static_cast<double>(e.cmin) * stride, static_cast<double>(e.rmin) * stride,
                         static_cast<double>(e.cmax - e.cmin + 1) * stride,
                         static_cast<double>(e.rmax - e.rmin + 1) * stride});
  }
  return rects;
}

/// Expand each rect symmetrically about its center to the minimum size, then
/// translate minimally to fit inside the image. A minimum larger than the
/// image collapses that axis to the full image span. Order is preserved.
inline std::vector<Region> correct_regions(std::span<const BBox> rects, double img_w, double img_h,
                                           const SelectParams& params) {
  params.validate();
  double min_w = 0, min_h = 0;
  switch (params.min_size_rule) {
    case MinSizeRule::FixedOnly:
      min_w = params.min_region_w;
      min_h = params.min_region_h;
      break;
    case MinSizeRule::QuarterOnly:
      min_w = img_w / 4.0;
      min_h = img_h / 4.0;
      break;
    case MinSizeRule::MaxOfFixedAndQuarter:
      min_w = std::max(params.min_region_w, img_w / 4.0);
      min_h = std::max(params.min_region_h, img_h / 4.0);
      break;
  }

  std::vector<Region> out;
  out.reserve(rects.size());
  for (const BBox& r : rects) {
    double w = std::max(r.w, min_w);
    double h = std::max(r.h, min_h);
    double x, y;
    if (w >= img_w) {
      x = 0;
      w = img_w;
    } else {
      x = std::clamp(r.cx() - 0.5 * w, 0.0, img_w - w);
    }
    if (h >= img_h) {
      y = 0;
      h = img_h;
    } else {
      y = std::clamp(r.cy() - 0.5 * h, 0.0, img_h - h);
    }
    out.push_back(Region{BBox{x, y, w, h}});
  }
  return out;
}

/// Full sub-region selection: window thresholding, mask clustering, and
/// coordinate correction. Empty mask gives an empty list (the refinement
/// process then degrades to a single phase).
inline std::vector<Region> select_regions(const OcclusionMap& map, double img_w, double img_h,
                                          const SelectParams& params, std::uint64_t seed) {
  const CellMask mask = occlusion_mask(map, params);
  const std::vector<BBox> rects = cluster_mask(mask, params.n_regions, map.stride, seed);
  return correct_regions(rects, img_w, img_h, params);
}

}  // namespace ogd
