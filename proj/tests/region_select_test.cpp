// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#include "ogd/region_select.hpp"

#include <gtest/gtest.h>

#include "ogd/rng.hpp"
#include "oracles.hpp"

using namespace ogd;

namespace {

SelectParams defaults() { return SelectParams{}; }  // {300,300,40,40,45}, n=3

OcclusionMap blob_map(int img, int stride, const std::vector<BBox>& blobs, double value = 1.0) {
  OcclusionMap m(img, img, stride);
  for (const BBox& b : blobs) {
    int r0, r1, c0, c1;
    if (!m.cell_range(b, r0, r1, c0, c1)) continue;
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) m.at(r, c) = value;
  }
  return m;
}

double d2(double ar, double ac, std::pair<int, int> p) {
  return (ar - p.first) * (ar - p.first) + (ac - p.second) * (ac - p.second);
}

/// Independent re-implementation of the documented k-means procedure
/// (k-means++ seeding, Lloyd to 1e-6 or 100 iters, farthest-point re-seed).
std::vector<BBox> reference_kmeans(const CellMask& mask, int n, int stride, std::uint64_t seed) {
  std::vector<std::pair<int, int>> pts;
  for (int r = 0; r < mask.rows; ++r)
    for (int c = 0; c < mask.cols; ++c)
      if (mask.at(r, c)) pts.push_back({r, c});
  if (pts.empty()) return {};
  const std::size_t P = pts.size();
  const int k = std::min<int>(n, static_cast<int>(P));

  SeededRng rng(seed);
  std::vector<double> cr, cc;
  const std::size_t first = rng.next_below(P);
  cr.push_back(pts[first].first);
  cc.push_back(pts[first].second);
  while (static_cast<int>(cr.size()) < k) {
    std::vector<double> dist(P);
    double total = 0;
    for (std::size_t i = 0; i < P; ++i) {
      double best = 1e300;
      for (std::size_t c = 0; c < cr.size(); ++c) best = std::min(best, d2(cr[c], cc[c], pts[i]));
      dist[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0) {
      const double t = rng.next_double() * total;
      double run = 0;
      pick = P - 1;
      for (std::size_t i = 0; i < P; ++i) {
        run += dist[i];
        if (run >= t) {
          pick = i;
          break;
        }
      }
    }
    cr.push_back(pts[pick].first);
    cc.push_back(pts[pick].second);
  }

  std::vector<int> assign(P, 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < P; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (d2(cr[c], cc[c], pts[i]) < d2(cr[best], cc[best], pts[i])) best = c;
      assign[i] = best;
    }
    double moved = 0;
    for (int c = 0; c < k; ++c) {
      double sr = 0, sc = 0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < P; ++i)
        if (assign[i] == c) {
          sr += pts[i].first;
          sc += pts[i].second;
          ++cnt;
        }
      if (cnt == 0) {
        std::size_t far = 0;
        double fard = -1;
        for (std::size_t i = 0; i < P; ++i) {
          double best = 1e300;
          for (int c2 = 0; c2 < k; ++c2) best = std::min(best, d2(cr[c2], cc[c2], pts[i]));
          if (best > fard) {
            fard = best;
            far = i;
          }
        }
        cr[c] = pts[far].first;
        cc[c] = pts[far].second;
        moved += 1;
        continue;
      }
      const double nr = sr / cnt, nc = sc / cnt;
      moved = std::max(moved, std::abs(nr - cr[c]) + std::abs(nc - cc[c]));
      cr[c] = nr;
      cc[c] = nc;
    }
    if (moved < 1e-6) break;
  }
  for (std::size_t i = 0; i < P; ++i) {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (d2(cr[c], cc[c], pts[i]) < d2(cr[best], cc[best], pts[i])) best = c;
    assign[i] = best;
  }

  std::vector<BBox> out;
  for (int c = 0; c < k; ++c) {
    int rmin = 1 << 30, rmax = -1, cmin = 1 << 30, cmax = -1;
    for (std::size_t i = 0; i < P; ++i)
      if (assign[i] == c) {
        rmin = std::min(rmin, pts[i].first);
        rmax = std::max(rmax, pts[i].first);
        cmin = std::min(cmin, pts[i].second);
        cmax = std::max(cmax, pts[i].second);
      }
    if (rmax < 0) continue;
    out.push_back(BBox{(double)cmin * stride, (double)rmin * stride,
                       (double)(cmax - cmin + 1) * stride, (double)(rmax - rmin + 1) * stride});
  }
  return out;
}

}  // namespace

TEST(OcclusionMask, AllZeroMapGivesEmptyMask) {
  const OcclusionMap m(1024, 1024, 4);
  const CellMask mask = occlusion_mask(m, defaults());
  EXPECT_FALSE(mask.any());
}

TEST(OcclusionMask, AllOnesMapFullyMasked) {
  OcclusionMap m(1024, 1024, 4);  // 256x256 cells, 40x40 windows sum 1600 > 45
  for (double& v : m.values) v = 1.0;
  const CellMask mask = occlusion_mask(m, defaults());
  for (auto v : mask.cells) EXPECT_EQ(v, 1);
}

TEST(OcclusionMask, ExactThresholdIsExcluded) {
  // single 40x40 window whose sum is exactly the threshold: strictly-greater
  // comparison keeps it out
  OcclusionMap m(160, 160, 4);  // 40x40 cells, one window
  int placed = 0;
  for (int r = 0; r < m.rows && placed < 45; ++r)
    for (int c = 0; c < m.cols && placed < 45; ++c) {
      m.at(r, c) = 1.0;
      ++placed;
    }
  CellMask mask = occlusion_mask(m, defaults());
  EXPECT_FALSE(mask.any());

  m.at(39, 39) = 0.5;  // sum 45.5 > 45
  mask = occlusion_mask(m, defaults());
  EXPECT_TRUE(mask.any());
}

TEST(OcclusionMask, RaggedWindowsCovered) {
  // 50x50 cells with 40x40 windows: ragged windows at the right/bottom still
  // participate
  SelectParams p = defaults();
  OcclusionMap m(200, 200, 4);
  for (int r = 45; r < 50; ++r)
    for (int c = 45; c < 50; ++c) m.at(r, c) = 10.0;  // only in the ragged corner window
  const CellMask mask = occlusion_mask(m, p);
  EXPECT_TRUE(mask.any());
  // the whole ragged window is set, nothing else
  for (int r = 0; r < 50; ++r)
    for (int c = 0; c < 50; ++c)
      EXPECT_EQ(mask.at(r, c), (r >= 40 && c >= 40) ? 1 : 0);
}

TEST(OcclusionMask, ThresholdMonotone) {
  SeededRng rng(3);
  OcclusionMap m(320, 320, 4);
  for (double& v : m.values) v = rng.next_double();
  SelectParams lo = defaults(), hi = defaults();
  lo.window_threshold = 100;
  hi.window_threshold = 400;
  const CellMask a = occlusion_mask(m, lo), b = occlusion_mask(m, hi);
  for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_LE(b.cells[i], a.cells[i]);
}

TEST(ClusterMask, EmptyMaskGivesNoRects) {
  const CellMask mask(10, 10);
  EXPECT_TRUE(cluster_mask(mask, 3, 4, 7).empty());
}

TEST(ClusterMask, TwoSeparatedBlobs) {
  CellMask mask(60, 60);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) {
      mask.at(r, c) = 1;
      mask.at(r + 45, c + 45) = 1;
    }
  const auto rects = cluster_mask(mask, 2, 4, 7);
  ASSERT_EQ(rects.size(), 2u);
  // each rect tightly bounds one blob (order may vary)
  const BBox blob_a{0, 0, 40, 40};        // 10 cells * stride 4
  const BBox blob_b{180, 180, 40, 40};
  for (const BBox& b : {blob_a, blob_b}) {
    bool found = false;
    for (const BBox& r : rects)
      if (std::abs(r.x - b.x) < 1e-9 && std::abs(r.y - b.y) < 1e-9 &&
          std::abs(r.w - b.w) < 1e-9 && std::abs(r.h - b.h) < 1e-9)
        found = true;
    EXPECT_TRUE(found);
  }
}

TEST(ClusterMask, MatchesReferenceKmeans) {
  SeededRng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    CellMask mask(40, 40);
    const std::size_t blobs = 1 + rng.next_below(4);
    for (std::size_t b = 0; b < blobs; ++b) {
      const int r0 = static_cast<int>(rng.next_below(32));
      const int c0 = static_cast<int>(rng.next_below(32));
      for (int r = r0; r < std::min(r0 + 6, 40); ++r)
        for (int c = c0; c < std::min(c0 + 6, 40); ++c) mask.at(r, c) = 1;
    }
    const std::uint64_t seed = rng.next_u64();
    const auto got = cluster_mask(mask, 3, 4, seed);
    const auto want = reference_kmeans(mask, 3, 4, seed);
    ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_DOUBLE_EQ(got[i].x, want[i].x);
      EXPECT_DOUBLE_EQ(got[i].y, want[i].y);
      EXPECT_DOUBLE_EQ(got[i].w, want[i].w);
      EXPECT_DOUBLE_EQ(got[i].h, want[i].h);
    }
  }
}

TEST(ClusterMask, SingleBlobMoreClustersStillCovers) {
  CellMask mask(30, 30);
  for (int r = 10; r < 20; ++r)
    for (int c = 10; c < 20; ++c) mask.at(r, c) = 1;
  const auto rects = cluster_mask(mask, 3, 1, 11);
  ASSERT_LE(rects.size(), 3u);
  ASSERT_GE(rects.size(), 1u);
  // every mask cell center falls inside some rect
  for (int r = 10; r < 20; ++r)
    for (int c = 10; c < 20; ++c) {
      bool covered = false;
      for (const BBox& b : rects)
        if (c + 0.5 > b.x && c + 0.5 < b.x2() && r + 0.5 > b.y && r + 0.5 < b.y2()) covered = true;
      EXPECT_TRUE(covered) << r << "," << c;
    }
}

TEST(CorrectRegions, AlreadyLargeEnoughUnchanged) {
  SelectParams p = defaults();
  p.min_size_rule = MinSizeRule::FixedOnly;
  const std::vector<BBox> rects{BBox{100, 120, 400, 350}};
  const auto regions = correct_regions(rects, 1024, 1024, p);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_DOUBLE_EQ(regions[0].rect.x, 100);
  EXPECT_DOUBLE_EQ(regions[0].rect.y, 120);
  EXPECT_DOUBLE_EQ(regions[0].rect.w, 400);
  EXPECT_DOUBLE_EQ(regions[0].rect.h, 350);
}

TEST(CorrectRegions, CenterExpansion) {
  const std::vector<BBox> rects{BBox{507, 507, 10, 10}};  // center (512, 512)
  const auto regions = correct_regions(rects, 1024, 1024, defaults());
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_DOUBLE_EQ(regions[0].rect.w, 300);
  EXPECT_DOUBLE_EQ(regions[0].rect.h, 300);
  EXPECT_DOUBLE_EQ(regions[0].rect.cx(), 512);
  EXPECT_DOUBLE_EQ(regions[0].rect.cy(), 512);
}

TEST(CorrectRegions, CornerClampShift) {
  const std::vector<BBox> rects{BBox{0, 0, 10, 10}};
  const auto regions = correct_regions(rects, 1024, 1024, defaults());
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_DOUBLE_EQ(regions[0].rect.x, 0);
  EXPECT_DOUBLE_EQ(regions[0].rect.y, 0);
  EXPECT_DOUBLE_EQ(regions[0].rect.w, 300);
  EXPECT_DOUBLE_EQ(regions[0].rect.h, 300);
}

TEST(CorrectRegions, QuarterRuleDominatesOnLargeImages) {
  // image 1600: quarter = 400 > fixed 300
  const std::vector<BBox> rects{BBox{700, 700, 10, 10}};
  const auto regions = correct_regions(rects, 1600, 1600, defaults());
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_DOUBLE_EQ(regions[0].rect.w, 400);
  EXPECT_DOUBLE_EQ(regions[0].rect.h, 400);

  SelectParams fixed_only = defaults();
  fixed_only.min_size_rule = MinSizeRule::FixedOnly;
  EXPECT_DOUBLE_EQ(correct_regions(rects, 1600, 1600, fixed_only)[0].rect.w, 300);
  SelectParams quarter_only = defaults();
  quarter_only.min_size_rule = MinSizeRule::QuarterOnly;
  EXPECT_DOUBLE_EQ(correct_regions(rects, 1600, 1600, quarter_only)[0].rect.w, 400);
}

TEST(CorrectRegions, MinimumLargerThanImageBecomesWholeImage) {
  const std::vector<BBox> rects{BBox{10, 10, 5, 5}};
  const auto regions = correct_regions(rects, 200, 180, defaults());  // min 300 > both dims
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_DOUBLE_EQ(regions[0].rect.x, 0);
  EXPECT_DOUBLE_EQ(regions[0].rect.y, 0);
  EXPECT_DOUBLE_EQ(regions[0].rect.w, 200);
  EXPECT_DOUBLE_EQ(regions[0].rect.h, 180);
}

TEST(SelectRegions, ZeroMapGivesEmptyList) {
  const OcclusionMap m(1024, 1024, 4);
  EXPECT_TRUE(select_regions(m, 1024, 1024, defaults(), 7).empty());
}

TEST(SelectRegions, ThreeBlobsThreeRegionsEachContained) {
  // three well-separated dense blobs; every blob ends up fully inside one of
  // the three returned regions
  const std::vector<BBox> blobs{BBox{100, 100, 80, 80}, BBox{700, 150, 80, 80},
                                BBox{400, 750, 80, 80}};
  const OcclusionMap m = blob_map(1024, 4, blobs);
  const auto regions = select_regions(m, 1024, 1024, defaults(), 7);
  ASSERT_EQ(regions.size(), 3u);
  for (const BBox& blob : blobs) {
    bool contained = false;
    for (const Region& r : regions) {
      if (blob.x >= r.rect.x && blob.y >= r.rect.y && blob.x2() <= r.rect.x2() &&
          blob.y2() <= r.rect.y2())
        contained = true;
    }
    EXPECT_TRUE(contained);
  }
}

TEST(SelectRegions, DeterministicAcrossRuns) {
  SeededRng rng(9);
  OcclusionMap m(1024, 1024, 4);
  for (double& v : m.values) v = rng.next_double() < 0.05 ? 1.0 : 0.0;
  const auto a = select_regions(m, 1024, 1024, defaults(), 42);
  const auto b = select_regions(m, 1024, 1024, defaults(), 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_DOUBLE_EQ(a[i].rect.x, b[i].rect.x);
    EXPECT_DOUBLE_EQ(a[i].rect.y, b[i].rect.y);
    EXPECT_DOUBLE_EQ(a[i].rect.w, b[i].rect.w);
    EXPECT_DOUBLE_EQ(a[i].rect.h, b[i].rect.h);
  }
}

TEST(SelectRegions, BoundsAndMinSizeOnRandomMaps) {
  SeededRng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    OcclusionMap m(1024, 1024, 4);
    const std::size_t blobs = rng.next_below(5);
    for (std::size_t b = 0; b < blobs; ++b) {
      const double x = rng.next_uniform(0, 900), y = rng.next_uniform(0, 900);
      const double s = rng.next_uniform(20, 200);
      int r0, r1, c0, c1;
      if (m.cell_range(BBox{x, y, s, s}, r0, r1, c0, c1))
        for (int r = r0; r <= r1; ++r)
          for (int c = c0; c <= c1; ++c) m.at(r, c) = 1.0;
    }
    const auto regions = select_regions(m, 1024, 1024, defaults(), rng.next_u64());
    for (const Region& r : regions) {
      EXPECT_GE(r.rect.x, 0.0);
      EXPECT_GE(r.rect.y, 0.0);
      EXPECT_LE(r.rect.x2(), 1024.0);
      EXPECT_LE(r.rect.y2(), 1024.0);
      EXPECT_GE(r.rect.w, 300.0);  // max(300, 1024/4)
      EXPECT_GE(r.rect.h, 300.0);
    }
  }
}

TEST(SelectRegions, CoverageOfMaskCells) {
  // whenever n_regions >= component count, the union of regions contains at
  // least 95% of the mask-1 cells
  SeededRng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t blobs = 1 + rng.next_below(3);
    std::vector<BBox> rects;
    for (std::size_t b = 0; b < blobs; ++b)
      rects.push_back(BBox{rng.next_uniform(0, 800), rng.next_uniform(0, 800),
                           rng.next_uniform(50, 200), rng.next_uniform(50, 200)});
    const OcclusionMap m = blob_map(1024, 4, rects);
    const SelectParams p = defaults();
    const CellMask mask = occlusion_mask(m, p);
    if (!mask.any()) continue;
    const int comps = oracles::mask_components(mask);
    if (comps > p.n_regions) continue;
    ++checked;
    const auto regions = select_regions(m, 1024, 1024, p, rng.next_u64());

    std::size_t total = 0, covered = 0;
    for (int r = 0; r < mask.rows; ++r)
      for (int c = 0; c < mask.cols; ++c) {
        if (!mask.at(r, c)) continue;
        ++total;
        // the cell's in-image pixel rect must sit inside a region
        const double x0 = c * 4.0, y0 = r * 4.0;
        const double x1 = std::min(x0 + 4.0, 1024.0), y1 = std::min(y0 + 4.0, 1024.0);
        for (const Region& reg : regions)
          if (x0 >= reg.rect.x && y0 >= reg.rect.y && x1 <= reg.rect.x2() && y1 <= reg.rect.y2()) {
            ++covered;
            break;
          }
      }
    EXPECT_GE(static_cast<double>(covered), 0.95 * static_cast<double>(total)) << "trial " << trial;
  }
  EXPECT_GT(checked, 10);
}
