// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#include "ogd/geometry.hpp"

#include <gtest/gtest.h>

#include "ogd/rng.hpp"
#include "oracles.hpp"

using namespace ogd;

namespace {

BBox random_box(SeededRng& rng, double extent = 100.0) {
  return BBox{rng.next_uniform(0, extent), rng.next_uniform(0, extent),
              rng.next_uniform(0.5, extent / 2), rng.next_uniform(0.5, extent / 2)};
}

}  // namespace

TEST(Iou, IdenticalBoxes) {
  const BBox b{3, 4, 10, 20};
  EXPECT_DOUBLE_EQ(iou(b, b), 1.0);
}

TEST(Iou, Disjoint) {
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 1, 1}, BBox{5, 5, 1, 1}), 0.0);
}

TEST(Iou, EdgeTouchingIsZero) {
  // half-open boxes: sharing an edge means no overlap
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 1, 1}, BBox{1, 0, 1, 1}), 0.0);
}

TEST(Iou, KnownOverlap) {
  // intersection 1x2 = 2, union 4 + 4 - 2 = 6
  EXPECT_NEAR(iou(BBox{0, 0, 2, 2}, BBox{1, 0, 2, 2}), 1.0 / 3.0, 1e-12);
}

TEST(Iou, SymmetricRangeAndIdentityProperties) {
  SeededRng rng(7);
  for (int i = 0; i < 500; ++i) {
    const BBox a = random_box(rng), b = random_box(rng);
    const double v = iou(a, b);
    EXPECT_DOUBLE_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  }
}

TEST(IntersectionRect, Identical) {
  const BBox b{1, 2, 3, 4};
  const auto r = intersection_rect(b, b);
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->x, b.x);
  EXPECT_DOUBLE_EQ(r->w, b.w);
}

TEST(IntersectionRect, Disjoint) {
  EXPECT_FALSE(intersection_rect(BBox{0, 0, 1, 1}, BBox{2, 2, 1, 1}));
}

TEST(IntersectionRect, Known) {
  const auto r = intersection_rect(BBox{0, 0, 2, 2}, BBox{1, 1, 2, 2});
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->x, 1.0);
  EXPECT_DOUBLE_EQ(r->y, 1.0);
  EXPECT_DOUBLE_EQ(r->w, 1.0);
  EXPECT_DOUBLE_EQ(r->h, 1.0);
}

TEST(CoveredFraction, EmptyCovers) {
  EXPECT_DOUBLE_EQ(covered_fraction(BBox{0, 0, 4, 4}, {}), 0.0);
}

TEST(CoveredFraction, SelfCover) {
  const BBox t{2, 3, 5, 7};
  const std::vector<BBox> covers{t};
  EXPECT_DOUBLE_EQ(covered_fraction(t, covers), 1.0);
}

TEST(CoveredFraction, OverlappingCoversNotDoubleCounted) {
  // union of the two strips covers 3 of the 4 area units
  const BBox t{0, 0, 2, 2};
  const std::vector<BBox> covers{BBox{0, 0, 1, 2}, BBox{0, 0, 2, 1}};
  EXPECT_NEAR(covered_fraction(t, covers), 0.75, 1e-12);
}

TEST(CoveredFraction, MatchesRasterOracle) {
  SeededRng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const BBox target = random_box(rng);
    std::vector<BBox> covers;
    const std::size_t n = rng.next_below(9);
    for (std::size_t i = 0; i < n; ++i) covers.push_back(random_box(rng));
    const double exact = covered_fraction(target, covers);
    const double approx = oracles::raster_covered_fraction(target, covers);
    EXPECT_NEAR(exact, approx, 1e-3);
  }
}

TEST(RemapBox, FullRegionIdentity) {
  const BBox region{0, 0, 640, 480};
  const BBox b{10, 20, 30, 40};
  const BBox r = remap_box(b, region, Size{640, 480});
  EXPECT_DOUBLE_EQ(r.x, b.x);
  EXPECT_DOUBLE_EQ(r.y, b.y);
  EXPECT_DOUBLE_EQ(r.w, b.w);
  EXPECT_DOUBLE_EQ(r.h, b.h);
}

TEST(RemapBox, FullFrameBoxMapsToRegion) {
  const BBox region{100, 100, 512, 512};
  const BBox r = remap_box(BBox{0, 0, 1024, 1024}, region, Size{1024, 1024});
  EXPECT_DOUBLE_EQ(r.x, 100);
  EXPECT_DOUBLE_EQ(r.y, 100);
  EXPECT_DOUBLE_EQ(r.w, 512);
  EXPECT_DOUBLE_EQ(r.h, 512);
}

TEST(RemapBox, HalfScale) {
  const BBox r = remap_box(BBox{512, 512, 256, 256}, BBox{0, 0, 512, 512}, Size{1024, 1024});
  EXPECT_DOUBLE_EQ(r.x, 256);
  EXPECT_DOUBLE_EQ(r.y, 256);
  EXPECT_DOUBLE_EQ(r.w, 128);
  EXPECT_DOUBLE_EQ(r.h, 128);
}

TEST(RemapBox, RoundTripWithinTolerance) {
  SeededRng rng(5);
  const Size fine{1024, 1024};
  for (int trial = 0; trial < 200; ++trial) {
    const BBox region{rng.next_uniform(0, 400), rng.next_uniform(0, 400),
                      rng.next_uniform(100, 600), rng.next_uniform(100, 600)};
    // a box strictly inside the fine frame
    const BBox b{rng.next_uniform(1, 500), rng.next_uniform(1, 500), rng.next_uniform(1, 400),
                 rng.next_uniform(1, 400)};
    const BBox back = remap_box_inverse(remap_box(b, region, fine), region, fine);
    EXPECT_NEAR(back.x, b.x, 1e-9);
    EXPECT_NEAR(back.y, b.y, 1e-9);
    EXPECT_NEAR(back.w, b.w, 1e-9);
    EXPECT_NEAR(back.h, b.h, 1e-9);
  }
}

TEST(BBoxValidation, RejectsDegenerate) {
  EXPECT_FALSE((BBox{0, 0, 0, 1}).valid());
  EXPECT_FALSE((BBox{0, 0, 1, -1}).valid());
  EXPECT_FALSE((BBox{std::nan(""), 0, 1, 1}).valid());
  EXPECT_THROW(validate_bbox(BBox{0, 0, 0, 1}), std::invalid_argument);
}
