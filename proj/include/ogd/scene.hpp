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
#include "ogd/rng.hpp"

namespace ogd {

/// One placed object. draw_order defines the stacking: objects with a larger
/// draw_order are drawn later, i.e. on top.
struct SceneObject {
  BBox bbox;
  int category = 0;
  int draw_order = 0;
};

/// Synthetic scene: image dims plus placed objects. occlusion_ratios[i] is
/// the fraction of object i covered by the union of objects drawn above it;
/// it is derived from the geometry and can always be recomputed.
struct SceneSpec {
  int img_w = 0;
  int img_h = 0;
  std::vector<SceneObject> objects;
  std::vector<double> occlusion_ratios;
};

inline std::vector<double> derive_occlusion_ratios(std::span<const SceneObject> objects) {
  std::vector<double> out(objects.size(), 0.0);
  std::vector<BBox> above;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    above.clear();
    for (std::size_t j = 0; j < objects.size(); ++j)
      if (objects[j].draw_order > objects[i].draw_order) above.push_back(objects[j].bbox);
    out[i] = covered_fraction(objects[i].bbox, above);
  }
  return out;
}

inline void refresh_occlusion_ratios(SceneSpec& scene) {
  scene.occlusion_ratios = derive_occlusion_ratios(scene.objects);
}

inline std::vector<Annotation> annotations_of(const SceneSpec& scene) {
  std::vector<Annotation> out;
  out.reserve(scene.objects.size());
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    out.push_back(Annotation{scene.objects[i].bbox, scene.objects[i].category,
                             scene.occlusion_ratios[i]});
  return out;
}

struct SynthParams {
  int clusters = 5;
  int objects_per_cluster = 15;
  double min_obj_size = 12.0;  // object side length range, pixels
  double max_obj_size = 32.0;
  int img_w = 1024;
  int img_h = 1024;
  double quota_none = 0.7;     // target fraction of unoccluded objects
  double quota_partial = 0.2;  // occlusion ratio in (0, 0.5]
  double quota_heavy = 0.1;    // occlusion ratio in (0.5, 1]
  int categories = 3;
  double cluster_spread = 60.0;  // stddev of object offsets around a cluster center

  void validate() const {
    if (clusters < 0 || objects_per_cluster < 1)
      throw std::invalid_argument("SynthParams: counts must be positive");
    if (min_obj_size <= 0 || max_obj_size < min_obj_size)
      throw std::invalid_argument("SynthParams: bad object size range");
    if (img_w <= 0 || img_h <= 0) throw std::invalid_argument("SynthParams: bad image dims");
    if (quota_none < 0 || quota_partial < 0 || quota_heavy < 0 ||
        std::abs(quota_none + quota_partial + quota_heavy - 1.0) > 1e-6)
      throw std::invalid_argument("SynthParams: quotas must be nonnegative and sum to 1");
    if (categories < 1) throw std::invalid_argument("SynthParams: categories must be >= 1");
  }
};

namespace detail {

inline bool overlaps_any(const BBox& b, std::span<const BBox> placed) {
  for (const BBox& p : placed)
    if (intersection_rect(b, p)) return true;
  return false;
}

}  // namespace detail

/// Generate a scene whose occlusion-ratio bins meet the quotas by
/// construction. Occluded objects are built as (target, occluder) pairs: the
/// occluder shares the target's height and is shifted horizontally so it
/// covers exactly the drawn ratio of the target; no other pair of boxes in
/// the scene overlaps, which keeps every derived ratio exact. Objects gather
/// around seeded cluster centers. Deterministic for a given seed.
inline SceneSpec synth_scene(const SynthParams& params, std::uint64_t seed) {
  params.validate();
  SceneSpec scene;
  scene.img_w = params.img_w;
  scene.img_h = params.img_h;
  if (params.clusters == 0) return scene;

  const int total = params.clusters * params.objects_per_cluster;
  const int n_heavy = static_cast<int>(std::lround(params.quota_heavy * total));
  const int n_partial = static_cast<int>(std::lround(params.quota_partial * total));
  if (2 * (n_heavy + n_partial) > total)
    throw std::invalid_argument("synth_scene: occlusion quotas need more occluders than objects available");
  if ((n_heavy + n_partial) > 0 && params.objects_per_cluster < 2)
    throw std::invalid_argument("synth_scene: occlusion quotas infeasible with 1 object per cluster");

  SeededRng rng(seed);

  std::vector<std::pair<double, double>> centers;
  const double margin = std::min({params.img_w / 4.0, params.img_h / 4.0, 2.0 * params.cluster_spread + params.max_obj_size});
  for (int c = 0; c < params.clusters; ++c)
    centers.emplace_back(rng.next_uniform(margin, params.img_w - margin),
                         rng.next_uniform(margin, params.img_h - margin));

  std::vector<BBox> placed;
  placed.reserve(static_cast<std::size_t>(total));
  int draw_order = 0;

  auto sample_box = [&](int cluster, double w, double h) {
    const auto& [cx, cy] = centers[static_cast<std::size_t>(cluster)];
    double x = cx + rng.next_normal() * params.cluster_spread - 0.5 * w;
    double y = cy + rng.next_normal() * params.cluster_spread - 0.5 * h;
    x = std::clamp(x, 0.0, params.img_w - w);
    y = std::clamp(y, 0.0, params.img_h - h);
    return BBox{x, y, w, h};
  };

  // Deterministic fallback lattice for placements that keep colliding.
  double lattice_x = 0.0, lattice_y = 0.0;
  auto lattice_box = [&](double w, double h) {
    const double step = params.max_obj_size * 2.0 + 4.0;
    for (int tries = 0; tries < 100000; ++tries) {
      BBox b{lattice_x, lattice_y, w, h};
      lattice_x += step;
      if (lattice_x + step > params.img_w) {
        lattice_x = 0.0;
        lattice_y += step;
        if (lattice_y + step > params.img_h) lattice_y = 0.0;
      }
      if (b.x2() <= params.img_w && b.y2() <= params.img_h && !detail::overlaps_any(b, placed))
        return b;
    }
    throw std::invalid_argument("synth_scene: image too small for the requested object count");
  };

  auto place_clear = [&](int cluster, double w, double h) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const BBox b = sample_box(cluster, w, h);
      if (!detail::overlaps_any(b, placed)) return b;
    }
    return lattice_box(w, h);
  };

  auto add_object = [&](const BBox& b, int cluster) {
    placed.push_back(b);
    scene.objects.push_back(SceneObject{
        b, static_cast<int>(rng.next_below(static_cast<std::size_t>(params.categories))),
        draw_order++});
    (void)cluster;
  };

  // Occluded pairs first: target then its occluder (drawn on top).
  int pair_cluster = 0;
  auto place_pair = [&](double ratio) {
    const double w = rng.next_uniform(params.min_obj_size, params.max_obj_size);
    const double h = rng.next_uniform(params.min_obj_size, params.max_obj_size);
    const double ow = rng.next_uniform(params.min_obj_size, params.max_obj_size);
    for (int attempt = 0; attempt < 64; ++attempt) {
      const BBox t = sample_box(pair_cluster, w, h);
      // occluder covers the right `ratio` fraction of the target, full height
      const double overlap_w = ratio * w;
      const BBox o{t.x + w - overlap_w, t.y, std::max(ow, overlap_w), h};
      if (o.x2() > params.img_w || o.y2() > params.img_h) continue;
      std::vector<BBox> pair_boxes{t, o};
      bool clash = false;
      for (const BBox& p : placed)
        if (intersection_rect(t, p) || intersection_rect(o, p)) {
          clash = true;
          break;
        }
      if (clash) continue;
      add_object(t, pair_cluster);
      add_object(o, pair_cluster);
      pair_cluster = (pair_cluster + 1) % params.clusters;
      return;
    }
    // fallback: lattice placement of the pair
    const double overlap_w = ratio * w;
    const double pw = w - overlap_w + std::max(ow, overlap_w);
    BBox slot = lattice_box(pw, h);
    const BBox t{slot.x, slot.y, w, h};
    const BBox o{slot.x + w - overlap_w, slot.y, std::max(ow, overlap_w), h};
    add_object(t, pair_cluster);
    add_object(o, pair_cluster);
    pair_cluster = (pair_cluster + 1) % params.clusters;
  };

  for (int i = 0; i < n_heavy; ++i) place_pair(rng.next_uniform(0.55, 0.95));
  for (int i = 0; i < n_partial; ++i) place_pair(rng.next_uniform(0.05, 0.45));

  // Remaining objects are placed overlap-free, round-robin over clusters.
  const int remaining = total - 2 * (n_heavy + n_partial);
  for (int i = 0; i < remaining; ++i) {
    const double w = rng.next_uniform(params.min_obj_size, params.max_obj_size);
    const double h = rng.next_uniform(params.min_obj_size, params.max_obj_size);
    add_object(place_clear(i % params.clusters, w, h), i % params.clusters);
  }

  refresh_occlusion_ratios(scene);
  return scene;
}

/// Crop a scene to `region` and rescale to `fine`: annotations are clipped to
/// the region, dropped when less than `visibility_cutoff` of their area stays
/// visible, remapped into crop coordinates, and their occlusion ratios are
/// re-derived there.
inline SceneSpec crop_scene(const SceneSpec& scene, const BBox& region, Size fine,
                            double visibility_cutoff = 0.25) {
  if (fine.w <= 0 || fine.h <= 0) throw std::invalid_argument("crop_scene: bad fine size");
  SceneSpec out;
  out.img_w = static_cast<int>(std::lround(fine.w));
  out.img_h = static_cast<int>(std::lround(fine.h));
  for (const SceneObject& obj : scene.objects) {
    const auto clipped = intersection_rect(obj.bbox, region);
    if (!clipped) continue;
    if (clipped->area() / obj.bbox.area() < visibility_cutoff) continue;
    SceneObject o = obj;
    o.bbox = remap_box_inverse(*clipped, region, fine);
    out.objects.push_back(o);
  }
  refresh_occlusion_ratios(out);
  return out;
}

}  // namespace ogd
