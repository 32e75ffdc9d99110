// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ogd/detector.hpp"
#include "ogd/geometry.hpp"
#include "ogd/region_select.hpp"
#include "ogd/scene.hpp"

namespace ogd {

struct NmsParams {
  double iou_threshold = 0.5;  // in (0, 1]
  int max_detections = 500;

  void validate() const {
    if (iou_threshold <= 0 || iou_threshold > 1)
      throw std::invalid_argument("NmsParams: iou_threshold must be in (0,1]");
    if (max_detections < 1) throw std::invalid_argument("NmsParams: max_detections must be >= 1");
  }
};

/// Per-category greedy non-maximum suppression. Detections are visited in
/// score-descending order (ties keep input order); a detection is suppressed
/// when its IoU with an already kept detection of the same category strictly
/// exceeds the threshold. The kept list is returned score-descending and
/// truncated to max_detections.
inline std::vector<Detection> nms(const std::vector<Detection>& dets, const NmsParams& params) {
  params.validate();
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<Detection> kept;
  for (std::size_t oi : order) {
    const Detection& d = dets[oi];
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (k.category == d.category && iou(k.bbox, d.bbox) > params.iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(d);
      if (kept.size() == static_cast<std::size_t>(params.max_detections)) break;
    }
  }
  return kept;
}

/// Raised when a detector pass fails; identifies which pass.
class TppPassError : public std::runtime_error {
 public:
  TppPassError(int pass_index, const std::string& why)
      : std::runtime_error((pass_index < 0 ? std::string("coarse pass: ")
                                           : "fine pass " + std::to_string(pass_index) + ": ") +
                           why),
        pass_index_(pass_index) {}

  /// -1 for the coarse pass, otherwise the fine pass index q.
  int pass_index() const { return pass_index_; }

 private:
  int pass_index_;
};

/// Two-phase progressive refinement: a coarse pass over the full image, then
/// fine passes over the occlusion sub-regions picked from the coarse pass's
/// map, all merged by NMS. Detections are returned in source coordinates.
/// With no selectable regions the result equals nms(coarse) exactly.
inline std::vector<Detection> run_tpp(const SceneSpec& scene, DetectorPort& detector,
                                      const SelectParams& select_params,
                                      const NmsParams& nms_params, int n_sub, Size fine_size,
                                      std::uint64_t seed) {
  if (n_sub < 0) throw std::invalid_argument("run_tpp: n_sub must be >= 0");
  const BBox frame{0.0, 0.0, static_cast<double>(scene.img_w), static_cast<double>(scene.img_h)};

  DetectorResult coarse;
  try {
    coarse = detector.detect(scene, fine_size);
  } catch (const std::exception& e) {
    throw TppPassError(-1, e.what());
  }

  std::vector<Detection> merged;
  for (const Detection& d : coarse.detections)
    merged.push_back(Detection{remap_box(d.bbox, frame, fine_size), d.category, d.score});

  std::vector<Region> regions;
  if (n_sub > 0) {
    SelectParams sp = select_params;
    sp.n_regions = n_sub;
    regions = select_regions(coarse.map, fine_size.w, fine_size.h, sp, seed);
  }

  for (std::size_t q = 0; q < regions.size(); ++q) {
    // region comes out in the coarse input frame; map it to source coords
    const BBox region_src = remap_box(regions[q].rect, frame, fine_size);
    const SceneSpec crop = crop_scene(scene, region_src, fine_size);
    DetectorResult fine;
    try {
      fine = detector.detect(crop, fine_size);
    } catch (const std::exception& e) {
      throw TppPassError(static_cast<int>(q), e.what());
    }
    for (const Detection& d : fine.detections)
      merged.push_back(Detection{remap_box(d.bbox, region_src, fine_size), d.category, d.score});
  }

  return nms(merged, nms_params);
}

/// Training-side crop augmentation: one rescaled scene per selected region,
/// with clipped + remapped annotations. The map is over the source frame.
inline std::vector<SceneSpec> augment_crops(const SceneSpec& scene, const OcclusionMap& map,
                                            const SelectParams& select_params, Size fine_size,
                                            std::uint64_t seed, double visibility_cutoff = 0.25) {
  const std::vector<Region> regions =
      select_regions(map, scene.img_w, scene.img_h, select_params, seed);
  std::vector<SceneSpec> out;
  out.reserve(regions.size());
  for (const Region& r : regions)
    out.push_back(crop_scene(scene, r.rect, fine_size, visibility_cutoff));
  return out;
}

}  // namespace ogd
