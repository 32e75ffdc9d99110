// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ogd/geometry.hpp"

namespace ogd {

using ImageDetections = std::vector<Detection>;
using ImageAnnotations = std::vector<Annotation>;

/// Greedy score-ordered one-to-one matching within one image. Per category,
/// detections are visited by descending score (ties keep input order) and
/// each takes the unmatched ground truth of its category with the highest
/// IoU, provided that IoU reaches the threshold. IoU ties break to the lowest
/// ground-truth index.
struct MatchResult {
  std::vector<int> det_to_gt;  // index into gts, -1 if unmatched
  std::vector<int> gt_to_det;  // index into dets, -1 if unmatched
};

inline MatchResult match_greedy(std::span<const Detection> dets, std::span<const Annotation> gts,
                                double iou_thr) {
  MatchResult res;
  res.det_to_gt.assign(dets.size(), -1);
  res.gt_to_det.assign(gts.size(), -1);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  for (std::size_t di : order) {
    const Detection& d = dets[di];
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (res.gt_to_det[gi] != -1 || gts[gi].category != d.category) continue;
      const double v = iou(d.bbox, gts[gi].bbox);
      if (v >= iou_thr && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0) {
      res.det_to_gt[di] = best_gt;
      res.gt_to_det[static_cast<std::size_t>(best_gt)] = static_cast<int>(di);
    }
  }
  return res;
}

using GtFilter = std::function<bool(const Annotation&)>;

namespace detail {

inline GtFilter accept_all() {
  return [](const Annotation&) { return true; };
}

struct PooledDet {
  double score;
  std::size_t image, index;
  bool tp;
};

/// 101-point interpolated AP for one category at one IoU threshold.
/// Detections matched to a ground truth outside the filter are dropped from
/// the ranking (neither credited nor penalized); the recall denominator is
/// the filtered ground-truth count.
inline std::optional<double> ap_single_category(
    const std::vector<ImageDetections>& dets, const std::vector<ImageAnnotations>& gts,
    int category, double iou_thr, const GtFilter& filter) {
  std::size_t gt_total = 0;
  std::vector<PooledDet> pool;
  for (std::size_t img = 0; img < gts.size(); ++img) {
    std::vector<Detection> cat_dets;
    std::vector<std::size_t> det_idx;
    for (std::size_t i = 0; i < dets[img].size(); ++i)
      if (dets[img][i].category == category) {
        cat_dets.push_back(dets[img][i]);
        det_idx.push_back(i);
      }
    std::vector<Annotation> cat_gts;
    std::vector<bool> in_filter;
    for (const Annotation& g : gts[img])
      if (g.category == category) {
        cat_gts.push_back(g);
        in_filter.push_back(filter(g));
      }
    gt_total += static_cast<std::size_t>(std::count(in_filter.begin(), in_filter.end(), true));

    const MatchResult m = match_greedy(cat_dets, cat_gts, iou_thr);
    for (std::size_t i = 0; i < cat_dets.size(); ++i) {
      const int gi = m.det_to_gt[i];
      if (gi >= 0 && !in_filter[static_cast<std::size_t>(gi)]) continue;  // ignored
      pool.push_back(PooledDet{cat_dets[i].score, img, det_idx[i], gi >= 0});
    }
  }
  if (gt_total == 0) return std::nullopt;

  std::sort(pool.begin(), pool.end(), [](const PooledDet& a, const PooledDet& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image != b.image) return a.image < b.image;
    return a.index < b.index;
  });

  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (const PooledDet& d : pool) {
    d.tp ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_total));
  }

  double ap = 0.0;
  for (int t = 0; t <= 100; ++t) {
    const double r = t / 100.0;
    double best = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i)
      if (recall[i] >= r) best = std::max(best, precision[i]);
    ap += best;
  }
  return ap / 101.0;
}

inline std::vector<int> categories_in_gt(const std::vector<ImageAnnotations>& gts) {
  std::vector<int> cats;
  for (const auto& img : gts)
    for (const Annotation& g : img) cats.push_back(g.category);
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  return cats;
}

}  // namespace detail

/// 101-point interpolated AP at one IoU threshold, averaged over the
/// categories present in the (filtered) ground truth.
inline std::optional<double> average_precision(const std::vector<ImageDetections>& dets,
                                               const std::vector<ImageAnnotations>& gts,
                                               double iou_thr,
                                               const GtFilter& filter = detail::accept_all()) {
  if (dets.size() != gts.size())
    throw std::invalid_argument("average_precision: image count mismatch");
  double acc = 0.0;
  int n = 0;
  for (int cat : detail::categories_in_gt(gts)) {
    if (auto ap = detail::ap_single_category(dets, gts, cat, iou_thr, filter)) {
      acc += *ap;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return acc / n;
}

/// COCO-style AP: mean over IoU thresholds 0.50 : 0.05 : 0.95.
inline std::optional<double> average_precision_coco(const std::vector<ImageDetections>& dets,
                                                    const std::vector<ImageAnnotations>& gts,
                                                    const GtFilter& filter = detail::accept_all()) {
  double acc = 0.0;
  int n = 0;
  for (int t = 0; t < 10; ++t) {
    if (auto ap = average_precision(dets, gts, 0.5 + 0.05 * t, filter)) {
      acc += *ap;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return acc / n;
}

struct RecallCounts {
  std::size_t gt_count = 0;
  std::size_t matched = 0;
  std::optional<double> recall;  // undefined when gt_count == 0
};

/// Recall over the filtered ground truth: per image the top max_dets
/// detections by score are matched against ALL ground truth, then only
/// matches to filtered ground truth are counted. Detections matching
/// out-of-filter ground truth are neither credited nor penalized.
inline RecallCounts recall_counts(const std::vector<ImageDetections>& dets,
                                  const std::vector<ImageAnnotations>& gts, double iou_thr,
                                  int max_dets, const GtFilter& filter = detail::accept_all()) {
  if (dets.size() != gts.size()) throw std::invalid_argument("recall_counts: image count mismatch");
  if (max_dets < 1) throw std::invalid_argument("recall_counts: max_dets must be >= 1");
  RecallCounts out;
  for (std::size_t img = 0; img < gts.size(); ++img) {
    std::vector<Detection> top = dets[img];
    std::stable_sort(top.begin(), top.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    if (top.size() > static_cast<std::size_t>(max_dets)) top.resize(static_cast<std::size_t>(max_dets));

    const MatchResult m = match_greedy(top, gts[img], iou_thr);
    for (std::size_t gi = 0; gi < gts[img].size(); ++gi) {
      if (!filter(gts[img][gi])) continue;
      ++out.gt_count;
      if (m.gt_to_det[gi] != -1) ++out.matched;
    }
  }
  if (out.gt_count > 0)
    out.recall = static_cast<double>(out.matched) / static_cast<double>(out.gt_count);
  return out;
}

inline std::optional<double> average_recall(const std::vector<ImageDetections>& dets,
                                            const std::vector<ImageAnnotations>& gts,
                                            double iou_thr, int max_dets) {
  return recall_counts(dets, gts, iou_thr, max_dets).recall;
}

/// Occlusion-ratio bins: exactly 0, (0, heavy_min), [heavy_min, 1]. The split
/// point itself lands in the heavy bin.
struct OcclusionBins {
  double heavy_min = 0.5;
};

struct ArOccResult {
  RecallCounts none, partial, heavy;
};

/// Recall restricted to each occlusion bin. Every ground truth must carry an
/// occlusion ratio.
inline ArOccResult ar_occ(const std::vector<ImageDetections>& dets,
                          const std::vector<ImageAnnotations>& gts, const OcclusionBins& bins,
                          double iou_thr, int max_dets) {
  for (const auto& img : gts)
    for (const Annotation& g : img)
      if (!g.occlusion_ratio)
        throw std::invalid_argument("ar_occ: every ground truth needs an occlusion_ratio");

  const double split = bins.heavy_min;
  ArOccResult out;
  out.none = recall_counts(dets, gts, iou_thr, max_dets,
                           [](const Annotation& g) { return *g.occlusion_ratio == 0.0; });
  out.partial = recall_counts(dets, gts, iou_thr, max_dets, [split](const Annotation& g) {
    return *g.occlusion_ratio > 0.0 && *g.occlusion_ratio < split;
  });
  out.heavy = recall_counts(dets, gts, iou_thr, max_dets, [split](const Annotation& g) {
    return *g.occlusion_ratio >= split && *g.occlusion_ratio <= 1.0;
  });
  return out;
}

struct DatasetStats {
  double objects_per_image = 0.0;
  double overlaps_per_image = 0.0;
};

/// Mean object count per image and mean count of unordered ground-truth pairs
/// whose IoU strictly exceeds the threshold.
inline DatasetStats dataset_stats(const std::vector<ImageAnnotations>& gts, double iou_thr = 0.5) {
  DatasetStats s;
  if (gts.empty()) return s;
  std::size_t objects = 0, overlaps = 0;
  for (const auto& img : gts) {
    objects += img.size();
    for (std::size_t i = 0; i < img.size(); ++i)
      for (std::size_t j = i + 1; j < img.size(); ++j)
        if (iou(img[i].bbox, img[j].bbox) > iou_thr) ++overlaps;
  }
  s.objects_per_image = static_cast<double>(objects) / static_cast<double>(gts.size());
  s.overlaps_per_image = static_cast<double>(overlaps) / static_cast<double>(gts.size());
  return s;
}

struct EvalParams {
  double ar_occ_iou = 0.5;
  int ar_max_dets = 500;
  OcclusionBins occlusion_bins{};
  double scale_small_max = 32.0 * 32.0;   // GT area strata: [0, s), [s, m), [m, inf)
  double scale_medium_max = 96.0 * 96.0;
  double stats_iou = 0.5;

  void validate() const {
    if (ar_occ_iou <= 0 || ar_occ_iou > 1) throw std::invalid_argument("EvalParams: bad ar_occ_iou");
    if (ar_max_dets < 1) throw std::invalid_argument("EvalParams: bad ar_max_dets");
    if (occlusion_bins.heavy_min <= 0 || occlusion_bins.heavy_min >= 1)
      throw std::invalid_argument("EvalParams: occlusion bin split must be in (0,1)");
    if (scale_small_max <= 0 || scale_medium_max <= scale_small_max)
      throw std::invalid_argument("EvalParams: bad scale cutoffs");
    if (stats_iou <= 0 || stats_iou > 1) throw std::invalid_argument("EvalParams: bad stats_iou");
  }
};

struct EvalReport {
  std::optional<double> ap, ap50, ap75;
  std::optional<double> ap_s, ap_m, ap_l;
  std::optional<double> ar_s, ar_m, ar_l;
  std::optional<double> ar_occ_none, ar_occ_partial, ar_occ_heavy;
  double objects_per_image = 0.0;
  double overlaps_per_image = 0.0;
};

/// Full report. AP family is COCO-style (101-point, 10 IoU thresholds for the
/// unsuffixed AP); scale strata use GT box area with the configured cutoffs;
/// AR_s/m/l average the recall over the same 10 thresholds; AR_occ uses the
/// single configured threshold. Undefined entries mean an empty bin.
inline EvalReport evaluate(const std::vector<ImageDetections>& dets,
                           const std::vector<ImageAnnotations>& gts, const EvalParams& params = {}) {
  params.validate();
  EvalReport r;
  const double s_max = params.scale_small_max;
  const double m_max = params.scale_medium_max;
  const GtFilter small = [s_max](const Annotation& g) { return g.bbox.area() < s_max; };
  const GtFilter medium = [s_max, m_max](const Annotation& g) {
    return g.bbox.area() >= s_max && g.bbox.area() < m_max;
  };
  const GtFilter large = [m_max](const Annotation& g) { return g.bbox.area() >= m_max; };

  r.ap = average_precision_coco(dets, gts);
  r.ap50 = average_precision(dets, gts, 0.5);
  r.ap75 = average_precision(dets, gts, 0.75);
  r.ap_s = average_precision_coco(dets, gts, small);
  r.ap_m = average_precision_coco(dets, gts, medium);
  r.ap_l = average_precision_coco(dets, gts, large);

  auto ar_coco = [&](const GtFilter& f) -> std::optional<double> {
    double acc = 0.0;
    int n = 0;
    for (int t = 0; t < 10; ++t) {
      const auto rc = recall_counts(dets, gts, 0.5 + 0.05 * t, params.ar_max_dets, f);
      if (rc.recall) {
        acc += *rc.recall;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return acc / n;
  };
  r.ar_s = ar_coco(small);
  r.ar_m = ar_coco(medium);
  r.ar_l = ar_coco(large);

  bool have_ratios = true;
  for (const auto& img : gts)
    for (const Annotation& g : img)
      if (!g.occlusion_ratio) have_ratios = false;
  if (have_ratios && !gts.empty()) {
    const ArOccResult occ = ar_occ(dets, gts, params.occlusion_bins, params.ar_occ_iou, params.ar_max_dets);
    r.ar_occ_none = occ.none.recall;
    r.ar_occ_partial = occ.partial.recall;
    r.ar_occ_heavy = occ.heavy.recall;
  }

  const DatasetStats st = dataset_stats(gts, params.stats_iou);
  r.objects_per_image = st.objects_per_image;
  r.overlaps_per_image = st.overlaps_per_image;
  return r;
}

}  // namespace ogd
