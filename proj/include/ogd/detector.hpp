// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ogd/geometry.hpp"
#include "ogd/occlusion_map.hpp"
#include "ogd/rng.hpp"
#include "ogd/scene.hpp"

namespace ogd {

struct DetectorResult {
  std::vector<Detection> detections;  // in input_size coordinates
  OcclusionMap map;                   // over the input_size frame
};

/// Detector abstraction the refinement process drives. Implementations must
/// return detections inside the input frame and a valid occlusion map, and be
/// deterministic per (scene, input_size).
class DetectorPort {
 public:
  virtual ~DetectorPort() = default;
  virtual DetectorResult detect(const SceneSpec& scene, Size input_size) = 0;
};

/// Test-double detector over synthetic scenes. Each ground-truth object,
/// scaled into the input frame, is emitted with probability
///   p = min(1, scaled_area / a_ref) * (1 - kappa * occlusion_ratio),
/// which models the recall drop for small and occluded objects. Box noise is
/// N(0, jitter_sigma * dim) per coordinate; the score is p minus the mean
/// normalized jitter magnitude, floored at score_floor. The returned map is
/// the highlighted truth map of the scaled annotations (occlusion is
/// "predicted" perfectly), optionally degraded with multiplicative noise.
struct OracleDetectorParams {
  std::uint64_t seed = 0;
  double a_ref = 2000.0;      // scaled pixel area at which recall saturates
  double kappa = 0.3;         // occlusion recall penalty in [0,1]
  double jitter_sigma = 0.02; // box noise, fraction of each dimension
  double score_floor = 0.05;
  int map_stride = 4;
  double map_noise = 0.0;     // multiplicative map noise amplitude in [0,1)
  MapParams map_params{};

  void validate() const {
    if (a_ref <= 0) throw std::invalid_argument("OracleDetectorParams: a_ref must be > 0");
    if (kappa < 0 || kappa > 1) throw std::invalid_argument("OracleDetectorParams: kappa must be in [0,1]");
    if (jitter_sigma < 0) throw std::invalid_argument("OracleDetectorParams: jitter_sigma must be >= 0");
    if (score_floor < 0 || score_floor > 1)
      throw std::invalid_argument("OracleDetectorParams: score_floor must be in [0,1]");
    if (map_stride < 1) throw std::invalid_argument("OracleDetectorParams: map_stride must be >= 1");
    if (map_noise < 0 || map_noise >= 1)
      throw std::invalid_argument("OracleDetectorParams: map_noise must be in [0,1)");
  }
};

inline DetectorResult oracle_detect(const SceneSpec& scene, Size input_size,
                                    const OracleDetectorParams& params) {
  params.validate();
  if (input_size.w <= 0 || input_size.h <= 0)
    throw std::invalid_argument("oracle_detect: input size must be positive");
  if (scene.img_w <= 0 || scene.img_h <= 0)
    throw std::invalid_argument("oracle_detect: scene has no dims");
  if (scene.objects.size() != scene.occlusion_ratios.size())
    throw std::invalid_argument("oracle_detect: occlusion ratios not derived");

  // Decorrelate calls on different inputs while staying deterministic.
  std::uint64_t s = SeededRng::mix(params.seed, static_cast<std::uint64_t>(scene.img_w) << 32 |
                                                    static_cast<std::uint64_t>(scene.img_h));
  s = SeededRng::mix(s, static_cast<std::uint64_t>(input_size.w));
  s = SeededRng::mix(s, static_cast<std::uint64_t>(input_size.h));
  s = SeededRng::mix(s, scene.objects.size());
  SeededRng rng(s);

  const double sx = input_size.w / static_cast<double>(scene.img_w);
  const double sy = input_size.h / static_cast<double>(scene.img_h);
  const int in_w = static_cast<int>(std::lround(input_size.w));
  const int in_h = static_cast<int>(std::lround(input_size.h));

  DetectorResult res;
  std::vector<Annotation> scaled;
  scaled.reserve(scene.objects.size());
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const SceneObject& obj = scene.objects[i];
    const BBox b{obj.bbox.x * sx, obj.bbox.y * sy, obj.bbox.w * sx, obj.bbox.h * sy};
    scaled.push_back(Annotation{b, obj.category, scene.occlusion_ratios[i]});

    const double p = std::min(1.0, b.area() / params.a_ref) *
                     (1.0 - params.kappa * scene.occlusion_ratios[i]);
    const double u = rng.next_double();
    const double jx = rng.next_normal() * params.jitter_sigma * b.w;
    const double jy = rng.next_normal() * params.jitter_sigma * b.h;
    const double jw = rng.next_normal() * params.jitter_sigma * b.w;
    const double jh = rng.next_normal() * params.jitter_sigma * b.h;
    if (u >= p) continue;

    BBox d{b.x + jx, b.y + jy, std::max(b.w + jw, 1e-3), std::max(b.h + jh, 1e-3)};
    // keep the detection inside the input frame
    d.x = std::clamp(d.x, 0.0, input_size.w - d.w < 0 ? 0.0 : input_size.w - d.w);
    d.y = std::clamp(d.y, 0.0, input_size.h - d.h < 0 ? 0.0 : input_size.h - d.h);
    d.w = std::min(d.w, input_size.w - d.x);
    d.h = std::min(d.h, input_size.h - d.y);

    const double jitter_penalty =
        0.25 * (std::abs(jx) / b.w + std::abs(jy) / b.h + std::abs(jw) / b.w + std::abs(jh) / b.h);
    const double score = std::clamp(p - jitter_penalty, params.score_floor, 1.0);
    res.detections.push_back(Detection{d, obj.category, score});
  }

  res.map = generate_truth_map(scaled, in_w, in_h, params.map_stride,
                               TruthStyle::HighlightedOcclusion, params.map_params);
  if (params.map_noise > 0.0) {
    for (double& v : res.map.values) {
      v *= 1.0 + params.map_noise * rng.next_uniform(-1.0, 1.0);
      v = std::clamp(v, 0.0, 1.0);
    }
  }
  return res;
}

class OracleDetector : public DetectorPort {
 public:
  explicit OracleDetector(OracleDetectorParams params) : params_(params) { params_.validate(); }

  DetectorResult detect(const SceneSpec& scene, Size input_size) override {
    return oracle_detect(scene, input_size, params_);
  }

  const OracleDetectorParams& params() const { return params_; }

 private:
  OracleDetectorParams params_;
};

}  // namespace ogd
