// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>

#include "ogd/detector.hpp"
#include "ogd/eval.hpp"
#include "ogd/netmath.hpp"
#include "ogd/occlusion_map.hpp"
#include "ogd/region_select.hpp"
#include "ogd/scene.hpp"
#include "ogd/toml_lite.hpp"
#include "ogd/tpp.hpp"

namespace ogd {

/// Refinement-process knobs that are not owned by another parameter block.
struct TppConfig {
  int n_sub = 3;
  double fine_w = 1024.0;
  double fine_h = 1024.0;
  double crop_visibility_cutoff = 0.25;

  void validate() const {
    if (n_sub < 0) throw std::invalid_argument("TppConfig: n_sub must be >= 0");
    if (fine_w <= 0 || fine_h <= 0) throw std::invalid_argument("TppConfig: bad fine size");
    if (crop_visibility_cutoff < 0 || crop_visibility_cutoff > 1)
      throw std::invalid_argument("TppConfig: crop_visibility_cutoff must be in [0,1]");
  }
  Size fine_size() const { return Size{fine_w, fine_h}; }
};

struct NetConfig {
  int lk_kernel = 13;
  double smooth_l1_beta = 1.0;
  int oem_stages = 2;
  int oem_stage_width = 4;
  double thr_occ = 45.0;

  void validate() const {
    if (lk_kernel < 1 || lk_kernel % 2 == 0)
      throw std::invalid_argument("NetConfig: lk_kernel must be odd and >= 1");
    if (smooth_l1_beta <= 0) throw std::invalid_argument("NetConfig: smooth_l1_beta must be > 0");
    if (oem_stages < 0) throw std::invalid_argument("NetConfig: oem_stages must be >= 0");
    if (oem_stage_width < 2 || oem_stage_width % 2 != 0)
      throw std::invalid_argument("NetConfig: oem_stage_width must be even and >= 2");
    if (thr_occ <= 0) throw std::invalid_argument("NetConfig: thr_occ must be > 0");
  }
};

struct MapConfig {
  int stride = 4;
  MapParams params{};

  void validate() const {
    if (stride < 1) throw std::invalid_argument("MapConfig: stride must be >= 1");
    if (params.sigma < 0) throw std::invalid_argument("MapConfig: sigma must be >= 0");
    if (params.kernel_radius < 1) throw std::invalid_argument("MapConfig: kernel_radius must be >= 1");
    if (params.base_value < 0 || params.base_value > 1 || params.occlusion_value < 0 ||
        params.occlusion_value > 1)
      throw std::invalid_argument("MapConfig: paint values must be in [0,1]");
  }
};

struct Config {
  std::uint64_t seed = 0;
  MapConfig map{};
  SelectParams select{};
  NmsParams nms{};
  LossWeights loss{};
  NetConfig net{};
  OracleDetectorParams oracle{};
  SynthParams synth{};
  TppConfig tpp{};
  EvalParams eval{};

  void validate() const {
    map.validate();
    select.validate();
    nms.validate();
    net.validate();
    oracle.validate();
    synth.validate();
    tpp.validate();
    eval.validate();
    if (loss.lambda_occ < 0 || loss.lambda_cls < 0 || loss.lambda_loc < 0)
      throw std::invalid_argument("Config: loss weights must be >= 0");
  }
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const toml::Table& table) : table_(table) {}

  void number(const std::string& key, double& out) {
    if (auto it = table_.find(key); it != table_.end()) out = it->second.as_number();
  }
  void integer(const std::string& key, int& out) {
    if (auto it = table_.find(key); it != table_.end())
      out = static_cast<int>(it->second.as_number());
  }
  void u64(const std::string& key, std::uint64_t& out) {
    if (auto it = table_.find(key); it != table_.end())
      out = static_cast<std::uint64_t>(it->second.as_number());
  }
  void text(const std::string& key, std::string& out) {
    if (auto it = table_.find(key); it != table_.end()) {
      if (it->second.kind != toml::Value::Kind::String)
        throw std::invalid_argument("config: " + key + " must be a string");
      out = it->second.s;
    }
  }

 private:
  const toml::Table& table_;
};

}  // namespace detail

/// Apply a parsed TOML table on top of a config (unmentioned keys keep their
/// values), then validate the result.
inline Config apply_config(Config cfg, const toml::Table& t) {
  detail::ConfigReader r(t);

  r.u64("seed", cfg.seed);

  r.integer("map.stride", cfg.map.stride);
  r.number("map.base_value", cfg.map.params.base_value);
  r.number("map.occlusion_value", cfg.map.params.occlusion_value);
  r.number("map.sigma", cfg.map.params.sigma);
  r.integer("map.kernel_radius", cfg.map.params.kernel_radius);

  r.number("select.min_region_w", cfg.select.min_region_w);
  r.number("select.min_region_h", cfg.select.min_region_h);
  r.integer("select.window_w", cfg.select.window_w);
  r.integer("select.window_h", cfg.select.window_h);
  r.number("select.threshold", cfg.select.window_threshold);
  r.integer("select.n_regions", cfg.select.n_regions);
  std::string rule;
  r.text("select.min_size_rule", rule);
  if (!rule.empty()) {
    if (rule == "max")
      cfg.select.min_size_rule = MinSizeRule::MaxOfFixedAndQuarter;
    else if (rule == "fixed")
      cfg.select.min_size_rule = MinSizeRule::FixedOnly;
    else if (rule == "quarter")
      cfg.select.min_size_rule = MinSizeRule::QuarterOnly;
    else
      throw std::invalid_argument("config: select.min_size_rule must be max, fixed or quarter");
  }

  r.number("nms.iou_threshold", cfg.nms.iou_threshold);
  r.integer("nms.max_detections", cfg.nms.max_detections);

  r.number("loss.lambda_occ", cfg.loss.lambda_occ);
  r.number("loss.lambda_cls", cfg.loss.lambda_cls);
  r.number("loss.lambda_loc", cfg.loss.lambda_loc);

  r.integer("net.lk_kernel", cfg.net.lk_kernel);
  r.number("net.smooth_l1_beta", cfg.net.smooth_l1_beta);
  r.integer("net.oem_stages", cfg.net.oem_stages);
  r.integer("net.oem_stage_width", cfg.net.oem_stage_width);
  r.number("net.thr_occ", cfg.net.thr_occ);

  r.u64("oracle.seed", cfg.oracle.seed);
  r.number("oracle.a_ref", cfg.oracle.a_ref);
  r.number("oracle.kappa", cfg.oracle.kappa);
  r.number("oracle.jitter_sigma", cfg.oracle.jitter_sigma);
  r.number("oracle.score_floor", cfg.oracle.score_floor);
  r.integer("oracle.map_stride", cfg.oracle.map_stride);
  r.number("oracle.map_noise", cfg.oracle.map_noise);

  r.integer("synth.clusters", cfg.synth.clusters);
  r.integer("synth.objects_per_cluster", cfg.synth.objects_per_cluster);
  r.number("synth.min_obj_size", cfg.synth.min_obj_size);
  r.number("synth.max_obj_size", cfg.synth.max_obj_size);
  r.integer("synth.img_w", cfg.synth.img_w);
  r.integer("synth.img_h", cfg.synth.img_h);
  r.number("synth.quota_none", cfg.synth.quota_none);
  r.number("synth.quota_partial", cfg.synth.quota_partial);
  r.number("synth.quota_heavy", cfg.synth.quota_heavy);
  r.integer("synth.categories", cfg.synth.categories);
  r.number("synth.cluster_spread", cfg.synth.cluster_spread);

  r.integer("tpp.n_sub", cfg.tpp.n_sub);
  r.number("tpp.fine_w", cfg.tpp.fine_w);
  r.number("tpp.fine_h", cfg.tpp.fine_h);
  r.number("tpp.crop_visibility_cutoff", cfg.tpp.crop_visibility_cutoff);

  r.number("eval.ar_occ_iou", cfg.eval.ar_occ_iou);
  r.integer("eval.ar_max_dets", cfg.eval.ar_max_dets);
  r.number("eval.occlusion_heavy_min", cfg.eval.occlusion_bins.heavy_min);
  r.number("eval.scale_small_max", cfg.eval.scale_small_max);
  r.number("eval.scale_medium_max", cfg.eval.scale_medium_max);
  r.number("eval.stats_iou", cfg.eval.stats_iou);

  cfg.validate();
  return cfg;
}

inline Config load_config(const std::string& path, Config base = {}) {
  return apply_config(std::move(base), toml::parse_file(path));
}

inline const char* min_size_rule_name(MinSizeRule r) {
  switch (r) {
    case MinSizeRule::FixedOnly: return "fixed";
    case MinSizeRule::QuarterOnly: return "quarter";
    default: return "max";
  }
}

namespace detail {

/// Shortest decimal form that round-trips the double.
inline std::string fmt_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Canonical TOML rendering of a config; defaults round-trip through
/// apply_config(parse(...)) unchanged.
inline std::string config_to_toml(const Config& cfg) {
  std::ostringstream o;
  auto n = [](double v) { return detail::fmt_number(v); };
  o << "seed = " << cfg.seed << "\n\n";
  o << "[map]\n";
  o << "stride = " << cfg.map.stride << "\n";
  o << "base_value = " << n(cfg.map.params.base_value) << "\n";
  o << "occlusion_value = " << n(cfg.map.params.occlusion_value) << "\n";
  o << "sigma = " << n(cfg.map.params.sigma) << "\n";
  o << "kernel_radius = " << cfg.map.params.kernel_radius << "\n\n";
  o << "[select]\n";
  o << "min_region_w = " << n(cfg.select.min_region_w) << "\n";
  o << "min_region_h = " << n(cfg.select.min_region_h) << "\n";
  o << "window_w = " << cfg.select.window_w << "\n";
  o << "window_h = " << cfg.select.window_h << "\n";
  o << "threshold = " << n(cfg.select.window_threshold) << "\n";
  o << "n_regions = " << cfg.select.n_regions << "\n";
  o << "min_size_rule = \"" << min_size_rule_name(cfg.select.min_size_rule) << "\"\n\n";
  o << "[nms]\n";
  o << "iou_threshold = " << n(cfg.nms.iou_threshold) << "\n";
  o << "max_detections = " << cfg.nms.max_detections << "\n\n";
  o << "[loss]\n";
  o << "lambda_occ = " << n(cfg.loss.lambda_occ) << "\n";
  o << "lambda_cls = " << n(cfg.loss.lambda_cls) << "\n";
  o << "lambda_loc = " << n(cfg.loss.lambda_loc) << "\n\n";
  o << "[net]\n";
  o << "lk_kernel = " << cfg.net.lk_kernel << "\n";
  o << "smooth_l1_beta = " << n(cfg.net.smooth_l1_beta) << "\n";
  o << "oem_stages = " << cfg.net.oem_stages << "\n";
  o << "oem_stage_width = " << cfg.net.oem_stage_width << "\n";
  o << "thr_occ = " << n(cfg.net.thr_occ) << "\n\n";
  o << "[oracle]\n";
  o << "seed = " << cfg.oracle.seed << "\n";
  o << "a_ref = " << n(cfg.oracle.a_ref) << "\n";
  o << "kappa = " << n(cfg.oracle.kappa) << "\n";
  o << "jitter_sigma = " << n(cfg.oracle.jitter_sigma) << "\n";
  o << "score_floor = " << n(cfg.oracle.score_floor) << "\n";
  o << "map_stride = " << cfg.oracle.map_stride << "\n";
  o << "map_noise = " << n(cfg.oracle.map_noise) << "\n\n";
  o << "[synth]\n";
  o << "clusters = " << cfg.synth.clusters << "\n";
  o << "objects_per_cluster = " << cfg.synth.objects_per_cluster << "\n";
  o << "min_obj_size = " << n(cfg.synth.min_obj_size) << "\n";
  o << "max_obj_size = " << n(cfg.synth.max_obj_size) << "\n";
  o << "img_w = " << cfg.synth.img_w << "\n";
  o << "img_h = " << cfg.synth.img_h << "\n";
  o << "quota_none = " << n(cfg.synth.quota_none) << "\n";
  o << "quota_partial = " << n(cfg.synth.quota_partial) << "\n";
  o << "quota_heavy = " << n(cfg.synth.quota_heavy) << "\n";
  o << "categories = " << cfg.synth.categories << "\n";
  o << "cluster_spread = " << n(cfg.synth.cluster_spread) << "\n\n";
  o << "[tpp]\n";
  o << "n_sub = " << cfg.tpp.n_sub << "\n";
  o << "fine_w = " << n(cfg.tpp.fine_w) << "\n";
  o << "fine_h = " << n(cfg.tpp.fine_h) << "\n";
  o << "crop_visibility_cutoff = " << n(cfg.tpp.crop_visibility_cutoff) << "\n\n";
  o << "[eval]\n";
  o << "ar_occ_iou = " << n(cfg.eval.ar_occ_iou) << "\n";
  o << "ar_max_dets = " << cfg.eval.ar_max_dets << "\n";
  o << "occlusion_heavy_min = " << n(cfg.eval.occlusion_bins.heavy_min) << "\n";
  o << "scale_small_max = " << n(cfg.eval.scale_small_max) << "\n";
  o << "scale_medium_max = " << n(cfg.eval.scale_medium_max) << "\n";
  o << "stats_iou = " << n(cfg.eval.stats_iou) << "\n";
  return o.str();
}

}  // namespace ogd
