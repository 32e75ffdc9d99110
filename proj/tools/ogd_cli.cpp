// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: synthetic scenes, occlusion truth maps, sub-region
// selection, the two-phase refinement pipeline with the oracle detector, and
// evaluation reports. Exit codes: 0 success, 2 validation/format error,
// 1 anything else.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ogd/config.hpp"
#include "ogd/detector.hpp"
#include "ogd/eval.hpp"
#include "ogd/io.hpp"
#include "ogd/netmath.hpp"
#include "ogd/occlusion_map.hpp"
#include "ogd/region_select.hpp"
#include "ogd/rng.hpp"
#include "ogd/scene.hpp"
#include "ogd/tpp.hpp"

namespace {

using namespace ogd;

struct GlobalOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

Config base_config(const GlobalOpts& g) {
  Config cfg;
  if (!g.config_path.empty()) cfg = load_config(g.config_path);
  if (g.seed_set) cfg.seed = g.seed;
  return cfg;
}

Config overlay(const Config& base, const std::string& path) {
  if (path.empty()) return base;
  return apply_config(base, toml::parse_file(path));
}

int cmd_synth(const Config& cfg, int count, const std::string& out) {
  std::vector<SceneSpec> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    scenes.push_back(synth_scene(cfg.synth, SeededRng::mix(cfg.seed, static_cast<std::uint64_t>(i))));
  save_scenes_json(scenes, out);
  std::cout << "wrote " << scenes.size() << " scenes to " << out << "\n";
  return 0;
}

int cmd_gen_maps(const Config& cfg, const std::string& annotations, const std::string& style,
                 int stride, const std::string& out_dir) {
  TruthStyle ts;
  if (style == "highlighted")
    ts = TruthStyle::HighlightedOcclusion;
  else if (style == "occlusion-only")
    ts = TruthStyle::OcclusionOnly;
  else
    throw std::invalid_argument("--style must be 'highlighted' or 'occlusion-only'");

  const Dataset ds = load_gt_any(annotations);
  std::filesystem::create_directories(out_dir);
  for (const ImageRecord& img : ds.images) {
    const OcclusionMap map =
        generate_truth_map(img.annotations, img.width, img.height, stride, ts, cfg.map.params);
    save_omap(map, (std::filesystem::path(out_dir) / (std::to_string(img.id) + ".omap")).string());
  }
  std::cout << "wrote " << ds.images.size() << " maps to " << out_dir << "\n";
  return 0;
}

int cmd_select_regions(const Config& cfg, const std::string& map_path, const std::string& out) {
  const OcclusionMap map = load_omap(map_path);
  const auto regions = select_regions(map, map.img_w, map.img_h, cfg.select, cfg.seed);
  save_regions_json(regions, out);
  std::cout << "wrote " << regions.size() << " regions to " << out << "\n";
  return 0;
}

int cmd_run_tpp(const Config& cfg, const std::string& scenes_path, int n_sub,
                const std::string& out) {
  const auto scenes = load_scenes_json(scenes_path);
  OracleDetector detector(cfg.oracle);
  std::vector<std::vector<Detection>> per_scene;
  per_scene.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    per_scene.push_back(run_tpp(scenes[i], detector, cfg.select, cfg.nms, n_sub,
                                cfg.tpp.fine_size(),
                                SeededRng::mix(cfg.seed, static_cast<std::uint64_t>(i))));
  }
  save_detections_json(per_scene, out);
  std::cout << "ran two-phase detection on " << scenes.size() << " scenes -> " << out << "\n";
  return 0;
}

int cmd_eval(const Config& cfg, const std::string& gt_path, const std::string& dets_path,
             const std::string& report_path, const std::string& csv_path) {
  const Dataset ds = load_gt_any(gt_path);
  const auto dets = load_detections_json(dets_path);
  if (dets.size() != ds.images.size())
    throw std::invalid_argument("eval: " + std::to_string(ds.images.size()) + " images but " +
                                std::to_string(dets.size()) + " detection lists");
  std::vector<std::vector<Annotation>> gts;
  gts.reserve(ds.images.size());
  for (const ImageRecord& img : ds.images) gts.push_back(img.annotations);

  const EvalReport report = evaluate(dets, gts, cfg.eval);
  if (!report_path.empty()) save_report_json(report, report_path);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw IoError("cannot open for writing: " + csv_path);
    out << report_to_csv(report);
  }

  auto line = [](const char* name, const std::optional<double>& v) {
    std::printf("%-18s %s\n", name, v ? std::to_string(*v).c_str() : "undefined");
  };
  line("ap", report.ap);
  line("ap50", report.ap50);
  line("ap75", report.ap75);
  line("ar_occ_none", report.ar_occ_none);
  line("ar_occ_partial", report.ar_occ_partial);
  line("ar_occ_heavy", report.ar_occ_heavy);
  std::printf("%-18s %.6f\n", "objects_per_image", report.objects_per_image);
  std::printf("%-18s %.6f\n", "overlaps_per_image", report.overlaps_per_image);
  return 0;
}

int cmd_stats(const std::string& gt_path, double iou_thr) {
  const Dataset ds = load_gt_any(gt_path);
  std::vector<std::vector<Annotation>> gts;
  gts.reserve(ds.images.size());
  for (const ImageRecord& img : ds.images) gts.push_back(img.annotations);
  const DatasetStats s = dataset_stats(gts, iou_thr);
  std::printf("images              %zu\n", gts.size());
  std::printf("objects_per_image   %.4f\n", s.objects_per_image);
  std::printf("overlaps_per_image  %.4f  (IoU > %.2f)\n", s.overlaps_per_image, iou_thr);
  return 0;
}

// Forward-math self checks: shapes, index round trips, analytic gradients
// against finite differences, and the loss fixtures.
int cmd_netcheck(const Config& cfg) {
  struct Row {
    std::string name;
    bool ok;
    std::string note;
  };
  std::vector<Row> rows;
  auto check = [&rows](const std::string& name, bool ok, const std::string& note = "") {
    rows.push_back(Row{name, ok, note});
  };

  SeededRng rng(cfg.seed ^ 0x6e65746bULL);

  {
    Tensor4 x(2, 8, 3, 5);
    for (double& v : x.data) v = rng.next_uniform(-1, 1);
    const Tensor4 back = pixel_unshuffle(pixel_shuffle(x, 2), 2);
    check("pixel-shuffle round trip", back.data == x.data);
  }
  {
    const OemWeights w = make_oem_weights(16, cfg.net.oem_stages, cfg.seed, cfg.net.oem_stage_width);
    Tensor4 x(1, 16, 4, 4);
    for (double& v : x.data) v = rng.next_uniform(-4, 4);
    const OcclusionMap m = oem_forward(x, w);
    const int expect = 4 << cfg.net.oem_stages;
    bool in_range = true;
    for (double v : m.values) in_range = in_range && v >= 0.0 && v <= 1.0;
    check("oem output dims x2^P", m.rows == expect && m.cols == expect,
          std::to_string(m.rows) + "x" + std::to_string(m.cols));
    check("oem output in [0,1]", in_range);
  }
  {
    DecoupleWeights w = make_decouple_weights(8, 6, cfg.net.lk_kernel, cfg.seed);
    w.lk = identity_depthwise(6, cfg.net.lk_kernel);
    Tensor4 f(1, 8, 10, 10);
    for (double& v : f.data) v = rng.next_uniform(-1, 1);
    OcclusionMap occ(10, 10, 1);
    for (double& v : occ.values) v = rng.next_double();
    const auto [cls, loc] = decouple_features(f, occ, w);
    check("decoupled paths coincide under identity large kernel", cls.data == loc.data);
  }
  {
    OcclusionMap pred(8, 8, 1), truth(8, 8, 1);
    for (double& v : pred.values) v = rng.next_double();
    for (double& v : truth.values) v = rng.next_double();
    const OccLoss l = l_occ(pred, truth);
    double max_rel = 0.0;
    const double eps = 1e-5;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
      OcclusionMap up = pred, dn = pred;
      up.values[i] += eps;
      dn.values[i] -= eps;
      const double fd = (l_occ(up, truth).loss - l_occ(dn, truth).loss) / (2 * eps);
      max_rel = std::max(max_rel, std::abs(fd - l.grad[i]) / std::max(std::abs(fd), 1e-6));
    }
    check("l_occ gradient vs finite differences", max_rel < 1e-5,
          "max rel err " + std::to_string(max_rel));
  }
  {
    const double p = std::exp(-1.0);
    const double v = l_cls({{p, 1 - p}}, {0}, {1.0});
    check("l_cls -log(e^-1) fixture", std::abs(v - 1.0) < 1e-9);
    const double w1 = l_cls({{0.3, 0.7}}, {0}, {1.0});
    const double w2 = l_cls({{0.3, 0.7}}, {0}, {2.0});
    check("l_cls linear in instance weight", w2 == 2.0 * w1);
  }
  {
    const std::vector<BBox> pred{BBox{2, 0.5, 3, 4}};
    const std::vector<BBox> gt{BBox{0, 0.5, 3, 4}};
    const double v = l_loc(pred, gt, std::vector<double>{1.0}, cfg.net.smooth_l1_beta);
    check("l_loc linear-branch fixture", std::abs(v - 1.5) < 1e-12);
    const std::vector<BBox> pred2{BBox{0.5, 1, 3, 4}};
    const std::vector<BBox> gt2{BBox{0, 1, 3, 4}};
    const double v2 = l_loc(pred2, gt2, std::vector<double>{2.0}, cfg.net.smooth_l1_beta);
    check("l_loc quadratic-branch fixture", std::abs(v2 - 0.25) < 1e-12);
  }
  check("l_total weighted sum", l_total(1, 1, 1, cfg.loss) ==
                                    cfg.loss.lambda_occ + cfg.loss.lambda_cls + cfg.loss.lambda_loc);

  bool all_ok = true;
  std::printf("%-55s %s\n", "check", "status");
  for (const Row& r : rows) {
    std::printf("%-55s %s%s%s\n", r.name.c_str(), r.ok ? "ok" : "FAIL",
                r.note.empty() ? "" : "  ", r.note.c_str());
    all_ok = all_ok && r.ok;
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occlusion-guided detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global --config/--seed may follow the subcommand

  GlobalOpts g;
  app.add_option("--config", g.config_path, "TOML config applied before subcommand flags");
  app.add_option("--seed", g.seed, "global seed override")->each([&g](const std::string&) {
    g.seed_set = true;
  });

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic scenes");
  std::string synth_gen, synth_out = "scenes.json";
  int synth_count = 100;
  synth->add_option("--gen", synth_gen, "TOML overrides for the [synth] section");
  synth->add_option("--count", synth_count, "number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--out", synth_out, "output scenes JSON");

  // gen-maps
  auto* gen_maps = app.add_subcommand("gen-maps", "occlusion truth maps from annotations");
  std::string gm_annotations, gm_style = "highlighted", gm_out_dir = "maps";
  int gm_stride = -1;
  gen_maps->add_option("--annotations", gm_annotations, "dataset JSON or scenes JSON")->required();
  gen_maps->add_option("--style", gm_style, "highlighted | occlusion-only");
  gen_maps->add_option("--stride", gm_stride, "map cell size in pixels");
  gen_maps->add_option("--out-dir", gm_out_dir, "output directory for .omap files");

  // select-regions
  auto* select = app.add_subcommand("select-regions", "occlusion sub-regions from a map");
  std::string sr_map, sr_params, sr_out = "regions.json";
  select->add_option("--map", sr_map, "input .omap file")->required();
  select->add_option("--params", sr_params, "TOML overrides for the [select] section");
  select->add_option("--out", sr_out, "output regions JSON");

  // run-tpp
  auto* tpp = app.add_subcommand("run-tpp", "two-phase refinement with the oracle detector");
  std::string rt_scenes, rt_oracle_params, rt_select_params, rt_out = "dets.json";
  int rt_n_sub = -1;
  tpp->add_option("--scenes", rt_scenes, "scenes JSON")->required();
  tpp->add_option("--oracle-params", rt_oracle_params, "TOML overrides for the [oracle] section");
  tpp->add_option("--select-params", rt_select_params, "TOML overrides for the [select] section");
  tpp->add_option("--n-sub", rt_n_sub, "max sub-regions per scene");
  tpp->add_option("--out", rt_out, "output detections JSON");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "detection quality report");
  std::string ev_gt, ev_dets, ev_report = "report.json", ev_csv;
  eval_cmd->add_option("--gt", ev_gt, "ground truth (dataset JSON or scenes JSON)")->required();
  eval_cmd->add_option("--dets", ev_dets, "detections JSON")->required();
  eval_cmd->add_option("--report", ev_report, "output report JSON");
  eval_cmd->add_option("--csv", ev_csv, "optional CSV dump");

  // stats
  auto* stats = app.add_subcommand("stats", "dataset density statistics");
  std::string st_gt;
  double st_iou = 0.5;
  stats->add_option("--gt", st_gt, "ground truth (dataset JSON or scenes JSON)")->required();
  stats->add_option("--iou", st_iou, "overlap threshold (strict greater-than)");

  // netcheck
  auto* netcheck = app.add_subcommand("netcheck", "forward-math self checks");

  // config
  auto* config_cmd = app.add_subcommand("config", "configuration helpers");
  std::string cfg_action = "print-defaults";
  config_cmd->add_option("action", cfg_action, "print-defaults");

  try {
    app.parse(argc, argv);

    if (*synth) {
      Config cfg = overlay(base_config(g), synth_gen);
      return cmd_synth(cfg, synth_count, synth_out);
    }
    if (*gen_maps) {
      Config cfg = base_config(g);
      if (gm_stride > 0) cfg.map.stride = gm_stride;
      cfg.validate();
      return cmd_gen_maps(cfg, gm_annotations, gm_style, cfg.map.stride, gm_out_dir);
    }
    if (*select) {
      Config cfg = overlay(base_config(g), sr_params);
      return cmd_select_regions(cfg, sr_map, sr_out);
    }
    if (*tpp) {
      Config cfg = overlay(overlay(base_config(g), rt_oracle_params), rt_select_params);
      const int n_sub = rt_n_sub >= 0 ? rt_n_sub : cfg.tpp.n_sub;
      return cmd_run_tpp(cfg, rt_scenes, n_sub, rt_out);
    }
    if (*eval_cmd) return cmd_eval(base_config(g), ev_gt, ev_dets, ev_report, ev_csv);
    if (*stats) return cmd_stats(st_gt, st_iou);
    if (*netcheck) return cmd_netcheck(base_config(g));
    if (*config_cmd) {
      if (cfg_action != "print-defaults")
        throw std::invalid_argument("config: unknown action '" + cfg_action + "'");
      std::cout << config_to_toml(base_config(g));
      return 0;
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ogd::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ogd::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ogd::toml::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
