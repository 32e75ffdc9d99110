// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ogd/eval.hpp"
#include "ogd/geometry.hpp"
#include "ogd/occlusion_map.hpp"
#include "ogd/region_select.hpp"
#include "ogd/scene.hpp"

namespace ogd {

/// A file could not be opened or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& why) : std::runtime_error(why) {}
};

/// A file opened fine but its content violates the expected format.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& why) : std::runtime_error(why) {}
};

// ---------------------------------------------------------------------------
// OMAP1 binary map format:
//   magic   "OMAP1\n"
//   header  "img_w img_h stride\n"          (ASCII decimal)
//   data    rows*cols little-endian 32-bit floats, row-major
// Round-trips byte-exactly.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_f32_le(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

inline float get_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace detail

inline std::string encode_omap(const OcclusionMap& map) {
  std::string out = "OMAP1\n";
  out += std::to_string(map.img_w) + " " + std::to_string(map.img_h) + " " +
         std::to_string(map.stride) + "\n";
  out.reserve(out.size() + map.values.size() * 4);
  for (double v : map.values) detail::put_f32_le(out, static_cast<float>(v));
  return out;
}

inline OcclusionMap decode_omap(const std::string& bytes) {
  static constexpr char kMagic[] = "OMAP1\n";
  if (bytes.size() < 6 || bytes.compare(0, 6, kMagic) != 0)
    throw FormatError("omap: bad magic, expected OMAP1");
  const std::size_t header_end = bytes.find('\n', 6);
  if (header_end == std::string::npos) throw FormatError("omap: missing header line");
  std::istringstream hs(bytes.substr(6, header_end - 6));
  int img_w = 0, img_h = 0, stride = 0;
  if (!(hs >> img_w >> img_h >> stride)) throw FormatError("omap: malformed header");
  std::string rest;
  if (hs >> rest) throw FormatError("omap: trailing header fields");
  OcclusionMap map;
  try {
    map = OcclusionMap(img_w, img_h, stride);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("omap: ") + e.what());
  }
  const std::size_t want = map.values.size() * 4;
  if (bytes.size() - header_end - 1 != want)
    throw FormatError("omap: data size mismatch, expected " + std::to_string(want) + " bytes");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + header_end + 1;
  for (std::size_t i = 0; i < map.values.size(); ++i)
    map.values[i] = static_cast<double>(detail::get_f32_le(p + i * 4));
  return map;
}

inline void save_omap(const OcclusionMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::string bytes = encode_omap(map);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline OcclusionMap load_omap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_omap(ss.str());
}

// ---------------------------------------------------------------------------
// JSON schemas (nlohmann). All numbers round-trip at full precision.
// ---------------------------------------------------------------------------

using json = nlohmann::json;

struct ImageRecord {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::vector<Annotation> annotations;
};

struct Dataset {
  std::vector<std::string> categories;  // optional names
  std::vector<ImageRecord> images;
};

namespace detail {

inline json bbox_to_json(const BBox& b) {
  return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

inline BBox bbox_from_json(const json& j, const std::string& where) {
  BBox b;
  try {
    b.x = j.at("x").get<double>();
    b.y = j.at("y").get<double>();
    b.w = j.at("w").get<double>();
    b.h = j.at("h").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
  if (!b.valid()) throw FormatError(where + ": invalid box (w,h must be > 0 and fields finite)");
  return b;
}

}  // namespace detail

inline json dataset_to_json(const Dataset& ds) {
  json images = json::array();
  for (const ImageRecord& img : ds.images) {
    json anns = json::array();
    for (const Annotation& a : img.annotations) {
      json ja = detail::bbox_to_json(a.bbox);
      ja["category"] = a.category;
      if (a.occlusion_ratio) ja["occlusion_ratio"] = *a.occlusion_ratio;
      anns.push_back(std::move(ja));
    }
    images.push_back(json{
        {"id", img.id}, {"width", img.width}, {"height", img.height}, {"annotations", anns}});
  }
  json out{{"images", images}};
  if (!ds.categories.empty()) out["categories"] = ds.categories;
  return out;
}

inline Dataset dataset_from_json(const json& j) {
  Dataset ds;
  if (j.contains("categories")) ds.categories = j.at("categories").get<std::vector<std::string>>();
  if (!j.contains("images") || !j.at("images").is_array())
    throw FormatError("dataset: missing images array");
  std::vector<std::int64_t> seen;
  for (std::size_t i = 0; i < j.at("images").size(); ++i) {
    const json& ji = j.at("images")[i];
    const std::string where = "dataset images[" + std::to_string(i) + "]";
    ImageRecord img;
    try {
      img.id = ji.at("id").get<std::int64_t>();
      img.width = ji.at("width").get<int>();
      img.height = ji.at("height").get<int>();
    } catch (const json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (img.width <= 0 || img.height <= 0) throw FormatError(where + ": dims must be positive");
    if (std::find(seen.begin(), seen.end(), img.id) != seen.end())
      throw FormatError(where + ": duplicate image id " + std::to_string(img.id));
    seen.push_back(img.id);
    if (ji.contains("annotations")) {
      for (std::size_t k = 0; k < ji.at("annotations").size(); ++k) {
        const json& ja = ji.at("annotations")[k];
        const std::string wa = where + ".annotations[" + std::to_string(k) + "]";
        Annotation a;
        a.bbox = detail::bbox_from_json(ja, wa);
        try {
          a.category = ja.at("category").get<int>();
        } catch (const json::exception& e) {
          throw FormatError(wa + ": " + e.what());
        }
        if (!ds.categories.empty() &&
            (a.category < 0 || static_cast<std::size_t>(a.category) >= ds.categories.size()))
          throw FormatError(wa + ": category " + std::to_string(a.category) +
                            " outside the declared category list");
        if (ja.contains("occlusion_ratio")) {
          const double r = ja.at("occlusion_ratio").get<double>();
          if (r < 0.0 || r > 1.0) throw FormatError(wa + ": occlusion_ratio outside [0,1]");
          a.occlusion_ratio = r;
        }
        img.annotations.push_back(std::move(a));
      }
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

inline json scene_to_json(const SceneSpec& s) {
  json objs = json::array();
  for (const SceneObject& o : s.objects) {
    json jo = detail::bbox_to_json(o.bbox);
    jo["category"] = o.category;
    jo["draw_order"] = o.draw_order;
    objs.push_back(std::move(jo));
  }
  return json{{"img_w", s.img_w}, {"img_h", s.img_h}, {"objects", objs}};
}

inline SceneSpec scene_from_json(const json& j, const std::string& where) {
  SceneSpec s;
  try {
    s.img_w = j.at("img_w").get<int>();
    s.img_h = j.at("img_h").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
  if (s.img_w <= 0 || s.img_h <= 0) throw FormatError(where + ": dims must be positive");
  if (j.contains("objects")) {
    for (std::size_t k = 0; k < j.at("objects").size(); ++k) {
      const json& jo = j.at("objects")[k];
      const std::string wo = where + ".objects[" + std::to_string(k) + "]";
      SceneObject o;
      o.bbox = detail::bbox_from_json(jo, wo);
      try {
        o.category = jo.at("category").get<int>();
        o.draw_order = jo.at("draw_order").get<int>();
      } catch (const json::exception& e) {
        throw FormatError(wo + ": " + e.what());
      }
      s.objects.push_back(o);
    }
  }
  refresh_occlusion_ratios(s);
  return s;
}

inline void save_scenes_json(const std::vector<SceneSpec>& scenes, const std::string& path) {
  json arr = json::array();
  for (const SceneSpec& s : scenes) arr.push_back(scene_to_json(s));
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << arr.dump(2) << "\n";
}

inline std::vector<SceneSpec> load_scenes_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.is_array()) throw FormatError(path + ": expected an array of scenes");
  std::vector<SceneSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(scene_from_json(j[i], path + " scene[" + std::to_string(i) + "]"));
  return out;
}

inline json detection_to_json(const Detection& d) {
  json jd = detail::bbox_to_json(d.bbox);
  jd["category"] = d.category;
  jd["score"] = d.score;
  return jd;
}

inline Detection detection_from_json(const json& j, const std::string& where) {
  Detection d;
  d.bbox = detail::bbox_from_json(j, where);
  try {
    d.category = j.at("category").get<int>();
    d.score = j.at("score").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
  if (d.score < 0.0 || d.score > 1.0) throw FormatError(where + ": score outside [0,1]");
  return d;
}

/// dets.json: one array of detections per scene, in scene order.
inline void save_detections_json(const std::vector<std::vector<Detection>>& per_scene,
                                 const std::string& path) {
  json arr = json::array();
  for (const auto& dets : per_scene) {
    json scene = json::array();
    for (const Detection& d : dets) scene.push_back(detection_to_json(d));
    arr.push_back(std::move(scene));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << arr.dump(2) << "\n";
}

inline std::vector<std::vector<Detection>> load_detections_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.is_array()) throw FormatError(path + ": expected an array of per-scene arrays");
  std::vector<std::vector<Detection>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array()) throw FormatError(path + ": scene " + std::to_string(i) + " is not an array");
    std::vector<Detection> dets;
    for (std::size_t k = 0; k < j[i].size(); ++k)
      dets.push_back(detection_from_json(j[i][k], path + " [" + std::to_string(i) + "][" +
                                                      std::to_string(k) + "]"));
    out.push_back(std::move(dets));
  }
  return out;
}

inline void save_regions_json(const std::vector<Region>& regions, const std::string& path) {
  json arr = json::array();
  for (const Region& r : regions) arr.push_back(detail::bbox_to_json(r.rect));
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << arr.dump(2) << "\n";
}

inline std::vector<Region> load_regions_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.is_array()) throw FormatError(path + ": expected an array of regions");
  std::vector<Region> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(Region{detail::bbox_from_json(j[i], path + " region[" + std::to_string(i) + "]")});
  return out;
}

inline json report_to_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"ap", opt(r.ap)},
              {"ap50", opt(r.ap50)},
              {"ap75", opt(r.ap75)},
              {"ap_s", opt(r.ap_s)},
              {"ap_m", opt(r.ap_m)},
              {"ap_l", opt(r.ap_l)},
              {"ar_s", opt(r.ar_s)},
              {"ar_m", opt(r.ar_m)},
              {"ar_l", opt(r.ar_l)},
              {"ar_occ",
               {{"none", opt(r.ar_occ_none)},
                {"partial", opt(r.ar_occ_partial)},
                {"heavy", opt(r.ar_occ_heavy)}}},
              {"objects_per_image", r.objects_per_image},
              {"overlaps_per_image", r.overlaps_per_image}};
}

inline void save_report_json(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << report_to_json(r).dump(2) << "\n";
}

inline std::string report_to_csv(const EvalReport& r) {
  std::ostringstream o;
  o.precision(17);
  auto row = [&o](const char* name, const std::optional<double>& v) {
    o << name << ",";
    if (v)
      o << *v;
    else
      o << "undefined";
    o << "\n";
  };
  o << "metric,value\n";
  row("ap", r.ap);
  row("ap50", r.ap50);
  row("ap75", r.ap75);
  row("ap_s", r.ap_s);
  row("ap_m", r.ap_m);
  row("ap_l", r.ap_l);
  row("ar_s", r.ar_s);
  row("ar_m", r.ar_m);
  row("ar_l", r.ar_l);
  row("ar_occ_none", r.ar_occ_none);
  row("ar_occ_partial", r.ar_occ_partial);
  row("ar_occ_heavy", r.ar_occ_heavy);
  row("objects_per_image", r.objects_per_image);
  row("overlaps_per_image", r.overlaps_per_image);
  return o.str();
}

// ---------------------------------------------------------------------------
// VisDrone-style txt annotations. One image per file, one object per line:
//   bbox_left,bbox_top,bbox_width,bbox_height,score,category,truncation,occlusion
// Occlusion levels {0,1,2} map to ratio bin midpoints {0.0, 0.25, 0.75}.
// See docs/formats.md for the column reference.
// ---------------------------------------------------------------------------

inline constexpr int kVisdroneMaxCategory = 11;

inline std::vector<Annotation> load_visdrone_txt(
    const std::string& path, const std::array<double, 3>& level_ratios = {0.0, 0.25, 0.75}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<Annotation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> fields;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
      if (tok.empty()) continue;  // tolerate trailing commas
      try {
        std::size_t pos = 0;
        fields.push_back(std::stod(tok, &pos));
        if (pos != tok.size() && tok.find_first_not_of(" \r\t", pos) != std::string::npos)
          throw std::invalid_argument("junk");
      } catch (...) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": non-numeric field '" + tok + "'");
      }
    }
    if (fields.size() < 8)
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected 8 fields, got " +
                        std::to_string(fields.size()));
    const BBox b{fields[0], fields[1], fields[2], fields[3]};
    if (!b.valid())
      throw FormatError(path + ":" + std::to_string(line_no) + ": invalid box (w,h must be > 0)");
    const int category = static_cast<int>(fields[5]);
    if (category < 0 || category > kVisdroneMaxCategory)
      throw FormatError(path + ":" + std::to_string(line_no) + ": unknown category id " +
                        std::to_string(category) + ", valid ids are 0.." +
                        std::to_string(kVisdroneMaxCategory));
    const int occ = static_cast<int>(fields[7]);
    if (occ < 0 || occ > 2)
      throw FormatError(path + ":" + std::to_string(line_no) + ": occlusion level must be 0, 1 or 2");
    out.push_back(Annotation{b, category, level_ratios[static_cast<std::size_t>(occ)]});
  }
  return out;
}

enum class AnnotationFormat { NativeJson, VisdroneTxt };

/// Normalized per-image annotation lists from either supported source format.
inline std::vector<std::vector<Annotation>> load_annotations(const std::string& path,
                                                             AnnotationFormat format) {
  if (format == AnnotationFormat::VisdroneTxt) return {load_visdrone_txt(path)};
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  const Dataset ds = dataset_from_json(j);
  std::vector<std::vector<Annotation>> out;
  out.reserve(ds.images.size());
  for (const ImageRecord& img : ds.images) out.push_back(img.annotations);
  return out;
}

/// Ground truth for evaluation and map generation: accepts either a native
/// dataset JSON ({"images": [...]}) or a scenes JSON (array of SceneSpec,
/// whose annotations carry derived occlusion ratios).
inline Dataset load_gt_any(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (j.is_object() && j.contains("images")) return dataset_from_json(j);
  if (j.is_array()) {
    Dataset ds;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const SceneSpec s = scene_from_json(j[i], path + " scene[" + std::to_string(i) + "]");
      ImageRecord img;
      img.id = static_cast<std::int64_t>(i);
      img.width = s.img_w;
      img.height = s.img_h;
      img.annotations = annotations_of(s);
      ds.images.push_back(std::move(img));
    }
    return ds;
  }
  throw FormatError(path + ": expected a dataset object or a scenes array");
}

}  // namespace ogd
