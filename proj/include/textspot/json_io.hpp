#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "textspot/densemaps.hpp"
#include "textspot/eval.hpp"
#include "textspot/io_error.hpp"
#include "textspot/pipeline.hpp"
#include "textspot/postprocess.hpp"

namespace textspot {

using json = nlohmann::json;

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw IoError(IoError::Kind::Schema, path + ": missing field '" + key + "'");
  }
  return j.at(key);
}

inline double number_at(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) {
    throw IoError(IoError::Kind::Schema, path + "." + key + ": expected a number");
  }
  return v.get<double>();
}

inline std::string string_at(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string()) {
    throw IoError(IoError::Kind::Schema, path + "." + key + ": expected a string");
  }
  return v.get<std::string>();
}

}  // namespace detail

// --- shapes ---------------------------------------------------------------

inline json box_to_json(const RotatedBox& b) {
  return json{{"cx", b.center.x}, {"cy", b.center.y}, {"w", b.width}, {"h", b.height},
              {"theta", b.theta}};
}

inline RotatedBox box_from_json(const json& j, const std::string& path) {
  double w = detail::number_at(j, "w", path);
  double h = detail::number_at(j, "h", path);
  if (!(w > 0) || !(h > 0)) {
    throw IoError(IoError::Kind::Schema, path + ": box extents must be positive");
  }
  return RotatedBox({detail::number_at(j, "cx", path), detail::number_at(j, "cy", path)}, w, h,
                    detail::number_at(j, "theta", path));
}

inline json shape_to_json(const Shape& s) {
  if (const auto* b = std::get_if<RotatedBox>(&s)) return json{{"box", box_to_json(*b)}};
  json pts = json::array();
  for (const Point& p : std::get<Polygon>(s).vertices()) pts.push_back(json::array({p.x, p.y}));
  return json{{"polygon", pts}};
}

inline Shape shape_from_json(const json& j, const std::string& path) {
  if (j.contains("box")) return box_from_json(j.at("box"), path + ".box");
  if (j.contains("polygon")) {
    const json& pts = j.at("polygon");
    if (!pts.is_array() || pts.size() < 3) {
      throw IoError(IoError::Kind::Schema, path + ".polygon: need an array of >= 3 points");
    }
    std::vector<Point> v;
    v.reserve(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
      const json& p = pts.at(i);
      if (!p.is_array() || p.size() != 2 || !p.at(0).is_number() || !p.at(1).is_number()) {
        throw IoError(IoError::Kind::Schema,
                      path + ".polygon[" + std::to_string(i) + "]: expected [x, y]");
      }
      v.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    return Polygon(std::move(v));
  }
  throw IoError(IoError::Kind::Schema, path + ": need either 'box' or 'polygon'");
}

// --- annotations ----------------------------------------------------------

inline json annotation_to_json(const SceneAnnotation& ann) {
  json instances = json::array();
  for (const SceneInstance& inst : ann.instances) {
    json ji{{"shape", shape_to_json(inst.shape)},
            {"transcript", inst.transcript},
            {"dont_care", inst.dont_care}};
    if (inst.chars.has_value()) {
      json chars = json::array();
      for (const CharBoxLabel& c : *inst.chars) {
        chars.push_back(json{{"box", box_to_json(c.box)}, {"class_id", c.class_id}});
      }
      ji["chars"] = std::move(chars);
    }
    instances.push_back(std::move(ji));
  }
  return json{{"image_id", ann.image_id},
              {"width", ann.width},
              {"height", ann.height},
              {"instances", instances}};
}

inline SceneAnnotation annotation_from_json(const json& j, const Charset& charset) {
  const std::string root = "$";
  SceneAnnotation ann;
  ann.image_id = detail::string_at(j, "image_id", root);
  ann.width = static_cast<int>(detail::number_at(j, "width", root));
  ann.height = static_cast<int>(detail::number_at(j, "height", root));
  const json& instances = detail::require(j, "instances", root);
  if (!instances.is_array()) {
    throw IoError(IoError::Kind::Schema, "$.instances: expected an array");
  }
  for (size_t i = 0; i < instances.size(); ++i) {
    std::string path = "$.instances[" + std::to_string(i) + "]";
    const json& ji = instances.at(i);
    SceneInstance inst;
    inst.shape = shape_from_json(detail::require(ji, "shape", path), path + ".shape");
    inst.transcript = detail::string_at(ji, "transcript", path);
    inst.dont_care = ji.value("dont_care", false);
    if (ji.contains("chars")) {
      const json& chars = ji.at("chars");
      if (!chars.is_array()) {
        throw IoError(IoError::Kind::Schema, path + ".chars: expected an array");
      }
      std::vector<CharBoxLabel> parsed;
      parsed.reserve(chars.size());
      for (size_t c = 0; c < chars.size(); ++c) {
        std::string cpath = path + ".chars[" + std::to_string(c) + "]";
        const json& jc = chars.at(c);
        int class_id = static_cast<int>(detail::number_at(jc, "class_id", cpath));
        if (class_id < 0 || class_id >= Charset::kNumClasses) {
          throw IoError(IoError::Kind::Schema, cpath + ".class_id: outside [0,68)");
        }
        parsed.push_back({box_from_json(detail::require(jc, "box", cpath), cpath + ".box"),
                          class_id});
      }
      inst.chars = std::move(parsed);
      if (!inst.dont_care) {
        size_t want = charset.normalize(inst.transcript).length();
        if (inst.chars->size() != want) {
          throw IoError(IoError::Kind::Schema,
                        path + ": " + std::to_string(inst.chars->size()) +
                            " char boxes but normalized transcript length " +
                            std::to_string(want));
        }
      }
    }
    ann.instances.push_back(std::move(inst));
  }
  return ann;
}

inline json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::MissingFile, "cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(IoError::Kind::Schema, path.string() + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::MissingFile, "cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

inline SceneAnnotation read_annotation(const std::filesystem::path& path, const Charset& charset) {
  try {
    return annotation_from_json(parse_json_file(path), charset);
  } catch (const IoError& e) {
    if (e.kind() == IoError::Kind::Schema) {
      throw IoError(IoError::Kind::Schema, path.string() + ": " + e.what());
    }
    throw;
  }
}

inline void write_annotation(const std::filesystem::path& path, const SceneAnnotation& ann) {
  write_json_file(path, annotation_to_json(ann));
}

// --- detections / instances ----------------------------------------------

inline json char_detection_to_json(const CharDetection& c, const Charset& charset) {
  return json{{"box", box_to_json(c.box)},
              {"score", c.score},
              {"label", c.label},
              {"symbol", std::string(1, charset.symbol_of(c.label))}};
}

inline json detections_to_json(const std::string& image_id, const std::vector<ScoredBox>& words,
                               const std::vector<CharDetection>& chars, const Charset& charset) {
  json jw = json::array();
  for (const ScoredBox& w : words) jw.push_back(json{{"box", box_to_json(w.box)}, {"score", w.score}});
  json jc = json::array();
  for (const CharDetection& c : chars) jc.push_back(char_detection_to_json(c, charset));
  return json{{"image_id", image_id}, {"words", jw}, {"chars", jc}};
}

inline json instances_to_json(const std::string& image_id,
                              const std::vector<TextInstance>& instances, const Charset& charset) {
  json arr = json::array();
  for (const TextInstance& t : instances) {
    json ji{{"shape", shape_to_json(t.shape)},
            {"score", t.score},
            {"transcription", t.transcription}};
    if (t.corrected.has_value()) ji["corrected"] = *t.corrected;
    json chars = json::array();
    for (const CharDetection& c : t.chars) chars.push_back(char_detection_to_json(c, charset));
    ji["chars"] = std::move(chars);
    arr.push_back(std::move(ji));
  }
  return json{{"image_id", image_id}, {"instances", arr}};
}

struct PredictedImage {
  std::string image_id;
  std::vector<TextInstance> instances;
};

inline PredictedImage instances_from_json(const json& j) {
  PredictedImage out;
  out.image_id = detail::string_at(j, "image_id", "$");
  const json& arr = detail::require(j, "instances", "$");
  if (!arr.is_array()) throw IoError(IoError::Kind::Schema, "$.instances: expected an array");
  for (size_t i = 0; i < arr.size(); ++i) {
    std::string path = "$.instances[" + std::to_string(i) + "]";
    const json& ji = arr.at(i);
    TextInstance t;
    t.shape = shape_from_json(detail::require(ji, "shape", path), path + ".shape");
    t.score = ji.value("score", 1.0);
    t.transcription = detail::string_at(ji, "transcription", path);
    if (ji.contains("corrected")) t.corrected = ji.at("corrected").get<std::string>();
    out.instances.push_back(std::move(t));
  }
  return out;
}

// --- lexicons ---------------------------------------------------------

inline LexiconSet read_lexicon(const std::filesystem::path& path, LexiconMode mode) {
  json j = parse_json_file(path);
  LexiconSet lex;
  lex.mode = mode;
  auto words_of = [&](const json& arr, const std::string& where) {
    if (!arr.is_array()) throw IoError(IoError::Kind::Schema, where + ": expected an array");
    std::vector<std::string> out;
    for (const json& w : arr) {
      if (!w.is_string()) throw IoError(IoError::Kind::Schema, where + ": expected strings");
      out.push_back(w.get<std::string>());
    }
    return LexiconSet::folded(out);
  };
  if (j.contains("generic")) lex.generic = words_of(j.at("generic"), "$.generic");
  if (j.contains("weak")) lex.weak = words_of(j.at("weak"), "$.weak");
  if (j.contains("strong")) {
    const json& s = j.at("strong");
    if (!s.is_object()) throw IoError(IoError::Kind::Schema, "$.strong: expected an object");
    for (auto it = s.begin(); it != s.end(); ++it) {
      lex.strong[it.key()] = words_of(it.value(), "$.strong." + it.key());
    }
  }
  return lex;
}

// --- pipeline config --------------------------------------------------

inline json config_to_json(const PipelineConfig& cfg) {
  return json{{"stride", cfg.stride},
              {"word_gate", cfg.word_gate},
              {"char_gate", cfg.char_gate},
              {"nms_iou", cfg.nms_iou},
              {"shrink", cfg.shrink},
              {"charset", cfg.charset_symbols},
              {"lexicon_path", cfg.lexicon_path},
              {"seed", cfg.seed}};
}

inline PipelineConfig read_config(const std::filesystem::path& path) {
  json j = parse_json_file(path);
  PipelineConfig cfg;
  cfg.stride = static_cast<int>(j.value("stride", 4.0));
  cfg.word_gate = j.value("word_gate", 0.95);
  cfg.char_gate = j.value("char_gate", 0.95);
  cfg.nms_iou = j.value("nms_iou", 0.5);
  cfg.shrink = j.value("shrink", 0.3);
  cfg.charset_symbols = j.value("charset", std::string(Charset::default_symbols()));
  cfg.lexicon_path = j.value("lexicon_path", std::string());
  cfg.seed = j.value("seed", uint64_t{0});
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw IoError(IoError::Kind::Schema, path.string() + ": " + e.what());
  }
  return cfg;
}

inline void write_config(const std::filesystem::path& path, const PipelineConfig& cfg) {
  write_json_file(path, config_to_json(cfg));
}

// --- score reports ----------------------------------------------------

inline json report_to_json(const MatchReport& rep) {
  return json{{"tp", rep.tp},
              {"fp", rep.fp},
              {"fn", rep.fn},
              {"ignored_preds", rep.ignored_preds},
              {"recall", rep.recall},
              {"precision", rep.precision},
              {"f_measure", rep.f_measure}};
}

}  // namespace textspot
