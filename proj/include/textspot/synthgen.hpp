#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "textspot/charset.hpp"
#include "textspot/densemaps.hpp"
#include "textspot/geometry.hpp"
#include "textspot/postprocess.hpp"
#include "textspot/rng.hpp"

namespace textspot {

// Geometric ground-truth generator: random word layouts with per-character
// boxes, straight or along circular arcs. No rasterization happens; the
// pipeline consumes annotations and map stacks, not pixels.
struct SynthConfig {
  int image_width = 1024;
  int image_height = 1024;
  int min_instances = 3;
  int max_instances = 10;
  int min_word_len = 1;
  int max_word_len = 8;
  double min_rotation = -kPi / 2;   // exclusive
  double max_rotation = kPi / 2;    // inclusive
  double min_char_size = 20.0;
  double max_char_size = 44.0;
  double curved_fraction = 0.2;
  double dont_care_fraction = 0.1;
  int max_place_retries = 100;
  uint64_t seed = 0;

  void validate() const {
    if (image_width <= 0 || image_height <= 0) throw std::invalid_argument("SynthConfig: bad image size");
    if (min_instances < 0 || max_instances < min_instances) throw std::invalid_argument("SynthConfig: bad instance range");
    if (min_word_len < 1 || max_word_len < min_word_len) throw std::invalid_argument("SynthConfig: bad word length range");
    if (min_char_size <= 0 || max_char_size < min_char_size) throw std::invalid_argument("SynthConfig: bad char size range");
    if (curved_fraction < 0 || curved_fraction > 1) throw std::invalid_argument("SynthConfig: curved_fraction outside [0,1]");
    if (dont_care_fraction < 0 || dont_care_fraction > 1) throw std::invalid_argument("SynthConfig: dont_care_fraction outside [0,1]");
  }
};

struct SynthResult {
  SceneAnnotation scene;
  int placement_failures = 0;  // instances dropped after bounded retries
};

namespace detail {

// char box extents relative to the nominal character cell size
constexpr double kCharBoxW = 0.84;
constexpr double kCharBoxH = 0.94;
constexpr double kLineHeight = 1.15;   // word box height / char size
constexpr double kWordPad = 0.3;       // extra word box width, in char sizes
constexpr double kPlacePad = 0.5;      // inter-instance clearance, in char sizes

struct BuiltInstance {
  SceneInstance inst;
  RotatedBox clearance;  // inflated enclosing box used for disjointness
};

inline std::string random_word(Rng& rng, const Charset& cs, int len) {
  std::string w;
  w.reserve(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i) w.push_back(cs.symbol_of(rng.uniform_int(0, 35)));  // letters+digits
  return w;
}

// Pair transcript symbols with boxes in reading order: if the stored box
// order runs against the axis the pipeline will read along, flip it first.
inline std::vector<CharBoxLabel> label_boxes(std::vector<RotatedBox> boxes,
                                             const Shape& shape, std::string_view transcript,
                                             const Charset& cs) {
  if (boxes.size() > 1) {
    std::vector<Point> centers;
    centers.reserve(boxes.size());
    for (const RotatedBox& b : boxes) centers.push_back(b.center);
    Point axis = reading_axis(shape, centers);
    if (dot(centers.front(), axis) > dot(centers.back(), axis)) {
      std::reverse(boxes.begin(), boxes.end());
    }
  }
  std::vector<CharBoxLabel> chars;
  chars.reserve(boxes.size());
  for (size_t i = 0; i < boxes.size(); ++i) {
    chars.push_back({boxes[i], *cs.class_of(static_cast<char32_t>(
                                   static_cast<unsigned char>(transcript[i])))});
  }
  return chars;
}

// Straight word: character cells at pitch `s` along the width axis.
inline BuiltInstance build_straight(Rng& rng, const Charset& cs, double s, int len,
                                    double theta, Point center, bool dont_care) {
  double word_w = len * s + kWordPad * s;
  double word_h = kLineHeight * s;
  RotatedBox word(center, word_w, word_h, theta);
  Point axis = word.axis();
  BuiltInstance out;
  out.inst.shape = word;
  out.inst.dont_care = dont_care;
  if (dont_care) {
    out.inst.transcript = "###";
  } else {
    out.inst.transcript = random_word(rng, cs, len);
    std::vector<RotatedBox> boxes;
    boxes.reserve(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) {
      double offset = (i + 0.5) * s - len * s / 2.0;
      boxes.emplace_back(center + axis * offset, kCharBoxW * s, kCharBoxH * s, theta);
    }
    out.inst.chars = label_boxes(std::move(boxes), out.inst.shape, out.inst.transcript, cs);
  }
  out.clearance = RotatedBox(center, word_w + 2 * kPlacePad * s, word_h + 2 * kPlacePad * s, theta);
  return out;
}

// Curved word: an annular strip along a circular arc, characters rotated to
// the local tangent. The arc span stays below 1.0 rad so character order is
// monotone along the chord and the enclosing box keeps IoU >= ~0.6 with
// the strip.
inline BuiltInstance build_curved(Rng& rng, const Charset& cs, double s, int len,
                                  Point mid_point, bool dont_care) {
  double span = rng.uniform(0.5, 1.0);
  double radius = len * s / span;  // mid-arc length == len * pitch
  double half_th = 0.5 * kLineHeight * s;
  double base = rng.uniform(0.0, 2 * kPi);
  Point to_mid{std::cos(base), std::sin(base)};
  Point arc_center = mid_point - to_mid * radius;

  auto at = [&](double t, double r) -> Point {
    return arc_center + Point{std::cos(t), std::sin(t)} * r;
  };

  int segs = std::max(4, static_cast<int>(std::ceil(span / 0.12)));
  std::vector<Point> poly;
  poly.reserve(2 * static_cast<size_t>(segs) + 2);
  for (int i = 0; i <= segs; ++i) {
    double t = base - span / 2 + span * i / segs;
    poly.push_back(at(t, radius + half_th));
  }
  for (int i = segs; i >= 0; --i) {
    double t = base - span / 2 + span * i / segs;
    poly.push_back(at(t, radius - half_th));
  }
  Polygon strip(std::move(poly));

  BuiltInstance out;
  out.inst.shape = strip;
  out.inst.dont_care = dont_care;
  if (dont_care) {
    out.inst.transcript = "###";
  } else {
    out.inst.transcript = random_word(rng, cs, len);
    std::vector<RotatedBox> boxes;
    boxes.reserve(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) {
      double t = base + span * ((i + 0.5) / len - 0.5);
      boxes.emplace_back(at(t, radius), kCharBoxW * s, kCharBoxH * s,
                         normalize_angle(t + kPi / 2));
    }
    out.inst.chars = label_boxes(std::move(boxes), out.inst.shape, out.inst.transcript, cs);
  }
  RotatedBox enc = enclosing_box(out.inst.shape);
  out.clearance = RotatedBox(enc.center, enc.width + 2 * kPlacePad * s,
                             enc.height + 2 * kPlacePad * s, enc.theta);
  return out;
}

inline bool inside_image(const RotatedBox& b, int w, int h) {
  for (const Point& p : b.corners()) {
    if (p.x < 1.0 || p.y < 1.0 || p.x > w - 1.0 || p.y > h - 1.0) return false;
  }
  return true;
}

}  // namespace detail

// Deterministic given (cfg, scene_index): the same inputs always produce
// the same annotation. Instances are pairwise disjoint by rejection
// sampling; an instance that cannot be placed within the retry budget is
// dropped and counted.
inline SynthResult generate_scene(const SynthConfig& cfg, size_t scene_index = 0,
                                  const Charset& charset = Charset()) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, scene_index));
  SynthResult out;
  char idbuf[32];
  std::snprintf(idbuf, sizeof(idbuf), "scene_%06zu", scene_index);
  out.scene.image_id = idbuf;
  out.scene.width = cfg.image_width;
  out.scene.height = cfg.image_height;

  int want = rng.uniform_int(cfg.min_instances, cfg.max_instances);
  std::vector<RotatedBox> placed;
  for (int i = 0; i < want; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < cfg.max_place_retries && !ok; ++attempt) {
      double s = rng.uniform(cfg.min_char_size, cfg.max_char_size);
      int len = rng.uniform_int(cfg.min_word_len, cfg.max_word_len);
      // keep the word inside the image even at full length
      double max_s = 0.7 * std::min(cfg.image_width, cfg.image_height) / std::max(1, len);
      s = std::min(s, std::max(max_s, 4.0));
      bool dont_care = rng.bernoulli(cfg.dont_care_fraction);
      bool curved = len >= 3 && rng.bernoulli(cfg.curved_fraction);
      double margin = 0.1 * std::min(cfg.image_width, cfg.image_height);
      Point center{rng.uniform(margin, cfg.image_width - margin),
                   rng.uniform(margin, cfg.image_height - margin)};
      // rotation drawn from (min, max]
      double theta = cfg.max_rotation - (cfg.max_rotation - cfg.min_rotation) * rng.next_double();
      detail::BuiltInstance built =
          curved ? detail::build_curved(rng, charset, s, len, center, dont_care)
                 : detail::build_straight(rng, charset, s, len, theta, center, dont_care);
      if (!detail::inside_image(built.clearance, cfg.image_width, cfg.image_height)) continue;
      bool clear = true;
      for (const RotatedBox& other : placed) {
        if (intersection_area(built.clearance, other) > 0.0) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      placed.push_back(built.clearance);
      out.scene.instances.push_back(std::move(built.inst));
      ok = true;
    }
    if (!ok) ++out.placement_failures;
  }
  return out;
}

inline std::vector<SynthResult> generate_corpus(const SynthConfig& cfg, size_t n,
                                                const Charset& charset = Charset()) {
  std::vector<SynthResult> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(generate_scene(cfg, i, charset));
  return out;
}

}  // namespace textspot
