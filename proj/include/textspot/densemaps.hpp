#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "textspot/charset.hpp"
#include "textspot/geometry.hpp"

namespace textspot {

// Per-cell 5-parameter box encoding: distances from the cell's image point
// to the four sides of the box, measured in the box's own rotated frame,
// plus the orientation angle. Distances are in image pixels regardless of
// the map stride.
struct GeometryCode {
  double d_top = 0, d_bottom = 0, d_left = 0, d_right = 0;
  double theta = 0;

  bool is_degenerate() const {
    return d_left + d_right <= 0.0 || d_top + d_bottom <= 0.0;
  }

  // true when decode_geometry will accept this code; externally produced
  // maps can carry anything
  bool is_decodable() const {
    return std::isfinite(d_top) && std::isfinite(d_bottom) && std::isfinite(d_left) &&
           std::isfinite(d_right) && std::isfinite(theta) && d_top >= 0 && d_bottom >= 0 &&
           d_left >= 0 && d_right >= 0 && !is_degenerate();
  }
};

// Image point of a map cell's center.
inline Point map_cell_to_image_point(int mx, int my, int stride) {
  if (mx < 0 || my < 0 || stride < 1) {
    throw std::out_of_range("map_cell_to_image_point: negative index or stride < 1");
  }
  double s = static_cast<double>(stride);
  return {s * (mx + 0.5), s * (my + 0.5)};
}

// The box whose sides lie at the coded distances from p. Inverse of
// encode_geometry.
inline RotatedBox decode_geometry(const Point& p, const GeometryCode& g) {
  if (g.d_top < 0 || g.d_bottom < 0 || g.d_left < 0 || g.d_right < 0) {
    throw std::invalid_argument("decode_geometry: negative side distance");
  }
  double w = g.d_left + g.d_right;
  double h = g.d_top + g.d_bottom;
  if (w <= 0.0 || h <= 0.0) {
    throw std::invalid_argument("decode_geometry: degenerate (zero-extent) code");
  }
  // center offset from p in the box frame; +x = width axis, +y = downward
  Point local{(g.d_right - g.d_left) / 2, (g.d_bottom - g.d_top) / 2};
  Point center = p + rotated(local, g.theta);
  return RotatedBox(center, w, h, g.theta);
}

inline GeometryCode encode_geometry(const Point& p, const RotatedBox& b) {
  Point q = rotated(p - b.center, -b.theta);
  double hw = b.width / 2, hh = b.height / 2;
  GeometryCode g;
  g.d_left = q.x + hw;
  g.d_right = hw - q.x;
  g.d_top = q.y + hh;
  g.d_bottom = hh - q.y;
  g.theta = b.theta;
  if (g.d_left <= 0 || g.d_right <= 0 || g.d_top <= 0 || g.d_bottom <= 0) {
    throw std::invalid_argument("encode_geometry: point not strictly inside box");
  }
  return g;
}

// A labelled ground-truth character box.
struct CharBoxLabel {
  RotatedBox box;
  int class_id = 0;
};

// One word/line annotation: the instance shape, its transcript, and
// (optionally) per-character boxes. "###" regions carry dont_care.
struct SceneInstance {
  Shape shape;
  std::string transcript;
  bool dont_care = false;
  std::optional<std::vector<CharBoxLabel>> chars;

  // Oriented-rectangle stand-in: the shape itself for boxes, the
  // PCA-aligned enclosing box for polygons. This is what the 5-parameter
  // geometry planes encode.
  RotatedBox bounding_box() const { return enclosing_box(shape); }
};

struct SceneAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<SceneInstance> instances;

  // Throws with the offending instance index on invariant violations.
  void validate(const Charset& charset) const {
    if (width <= 0 || height <= 0) {
      throw std::invalid_argument("SceneAnnotation: image size must be positive");
    }
    for (size_t i = 0; i < instances.size(); ++i) {
      const SceneInstance& inst = instances[i];
      if (inst.dont_care || !inst.chars.has_value()) continue;
      size_t want = charset.normalize(inst.transcript).length();
      if (inst.chars->size() != want) {
        throw std::invalid_argument("instances[" + std::to_string(i) + "]: " +
                                    std::to_string(inst.chars->size()) +
                                    " char boxes but normalized transcript length " +
                                    std::to_string(want));
      }
    }
  }
};

// The 2+5+2+5+68 per-cell prediction planes at 1/stride resolution.
// Segmentation planes are (background, text) probabilities; geometry planes
// follow GeometryCode channel order (d_top, d_bottom, d_left, d_right,
// theta); char_cls holds the 68-way class distribution.
struct DenseMapStack {
  int stride = 4;
  int height = 0;
  int width = 0;
  std::vector<float> det_seg;   // 2 channels
  std::vector<float> det_geo;   // 5 channels
  std::vector<float> char_seg;  // 2 channels
  std::vector<float> char_geo;  // 5 channels
  std::vector<float> char_cls;  // 68 channels

  static constexpr int kTotalChannels = 2 + 5 + 2 + 5 + 68;

  static DenseMapStack zeros(int height, int width, int stride = 4) {
    if (height <= 0 || width <= 0 || stride < 1) {
      throw std::invalid_argument("DenseMapStack: bad dimensions");
    }
    DenseMapStack m;
    m.stride = stride;
    m.height = height;
    m.width = width;
    size_t hw = m.cell_count();
    m.det_seg.assign(2 * hw, 0.0f);
    m.det_geo.assign(5 * hw, 0.0f);
    m.char_seg.assign(2 * hw, 0.0f);
    m.char_geo.assign(5 * hw, 0.0f);
    m.char_cls.assign(68 * hw, 0.0f);
    return m;
  }

  size_t cell_count() const {
    return static_cast<size_t>(height) * static_cast<size_t>(width);
  }

  size_t idx(int c, int y, int x) const {
    return (static_cast<size_t>(c) * height + static_cast<size_t>(y)) * width +
           static_cast<size_t>(x);
  }

  Point cell_center(int mx, int my) const {
    if (mx < 0 || mx >= width || my < 0 || my >= height) {
      throw std::out_of_range("cell_center: cell index out of range");
    }
    return map_cell_to_image_point(mx, my, stride);
  }

  GeometryCode geometry_at(const std::vector<float>& geo, int y, int x) const {
    GeometryCode g;
    g.d_top = geo[idx(0, y, x)];
    g.d_bottom = geo[idx(1, y, x)];
    g.d_left = geo[idx(2, y, x)];
    g.d_right = geo[idx(3, y, x)];
    g.theta = geo[idx(4, y, x)];
    return g;
  }

  void set_geometry(std::vector<float>& geo, int y, int x, const GeometryCode& g) {
    geo[idx(0, y, x)] = static_cast<float>(g.d_top);
    geo[idx(1, y, x)] = static_cast<float>(g.d_bottom);
    geo[idx(2, y, x)] = static_cast<float>(g.d_left);
    geo[idx(3, y, x)] = static_cast<float>(g.d_right);
    geo[idx(4, y, x)] = static_cast<float>(g.theta);
  }

  // Checks plane sizes, probability ranges, and that each softmax group
  // sums to 1 within 1e-5. Encoder output and well-formed external stacks
  // satisfy this; decoding does not require it.
  void validate() const {
    size_t hw = cell_count();
    if (det_seg.size() != 2 * hw || det_geo.size() != 5 * hw || char_seg.size() != 2 * hw ||
        char_geo.size() != 5 * hw || char_cls.size() != 68 * hw) {
      throw std::invalid_argument("DenseMapStack: plane size mismatch");
    }
    auto check_group = [&](const std::vector<float>& plane, int channels, const char* name) {
      for (size_t cell = 0; cell < hw; ++cell) {
        float sum = 0.0f;
        for (int c = 0; c < channels; ++c) {
          float v = plane[static_cast<size_t>(c) * hw + cell];
          if (v < -1e-6f || v > 1.0f + 1e-6f) {
            throw std::invalid_argument(std::string(name) + ": probability out of [0,1]");
          }
          sum += v;
        }
        if (std::abs(sum - 1.0f) > 1e-5f) {
          throw std::invalid_argument(std::string(name) + ": softmax group does not sum to 1");
        }
      }
    };
    check_group(det_seg, 2, "det_seg");
    check_group(char_seg, 2, "char_seg");
    check_group(char_cls, 68, "char_cls");
  }
};

// Ground-truth encoding of a scene plus the dont_care ignore mask (1 marks
// cells inside a dont_care region, which carry no supervision).
struct EncodedScene {
  DenseMapStack stack;
  std::vector<uint8_t> ignore;  // height * width
};

namespace detail {

inline Shape shrunk_shape(const Shape& s, double shrink) {
  double f = std::max(1.0 - 2.0 * shrink, 1e-3);
  if (const auto* b = std::get_if<RotatedBox>(&s)) return scaled(*b, f);
  return scaled(std::get<Polygon>(s), f);
}

inline bool strictly_inside(const RotatedBox& b, const Point& p) {
  Point q = rotated(p - b.center, -b.theta);
  return std::abs(q.x) < b.width / 2 && std::abs(q.y) < b.height / 2;
}

// Visit every cell whose center lies inside `region`, restricted to the
// region's bounding rectangle of cells.
template <typename Fn>
inline void for_cells_inside(const Shape& region, int map_w, int map_h, int stride, Fn&& fn) {
  Aabb bb = aabb_of(region);
  int x0 = std::max(0, static_cast<int>(std::floor(bb.min_x / stride - 0.5)));
  int y0 = std::max(0, static_cast<int>(std::floor(bb.min_y / stride - 0.5)));
  int x1 = std::min(map_w - 1, static_cast<int>(std::ceil(bb.max_x / stride)));
  int y1 = std::min(map_h - 1, static_cast<int>(std::ceil(bb.max_y / stride)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      Point p = map_cell_to_image_point(x, y, stride);
      if (shape_contains(region, p)) fn(x, y, p);
    }
  }
}

}  // namespace detail

// Rasterize ground truth into the map stack: cells inside a shrunken
// instance shape become detection positives carrying that instance's box
// code; cells inside a shrunken character box become character positives
// carrying the char box code and a one-hot label. When positive regions of
// two instances (or two chars) overlap, the cell goes to the smaller-area
// one so small characters are not swallowed by surrounding geometry.
// Background cells get (1,0) segmentation and a uniform class distribution
// so every softmax group sums to 1.
inline EncodedScene encode_ground_truth(const SceneAnnotation& ann, const Charset& charset,
                                        int stride = 4, double shrink = 0.3) {
  ann.validate(charset);
  for (const SceneInstance& inst : ann.instances) {
    if (!inst.dont_care && !inst.chars.has_value()) {
      throw std::invalid_argument("encode_ground_truth: instance '" + inst.transcript +
                                  "' has no char boxes");
    }
  }
  int map_w = (ann.width + stride - 1) / stride;
  int map_h = (ann.height + stride - 1) / stride;
  EncodedScene out;
  out.stack = DenseMapStack::zeros(map_h, map_w, stride);
  out.ignore.assign(out.stack.cell_count(), 0);
  DenseMapStack& m = out.stack;
  size_t hw = m.cell_count();

  // background defaults
  std::fill(m.det_seg.begin(), m.det_seg.begin() + static_cast<std::ptrdiff_t>(hw), 1.0f);
  std::fill(m.char_seg.begin(), m.char_seg.begin() + static_cast<std::ptrdiff_t>(hw), 1.0f);
  std::fill(m.char_cls.begin(), m.char_cls.end(), 1.0f / Charset::kNumClasses);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> det_owner_area(hw, kInf);
  std::vector<double> char_owner_area(hw, kInf);

  for (const SceneInstance& inst : ann.instances) {
    if (inst.dont_care) {
      detail::for_cells_inside(inst.shape, map_w, map_h, stride,
                               [&](int x, int y, const Point&) {
                                 out.ignore[static_cast<size_t>(y) * map_w + x] = 1;
                               });
      continue;
    }
    RotatedBox inst_box = inst.bounding_box();
    double inst_area = area(inst.shape);
    detail::for_cells_inside(detail::shrunk_shape(inst.shape, shrink), map_w, map_h, stride,
                             [&](int x, int y, const Point& p) {
                               size_t cell = static_cast<size_t>(y) * map_w + x;
                               if (inst_area >= det_owner_area[cell]) return;
                               if (!detail::strictly_inside(inst_box, p)) return;
                               det_owner_area[cell] = inst_area;
                               m.det_seg[cell] = 0.0f;
                               m.det_seg[hw + cell] = 1.0f;
                               m.set_geometry(m.det_geo, y, x, encode_geometry(p, inst_box));
                             });
    for (const CharBoxLabel& ch : *inst.chars) {
      double ch_area = ch.box.area();
      detail::for_cells_inside(Shape(scaled(ch.box, std::max(1.0 - 2.0 * shrink, 1e-3))),
                               map_w, map_h, stride, [&](int x, int y, const Point& p) {
                                 size_t cell = static_cast<size_t>(y) * map_w + x;
                                 if (ch_area >= char_owner_area[cell]) return;
                                 if (!detail::strictly_inside(ch.box, p)) return;
                                 char_owner_area[cell] = ch_area;
                                 m.char_seg[cell] = 0.0f;
                                 m.char_seg[hw + cell] = 1.0f;
                                 m.set_geometry(m.char_geo, y, x, encode_geometry(p, ch.box));
                                 for (int c = 0; c < Charset::kNumClasses; ++c) {
                                   m.char_cls[static_cast<size_t>(c) * hw + cell] =
                                       (c == ch.class_id) ? 1.0f : 0.0f;
                                 }
                               });
    }
  }
  return out;
}

// A gated word-box candidate.
struct ScoredBox {
  RotatedBox box;
  double score = 0.0;
};

// A gated character candidate with its class distribution.
struct CharDetection {
  RotatedBox box;
  double score = 0.0;
  int label = 0;
  std::array<float, Charset::kNumClasses> class_scores{};
};

// One candidate per cell whose text probability exceeds the gate
// (strictly), in row-major cell order. Cells carrying no usable geometry
// are skipped.
inline std::vector<ScoredBox> decode_word_candidates(const DenseMapStack& m,
                                                     double threshold = 0.95) {
  std::vector<ScoredBox> out;
  size_t hw = m.cell_count();
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      size_t cell = static_cast<size_t>(y) * m.width + x;
      double p = m.det_seg[hw + cell];
      if (!(p > threshold)) continue;
      GeometryCode g = m.geometry_at(m.det_geo, y, x);
      if (!g.is_decodable()) continue;
      out.push_back({decode_geometry(m.cell_center(x, y), g), p});
    }
  }
  return out;
}

inline std::vector<CharDetection> decode_char_candidates(const DenseMapStack& m,
                                                         double threshold = 0.95) {
  std::vector<CharDetection> out;
  size_t hw = m.cell_count();
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      size_t cell = static_cast<size_t>(y) * m.width + x;
      double p = m.char_seg[hw + cell];
      if (!(p > threshold)) continue;
      GeometryCode g = m.geometry_at(m.char_geo, y, x);
      if (!g.is_decodable()) continue;
      CharDetection det;
      det.box = decode_geometry(m.cell_center(x, y), g);
      det.score = p;
      int best = 0;
      for (int c = 0; c < Charset::kNumClasses; ++c) {
        float v = m.char_cls[static_cast<size_t>(c) * hw + cell];
        det.class_scores[static_cast<size_t>(c)] = v;
        if (v > det.class_scores[static_cast<size_t>(best)]) best = c;
      }
      det.label = best;
      out.push_back(std::move(det));
    }
  }
  return out;
}

}  // namespace textspot
