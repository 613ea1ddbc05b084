#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "textspot/charset.hpp"
#include "textspot/densemaps.hpp"
#include "textspot/editdist.hpp"
#include "textspot/geometry.hpp"

namespace textspot {

// Greedy highest-score-first suppression. Ties break toward the earlier
// input index, so the result is deterministic. Works on anything with
// `.box` (RotatedBox) and `.score` members.
template <typename T>
std::vector<T> nms(const std::vector<T>& candidates, double iou_threshold = 0.5) {
  std::vector<size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return candidates[a].score > candidates[b].score;
  });
  std::vector<T> kept;
  std::vector<Aabb> kept_bounds;
  for (size_t i : order) {
    const T& cand = candidates[i];
    Aabb bb = aabb_of(cand.box);
    bool suppressed = false;
    for (size_t k = 0; k < kept.size(); ++k) {
      if (!bb.overlaps(kept_bounds[k])) continue;
      if (iou(cand.box, kept[k].box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(cand);
      kept_bounds.push_back(bb);
    }
  }
  return kept;
}

// A word/line with its grouped characters and assembled transcription.
struct TextInstance {
  Shape shape;
  double score = 0.0;
  std::vector<CharDetection> chars;
  std::string transcription;
  std::optional<std::string> corrected;
};

struct ScoredShape {
  Shape shape;
  double score = 0.0;
};

struct GroupResult {
  std::vector<TextInstance> instances;
  int dropped_chars = 0;  // characters overlapping no instance
};

// Assign each character to the overlapping instance with maximum IoU
// (strictly positive). Characters overlapping nothing are dropped and
// counted; instances may end up with zero characters.
inline GroupResult group_characters(std::span<const ScoredShape> instances,
                                    std::span<const CharDetection> chars) {
  GroupResult out;
  out.instances.reserve(instances.size());
  std::vector<Aabb> bounds;
  bounds.reserve(instances.size());
  for (const ScoredShape& s : instances) {
    out.instances.push_back(TextInstance{s.shape, s.score, {}, {}, std::nullopt});
    bounds.push_back(aabb_of(s.shape));
  }
  for (const CharDetection& ch : chars) {
    Aabb cb = aabb_of(ch.box);
    double best = 0.0;
    int best_idx = -1;
    for (size_t i = 0; i < out.instances.size(); ++i) {
      if (!cb.overlaps(bounds[i])) continue;
      double v = iou(Shape(ch.box), out.instances[i].shape);
      if (v > best) {
        best = v;
        best_idx = static_cast<int>(i);
      }
    }
    if (best_idx >= 0) {
      out.instances[static_cast<size_t>(best_idx)].chars.push_back(ch);
    } else {
      ++out.dropped_chars;
    }
  }
  return out;
}

// The direction characters are read along. For a box it is the width axis;
// for a polygon it is the first principal component of the character
// centers. The sign is fixed so the sequence runs left-to-right in image
// coordinates, ties resolved top-to-bottom.
inline Point reading_axis(const Shape& shape, std::span<const Point> char_centers) {
  Point axis{1.0, 0.0};
  if (const auto* b = std::get_if<RotatedBox>(&shape)) {
    axis = b->axis();
  } else if (char_centers.size() >= 2) {
    double mx = 0, my = 0;
    for (const Point& p : char_centers) { mx += p.x; my += p.y; }
    mx /= static_cast<double>(char_centers.size());
    my /= static_cast<double>(char_centers.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (const Point& p : char_centers) {
      double dx = p.x - mx, dy = p.y - my;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
    }
    double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
    if (std::isfinite(theta)) axis = {std::cos(theta), std::sin(theta)};
  }
  constexpr double kTie = 1e-12;
  if (axis.x < -kTie || (std::abs(axis.x) <= kTie && axis.y < 0)) {
    axis = {-axis.x, -axis.y};
  }
  return axis;
}

// Sort the instance's characters along its reading axis and assemble the
// transcription. Preserves the character multiset.
inline void order_characters(TextInstance& inst, const Charset& charset) {
  if (inst.chars.size() > 1) {
    std::vector<Point> centers;
    centers.reserve(inst.chars.size());
    for (const CharDetection& c : inst.chars) centers.push_back(c.box.center);
    Point axis = reading_axis(inst.shape, centers);
    std::stable_sort(inst.chars.begin(), inst.chars.end(),
                     [&](const CharDetection& a, const CharDetection& b) {
                       double pa = dot(a.box.center, axis);
                       double pb = dot(b.box.center, axis);
                       if (pa != pb) return pa < pb;
                       if (a.box.center.x != b.box.center.x) return a.box.center.x < b.box.center.x;
                       return a.box.center.y < b.box.center.y;
                     });
  }
  inst.transcription.clear();
  for (const CharDetection& c : inst.chars) inst.transcription.push_back(charset.symbol_of(c.label));
}

struct LexiconMatch {
  std::string corrected;
  int distance = 0;
};

// Replace a transcription by the lexicon entry at minimum case-insensitive
// edit distance; ties go to the lexicographically smallest entry.
inline LexiconMatch lexicon_correct(std::string_view transcription,
                                    std::span<const std::string> lexicon) {
  if (lexicon.empty()) {
    throw std::invalid_argument("lexicon_correct: empty lexicon");
  }
  LexiconMatch best{lexicon[0], edit_distance(transcription, lexicon[0])};
  for (size_t i = 1; i < lexicon.size(); ++i) {
    int d = edit_distance(transcription, lexicon[i]);
    if (d < best.distance || (d == best.distance && lexicon[i] < best.corrected)) {
      best = {lexicon[i], d};
    }
  }
  return best;
}

}  // namespace textspot
