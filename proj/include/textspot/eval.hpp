#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "textspot/charset.hpp"
#include "textspot/editdist.hpp"
#include "textspot/geometry.hpp"
#include "textspot/postprocess.hpp"

namespace textspot {

enum class LexiconMode { None, Strong, Weak, Generic };

inline char mode_letter(LexiconMode m) {
  switch (m) {
    case LexiconMode::Strong: return 'S';
    case LexiconMode::Weak: return 'W';
    case LexiconMode::Generic: return 'G';
    default: return 'N';
  }
}

inline LexiconMode mode_from_letter(char c) {
  switch (c) {
    case 'S': case 's': return LexiconMode::Strong;
    case 'W': case 'w': return LexiconMode::Weak;
    case 'G': case 'g': return LexiconMode::Generic;
    case 'N': case 'n': return LexiconMode::None;
    default: throw std::invalid_argument("lexicon mode must be one of S, W, G, N");
  }
}

// Strong (per-image), weak (per-dataset), and generic word lists; entries
// are case-folded to upper and deduplicated on insertion.
struct LexiconSet {
  LexiconMode mode = LexiconMode::None;
  std::vector<std::string> generic;
  std::vector<std::string> weak;
  std::map<std::string, std::vector<std::string>> strong;  // image_id -> words

  static std::vector<std::string> folded(std::span<const std::string> words) {
    std::set<std::string> uniq;
    for (const std::string& w : words) {
      std::string u = w;
      for (char& c : u) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      }
      uniq.insert(std::move(u));
    }
    return {uniq.begin(), uniq.end()};
  }

  // The active word list for an image under the configured mode. Throws
  // when a non-None mode has no words to offer.
  std::span<const std::string> words_for(std::string_view image_id) const {
    switch (mode) {
      case LexiconMode::None:
        return {};
      case LexiconMode::Generic:
        if (generic.empty()) throw std::invalid_argument("generic lexicon is empty");
        return generic;
      case LexiconMode::Weak:
        if (weak.empty()) throw std::invalid_argument("weak lexicon is empty");
        return weak;
      case LexiconMode::Strong: {
        auto it = strong.find(std::string(image_id));
        if (it == strong.end() || it->second.empty()) {
          throw std::invalid_argument("strong lexicon has no words for image '" +
                                      std::string(image_id) + "'");
        }
        return it->second;
      }
    }
    return {};
  }
};

// Mode-aware correction: None returns the input unchanged at distance 0;
// the other modes pick the minimum-edit-distance entry from the active word
// list (per-image for Strong), which must be non-empty.
inline LexiconMatch lexicon_correct(std::string_view transcription, const LexiconSet& lexicon,
                                    std::string_view image_id = {}) {
  if (lexicon.mode == LexiconMode::None) {
    return {std::string(transcription), 0};
  }
  return lexicon_correct(transcription, lexicon.words_for(image_id));
}

struct MatchPair {
  int pred = -1;
  int gt = -1;
  double iou = 0.0;
};

// Detection / end-to-end score card. f = 2PR/(P+R) when P+R > 0, else 0.
struct MatchReport {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int ignored_preds = 0;  // predictions absorbed by dont_care regions
  std::vector<MatchPair> matches;
  double recall = 0.0;
  double precision = 0.0;
  double f_measure = 0.0;

  void finalize() {
    int gt_total = tp + fn;
    int pred_total = tp + fp;
    recall = gt_total > 0 ? static_cast<double>(tp) / gt_total : 1.0;
    precision = pred_total > 0 ? static_cast<double>(tp) / pred_total : 1.0;
    f_measure = (precision + recall) > 0.0
                    ? 2.0 * precision * recall / (precision + recall)
                    : 0.0;
  }

  MatchReport& operator+=(const MatchReport& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    ignored_preds += o.ignored_preds;
    finalize();
    return *this;
  }
};

struct GtInstance {
  Shape shape;
  bool dont_care = false;
  std::string transcript;
};

namespace detail {

// Greedy one-to-one matching over qualifying (pred, gt) pairs in descending
// IoU order; the tie order (lower pred index, then lower gt index) makes
// the result deterministic. `qualifies` restricts pairs beyond the IoU
// threshold (transcription equality for E2E).
template <typename Qualify>
inline MatchReport match_greedy(size_t n_preds, std::span<const Shape> pred_shapes,
                                std::span<const GtInstance> gts, double iou_threshold,
                                Qualify&& qualifies) {
  struct Pair {
    double iou;
    int pred;
    int gt;
  };
  std::vector<Pair> pairs;
  std::vector<double> best_dc_iou(n_preds, 0.0);
  for (size_t p = 0; p < n_preds; ++p) {
    Aabb pb = aabb_of(pred_shapes[p]);
    for (size_t g = 0; g < gts.size(); ++g) {
      if (!pb.overlaps(aabb_of(gts[g].shape))) continue;
      double v = iou(pred_shapes[p], gts[g].shape);
      if (v < iou_threshold) continue;
      if (gts[g].dont_care) {
        best_dc_iou[p] = std::max(best_dc_iou[p], v);
      } else if (qualifies(static_cast<int>(p), static_cast<int>(g))) {
        pairs.push_back({v, static_cast<int>(p), static_cast<int>(g)});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.pred != b.pred) return a.pred < b.pred;
    return a.gt < b.gt;
  });
  std::vector<char> pred_used(n_preds, 0), gt_used(gts.size(), 0);
  MatchReport rep;
  for (const Pair& pr : pairs) {
    if (pred_used[static_cast<size_t>(pr.pred)] || gt_used[static_cast<size_t>(pr.gt)]) continue;
    pred_used[static_cast<size_t>(pr.pred)] = 1;
    gt_used[static_cast<size_t>(pr.gt)] = 1;
    rep.matches.push_back({pr.pred, pr.gt, pr.iou});
    ++rep.tp;
  }
  for (size_t p = 0; p < n_preds; ++p) {
    if (pred_used[p]) continue;
    if (best_dc_iou[p] >= iou_threshold) {
      ++rep.ignored_preds;
    } else {
      ++rep.fp;
    }
  }
  for (size_t g = 0; g < gts.size(); ++g) {
    if (!gts[g].dont_care && !gt_used[g]) ++rep.fn;
  }
  rep.finalize();
  return rep;
}

// Strip leading/trailing symbols outside the charset and fold case, so the
// transcript comparison matches what the 68-class model can express.
inline std::string comparable_text(std::string_view text, const Charset& cs) {
  Charset::NormalizedTranscript parts = cs.normalize(text);
  // normalize() also drops interior out-of-charset symbols; for comparison
  // purposes the transcripts seen here are single words, so this is the
  // trim-and-fold we need.
  return parts.text;
}

}  // namespace detail

// Standard one-to-one IoU matching: a prediction is a true positive iff it
// pairs (greedily, in descending IoU) with an unmatched non-dont_care
// ground-truth region at IoU >= threshold. Predictions whose best
// qualifying overlap lies on a dont_care region are excluded from the
// false-positive count.
inline MatchReport match_detections(std::span<const Shape> preds, std::span<const GtInstance> gts,
                                    double iou_threshold = 0.5) {
  return detail::match_greedy(preds.size(), preds, gts, iou_threshold,
                              [](int, int) { return true; });
}

// End-to-end matching: IoU as in match_detections plus transcription
// equality (case-insensitive, after lexicon correction for modes S/W/G).
inline MatchReport match_e2e(std::span<const TextInstance> preds, std::span<const GtInstance> gts,
                             const LexiconSet& lexicon, std::string_view image_id,
                             const Charset& charset, double iou_threshold = 0.5) {
  if (lexicon.mode != LexiconMode::None) {
    lexicon.words_for(image_id);  // a missing lexicon is an error even with no predictions
  }
  std::vector<Shape> shapes;
  shapes.reserve(preds.size());
  std::vector<std::string> texts;
  texts.reserve(preds.size());
  for (const TextInstance& t : preds) {
    shapes.push_back(t.shape);
    std::string corrected = t.transcription;
    if (lexicon.mode != LexiconMode::None && !t.transcription.empty()) {
      corrected = lexicon_correct(t.transcription, lexicon, image_id).corrected;
    }
    texts.push_back(detail::comparable_text(corrected, charset));
  }
  std::vector<std::string> gt_texts;
  gt_texts.reserve(gts.size());
  for (const GtInstance& g : gts) gt_texts.push_back(detail::comparable_text(g.transcript, charset));
  return detail::match_greedy(preds.size(), shapes, gts, iou_threshold,
                              [&](int p, int g) {
                                return !texts[static_cast<size_t>(p)].empty() &&
                                       texts[static_cast<size_t>(p)] ==
                                           gt_texts[static_cast<size_t>(g)];
                              });
}

}  // namespace textspot
