#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "textspot/charset.hpp"
#include "textspot/densemaps.hpp"
#include "textspot/geometry.hpp"
#include "textspot/postprocess.hpp"
#include "textspot/rng.hpp"

namespace textspot {

// A character detector driven by the harvest loop: the oracle simulator, an
// external-map replay, or anything else that maps an image annotation to
// raw character detections.
using DetectorFn = std::function<std::vector<CharDetection>(const SceneAnnotation&)>;

// Detector quality as a function of the harvested supervision fraction;
// stands in for retraining between steps.
using DetectorFactory = std::function<DetectorFn(double supervision_fraction)>;

struct HarvestedInstance {
  bool accepted = false;
  int grouped_count = 0;  // characters grouped to this instance at the last step
  std::vector<CharBoxLabel> chars;
};

struct StepStats {
  int step = 0;
  int words_accepted = 0;
  int words_total = 0;  // eligible (non-dont_care) instances
  double ratio = 0.0;
};

struct ImageHarvest {
  std::vector<HarvestedInstance> instances;
};

// Per-image annotations plus the harvested character labels and acceptance
// flags across iterative steps.
struct DatasetState {
  std::vector<SceneAnnotation> images;
  std::vector<ImageHarvest> harvest;
  int step = 0;
  std::vector<StepStats> stats;
  std::vector<std::string> skipped_images;  // detector failures at the last step

  static DatasetState from_annotations(std::vector<SceneAnnotation> anns) {
    DatasetState st;
    st.harvest.resize(anns.size());
    for (size_t i = 0; i < anns.size(); ++i) {
      st.harvest[i].instances.resize(anns[i].instances.size());
    }
    st.images = std::move(anns);
    return st;
  }

  int eligible_count() const {
    int n = 0;
    for (const SceneAnnotation& ann : images) {
      for (const SceneInstance& inst : ann.instances) {
        if (!inst.dont_care) ++n;
      }
    }
    return n;
  }

  int accepted_count() const {
    int n = 0;
    for (const ImageHarvest& ih : harvest) {
      for (const HarvestedInstance& hi : ih.instances) {
        if (hi.accepted) ++n;
      }
    }
    return n;
  }

  double supervision_fraction() const {
    int total = eligible_count();
    return total > 0 ? static_cast<double>(accepted_count()) / total : 0.0;
  }
};

struct AcceptResult {
  bool accepted = false;
  std::vector<CharBoxLabel> chars;
};

// The count-matching rule: a detected character group is "correct" only
// when its size equals the transcript length. Accepted boxes are ordered
// along the reading axis and paired positionally with the transcript
// symbols; the detector's predicted labels are discarded. dont_care
// instances are never eligible.
inline AcceptResult accept_rule(const Shape& instance_shape, std::string_view transcript,
                                bool dont_care, std::vector<CharDetection> grouped,
                                const Charset& charset) {
  AcceptResult out;
  if (dont_care) return out;
  Charset::NormalizedTranscript norm = charset.normalize(transcript);
  if (grouped.size() != norm.length()) return out;
  out.accepted = true;
  if (grouped.empty()) return out;
  TextInstance tmp{instance_shape, 1.0, std::move(grouped), {}, {}};
  order_characters(tmp, charset);
  out.chars.reserve(tmp.chars.size());
  for (size_t i = 0; i < tmp.chars.size(); ++i) {
    out.chars.push_back({tmp.chars[i].box, norm.ids[i]});
  }
  return out;
}

struct HarvestOptions {
  double nms_iou = 0.5;
};

// One pass over the dataset: detect, suppress, group to the annotated
// instance shapes, apply the count rule, and replace each instance's
// harvested label set with this step's result. A detector failure skips
// that image (its previous harvest is kept) and is reported; the step still
// completes.
inline void harvest_step(DatasetState& state, const DetectorFn& detector,
                         const Charset& charset, const HarvestOptions& opts = {}) {
  state.skipped_images.clear();
  for (size_t img = 0; img < state.images.size(); ++img) {
    const SceneAnnotation& ann = state.images[img];
    std::vector<CharDetection> dets;
    try {
      dets = detector(ann);
    } catch (const std::exception&) {
      state.skipped_images.push_back(ann.image_id);
      continue;
    }
    dets = nms(dets, opts.nms_iou);
    std::vector<ScoredShape> shapes;
    shapes.reserve(ann.instances.size());
    for (const SceneInstance& inst : ann.instances) shapes.push_back({inst.shape, 1.0});
    GroupResult grouped = group_characters(shapes, dets);
    for (size_t k = 0; k < ann.instances.size(); ++k) {
      const SceneInstance& inst = ann.instances[k];
      HarvestedInstance& slot = state.harvest[img].instances[k];
      slot.grouped_count = static_cast<int>(grouped.instances[k].chars.size());
      AcceptResult res = accept_rule(inst.shape, inst.transcript, inst.dont_care,
                                     std::move(grouped.instances[k].chars), charset);
      slot.accepted = res.accepted;
      slot.chars = std::move(res.chars);
    }
  }
  StepStats row;
  row.step = state.step;
  row.words_total = state.eligible_count();
  row.words_accepted = state.accepted_count();
  row.ratio = row.words_total > 0
                  ? static_cast<double>(row.words_accepted) / row.words_total
                  : 0.0;
  state.stats.push_back(row);
  ++state.step;
}

// Run up to num_steps harvest passes, asking the factory for a fresh
// detector at the current supervision fraction before each one. With
// early_stop, the loop ends once a step beyond the first retrained one
// fails to grow the accepted set.
inline void run_iterations(DatasetState& state, const DetectorFactory& factory, int num_steps,
                           const Charset& charset, const HarvestOptions& opts = {},
                           bool early_stop = true) {
  if (num_steps < 1) throw std::invalid_argument("run_iterations: num_steps must be >= 1");
  size_t first_row = state.stats.size();
  for (int k = 0; k < num_steps; ++k) {
    DetectorFn det = factory(state.supervision_fraction());
    harvest_step(state, det, charset, opts);
    size_t row = first_row + static_cast<size_t>(k);
    if (early_stop && k >= 2 &&
        state.stats[row].words_accepted <= state.stats[row - 1].words_accepted) {
      break;
    }
  }
}

// Table of per-step harvest statistics as CSV, one row per step.
inline std::string stats_csv(const std::vector<StepStats>& stats) {
  std::string out = "step,words_accepted,words_total,ratio\n";
  char buf[96];
  for (const StepStats& s : stats) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.6f\n", s.step, s.words_accepted, s.words_total,
                  s.ratio);
    out += buf;
  }
  return out;
}

// Noise model for the oracle detector standing in for a trained model.
struct NoiseModel {
  double miss_rate = 0.0;
  double spurious_rate = 0.0;
  double center_jitter_px = 0.0;
  double size_jitter_frac = 0.0;

  void validate() const {
    if (miss_rate < 0 || miss_rate > 1 || spurious_rate < 0 || spurious_rate > 1) {
      throw std::invalid_argument("NoiseModel: rates must lie in [0,1]");
    }
  }
};

// Emits each ground-truth character box with probability 1 - miss_rate,
// jittered, plus spurious boxes at spurious_rate per instance. All draws
// are keyed on (seed, image, instance, char), so runs with the same seed
// are identical and lowering miss_rate only ever grows the detected set.
inline DetectorFn oracle_detector(const NoiseModel& noise, uint64_t seed) {
  noise.validate();
  return [noise, seed](const SceneAnnotation& ann) {
    std::vector<CharDetection> dets;
    uint64_t img_key = mix_seed(seed, hash_string(ann.image_id));
    for (size_t k = 0; k < ann.instances.size(); ++k) {
      const SceneInstance& inst = ann.instances[k];
      if (!inst.chars.has_value()) continue;
      const auto& chars = *inst.chars;
      for (size_t c = 0; c < chars.size(); ++c) {
        Rng rng(mix_seed(img_key, (k << 20) + c));
        double keep_draw = rng.next_double();
        double jx = rng.uniform(-1.0, 1.0) * noise.center_jitter_px;
        double jy = rng.uniform(-1.0, 1.0) * noise.center_jitter_px;
        double jw = 1.0 + rng.uniform(-1.0, 1.0) * noise.size_jitter_frac;
        double jh = 1.0 + rng.uniform(-1.0, 1.0) * noise.size_jitter_frac;
        if (keep_draw < noise.miss_rate) continue;
        const RotatedBox& b = chars[c].box;
        CharDetection det;
        det.box = RotatedBox({b.center.x + jx, b.center.y + jy},
                             std::max(b.width * jw, 1.0), std::max(b.height * jh, 1.0), b.theta);
        det.score = 0.96 + 0.03 * rng.next_double();
        det.label = chars[c].class_id;
        det.class_scores[static_cast<size_t>(det.label)] = 1.0f;
        dets.push_back(std::move(det));
      }
      Rng spur_rng(mix_seed(img_key, (k << 20) + 0xFFFFFULL));
      if (spur_rng.next_double() < noise.spurious_rate) {
        RotatedBox enc = enclosing_box(inst.shape);
        double w = std::max(4.0, enc.height * 0.5);
        Point c = enc.center + enc.axis() * spur_rng.uniform(-enc.width / 4, enc.width / 4);
        CharDetection det;
        det.box = RotatedBox(c, w, w, enc.theta);
        det.score = 0.96;
        det.label = 0;
        det.class_scores[0] = 1.0f;
        dets.push_back(std::move(det));
      }
    }
    return dets;
  };
}

}  // namespace textspot
