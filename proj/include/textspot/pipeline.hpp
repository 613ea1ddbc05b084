#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "textspot/charset.hpp"
#include "textspot/densemaps.hpp"
#include "textspot/postprocess.hpp"

namespace textspot {

// Knobs shared across the pipeline. Gates and stride defaults follow the
// detector contract (candidates kept above confidence 0.95, maps at 1/4
// input resolution).
struct PipelineConfig {
  int stride = 4;
  double word_gate = 0.95;
  double char_gate = 0.95;
  double nms_iou = 0.5;
  double shrink = 0.3;
  std::string charset_symbols{Charset::default_symbols()};
  std::string lexicon_path;
  uint64_t seed = 0;

  void validate() const {
    if (stride < 1) throw std::invalid_argument("config: stride must be >= 1");
    if (!(word_gate > 0.0) || word_gate > 1.0) throw std::invalid_argument("config: word gate outside (0,1]");
    if (!(char_gate > 0.0) || char_gate > 1.0) throw std::invalid_argument("config: char gate outside (0,1]");
    if (nms_iou < 0.0 || nms_iou > 1.0) throw std::invalid_argument("config: nms iou outside [0,1]");
    if (shrink < 0.0 || shrink >= 0.5) throw std::invalid_argument("config: shrink outside [0,0.5)");
    Charset probe(charset_symbols);  // throws when malformed
  }

  Charset charset() const { return Charset(charset_symbols); }
};

struct PipelineResult {
  std::vector<ScoredBox> words;        // after NMS
  std::vector<CharDetection> chars;    // after NMS
  std::vector<TextInstance> instances; // grouped + ordered
  int dropped_chars = 0;
};

// Full decode path for one map stack: gate both branches, suppress
// duplicates, group characters into instances, and assemble transcriptions
// in reading order.
inline PipelineResult run_pipeline(const DenseMapStack& stack, const PipelineConfig& cfg,
                                   const Charset& charset) {
  PipelineResult out;
  out.words = nms(decode_word_candidates(stack, cfg.word_gate), cfg.nms_iou);
  out.chars = nms(decode_char_candidates(stack, cfg.char_gate), cfg.nms_iou);
  std::vector<ScoredShape> shapes;
  shapes.reserve(out.words.size());
  for (const ScoredBox& w : out.words) shapes.push_back({Shape(w.box), w.score});
  GroupResult grouped = group_characters(shapes, out.chars);
  out.dropped_chars = grouped.dropped_chars;
  out.instances = std::move(grouped.instances);
  for (TextInstance& inst : out.instances) order_characters(inst, charset);
  return out;
}

// Run fn(i) for i in [0, n) across `workers` threads. Work is dealt by
// stride so the assignment is fixed up front; callers index results by i,
// which keeps parallel output byte-identical to the sequential one.
template <typename Fn>
inline void parallel_for(size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  size_t lanes = std::min<size_t>(static_cast<size_t>(workers), n);
  std::vector<std::thread> pool;
  pool.reserve(lanes);
  for (size_t lane = 0; lane < lanes; ++lane) {
    pool.emplace_back([&, lane]() {
      for (size_t i = lane; i < n; i += lanes) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace textspot
