#pragma once

#include <filesystem>

#include "textspot/harvest.hpp"
#include "textspot/pipeline.hpp"
#include "textspot/tensor_io.hpp"

namespace textspot {

// Detector port backed by externally produced map stacks: each image's
// stack is read from <dir>/<image_id>.cnmp and decoded through the
// character gate. A missing or malformed file surfaces as a detector
// failure, which the harvest loop skips and reports.
inline DetectorFn replay_detector(std::filesystem::path dir, PipelineConfig cfg) {
  return [dir = std::move(dir), cfg](const SceneAnnotation& ann) {
    DenseMapStack stack = read_stack(dir / (ann.image_id + ".cnmp"), cfg.stride);
    return decode_char_candidates(stack, cfg.char_gate);
  };
}

}  // namespace textspot
