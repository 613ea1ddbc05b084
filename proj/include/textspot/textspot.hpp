#pragma once

// Umbrella header for the full pipeline.

#include "textspot/charset.hpp"
#include "textspot/densemaps.hpp"
#include "textspot/editdist.hpp"
#include "textspot/eval.hpp"
#include "textspot/geometry.hpp"
#include "textspot/harvest.hpp"
#include "textspot/icdar_io.hpp"
#include "textspot/io_error.hpp"
#include "textspot/json_io.hpp"
#include "textspot/pipeline.hpp"
#include "textspot/postprocess.hpp"
#include "textspot/replay.hpp"
#include "textspot/rng.hpp"
#include "textspot/svg.hpp"
#include "textspot/synthgen.hpp"
#include "textspot/tensor_io.hpp"
