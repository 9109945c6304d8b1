#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bevforge/io.hpp"
#include "bevforge/metrics.hpp"
#include "bevforge/pseudolabel.hpp"

namespace bevforge {

// A sequence loaded from disk: camera plus one Frame (semantics, depth, pose)
// per trajectory entry.  Layout under `dir`:
//   intrinsics.txt, poses.txt, semantic/NNNN.pgm, depth/NNNN.btr.
struct Sequence {
  CameraIntrinsics camera;
  std::vector<Frame> frames;
};

Sequence load_sequence(const std::string& dir);

// The supervision window anchored at `anchor`: frames anchor, anchor+stride,
// anchor+2*stride, ... up to window_size of them, truncated at the sequence
// end.  The anchor frame itself is always included.
FrameWindow make_window(const Sequence& seq, std::size_t anchor, std::size_t window_size,
                        std::size_t stride);

PseudolabelParams params_from_config(const RunConfig& config);

// Generates a pseudolabel for every anchor frame of config.in_dir and writes
// pseudolabel/NNNN.pgm (plus color/NNNN.ppm when `color` is set) and
// config.effective.txt under config.out_dir.  Work is distributed across
// anchors only; each anchor's pipeline runs on one thread, so the output
// bytes never depend on `jobs`.
struct BatchResult {
  std::size_t anchors = 0;
};

BatchResult run_pseudolabel_batch(const RunConfig& config, std::size_t jobs, bool color);

// Confusion over all paired NNNN.pgm maps of two directories (indices start
// at 0 and stop at the first missing prediction; every prediction must have
// a reference partner).
ConfusionMatrix evaluate_dirs(const std::string& pred_dir, const std::string& ref_dir);

}  // namespace bevforge
