#include "bevforge/batch.hpp"

#include <cstdio>
#include <filesystem>

#include "bevforge/log.hpp"
#include "bevforge/parallel.hpp"

namespace bevforge {

namespace {

std::string frame_name(std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu.%s", index, ext);
  return buf;
}

}  // namespace

Sequence load_sequence(const std::string& dir) {
  Sequence seq;
  seq.camera = read_intrinsics(dir + "/intrinsics.txt");
  std::vector<Pose> poses = read_poses(dir + "/poses.txt");
  seq.frames.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    Frame frame;
    frame.id = i;
    frame.world_from_cam = poses[i];
    frame.semantics = read_pgm(dir + "/semantic/" + frame_name(i, "pgm"));
    require_shape(frame.semantics, {seq.camera.height, seq.camera.width}, "semantic map");
    frame.depth = read_tensor_f32(dir + "/depth/" + frame_name(i, "btr"));
    require_shape(frame.depth, {seq.camera.height, seq.camera.width}, "depth map");
    seq.frames.push_back(std::move(frame));
  }
  log(LogLevel::Debug, "loaded ", seq.frames.size(), " frames from ", dir);
  return seq;
}

FrameWindow make_window(const Sequence& seq, std::size_t anchor, std::size_t window_size,
                        std::size_t stride) {
  if (anchor >= seq.frames.size()) {
    throw_error(ErrorCode::OutOfRange, "anchor " + std::to_string(anchor) + " of " +
                                           std::to_string(seq.frames.size()) + " frames");
  }
  if (window_size == 0) throw_error(ErrorCode::OutOfRange, "window_size must be >= 1");
  if (stride == 0) throw_error(ErrorCode::OutOfRange, "window_stride must be >= 1");
  FrameWindow window;
  window.anchor_id = anchor;
  window.stride = stride;
  for (std::size_t k = 0; k < window_size; ++k) {
    std::size_t frame = anchor + k * stride;
    if (frame >= seq.frames.size()) break;
    window.frames.push_back(seq.frames[frame]);
  }
  return window;
}

PseudolabelParams params_from_config(const RunConfig& config) {
  PseudolabelParams params;
  params.bev = config.bev_spec();
  params.dynamic_classes = config.dynamic_classes;
  params.dbscan_eps = config.dbscan_eps;
  params.dbscan_min_pts = config.dbscan_min_pts;
  params.closing_iters = config.closing_iters;
  params.ransac_iters = config.ransac_iters;
  params.ransac_tol = config.ransac_tol;
  params.seed = config.seed;
  params.jobs = 1;
  return params;
}

BatchResult run_pseudolabel_batch(const RunConfig& config, std::size_t jobs, bool color) {
  namespace fs = std::filesystem;
  if (config.in_dir.empty()) throw_error(ErrorCode::InvalidValue, "no input directory set");
  if (config.out_dir.empty()) throw_error(ErrorCode::InvalidValue, "no output directory set");
  Sequence seq = load_sequence(config.in_dir);
  if (seq.frames.empty()) throw_error(ErrorCode::EmptyWindow, "sequence has no frames");

  std::error_code ec;
  fs::create_directories(config.out_dir + "/pseudolabel", ec);
  if (!ec && color) fs::create_directories(config.out_dir + "/color", ec);
  if (ec) {
    throw_error(ErrorCode::IoFailure, "cannot create " + config.out_dir + ": " + ec.message());
  }
  write_effective_config(config.out_dir + "/config.effective.txt", config);

  // One task per anchor; the pipeline itself stays single-threaded
  // (params.jobs = 1) so every anchor's bytes are identical for any
  // distribution of anchors over threads.
  PseudolabelParams params = params_from_config(config);
  std::size_t n = seq.frames.size();
  parallel_for(n, jobs, [&](std::size_t anchor) {
    FrameWindow window = make_window(seq, anchor, config.window_size, config.window_stride);
    PseudolabelResult result = generate_pseudolabel(window, seq.camera, params);
    write_pgm(config.out_dir + "/pseudolabel/" + frame_name(anchor, "pgm"), result.map);
    if (color) {
      write_ppm(config.out_dir + "/color/" + frame_name(anchor, "ppm"),
                colorize_labels(result.map));
    }
  });
  log(LogLevel::Info, "wrote ", n, " pseudolabel maps to ", config.out_dir);
  return BatchResult{n};
}

ConfusionMatrix evaluate_dirs(const std::string& pred_dir, const std::string& ref_dir) {
  namespace fs = std::filesystem;
  ConfusionMatrix confusion;
  std::size_t pairs = 0;
  for (std::size_t i = 0;; ++i) {
    std::string pred_path = pred_dir + "/" + frame_name(i, "pgm");
    if (!fs::exists(pred_path)) break;
    BevMap pred = read_pgm(pred_path);
    BevMap ref = read_pgm(ref_dir + "/" + frame_name(i, "pgm"));
    accumulate_confusion(pred, ref, confusion);
    ++pairs;
  }
  if (pairs == 0) {
    throw_error(ErrorCode::IoFailure, "no 0000.pgm under " + pred_dir);
  }
  log(LogLevel::Debug, "evaluated ", pairs, " map pairs");
  return confusion;
}

}  // namespace bevforge
