#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bevforge/batch.hpp"
#include "bevforge/gradcheck.hpp"
#include "bevforge/io.hpp"
#include "bevforge/log.hpp"
#include "bevforge/synthetic.hpp"
#include "bevforge/voxel.hpp"

namespace {

using namespace bevforge;

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kInputError = 2;

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return parse_config(path);
}

Tensor<double> widen(const Tensor<float>& t) {
  Tensor<double> out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<double>(t[i]);
  return out;
}

Tensor<float> narrow(const Tensor<double>& t) {
  Tensor<float> out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<float>(t[i]);
  return out;
}

struct SynthArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t frames = 12;
  double spacing = 0.8;
  double arc_degrees = 0.0;
  double noise_sigma = 0.0;
  bool moving = false;
};

int run_synth(const SynthArgs& args) {
  RunConfig config = load_config(args.config_path);
  synth::SceneConfig scene_config;
  scene_config.frames = args.frames;
  scene_config.spacing = args.spacing;
  scene_config.arc_degrees = args.arc_degrees;
  scene_config.moving = args.moving;
  scene_config.depth_noise_sigma = args.noise_sigma;
  synth::Scene scene = synth::generate_scene(args.seed, scene_config);
  synth::write_sequence(scene, args.out_dir, config.bev_spec());
  return kOk;
}

struct PseudolabelArgs {
  std::string config_path;
  std::string in_dir;
  std::string out_dir;
  bool seed_set = false;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool color = false;
};

int run_pseudolabel(const PseudolabelArgs& args) {
  RunConfig config = load_config(args.config_path);
  if (!args.in_dir.empty()) config.in_dir = args.in_dir;
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (args.seed_set) config.seed = args.seed;
  run_pseudolabel_batch(config, args.jobs, args.color);
  return kOk;
}

struct EvalArgs {
  std::string config_path;
  std::string pred_dir;
  std::string ref_dir;
};

int run_eval(const EvalArgs& args) {
  load_config(args.config_path);
  ConfusionMatrix confusion = evaluate_dirs(args.pred_dir, args.ref_dir);
  std::cout << format_iou_report(compute_iou(confusion));
  return kOk;
}

struct WarpArgs {
  std::string config_path;
  std::string in_path;
  std::string out_path;
  std::string poses_path;
  std::size_t step = 1;
};

int run_warp(const WarpArgs& args) {
  RunConfig config = load_config(args.config_path);
  Tensor<float> stored = read_tensor_f32(args.in_path);
  if (stored.ndim() != 4) {
    throw_error(ErrorCode::ShapeMismatch,
                "grid tensor must be C x X x Y x Z, got " + shape_to_string(stored.shape()));
  }
  GridSpec spec = config.grid_spec();
  if (stored.dim(1) != spec.nx || stored.dim(2) != spec.ny || stored.dim(3) != spec.nz) {
    throw_error(ErrorCode::ShapeMismatch, "grid tensor " + shape_to_string(stored.shape()) +
                                              " does not match the configured lattice");
  }
  std::vector<Pose> poses = read_poses(args.poses_path);
  if (args.step >= poses.size()) {
    throw_error(ErrorCode::OutOfRange, "step " + std::to_string(args.step) + " of " +
                                           std::to_string(poses.size()) + " poses");
  }
  VoxelGrid grid{widen(stored), spec};
  Pose step_from_anchor = relative(poses[args.step], poses[0]);
  VoxelGrid warped = warp_grid(grid, step_from_anchor);
  write_tensor(args.out_path, narrow(warped.data));
  return kOk;
}

struct GradcheckArgs {
  std::string config_path;
  std::uint64_t seed = 0;
};

int run_gradcheck_cmd(const GradcheckArgs& args) {
  load_config(args.config_path);
  GradCheckReport report = run_gradcheck(args.seed);
  std::cout << format_gradcheck(report);
  if (!report.pass()) {
    log(LogLevel::Error, "max relative gradient error ", report.worst, " exceeds 1e-3");
    return kValidationFailure;
  }
  return kOk;
}

struct LiftArgs {
  std::string config_path;
  std::string in_dir;
  std::string out_path;
};

int run_lift(const LiftArgs& args) {
  RunConfig config = load_config(args.config_path);
  CameraIntrinsics camera = read_intrinsics(args.in_dir + "/intrinsics.txt");
  Tensor<double> features = widen(read_tensor_f32(args.in_dir + "/features.btr"));
  DepthDistribution dist;
  dist.data = widen(read_tensor_f32(args.in_dir + "/depth.btr"));
  if (dist.data.ndim() != 3) {
    throw_error(ErrorCode::ShapeMismatch, "depth distribution must be D x H x W, got " +
                                              shape_to_string(dist.data.shape()));
  }
  dist.bin_edges = uniform_bin_edges(dist.data.dim(0), config.depth_min, config.depth_max);
  validate_depth_distribution(dist);
  VoxelGrid lifted = lift_features(features, dist, camera, config.grid_spec());
  write_tensor(args.out_path, narrow(lifted.data));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bevforge: bird's-eye-view semantic mapping toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic street sequence");
  synth_cmd->add_option("--config", synth_args.config_path,
                        "run configuration file (bird's-eye lattice for the ground truth)");
  synth_cmd->add_option("--out", synth_args.out_dir, "output sequence directory")->required();
  synth_cmd->add_option("--seed", synth_args.seed, "scene seed");
  synth_cmd->add_option("--frames", synth_args.frames, "trajectory length")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--spacing", synth_args.spacing, "meters between consecutive frames");
  synth_cmd->add_option("--arc", synth_args.arc_degrees,
                        "total heading change over the trajectory, degrees");
  synth_cmd->add_option("--noise", synth_args.noise_sigma, "depth noise sigma, meters");
  synth_cmd->add_flag("--moving", synth_args.moving, "give at least one vehicle a velocity");

  PseudolabelArgs pl_args;
  CLI::App* pl_cmd =
      app.add_subcommand("pseudolabel", "generate bird's-eye pseudolabels for every anchor");
  pl_cmd->add_option("--config", pl_args.config_path, "run configuration file");
  pl_cmd->add_option("--in", pl_args.in_dir, "input sequence directory");
  pl_cmd->add_option("--out", pl_args.out_dir, "output directory");
  pl_cmd->add_option("--seed", pl_args.seed, "override the configured seed");
  pl_cmd->add_option("--jobs", pl_args.jobs, "worker threads across anchor frames")
      ->check(CLI::PositiveNumber);
  pl_cmd->add_flag("--color", pl_args.color, "also write palette renders");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "per-class IoU of predicted vs reference maps");
  eval_cmd->add_option("--config", eval_args.config_path,
                       "run configuration file (accepted for interface uniformity)");
  eval_cmd->add_option("--pred", eval_args.pred_dir, "predicted map directory")->required();
  eval_cmd->add_option("--ref", eval_args.ref_dir, "reference map directory")->required();

  WarpArgs warp_args;
  CLI::App* warp_cmd = app.add_subcommand("warp", "rigidly warp a stored voxel grid");
  warp_cmd->add_option("--config", warp_args.config_path, "run configuration file (lattice)");
  warp_cmd->add_option("--in", warp_args.in_path, "input grid tensor (.btr)")->required();
  warp_cmd->add_option("--out", warp_args.out_path, "output grid tensor (.btr)")->required();
  warp_cmd->add_option("--poses", warp_args.poses_path, "camera-to-world pose file")->required();
  warp_cmd->add_option("--step", warp_args.step, "pose index to warp the anchor grid into");

  GradcheckArgs grad_args;
  CLI::App* grad_cmd =
      app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
  grad_cmd->add_option("--config", grad_args.config_path,
                       "run configuration file (accepted for interface uniformity)");
  grad_cmd->add_option("--seed", grad_args.seed, "instance seed");

  LiftArgs lift_args;
  CLI::App* lift_cmd = app.add_subcommand("lift", "lift stored image features into a voxel grid");
  lift_cmd->add_option("--config", lift_args.config_path, "run configuration file");
  lift_cmd->add_option("--in", lift_args.in_dir,
                       "directory with features.btr, depth.btr, intrinsics.txt")
      ->required();
  lift_cmd->add_option("--out", lift_args.out_path, "output grid tensor (.btr)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  pl_args.seed_set = pl_cmd->count("--seed") > 0;

  try {
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (pl_cmd->parsed()) return run_pseudolabel(pl_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (warp_cmd->parsed()) return run_warp(warp_args);
    if (grad_cmd->parsed()) return run_gradcheck_cmd(grad_args);
    if (lift_cmd->parsed()) return run_lift(lift_args);
  } catch (const Error& e) {
    log(LogLevel::Error, e.what());
    return kInputError;
  } catch (const std::exception& e) {
    log(LogLevel::Error, "unexpected failure: ", e.what());
    return kInputError;
  }
  return kInputError;  // unreachable: a subcommand is required
}
