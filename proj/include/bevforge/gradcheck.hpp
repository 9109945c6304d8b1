#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bevforge/supervision.hpp"

namespace bevforge {

// A small randomized end-to-end supervision problem: anchor volume, a
// three-timestep pose chain, both heads, and targets for every leg.
struct GradCheckInstance {
  VoxelGrid v0;
  std::vector<Pose> anchor_to_step;
  CameraIntrinsics camera;
  FvSpec fv_spec;
  LinearHead fv_head;
  LinearHead bev_head;
  std::vector<SemanticMap> fv_targets;
  BevMap bev_target;
};

GradCheckInstance make_gradcheck_instance(std::uint64_t seed);

// Total loss of the instance evaluated through the public composed ops
// (warp -> heads -> cross-entropy) rather than the fused backward path;
// the finite-difference reference differentiates this.
double composed_loss(const GradCheckInstance& instance);

struct GradCheckRow {
  std::string name;
  double analytic_norm = 0.0;
  double fd_norm = 0.0;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double worst = 0.0;

  bool pass(double tol = 1e-3) const { return worst < tol; }
};

// Central finite differences (step 1e-4) against the analytic gradients of
// chain_gradients, parameter by parameter.  Relative error uses a 1e-6
// absolute floor so zero-gradient entries compare additively.
GradCheckReport run_gradcheck(std::uint64_t seed);

// Aligned table, one row per parameter tensor.
std::string format_gradcheck(const GradCheckReport& report);

}  // namespace bevforge
