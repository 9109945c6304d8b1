#pragma once

#include <cstddef>
#include <vector>

#include "bevforge/classes.hpp"
#include "bevforge/tensor.hpp"
#include "bevforge/voxel.hpp"

namespace bevforge {

// Linear per-timestep weight schedule over indices 0..n inclusive: w_start at
// index 0 falling to w_end at index n.
struct WeightSchedule {
  std::size_t n = 0;
  double w_start = 1.0;
  double w_end = 0.2;
};

// w_i = w_start - (w_start - w_end) * i / n, with the endpoints returned
// exactly (no rounding drift) and w_0 = w_start when n = 0.  Indices past n
// throw IndexOutOfWindow.
double decay_weight(std::size_t i, const WeightSchedule& sched);

// Softmax cross-entropy between K x A x B logits and an A x B id map,
// averaged over cells whose id is not 255.  `grad` is d loss / d logits (the
// softmax-minus-onehot form divided by the count of contributing cells).
// Ids >= K (other than 255) are corrupt input; an all-255 target has no
// defined mean and throws EmptyTarget.
struct CeResult {
  double loss = 0.0;
  Tensor<double> grad;
  std::size_t valid_cells = 0;
};

CeResult cross_entropy(const Tensor<double>& logits, const Tensor<std::uint8_t>& target);

// Weighted sum of per-timestep cross-entropies against the future front-view
// maps: sum_i w_i * CE_i with the decay weights above.  `terms` holds the
// weighted contributions, `grads` the per-timestep d loss / d logits_i.
struct ImplicitLossResult {
  double loss = 0.0;
  std::vector<double> terms;
  std::vector<double> weights;
  std::vector<Tensor<double>> grads;
};

ImplicitLossResult implicit_loss(const std::vector<Tensor<double>>& logits,
                                 const std::vector<SemanticMap>& targets,
                                 const WeightSchedule& sched);

// Cross-entropy against the pseudolabel map; plain CE, kept as its own entry
// point because it is the second of the two loss legs.
CeResult explicit_loss(const Tensor<double>& logits, const BevMap& target);

inline double total_loss(double l_fv, double l_bev) { return l_fv + l_bev; }

// End-to-end forward + analytic backward through the whole supervised path:
//   V0 --warp(T_0->i)--> V_i --fv head--> logits_i --weighted CE--> L_fv
//   V0 --bev head--> bev logits --CE--> L_bev,   L = L_fv + L_bev.
// `anchor_to_step[i]` maps anchor-frame coordinates into timestep i's frame
// (entry 0 is the identity); every timestep goes through the same warp +
// resample path so step 0 is not special-cased.  Gradients are exact chain
// rule through the trilinear stencils of both the warp and the ray sampling.
struct LossReport {
  double l_fv = 0.0;
  double l_bev = 0.0;
  double l_total = 0.0;
  std::vector<double> fv_terms;  // weighted per-timestep CE contributions

  Tensor<double> d_fv_weight;
  std::vector<double> d_fv_bias;
  Tensor<double> d_bev_weight;
  std::vector<double> d_bev_bias;
  Tensor<double> d_voxels;  // C x X x Y x Z, gradient at V0
};

LossReport chain_gradients(const VoxelGrid& v0, const std::vector<Pose>& anchor_to_step,
                           const CameraIntrinsics& k, const FvSpec& fv_spec,
                           const LinearHead& fv, const LinearHead& bev,
                           const std::vector<SemanticMap>& fv_targets, const BevMap& bev_target);

}  // namespace bevforge
