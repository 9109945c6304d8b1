#include "bevforge/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bevforge {

namespace {

// Count of cells that contribute to a mean CE; 0 means EmptyTarget upstream.
std::size_t count_valid(const Tensor<std::uint8_t>& target) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] != classes::kVoid) ++n;
  }
  return n;
}

void check_target_ids(const Tensor<std::uint8_t>& target, std::size_t n_class) {
  for (std::size_t i = 0; i < target.size(); ++i) {
    std::uint8_t id = target[i];
    if (id != classes::kVoid && id >= n_class) {
      throw_error(ErrorCode::InvalidValue, "target id " + std::to_string(id) +
                                               " outside the " + std::to_string(n_class) +
                                               "-class head");
    }
  }
}

}  // namespace

double decay_weight(std::size_t i, const WeightSchedule& sched) {
  if (i > sched.n) {
    throw_error(ErrorCode::IndexOutOfWindow, "timestep " + std::to_string(i) +
                                                 " outside schedule over 0.." +
                                                 std::to_string(sched.n));
  }
  // Endpoints returned verbatim so they hold bit-exactly; the affine formula
  // only decides the interior.
  if (i == 0 || sched.n == 0) return sched.w_start;
  if (i == sched.n) return sched.w_end;
  double t = static_cast<double>(i) / static_cast<double>(sched.n);
  return sched.w_start - (sched.w_start - sched.w_end) * t;
}

CeResult cross_entropy(const Tensor<double>& logits, const Tensor<std::uint8_t>& target) {
  if (logits.ndim() != 3) {
    throw_error(ErrorCode::ShapeMismatch,
                "logits must be K x A x B, got " + shape_to_string(logits.shape()));
  }
  std::size_t n_class = logits.dim(0);
  std::size_t cells = logits.dim(1) * logits.dim(2);
  if (target.ndim() != 2 || target.dim(0) != logits.dim(1) || target.dim(1) != logits.dim(2)) {
    throw_error(ErrorCode::ShapeMismatch, "target " + shape_to_string(target.shape()) +
                                              " does not match logits " +
                                              shape_to_string(logits.shape()));
  }
  check_target_ids(target, n_class);
  std::size_t valid = count_valid(target);
  if (valid == 0) throw_error(ErrorCode::EmptyTarget, "every target cell is the ignore id");

  CeResult result;
  result.valid_cells = valid;
  result.grad = Tensor<double>(logits.shape());
  std::vector<double> cell_losses;
  cell_losses.reserve(valid);
  double inv_n = 1.0 / static_cast<double>(valid);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::uint8_t t = target[cell];
    if (t == classes::kVoid) continue;
    // Stable log-sum-exp; with the max subtracted the largest exponent is 0.
    double m = logits[cell];
    for (std::size_t k = 1; k < n_class; ++k) m = std::max(m, logits[k * cells + cell]);
    double sum_exp = 0.0;
    for (std::size_t k = 0; k < n_class; ++k) sum_exp += std::exp(logits[k * cells + cell] - m);
    double lse = m + std::log(sum_exp);
    cell_losses.push_back(lse - logits[static_cast<std::size_t>(t) * cells + cell]);
    for (std::size_t k = 0; k < n_class; ++k) {
      double softmax = std::exp(logits[k * cells + cell] - m) / sum_exp;
      double indicator = (k == t) ? 1.0 : 0.0;
      result.grad[k * cells + cell] = (softmax - indicator) * inv_n;
    }
  }
  result.loss = pairwise_sum(cell_losses) * inv_n;
  return result;
}

ImplicitLossResult implicit_loss(const std::vector<Tensor<double>>& logits,
                                 const std::vector<SemanticMap>& targets,
                                 const WeightSchedule& sched) {
  if (logits.empty()) throw_error(ErrorCode::EmptyWindow, "no timesteps to supervise");
  if (logits.size() != targets.size()) {
    throw_error(ErrorCode::ShapeMismatch,
                std::to_string(logits.size()) + " logit maps vs " +
                    std::to_string(targets.size()) + " targets");
  }
  if (logits.size() != sched.n + 1) {
    throw_error(ErrorCode::ShapeMismatch,
                "schedule over 0.." + std::to_string(sched.n) + " needs " +
                    std::to_string(sched.n + 1) + " timesteps, got " +
                    std::to_string(logits.size()));
  }
  ImplicitLossResult result;
  std::size_t window = logits.size();
  for (std::size_t i = 0; i < window; ++i) {
    double w = decay_weight(i, sched);
    CeResult ce = cross_entropy(logits[i], targets[i]);
    result.weights.push_back(w);
    result.terms.push_back(w * ce.loss);
    // d (w * ce) / d logits = w * ce.grad.
    for (std::size_t j = 0; j < ce.grad.size(); ++j) ce.grad[j] *= w;
    result.grads.push_back(std::move(ce.grad));
  }
  result.loss = pairwise_sum(result.terms);
  return result;
}

CeResult explicit_loss(const Tensor<double>& logits, const BevMap& target) {
  return cross_entropy(logits, target);
}

LossReport chain_gradients(const VoxelGrid& v0, const std::vector<Pose>& anchor_to_step,
                           const CameraIntrinsics& k, const FvSpec& fv_spec,
                           const LinearHead& fv, const LinearHead& bev,
                           const std::vector<SemanticMap>& fv_targets, const BevMap& bev_target) {
  if (anchor_to_step.empty()) throw_error(ErrorCode::EmptyWindow, "no timesteps to supervise");
  if (anchor_to_step.size() != fv_targets.size()) {
    throw_error(ErrorCode::ShapeMismatch, std::to_string(anchor_to_step.size()) +
                                              " poses vs " + std::to_string(fv_targets.size()) +
                                              " front-view targets");
  }
  const GridSpec& spec = v0.spec;
  std::size_t channels = v0.channels();
  std::size_t volume = spec.volume();
  std::size_t fv_in = channels * fv_spec.ray_count;
  std::size_t bev_in = channels * spec.ny;
  if (fv.in_dim() != fv_in || fv.bias.size() != fv.out_dim()) {
    throw_error(ErrorCode::ShapeMismatch, "front-view head shape mismatch");
  }
  if (bev.in_dim() != bev_in || bev.bias.size() != bev.out_dim()) {
    throw_error(ErrorCode::ShapeMismatch, "bird's-eye head shape mismatch");
  }
  std::size_t fv_classes = fv.out_dim();
  std::size_t bev_classes = bev.out_dim();
  for (const SemanticMap& t : fv_targets) {
    require_shape(t, {k.height, k.width}, "front-view target");
    check_target_ids(t, fv_classes);
  }
  require_shape(bev_target, {spec.nx, spec.nz}, "bird's-eye target");
  check_target_ids(bev_target, bev_classes);

  LossReport report;
  report.d_fv_weight = Tensor<double>({fv_classes, fv_in});
  report.d_fv_bias.assign(fv_classes, 0.0);
  report.d_bev_weight = Tensor<double>({bev_classes, bev_in});
  report.d_bev_bias.assign(bev_classes, 0.0);
  report.d_voxels = Tensor<double>(v0.data.shape());

  std::size_t window = anchor_to_step.size();
  WeightSchedule sched{window - 1, 1.0, 0.2};
  std::vector<double> phi(fv_in);
  std::vector<double> d_phi(fv_in);
  std::vector<double> logits(fv_classes);
  std::vector<double> softmax(fv_classes);
  std::vector<TrilinearStencil> ray_stencils(fv_spec.ray_count);

  // ---- Front-view leg: one timestep at a time, forward and backward fused.
  for (std::size_t step = 0; step < window; ++step) {
    double w_step = decay_weight(step, sched);
    const SemanticMap& target = fv_targets[step];
    std::size_t valid = count_valid(target);
    if (valid == 0) {
      throw_error(ErrorCode::EmptyTarget,
                  "front-view target " + std::to_string(step) + " is all ignore");
    }
    double grad_scale = w_step / static_cast<double>(valid);

    VoxelGrid warped = warp_grid(v0, anchor_to_step[step]);
    Tensor<double> d_warped(warped.data.shape());
    std::vector<double> cell_losses;
    cell_losses.reserve(valid);

    for (std::size_t row = 0; row < k.height; ++row) {
      for (std::size_t col = 0; col < k.width; ++col) {
        std::uint8_t t = target(row, col);
        if (t == classes::kVoid) continue;
        for (std::size_t j = 0; j < fv_spec.ray_count; ++j) {
          Vec3 p = unproject(
              k, Pixel{static_cast<double>(col), static_cast<double>(row)}, fv_spec.ray_depth(j));
          ray_stencils[j] = trilinear_stencil(spec.nx, spec.ny, spec.nz, spec.index_coords(p));
          for (std::size_t c = 0; c < channels; ++c) {
            phi[j * channels + c] = sample_slab(warped.data.data() + c * volume, ray_stencils[j]);
          }
        }
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t cls = 0; cls < fv_classes; ++cls) {
          double acc = fv.bias[cls];
          const double* wrow = fv.weight.data() + cls * fv_in;
          for (std::size_t s = 0; s < fv_in; ++s) acc += wrow[s] * phi[s];
          logits[cls] = acc;
          m = std::max(m, acc);
        }
        double sum_exp = 0.0;
        for (std::size_t cls = 0; cls < fv_classes; ++cls) {
          softmax[cls] = std::exp(logits[cls] - m);
          sum_exp += softmax[cls];
        }
        cell_losses.push_back(m + std::log(sum_exp) - logits[t]);

        std::fill(d_phi.begin(), d_phi.end(), 0.0);
        for (std::size_t cls = 0; cls < fv_classes; ++cls) {
          double g = (softmax[cls] / sum_exp - (cls == t ? 1.0 : 0.0)) * grad_scale;
          report.d_fv_bias[cls] += g;
          double* dwrow = report.d_fv_weight.data() + cls * fv_in;
          const double* wrow = fv.weight.data() + cls * fv_in;
          for (std::size_t s = 0; s < fv_in; ++s) {
            dwrow[s] += g * phi[s];
            d_phi[s] += g * wrow[s];
          }
        }
        for (std::size_t j = 0; j < fv_spec.ray_count; ++j) {
          for (std::size_t c = 0; c < channels; ++c) {
            scatter_slab(d_warped.data() + c * volume, ray_stencils[j], d_phi[j * channels + c]);
          }
        }
      }
    }
    double ce = pairwise_sum(cell_losses) / static_cast<double>(valid);
    report.fv_terms.push_back(w_step * ce);

    // Warp transpose: push d_warped back through the same resampling stencils.
    Pose source_from_target = invert(anchor_to_step[step]);
    for (std::size_t ix = 0; ix < spec.nx; ++ix) {
      for (std::size_t iy = 0; iy < spec.ny; ++iy) {
        for (std::size_t iz = 0; iz < spec.nz; ++iz) {
          Vec3 p_source = transform(source_from_target, spec.cell_center(ix, iy, iz));
          TrilinearStencil s =
              trilinear_stencil(spec.nx, spec.ny, spec.nz, spec.index_coords(p_source));
          std::size_t voxel = (ix * spec.ny + iy) * spec.nz + iz;
          for (std::size_t c = 0; c < channels; ++c) {
            scatter_slab(report.d_voxels.data() + c * volume, s, d_warped[c * volume + voxel]);
          }
        }
      }
    }
  }
  report.l_fv = pairwise_sum(report.fv_terms);

  // ---- Bird's-eye leg: affine head straight off the anchor volume.
  {
    std::size_t valid = count_valid(bev_target);
    if (valid == 0) throw_error(ErrorCode::EmptyTarget, "bird's-eye target is all ignore");
    double grad_scale = 1.0 / static_cast<double>(valid);
    std::vector<double> bev_phi(bev_in);
    std::vector<double> bev_dphi(bev_in);
    std::vector<double> bev_logits(bev_classes);
    std::vector<double> bev_softmax(bev_classes);
    std::vector<double> cell_losses;
    cell_losses.reserve(valid);
    for (std::size_t ix = 0; ix < spec.nx; ++ix) {
      for (std::size_t iz = 0; iz < spec.nz; ++iz) {
        std::uint8_t t = bev_target(ix, iz);
        if (t == classes::kVoid) continue;
        for (std::size_t iy = 0; iy < spec.ny; ++iy) {
          std::size_t voxel = (ix * spec.ny + iy) * spec.nz + iz;
          for (std::size_t c = 0; c < channels; ++c) {
            bev_phi[iy * channels + c] = v0.data[c * volume + voxel];
          }
        }
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t cls = 0; cls < bev_classes; ++cls) {
          double acc = bev.bias[cls];
          const double* wrow = bev.weight.data() + cls * bev_in;
          for (std::size_t s = 0; s < bev_in; ++s) acc += wrow[s] * bev_phi[s];
          bev_logits[cls] = acc;
          m = std::max(m, acc);
        }
        double sum_exp = 0.0;
        for (std::size_t cls = 0; cls < bev_classes; ++cls) {
          bev_softmax[cls] = std::exp(bev_logits[cls] - m);
          sum_exp += bev_softmax[cls];
        }
        cell_losses.push_back(m + std::log(sum_exp) - bev_logits[t]);

        std::fill(bev_dphi.begin(), bev_dphi.end(), 0.0);
        for (std::size_t cls = 0; cls < bev_classes; ++cls) {
          double g = (bev_softmax[cls] / sum_exp - (cls == t ? 1.0 : 0.0)) * grad_scale;
          report.d_bev_bias[cls] += g;
          double* dwrow = report.d_bev_weight.data() + cls * bev_in;
          const double* wrow = bev.weight.data() + cls * bev_in;
          for (std::size_t s = 0; s < bev_in; ++s) {
            dwrow[s] += g * bev_phi[s];
            bev_dphi[s] += g * wrow[s];
          }
        }
        for (std::size_t iy = 0; iy < spec.ny; ++iy) {
          std::size_t voxel = (ix * spec.ny + iy) * spec.nz + iz;
          for (std::size_t c = 0; c < channels; ++c) {
            report.d_voxels[c * volume + voxel] += bev_dphi[iy * channels + c];
          }
        }
      }
    }
    report.l_bev = pairwise_sum(cell_losses) / static_cast<double>(valid);
  }

  report.l_total = total_loss(report.l_fv, report.l_bev);
  return report;
}

}  // namespace bevforge
