#include "bevforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "bevforge/rng.hpp"

namespace bevforge {

namespace {

constexpr double kFdStep = 1e-4;
constexpr double kRelFloor = 1e-6;

LinearHead random_head(Rng& rng, std::size_t out_dim, std::size_t in_dim) {
  LinearHead head;
  head.weight = Tensor<double>({out_dim, in_dim});
  for (std::size_t i = 0; i < head.weight.size(); ++i) head.weight[i] = 0.5 * rng.normal();
  head.bias.resize(out_dim);
  for (double& b : head.bias) b = 0.1 * rng.normal();
  return head;
}

Tensor<std::uint8_t> random_target(Rng& rng, std::size_t rows, std::size_t cols,
                                   std::size_t n_class) {
  Tensor<std::uint8_t> target({rows, cols});
  for (std::size_t i = 0; i < target.size(); ++i) {
    // A sprinkle of ignore cells keeps the masked-mean path under test.
    target[i] = rng.below(10) == 0 ? classes::kVoid
                                   : static_cast<std::uint8_t>(rng.below(n_class));
  }
  return target;
}

// max relative error between two gradient vectors, with an absolute floor so
// near-zero pairs compare additively instead of dividing by noise.
void compare(const double* analytic, const double* fd, std::size_t n, GradCheckRow& row) {
  double a2 = 0.0, f2 = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a2 += analytic[i] * analytic[i];
    f2 += fd[i] * fd[i];
    double scale = std::max({std::abs(analytic[i]), std::abs(fd[i]), kRelFloor});
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / scale);
  }
  row.analytic_norm = std::sqrt(a2);
  row.fd_norm = std::sqrt(f2);
  row.max_rel_err = worst;
}

}  // namespace

GradCheckInstance make_gradcheck_instance(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x67726164ull));
  GradCheckInstance inst;

  GridSpec spec{4, 4, 4, 1.0, Vec3{-1.5, -1.5, 0.5}};
  const std::size_t channels = 2;
  inst.v0 = VoxelGrid::zeros(channels, spec);
  for (std::size_t i = 0; i < inst.v0.data.size(); ++i) inst.v0.data[i] = rng.normal();

  inst.camera = CameraIntrinsics{8.0, 8.0, 4.0, 3.0, 8, 6};
  inst.fv_spec = FvSpec{4, 0.75, 3.75};

  // Three timesteps: the anchor plus two gently displaced future frames.
  inst.anchor_to_step.push_back(Pose::identity());
  for (std::size_t step = 1; step <= 2; ++step) {
    double angle = 0.04 * static_cast<double>(step);
    Vec3 t{0.12 * static_cast<double>(step), 0.05, -0.25 * static_cast<double>(step)};
    inst.anchor_to_step.push_back(Pose{rotation_y(angle), t});
  }

  const std::size_t n_class = 3;
  inst.fv_head = random_head(rng, n_class, channels * inst.fv_spec.ray_count);
  inst.bev_head = random_head(rng, n_class, channels * spec.ny);
  for (std::size_t step = 0; step < inst.anchor_to_step.size(); ++step) {
    inst.fv_targets.push_back(
        random_target(rng, inst.camera.height, inst.camera.width, n_class));
  }
  inst.bev_target = random_target(rng, spec.nx, spec.nz, n_class);
  return inst;
}

double composed_loss(const GradCheckInstance& inst) {
  std::vector<Tensor<double>> logits;
  logits.reserve(inst.anchor_to_step.size());
  for (const Pose& pose : inst.anchor_to_step) {
    VoxelGrid warped = warp_grid(inst.v0, pose);
    logits.push_back(fv_head(warped, inst.camera, inst.fv_spec, inst.fv_head));
  }
  WeightSchedule sched{inst.anchor_to_step.size() - 1, 1.0, 0.2};
  ImplicitLossResult fv = implicit_loss(logits, inst.fv_targets, sched);
  CeResult bev = explicit_loss(bev_head(inst.v0, inst.bev_head), inst.bev_target);
  return total_loss(fv.loss, bev.loss);
}

GradCheckReport run_gradcheck(std::uint64_t seed) {
  GradCheckInstance inst = make_gradcheck_instance(seed);
  LossReport analytic = chain_gradients(inst.v0, inst.anchor_to_step, inst.camera, inst.fv_spec,
                                        inst.fv_head, inst.bev_head, inst.fv_targets,
                                        inst.bev_target);

  // Central differences through the composed forward ops; mutate points at
  // the live parameter, evaluate both sides, restore.
  auto fd_tensor = [&](double* values, std::size_t n, std::vector<double>& out) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double saved = values[i];
      values[i] = saved + kFdStep;
      double up = composed_loss(inst);
      values[i] = saved - kFdStep;
      double down = composed_loss(inst);
      values[i] = saved;
      out[i] = (up - down) / (2.0 * kFdStep);
    }
  };

  GradCheckReport report;
  std::vector<double> fd;
  auto add_row = [&](const std::string& name, const double* analytic_values, double* live,
                     std::size_t n) {
    fd_tensor(live, n, fd);
    GradCheckRow row;
    row.name = name;
    compare(analytic_values, fd.data(), n, row);
    report.rows.push_back(row);
    report.worst = std::max(report.worst, row.max_rel_err);
  };

  add_row("fv_weight", analytic.d_fv_weight.data(), inst.fv_head.weight.data(),
          inst.fv_head.weight.size());
  add_row("fv_bias", analytic.d_fv_bias.data(), inst.fv_head.bias.data(),
          inst.fv_head.bias.size());
  add_row("bev_weight", analytic.d_bev_weight.data(), inst.bev_head.weight.data(),
          inst.bev_head.weight.size());
  add_row("bev_bias", analytic.d_bev_bias.data(), inst.bev_head.bias.data(),
          inst.bev_head.bias.size());
  add_row("voxels", analytic.d_voxels.data(), inst.v0.data.data(), inst.v0.data.size());
  return report;
}

std::string format_gradcheck(const GradCheckReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "parameter" << std::right << std::setw(16)
      << "analytic_norm" << std::setw(16) << "fd_norm" << std::setw(16) << "max_rel_err"
      << "\n";
  out << std::scientific << std::setprecision(4);
  for (const GradCheckRow& row : report.rows) {
    out << std::left << std::setw(12) << row.name << std::right << std::setw(16)
        << row.analytic_norm << std::setw(16) << row.fd_norm << std::setw(16) << row.max_rel_err
        << "\n";
  }
  return out.str();
}

}  // namespace bevforge
