#include <algorithm>
#include <cmath>

#include "bevforge/gradcheck.hpp"
#include "bevforge/rng.hpp"
#include "bevforge/supervision.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bevforge;

namespace {

Tensor<double> random_logits(std::size_t k, std::size_t h, std::size_t w, Rng& rng) {
  Tensor<double> t({k, h, w});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

SemanticMap random_target(std::size_t h, std::size_t w, std::size_t k, double void_rate,
                          Rng& rng) {
  SemanticMap m({h, w});
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = rng.uniform() < void_rate ? classes::kVoid
                                     : static_cast<std::uint8_t>(rng.below(k));
  }
  return m;
}

}  // namespace

TEST_CASE("decay weights hit the schedule endpoints exactly") {
  WeightSchedule sched{10, 1.0, 0.2};
  CHECK(decay_weight(0, sched) == 1.0);
  CHECK(decay_weight(10, sched) == 0.2);
  CHECK(decay_weight(5, sched) == doctest::Approx(0.6).epsilon(1e-12));

  WeightSchedule degenerate{0, 1.0, 0.2};
  CHECK(decay_weight(0, degenerate) == 1.0);

  WeightSchedule shifted{4, 2.0, 1.0};
  CHECK(decay_weight(0, shifted) == 2.0);
  CHECK(decay_weight(4, shifted) == 1.0);
  CHECK(decay_weight(1, shifted) == doctest::Approx(1.75).epsilon(1e-12));

  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(decay_weight(i, sched) > decay_weight(i + 1, sched));
  }
  CHECK_ERROR_CODE(decay_weight(11, sched), ErrorCode::IndexOutOfWindow);
}

TEST_CASE("uniform logits cost ln K") {
  Tensor<double> logits({2, 1, 1});
  SemanticMap target({1, 1});
  target(0, 0) = 0;
  CeResult res = cross_entropy(logits, target);
  CHECK(res.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(res.valid_cells == 1);

  Tensor<double> wide({8, 2, 2});
  SemanticMap road({2, 2});
  CeResult uniform = cross_entropy(wide, road);
  CHECK(uniform.loss == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("a saturated correct logit costs nearly nothing") {
  Tensor<double> logits({2, 1, 1});
  logits(0, 0, 0) = 30.0;
  SemanticMap target({1, 1});
  target(0, 0) = 0;
  CeResult res = cross_entropy(logits, target);
  CHECK(res.loss >= 0.0);
  CHECK(res.loss < 1e-12);
}

TEST_CASE("cross entropy input validation") {
  Tensor<double> logits({2, 2, 2});
  SemanticMap all_void({2, 2}, classes::kVoid);
  CHECK_ERROR_CODE(cross_entropy(logits, all_void), ErrorCode::EmptyTarget);

  SemanticMap corrupt({2, 2});
  corrupt(0, 0) = 5;  // id beyond K = 2, not the ignore byte
  CHECK_ERROR_CODE(cross_entropy(logits, corrupt), ErrorCode::InvalidValue);

  SemanticMap wrong_shape({2, 3});
  CHECK_ERROR_CODE(cross_entropy(logits, wrong_shape), ErrorCode::ShapeMismatch);
  Tensor<double> flat({2, 2});
  SemanticMap target({2, 2});
  CHECK_ERROR_CODE(cross_entropy(flat, target), ErrorCode::ShapeMismatch);
}

TEST_CASE("cross entropy matches the naive oracle and its gradient is consistent") {
  Rng rng(2024);
  Tensor<double> logits = random_logits(3, 4, 5, rng);
  SemanticMap target = random_target(4, 5, 3, 0.25, rng);
  CeResult res = cross_entropy(logits, target);
  CHECK(res.loss == doctest::Approx(oracle::cross_entropy(logits, target)).epsilon(1e-12));

  // Per-cell gradient columns sum to zero for valid cells, are zero for
  // ignored ones.
  std::size_t cells = 4 * 5;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    double column = 0.0;
    for (std::size_t k = 0; k < 3; ++k) column += res.grad[k * cells + cell];
    if (target[cell] == classes::kVoid) {
      for (std::size_t k = 0; k < 3; ++k) CHECK(res.grad[k * cells + cell] == 0.0);
    } else {
      CHECK(std::abs(column) < 1e-12);
    }
  }

  // Central finite differences on the loss reproduce the analytic gradient.
  double h = 1e-4;
  double worst = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    Tensor<double> bumped = logits;
    bumped[i] = logits[i] + h;
    double up = cross_entropy(bumped, target).loss;
    bumped[i] = logits[i] - h;
    double down = cross_entropy(bumped, target).loss;
    double fd = (up - down) / (2.0 * h);
    double denom = std::max({std::abs(fd), std::abs(res.grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - res.grad[i]) / denom);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("implicit loss applies the decay schedule") {
  Rng rng(88);
  Tensor<double> logits = random_logits(3, 3, 4, rng);
  SemanticMap target = random_target(3, 4, 3, 0.2, rng);
  double ce = cross_entropy(logits, target).loss;

  // Single timestep: weight one.
  ImplicitLossResult single = implicit_loss({logits}, {target}, WeightSchedule{0, 1.0, 0.2});
  CHECK(single.loss == doctest::Approx(ce).epsilon(1e-12));
  CHECK(single.weights == std::vector<double>{1.0});

  // Two equal timesteps: 1.0 * c + 0.2 * c.
  ImplicitLossResult pair =
      implicit_loss({logits, logits}, {target, target}, WeightSchedule{1, 1.0, 0.2});
  CHECK(pair.loss == doctest::Approx(1.2 * ce).epsilon(1e-12));

  // Gradients carry the timestep weight.
  CeResult plain = cross_entropy(logits, target);
  for (std::size_t i = 0; i < plain.grad.size(); ++i) {
    CHECK(pair.grads[1][i] == doctest::Approx(0.2 * plain.grad[i]).epsilon(1e-12));
  }
}

TEST_CASE("implicit loss equals the brute-force weighted sum") {
  Rng rng(89);
  std::vector<Tensor<double>> logits;
  std::vector<SemanticMap> targets;
  for (std::size_t i = 0; i < 5; ++i) {
    logits.push_back(random_logits(4, 5, 6, rng));
    targets.push_back(random_target(5, 6, 4, 0.3, rng));
  }
  ImplicitLossResult res = implicit_loss(logits, targets, WeightSchedule{4, 1.0, 0.2});
  CHECK(res.loss == doctest::Approx(oracle::weighted_fv_sum(logits, targets)).epsilon(1e-9));
  CHECK(res.terms.size() == 5);
  double term_sum = pairwise_sum(res.terms);
  CHECK(res.loss == doctest::Approx(term_sum).epsilon(1e-15));
}

TEST_CASE("implicit loss rejects inconsistent windows") {
  Rng rng(90);
  Tensor<double> logits = random_logits(2, 2, 2, rng);
  SemanticMap target = random_target(2, 2, 2, 0.0, rng);
  CHECK_ERROR_CODE(implicit_loss({}, {}, WeightSchedule{0, 1.0, 0.2}), ErrorCode::EmptyWindow);
  CHECK_ERROR_CODE(implicit_loss({logits}, {target, target}, WeightSchedule{0, 1.0, 0.2}),
                   ErrorCode::ShapeMismatch);
  CHECK_ERROR_CODE(implicit_loss({logits, logits}, {target, target}, WeightSchedule{5, 1.0, 0.2}),
                   ErrorCode::ShapeMismatch);
}

TEST_CASE("explicit loss is plain cross entropy and the legs add") {
  Tensor<double> logits({8, 2, 2});
  BevMap target({2, 2}, classes::kRoad);
  CeResult res = explicit_loss(logits, target);
  CHECK(res.loss == doctest::Approx(std::log(8.0)).epsilon(1e-12));

  double l_fv = std::log(2.0), l_bev = std::log(8.0);
  CHECK(total_loss(l_fv, l_bev) == l_fv + l_bev);
  CHECK(total_loss(l_fv, l_bev) == doctest::Approx(std::log(16.0)).epsilon(1e-12));
}

TEST_CASE("chain gradients: zero heads reduce the bias gradient to closed form") {
  GradCheckInstance inst = make_gradcheck_instance(31);
  inst.fv_head.weight.fill(0.0);
  inst.bev_head.weight.fill(0.0);
  LossReport report =
      chain_gradients(inst.v0, inst.anchor_to_step, inst.camera, inst.fv_spec, inst.fv_head,
                      inst.bev_head, inst.fv_targets, inst.bev_target);

  // Logits equal the bias everywhere, so d bias_k = sum_i w_i * (softmax(bias)_k
  // - class_frequency_i(k)) for the front-view leg.
  std::size_t n_class = inst.fv_head.out_dim();
  std::vector<double> p(n_class);
  double m = *std::max_element(inst.fv_head.bias.begin(), inst.fv_head.bias.end());
  double z = 0.0;
  for (std::size_t k = 0; k < n_class; ++k) z += std::exp(inst.fv_head.bias[k] - m);
  for (std::size_t k = 0; k < n_class; ++k) p[k] = std::exp(inst.fv_head.bias[k] - m) / z;

  WeightSchedule sched{inst.anchor_to_step.size() - 1, 1.0, 0.2};
  std::vector<double> expected(n_class, 0.0);
  for (std::size_t i = 0; i < inst.fv_targets.size(); ++i) {
    const SemanticMap& t = inst.fv_targets[i];
    std::size_t valid = 0;
    std::vector<std::size_t> counts(n_class, 0);
    for (std::size_t c = 0; c < t.size(); ++c) {
      if (t[c] == classes::kVoid) continue;
      ++valid;
      ++counts[t[c]];
    }
    double w = decay_weight(i, sched);
    for (std::size_t k = 0; k < n_class; ++k) {
      expected[k] += w * (p[k] - static_cast<double>(counts[k]) / static_cast<double>(valid));
    }
  }
  for (std::size_t k = 0; k < n_class; ++k) {
    CHECK(report.d_fv_bias[k] == doctest::Approx(expected[k]).epsilon(1e-9));
  }

  // With zero weights no gradient reaches the volume.
  for (std::size_t i = 0; i < report.d_voxels.size(); ++i) CHECK(report.d_voxels[i] == 0.0);
}

TEST_CASE("chain gradients: totals decompose over the two legs") {
  GradCheckInstance inst = make_gradcheck_instance(32);
  LossReport report =
      chain_gradients(inst.v0, inst.anchor_to_step, inst.camera, inst.fv_spec, inst.fv_head,
                      inst.bev_head, inst.fv_targets, inst.bev_target);
  CHECK(report.l_total == report.l_fv + report.l_bev);
  CHECK(report.fv_terms.size() == inst.anchor_to_step.size());
  CHECK(report.l_fv == doctest::Approx(pairwise_sum(report.fv_terms)).epsilon(1e-15));
  CHECK(report.l_total == doctest::Approx(composed_loss(inst)).epsilon(1e-9));
}

TEST_CASE("voxel gradient support stays inside the observing stencils") {
  GradCheckInstance inst = make_gradcheck_instance(33);
  // One valid front-view pixel, identity warp, silent bev leg: the only
  // gradient into the volume flows through that pixel's ray stencils.
  inst.anchor_to_step = {Pose::identity()};
  inst.fv_targets = {SemanticMap({inst.camera.height, inst.camera.width}, classes::kVoid)};
  std::size_t row = 2, col = 3;
  inst.fv_targets[0](row, col) = 0;
  inst.bev_head.weight.fill(0.0);

  LossReport report =
      chain_gradients(inst.v0, inst.anchor_to_step, inst.camera, inst.fv_spec, inst.fv_head,
                      inst.bev_head, inst.fv_targets, inst.bev_target);

  const GridSpec& spec = inst.v0.spec;
  std::size_t volume = spec.volume();
  std::size_t nonzero = 0;
  for (std::size_t c = 0; c < inst.v0.channels(); ++c) {
    for (std::size_t ix = 0; ix < spec.nx; ++ix) {
      for (std::size_t iy = 0; iy < spec.ny; ++iy) {
        for (std::size_t iz = 0; iz < spec.nz; ++iz) {
          std::size_t flat = ((c * spec.nx + ix) * spec.ny + iy) * spec.nz + iz;
          if (report.d_voxels[flat] == 0.0) continue;
          ++nonzero;
          // The voxel must carry weight in some ray sample of the pixel.
          bool supported = false;
          for (std::size_t j = 0; j < inst.fv_spec.ray_count && !supported; ++j) {
            Vec3 point =
                unproject(inst.camera,
                          Pixel{static_cast<double>(col), static_cast<double>(row)},
                          inst.fv_spec.ray_depth(j));
            TrilinearStencil s =
                trilinear_stencil(spec.nx, spec.ny, spec.nz, spec.index_coords(point));
            std::size_t target = (ix * spec.ny + iy) * spec.nz + iz;
            for (std::size_t corner = 0; corner < 8; ++corner) {
              if (s.valid[corner] && s.offsets[corner] == target && s.weights[corner] > 0.0) {
                supported = true;
                break;
              }
            }
          }
          CHECK(supported);
        }
      }
    }
  }
  CHECK(nonzero > 0);
  CHECK(nonzero < volume);
}

TEST_CASE("finite differences confirm every analytic gradient block") {
  GradCheckReport report = run_gradcheck(7);
  REQUIRE(report.rows.size() == 5);
  CHECK(report.rows[0].name == "fv_weight");
  CHECK(report.rows[1].name == "fv_bias");
  CHECK(report.rows[2].name == "bev_weight");
  CHECK(report.rows[3].name == "bev_bias");
  CHECK(report.rows[4].name == "voxels");
  for (const GradCheckRow& row : report.rows) {
    CHECK(row.analytic_norm > 0.0);
    CHECK(row.max_rel_err < 1e-3);
  }
  CHECK(report.pass());

  std::string table = format_gradcheck(report);
  CHECK(table.find("fv_weight") != std::string::npos);
  CHECK(table.find("voxels") != std::string::npos);
}
