// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include <rdfield/losses.hpp>
#include <rdfield/optim.hpp>
#include <rdfield/sampler.hpp>

#include "test_util.hpp"

using Eigen::Vector3d;
using Eigen::VectorXd;

TEST_CASE("interval_bounds: midpoints capped by the ray interval") {
  std::vector<double> bounds;
  rdf::interval_bounds({1.0, 2.0, 4.0}, 0.5, 5.0, &bounds);
  REQUIRE(bounds.size() == 4);
  CHECK(bounds[0] == 0.5);
  CHECK(bounds[1] == doctest::Approx(1.5));
  CHECK(bounds[2] == doctest::Approx(3.0));
  CHECK(bounds[3] == 5.0);

  rdf::interval_bounds({2.0}, 1.0, 3.0, &bounds);
  REQUIRE(bounds.size() == 2);
  CHECK(bounds[0] == 1.0);
  CHECK(bounds[1] == 3.0);
}

TEST_CASE("composite_weights: values and adjoint") {
  VectorXd alphas(3);
  alphas << 0.5, 0.5, 1.0;
  VectorXd w;
  rdf::composite_weights(alphas, &w);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == 0.5);
  CHECK(w[1] == 0.25);
  CHECK(w[2] == 0.25);
  CHECK(w.sum() == doctest::Approx(1.0));

  SUBCASE("backward matches finite differences of a random projection") {
    rdf::Rng rng(21);
    VectorXd a(6), dL_dw(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = rng.uniform(0.05, 0.95);
      dL_dw[i] = rng.uniform(-1, 1);
    }
    VectorXd dL_da;
    rdf::composite_weights_backward(a, dL_dw, &dL_da);
    REQUIRE(dL_da.size() == 6);
    for (int i = 0; i < 6; ++i) {
      const double fd = rdtest::finite_difference(&a[i], 1e-6, [&] {
        VectorXd ww;
        rdf::composite_weights(a, &ww);
        return dL_dw.dot(ww);
      });
      CHECK(rdtest::rel_err(dL_da[i], fd) < 1e-6);
    }
  }
}

TEST_CASE("resample_from_weights: determinism, order, and mass tracking") {
  const std::vector<double> bounds{0.0, 1.0, 2.0, 3.0};
  VectorXd weights(3);
  weights << 0.0, 100.0, 0.0;

  SUBCASE("no jitter is a pure function of the inputs") {
    std::vector<double> a, b;
    rdf::resample_from_weights(bounds, weights, 16, 0.05, false, nullptr, &a);
    rdf::resample_from_weights(bounds, weights, 16, 0.05, false, nullptr, &b);
    CHECK(a == b);
    CHECK(std::is_sorted(a.begin(), a.end()));
    // With 5% of the mass uniform, at least 90% of draws land in the hot bin.
    const auto inside = std::count_if(
        a.begin(), a.end(), [](double t) { return t >= 1.0 && t <= 2.0; });
    CHECK(inside >= 14);
  }

  SUBCASE("jittered draws stay sorted and in range") {
    rdf::Rng rng(5);
    std::vector<double> out;
    rdf::resample_from_weights(bounds, weights, 64, 0.05, true, &rng, &out);
    REQUIRE(out.size() == 64);
    CHECK(std::is_sorted(out.begin(), out.end()));
    CHECK(out.front() >= 0.0);
    CHECK(out.back() <= 3.0);
  }

  SUBCASE("zero weights degrade to uniform stratification") {
    std::vector<double> out;
    rdf::resample_from_weights(bounds, VectorXd::Zero(3), 6, 0.05, false,
                               nullptr, &out);
    REQUIRE(out.size() == 6);
    for (int i = 0; i < 6; ++i) {
      CHECK(out[i] == doctest::Approx((i + 0.5) * 0.5));  // stratum centers
    }
  }
}

TEST_CASE("ProposalField: initialization, support, and gradients") {
  const Eigen::AlignedBox3d bounds(Vector3d(-1, -1, -1), Vector3d(1, 1, 1));
  rdf::ProposalField proposal(bounds, 4, -3.0);
  const double init = 1.0 / (1.0 + std::exp(3.0));
  CHECK(proposal.query_alpha(Vector3d(0.2, -0.3, 0.4)) ==
        doctest::Approx(init).epsilon(1e-12));
  CHECK(proposal.query_alpha(Vector3d(1.5, 0, 0)) == 0.0);

  rdf::ParamRegistry registry;
  proposal.register_params(&registry, "proposal/coarse");
  REQUIRE(registry.n_blocks() == 1);
  CHECK(registry.block(0).name == "proposal/coarse/level0");

  rdf::Rng rng(31);
  auto& data = proposal.grid().level_data(0);
  for (int i = 0; i < data.size(); ++i) data[i] = rng.uniform(-2, 2);

  const Vector3d x(0.37, -0.21, 0.64);
  rdf::GradientTape tape(registry);
  proposal.accumulate_gradient(x, proposal.query_alpha(x), 1.0, &tape);
  const auto loss = [&] { return proposal.query_alpha(x); };
  CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-6);
}

TEST_CASE("ProposalSampler: hierarchy, trace consistency, determinism") {
  const Eigen::AlignedBox3d bounds(Vector3d(-1, -1, -1), Vector3d(9, 1, 1));
  rdf::ProposalField coarse(bounds, 8), fine(bounds, 16);
  // Give the proposals real structure: a hot slab around x in [4, 6].
  rdf::Rng rng(41);
  for (rdf::ProposalField* p : {&coarse, &fine}) {
    auto& data = p->grid().level_data(0);
    const int res = p->grid().level_resolution(0);
    for (int ix = 0; ix < res; ++ix) {
      const double x = -1.0 + 10.0 * ix / (res - 1);
      const double logit = (x > 4.0 && x < 6.0) ? 2.0 : -4.0;
      for (int iy = 0; iy < res; ++iy) {
        for (int iz = 0; iz < res; ++iz) {
          data[rdf::MultiResGrid::vertex_index(res, 1, ix, iy, iz, 0)] =
              logit + 0.1 * rng.uniform(-1, 1);
        }
      }
    }
  }

  const rdf::ProposalSampler sampler(&coarse, &fine, 16, 24, true, 0.05);
  const Vector3d origin(-0.5, 0, 0);
  const Vector3d dir = Vector3d::UnitX();

  std::vector<double> ts, ts2;
  rdf::ProposalTrace trace;
  rdf::Rng rng_a(77), rng_b(77);
  sampler.sample_with_trace(origin, dir, 0.1, 9.0, 12, &rng_a, &ts, &trace);
  sampler.sample(origin, dir, 0.1, 9.0, 12, &rng_b, &ts2);
  CHECK(ts == ts2);  // the trace variant must not disturb the draw
  REQUIRE(ts.size() == 12);
  CHECK(std::is_sorted(ts.begin(), ts.end()));
  CHECK(ts.front() >= 0.1);
  CHECK(ts.back() <= 9.0);

  REQUIRE(trace.levels.size() == 2);
  CHECK(trace.levels[0].ts.size() == 16);  // coarse first
  CHECK(trace.levels[1].ts.size() == 24);
  for (const auto& level : trace.levels) {
    REQUIRE(level.bounds.size() == level.ts.size() + 1);
    REQUIRE(level.alpha.size() == static_cast<long>(level.ts.size()));
    REQUIRE(level.weight.size() == level.alpha.size());
    VectorXd expect_w;
    rdf::composite_weights(level.alpha, &expect_w);
    CHECK((level.weight - expect_w).norm() < 1e-14);
  }
  // The recorded alphas are real field evaluations at the recorded positions.
  for (std::size_t i = 0; i < trace.levels[0].ts.size(); ++i) {
    const Vector3d x = origin + trace.levels[0].ts[i] * dir;
    CHECK(trace.levels[0].alpha[static_cast<long>(i)] ==
          doctest::Approx(coarse.query_alpha(x)).epsilon(1e-12));
  }
  // Most final samples should chase the hot slab at x in [4, 6].
  const auto hot = std::count_if(ts.begin(), ts.end(), [&](double t) {
    const double x = origin.x() + t;
    return x > 3.5 && x < 6.5;
  });
  CHECK(hot >= 8);
}

TEST_CASE("loss_interlevel: brute-force oracle and proposal gradients") {
  rdf::Rng rng(55);
  // Random strictly increasing partitions of [0, 10].
  const auto partition = [&](int n) {
    std::vector<double> b{0.0};
    for (int i = 0; i < n; ++i) b.push_back(b.back() + rng.uniform(0.05, 1.0));
    const double scale = 10.0 / b.back();
    for (double& v : b) v *= scale;
    return b;
  };
  const std::vector<double> fine_bounds = partition(17);
  const std::vector<double> coarse_bounds = partition(9);
  VectorXd w_fine(16), w_coarse(8);
  for (int i = 0; i < 16; ++i) w_fine[i] = rng.uniform(0.01, 0.2);
  for (int j = 0; j < 8; ++j) w_coarse[j] = rng.uniform(0.0, 0.15);

  const double got =
      rdf::loss_interlevel(fine_bounds, w_fine, coarse_bounds, w_coarse, 1.0,
                           nullptr);
  double want = 0.0;
  for (int i = 0; i < 16; ++i) {
    double bound = 0.0;
    for (int j = 0; j < 8; ++j) {
      if (coarse_bounds[j] < fine_bounds[i + 1] &&
          coarse_bounds[j + 1] > fine_bounds[i]) {
        bound += w_coarse[j];
      }
    }
    const double excess = w_fine[i] - bound;
    if (excess > 0) want += excess * excess / w_fine[i];
  }
  CHECK(got == doctest::Approx(want).epsilon(1e-12));

  SUBCASE("gradient w.r.t. the coarse weights") {
    const double scale = 0.7;
    VectorXd dL_dw = VectorXd::Zero(8);
    rdf::loss_interlevel(fine_bounds, w_fine, coarse_bounds, w_coarse, scale,
                         &dL_dw);
    for (int j = 0; j < 8; ++j) {
      const double fd = rdtest::finite_difference(&w_coarse[j], 1e-6, [&] {
        return scale * rdf::loss_interlevel(fine_bounds, w_fine, coarse_bounds,
                                            w_coarse, 1.0, nullptr);
      });
      CHECK(rdtest::rel_err(dL_dw[j], fd, 1e-7) < 1e-5);
    }
  }
}

TEST_CASE("masked_l1: sums, counts, and signed gradients") {
  VectorXd pred(4), target(4);
  pred << 1.0, 2.0, 3.0, 4.0;
  target << 1.5, 2.0, 5.0, 1.0;
  const uint8_t mask[4] = {1, 1, 0, 1};
  double loss = 0.0;
  std::size_t count = 0;
  VectorXd grad = VectorXd::Zero(4);
  rdf::masked_l1(pred, target, mask, 2.0, &loss, &count, &grad);
  CHECK(loss == doctest::Approx(0.5 + 0.0 + 3.0));  // masked cell excluded
  CHECK(count == 3);
  CHECK(grad[0] == -2.0);  // sign(-0.5) * scale
  CHECK(grad[1] == 0.0);
  CHECK(grad[2] == 0.0);  // masked out
  CHECK(grad[3] == 2.0);

  // A null mask means every cell participates.
  loss = 0.0;
  count = 0;
  rdf::masked_l1(pred, target, nullptr, 1.0, &loss, &count, nullptr);
  CHECK(count == 4);
  CHECK(loss == doctest::Approx(5.5));
}

TEST_CASE("bce_occupancy_sum: minimum at agreement, FD gradients") {
  VectorXd alpha_c(3);
  alpha_c << 0.2, 0.5, 0.8;

  // Gradient vanishes where prediction equals target.
  VectorXd grad = VectorXd::Zero(3);
  rdf::bce_occupancy_sum(alpha_c, alpha_c, 1.0, &grad);
  CHECK(grad.norm() < 1e-9);

  VectorXd alpha_r(3);
  alpha_r << 0.4, 0.3, 0.6;
  grad.setZero();
  const double scale = 1.3;
  rdf::bce_occupancy_sum(alpha_r, alpha_c, scale, &grad);
  for (int i = 0; i < 3; ++i) {
    const double fd = rdtest::finite_difference(&alpha_r[i], 1e-6, [&] {
      return scale * rdf::bce_occupancy_sum(alpha_r, alpha_c, 1.0, nullptr);
    });
    CHECK(rdtest::rel_err(grad[i], fd) < 1e-5);
  }
}

TEST_CASE("normals losses: zeros at agreement, gradients elsewhere") {
  const Eigen::AlignedBox3d bounds(Vector3d(-1, -1, -1), Vector3d(1, 1, 1));
  rdf::NormalField normals(bounds, {4});
  rdf::ParamRegistry registry;
  normals.register_params(&registry, "normals/grid");
  rdf::Rng rng(61);
  auto& data = normals.grid().level_data(0);
  for (int i = 0; i < data.size(); ++i) data[i] = rng.uniform(-1, 1);

  const std::vector<Vector3d> xs{Vector3d(0.1, 0.2, -0.3),
                                 Vector3d(-0.4, 0.5, 0.1)};

  SUBCASE("reference loss is zero when targets equal the field") {
    std::vector<Vector3d> targets;
    for (const auto& x : xs) {
      rdf::NormalField::Eval eval;
      normals.query(x, &eval);
      targets.push_back(eval.n);
    }
    CHECK(rdf::loss_normals_reference(normals, xs, targets, 1.0, nullptr) ==
          doctest::Approx(0.0));

    targets[0] = Vector3d::UnitX();
    rdf::GradientTape tape(registry);
    const double w = 0.8;
    const double loss =
        rdf::loss_normals_reference(normals, xs, targets, w, &tape);
    CHECK(loss > 0.0);
    const auto recompute = [&] {
      return w * rdf::loss_normals_reference(normals, xs, targets, 1.0, nullptr);
    };
    CHECK(rdtest::worst_grad_error(registry, tape, recompute) < 1e-5);
  }

  SUBCASE("orientation loss penalizes normals facing down-ray") {
    rdf::NormalField::Eval eval;
    normals.query(xs[0], &eval);
    const std::vector<Vector3d> omegas{eval.n, -eval.n};
    const std::vector<double> weights{1.0, 1.0};
    rdf::GradientTape tape(registry);
    const double loss = rdf::loss_normals_orientation(
        normals, {xs[0], xs[0]}, weights, omegas, 1.0, &tape);
    // First point: n . omega = 1 -> max^2 = 1. Second: -1 -> 0. Mean = 0.5.
    CHECK(loss == doctest::Approx(0.5).epsilon(1e-9));
    const auto recompute = [&] {
      return rdf::loss_normals_orientation(normals, {xs[0], xs[0]}, weights,
                                           omegas, 1.0, nullptr);
    };
    CHECK(rdtest::worst_grad_error(registry, tape, recompute) < 1e-4);
  }

  SUBCASE("gradient-alignment loss follows the density downhill direction") {
    auto config = rdtest::small_field_config();
    rdf::GeometryField geometry(config.bounds, config.resolutions,
                                config.feature_dim, config.code_dim, -1.0);
    rdf::Rng grng(67);
    geometry.randomize(&grng, 0.5, 0.5);
    const std::vector<double> weights{0.7, 0.4};
    rdf::GradientTape tape(registry);
    const double loss = rdf::loss_normals_gradient(normals, geometry, xs,
                                                   weights, 1.0, &tape);
    CHECK(loss >= 0.0);
    const auto recompute = [&] {
      return rdf::loss_normals_gradient(normals, geometry, xs, weights, 1.0,
                                        nullptr);
    };
    // Only the normal field learns from this loss; density is stop-grad.
    CHECK(rdtest::worst_grad_error(registry, tape, recompute) < 1e-4);
  }
}

TEST_CASE("pose_regularizers: consistent motion is free, offsets are not") {
  // A straight constant-velocity track: every kinematic term vanishes.
  std::vector<rdf::FrameState> frames;
  const Vector3d v(0.3, -0.1, 0.05);
  for (int i = 0; i < 40; ++i) {
    rdf::FrameState f;
    f.time = 0.1 * i;
    f.pose.position = Vector3d(1, 2, 3) + f.time * v;
    f.velocity = v;
    frames.push_back(f);
  }
  rdf::Trajectory trajectory(frames);
  rdf::ParamRegistry registry;
  trajectory.register_params(&registry, true);

  rdf::PoseRegConfig cfg;
  {
    rdf::GradientTape tape(registry);
    const auto terms = rdf::pose_regularizers(trajectory, cfg, &tape);
    CHECK(terms.offsets == doctest::Approx(0.0));
    CHECK(terms.velocity == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(terms.acceleration == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(terms.kinematic == doctest::Approx(0.0).epsilon(1e-10));
  }

  // Perturb a few offsets; the terms light up and the gradient matches FD.
  rdf::Rng rng(71);
  for (std::size_t i : {3ul, 17ul, 29ul}) {
    trajectory.set_offsets(
        i, Vector3d(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 0),
        Vector3d(0, 0, rng.uniform(-0.05, 0.05)),
        Vector3d(rng.uniform(-0.05, 0.05), 0, 0));
  }
  rdf::GradientTape tape(registry);
  const auto terms = rdf::pose_regularizers(trajectory, cfg, &tape);
  CHECK(terms.weighted(cfg) > 0.0);

  const auto recompute = [&] {
    return rdf::pose_regularizers(trajectory, cfg, nullptr).weighted(cfg);
  };
  // Restrict to the offsets block: the regularizers treat scale as constant.
  std::vector<std::size_t> indices;
  const auto& offsets_block = registry.block(0);
  REQUIRE(offsets_block.name == "trajectory/offsets");
  for (std::size_t q = 0; q < offsets_block.size; q += 13) {
    indices.push_back(offsets_block.offset + q);
  }
  CHECK(rdtest::worst_grad_error(registry, tape, recompute, indices, 1e-6) <
        1e-5);
}

TEST_CASE("Optimizer: convergence, freezing, and schedules") {
  // Quadratic bowl: f(x) = 0.5 ||x - a||^2, gradient x - a.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd a(4);
  a << 1.0, -2.0, 0.5, 3.0;
  rdf::ParamRegistry registry;
  registry.add_block("x", x.data(), 4);

  SUBCASE("Adam walks into the minimum") {
    rdf::Optimizer opt(&registry);
    opt.set_default_lr(0.05);
    for (int it = 0; it < 400; ++it) {
      rdf::GradientTape tape(registry);
      for (int i = 0; i < 4; ++i) tape.accumulate(i, x[i] - a[i]);
      opt.step(tape);
    }
    CHECK((x - a).norm() < 1e-3);
    CHECK(opt.step_count() == 400);
  }

  SUBCASE("a zero block rate freezes parameters exactly") {
    rdf::Optimizer opt(&registry);
    opt.set_default_lr(0.05);
    opt.set_block_lr("x", 0.0);
    rdf::GradientTape tape(registry);
    for (int i = 0; i < 4; ++i) tape.accumulate(i, 1.0);
    opt.step(tape);
    CHECK(x.norm() == 0.0);
    CHECK(opt.resolved_lr(0) == 0.0);
  }

  SUBCASE("block rules match whole names and slash-separated prefixes") {
    rdf::ParamRegistry reg2;
    double d[4] = {0, 0, 0, 0};
    reg2.add_block("field/grid", d, 1);
    reg2.add_block("field/grid_extras", d + 1, 1);  // not a path child
    reg2.add_block("field/grid/level0", d + 2, 1);
    reg2.add_block("pose", d + 3, 1);
    rdf::Optimizer opt(&reg2);
    opt.set_default_lr(1.0);
    opt.set_block_lr("field/grid", 0.25);
    CHECK(opt.resolved_lr(0) == 0.25);  // exact match
    CHECK(opt.resolved_lr(1) == 1.0);   // "_extras" is not a path child
    CHECK(opt.resolved_lr(2) == 0.25);  // "field/grid/..." prefix
    CHECK(opt.resolved_lr(3) == 1.0);
    opt.set_block_lr("field/grid/level0", 0.5);  // later rules win
    CHECK(opt.resolved_lr(2) == 0.5);
    opt.set_lr_scale(0.5);
    CHECK(opt.resolved_lr(0) == 0.125);
  }

  SUBCASE("exponential schedule hits both endpoints and decays smoothly") {
    CHECK(rdf::exponential_lr(1e-2, 1e-4, 0, 100) == doctest::Approx(1e-2));
    CHECK(rdf::exponential_lr(1e-2, 1e-4, 100, 100) == doctest::Approx(1e-4));
    CHECK(rdf::exponential_lr(1e-2, 1e-4, 50, 100) == doctest::Approx(1e-3));
    CHECK(rdf::exponential_lr(1e-2, 1e-4, 200, 100) == doctest::Approx(1e-4));
  }
}

TEST_CASE("GradientTape: merge and double-finalize guard") {
  rdf::ParamRegistry registry;
  double d[3] = {0, 0, 0};
  registry.add_block("b", d, 3);
  rdf::GradientTape a(registry), b(registry);
  a.accumulate(0, 1.0);
  b.accumulate(0, 2.0);
  b.accumulate(2, -1.0);
  a.add(b);
  CHECK(a.grad()[0] == 3.0);
  CHECK(a.grad()[1] == 0.0);
  CHECK(a.grad()[2] == -1.0);

  a.finalize(0.5);
  CHECK(a.consumed());
  CHECK(a.loss() == 0.5);
  CHECK_THROWS_AS(a.finalize(0.5), std::logic_error);
  a.reset();
  CHECK_FALSE(a.consumed());
  CHECK(a.grad().norm() == 0.0);
}
