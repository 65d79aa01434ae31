// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include <rdfield/geometry.hpp>
#include <rdfield/params.hpp>
#include <rdfield/rng.hpp>

#include "test_util.hpp"

using Eigen::Quaterniond;
using Eigen::Vector3d;

namespace {

std::vector<rdf::FrameState> line_frames(int n, const Vector3d& start,
                                         const Vector3d& velocity, double dt) {
  std::vector<rdf::FrameState> frames(n);
  for (int i = 0; i < n; ++i) {
    frames[i].time = i * dt;
    frames[i].pose.position = start + i * dt * velocity;
    frames[i].velocity = velocity;
  }
  return frames;
}

}  // namespace

TEST_CASE("so3_exp matches Eigen's angle-axis map") {
  CHECK(rdf::so3_exp(Vector3d::Zero()).isApprox(Quaterniond::Identity()));
  rdf::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Vector3d aa(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Quaterniond got = rdf::so3_exp(aa);
    const Quaterniond want(Eigen::AngleAxisd(aa.norm(), aa.normalized()));
    CHECK(got.angularDistance(want) < 1e-12);
  }
  // Tiny angles must stay finite and first-order correct.
  const Vector3d eps(1e-12, -2e-12, 3e-13);
  const Quaterniond q = rdf::so3_exp(eps);
  CHECK(q.vec().isApprox(0.5 * eps, 1e-6));
}

TEST_CASE("rotate_with_jacobian: value and finite-difference Jacobian") {
  rdf::Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Vector3d aa(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    Vector3d u(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    Eigen::Matrix3d jac;
    const Vector3d out = rdf::rotate_with_jacobian(aa, u, &jac);
    CHECK(out.isApprox(rdf::so3_exp(aa) * u, 1e-12));
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Vector3d up = aa, down = aa;
      up[k] += h;
      down[k] -= h;
      const Vector3d fd =
          (rdf::rotate_with_jacobian(up, u) - rdf::rotate_with_jacobian(down, u)) /
          (2 * h);
      CHECK((jac.col(k) - fd).norm() < 1e-6);
    }
  }
}

TEST_CASE("direction_to_az_el on the coordinate axes") {
  double az = 0, el = 0;
  rdf::direction_to_az_el(Vector3d::UnitX(), &az, &el);
  CHECK(az == doctest::Approx(0.0));
  CHECK(el == doctest::Approx(0.0));
  rdf::direction_to_az_el(Vector3d::UnitY(), &az, &el);
  CHECK(az == doctest::Approx(M_PI / 2));
  rdf::direction_to_az_el(Vector3d::UnitZ(), &az, &el);
  CHECK(el == doctest::Approx(M_PI / 2));
  rdf::direction_to_az_el(Vector3d(-1, 0, 0), &az, &el);
  CHECK(std::abs(az) == doctest::Approx(M_PI));
}

TEST_CASE("doppler_of_point sign convention: positive when closing") {
  // Sensor at origin moving +x; a point ahead closes at the full speed.
  CHECK(rdf::doppler_of_point(Vector3d::Zero(), Vector3d(2, 0, 0),
                              Vector3d(5, 0, 0)) == doctest::Approx(2.0));
  // A point behind opens at the full speed.
  CHECK(rdf::doppler_of_point(Vector3d::Zero(), Vector3d(2, 0, 0),
                              Vector3d(-5, 0, 0)) == doctest::Approx(-2.0));
  // Perpendicular geometry has zero closing rate.
  CHECK(rdf::doppler_of_point(Vector3d::Zero(), Vector3d(2, 0, 0),
                              Vector3d(0, 3, 0)) == doctest::Approx(0.0));
}

TEST_CASE("build_doppler_circle: direction set solves <w, v> = d exactly") {
  const Vector3d v(0.7, -0.4, 0.2);
  const double d = 0.31;
  const auto circle = rdf::build_doppler_circle(v, d, 16);
  REQUIRE(circle.has_value());
  CHECK(circle->directions.size() == 16);
  for (const Vector3d& w : circle->directions) {
    CHECK(w.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.dot(v) == doctest::Approx(d).epsilon(1e-10));
  }
  // Arc measure: each sample stands for 2 pi sin(theta) / n of circumference.
  const double cos_theta = d / v.norm();
  const double sin_theta = std::sqrt(1 - cos_theta * cos_theta);
  CHECK(circle->arc_measure ==
        doctest::Approx(2 * M_PI * sin_theta / 16).epsilon(1e-12));

  SUBCASE("impossible closing rates have no circle") {
    CHECK_FALSE(rdf::build_doppler_circle(v, v.norm() * 1.01, 16).has_value());
    CHECK_FALSE(rdf::build_doppler_circle(v, -v.norm() * 1.01, 16).has_value());
  }
  SUBCASE("the grazing circle degenerates to one direction, zero measure") {
    const auto grazing = rdf::build_doppler_circle(v, v.norm(), 8);
    REQUIRE(grazing.has_value());
    CHECK(grazing->arc_measure == doctest::Approx(0.0));
    CHECK(grazing->directions.size() == 1);
    CHECK(grazing->directions[0].isApprox(v.normalized(), 1e-12));
  }
}

TEST_CASE("build_doppler_circle: velocity Jacobian matches finite differences") {
  const Vector3d v(0.9, 0.3, -0.1);
  const double d = -0.25;
  const int n = 6;
  rdf::DopplerCircleJacobian jac;
  const auto circle =
      rdf::build_doppler_circle(v, d, n, Vector3d(0, 0, 1), &jac);
  REQUIRE(circle.has_value());
  REQUIRE(jac.ddir_dvel.size() == circle->directions.size());
  const double h = 1e-6;
  for (int axis = 0; axis < 3; ++axis) {
    Vector3d up = v, down = v;
    up[axis] += h;
    down[axis] -= h;
    const auto cu = rdf::build_doppler_circle(up, d, n, Vector3d(0, 0, 1));
    const auto cd = rdf::build_doppler_circle(down, d, n, Vector3d(0, 0, 1));
    REQUIRE(cu.has_value());
    REQUIRE(cd.has_value());
    for (std::size_t m = 0; m < circle->directions.size(); ++m) {
      const Vector3d fd =
          (cu->directions[m] - cd->directions[m]) / (2 * h);
      CHECK((jac.ddir_dvel[m].col(axis) - fd).norm() < 1e-5);
    }
    const double fd_arc = (cu->arc_measure - cd->arc_measure) / (2 * h);
    CHECK(rdtest::rel_err(jac.darc_dvel[axis], fd_arc, 1e-6) < 1e-4);
  }
}

TEST_CASE("Trajectory construction enforces strictly increasing times") {
  auto frames = line_frames(4, Vector3d::Zero(), Vector3d(1, 0, 0), 0.1);
  CHECK_NOTHROW(rdf::Trajectory{frames});
  frames[2].time = frames[1].time;  // duplicate timestamp
  CHECK_THROWS_AS(rdf::Trajectory{frames}, std::invalid_argument);
  frames[2].time = frames[1].time - 0.05;  // regression
  CHECK_THROWS_AS(rdf::Trajectory{frames}, std::invalid_argument);
}

TEST_CASE("Trajectory::interpolate is linear in position/velocity, slerp in "
          "rotation") {
  auto frames = line_frames(3, Vector3d(1, 2, 3), Vector3d(0.5, 0, -0.5), 1.0);
  frames[0].pose.rotation = Quaterniond::Identity();
  frames[1].pose.rotation =
      Quaterniond(Eigen::AngleAxisd(M_PI / 2, Vector3d::UnitZ()));
  frames[2].pose.rotation =
      Quaterniond(Eigen::AngleAxisd(M_PI, Vector3d::UnitZ()));
  const rdf::Trajectory traj(frames);

  const rdf::FrameState mid = traj.interpolate(0.5);
  CHECK(mid.pose.position.isApprox(Vector3d(1.25, 2, 2.75), 1e-12));
  CHECK(mid.velocity.isApprox(frames[0].velocity, 1e-12));
  const Quaterniond want(Eigen::AngleAxisd(M_PI / 4, Vector3d::UnitZ()));
  CHECK(mid.pose.rotation.angularDistance(want) < 1e-12);

  // Exact frame times return the stored states.
  CHECK(traj.interpolate(1.0).pose.position.isApprox(frames[1].pose.position));
  CHECK_THROWS_AS(traj.interpolate(-0.5), std::out_of_range);
  CHECK_THROWS_AS(traj.interpolate(2.5), std::out_of_range);
}

TEST_CASE("Trajectory::effective applies scale and offsets") {
  auto frames = line_frames(4, Vector3d(1, 0, 0), Vector3d(0, 1, 0), 0.1);
  rdf::Trajectory traj(frames);
  traj.set_scale(2.5);
  const Vector3d dp(0.1, -0.2, 0.3), dtheta(0.02, 0.03, -0.01), dv(-0.05, 0, 0.04);
  traj.set_offsets(2, dp, dtheta, dv);

  const rdf::FrameState eff = traj.effective(2);
  CHECK(eff.pose.position.isApprox(2.5 * frames[2].pose.position + dp, 1e-12));
  CHECK(eff.velocity.isApprox(2.5 * frames[2].velocity + dv, 1e-12));
  const Quaterniond want = rdf::so3_exp(dtheta) * frames[2].pose.rotation;
  CHECK(eff.pose.rotation.angularDistance(want) < 1e-12);
  // Other frames keep zero offsets.
  CHECK(traj.effective(1).pose.position.isApprox(
      2.5 * frames[1].pose.position, 1e-12));
}

TEST_CASE("apply_scale rescales the base states and resets the dynamic scale") {
  auto frames = line_frames(3, Vector3d(1, 2, 0), Vector3d(0, 0.4, 0), 0.5);
  rdf::Trajectory traj(frames);
  traj.set_scale(3.0);
  const rdf::Trajectory scaled = rdf::apply_scale(traj, 2.0);
  CHECK(scaled.scale() == doctest::Approx(1.0));
  CHECK(scaled[1].pose.position.isApprox(2.0 * frames[1].pose.position, 1e-12));
  CHECK(scaled[1].velocity.isApprox(2.0 * frames[1].velocity, 1e-12));
  CHECK(scaled[1].time == frames[1].time);
  CHECK_THROWS_AS(rdf::apply_scale(traj, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rdf::apply_scale(traj, -1.0), std::invalid_argument);
}

TEST_CASE("Trajectory gradient accumulation matches finite differences") {
  auto frames = line_frames(5, Vector3d(0.4, -0.2, 0.1), Vector3d(0.3, 0.5, 0), 0.2);
  frames[3].pose.rotation =
      Quaterniond(Eigen::AngleAxisd(0.7, Vector3d(1, 2, -1).normalized()));
  rdf::Trajectory traj(frames);
  traj.set_scale(1.7);
  traj.set_offsets(3, Vector3d(0.05, 0, -0.02), Vector3d(0.01, -0.04, 0.02),
                   Vector3d(0, 0.03, 0));

  rdf::ParamRegistry registry;
  traj.register_params(&registry, /*include_scale=*/true);
  REQUIRE(registry.total_size() == 5 * 9 + 1);

  // Scalar probe touching position, velocity, and the rotated boresight.
  const Vector3d a(0.3, -1.1, 0.6), b(0.9, 0.2, -0.4), c(-0.5, 0.8, 1.2);
  const std::size_t i = 3;
  const auto loss = [&] {
    const rdf::FrameState f = traj.effective(i);
    return a.dot(f.pose.position) + b.dot(f.velocity) +
           c.dot(f.pose.rotation * Vector3d::UnitX());
  };

  rdf::GradientTape tape(registry);
  {
    // dL/dtheta via the chain through the left-composed offset rotation.
    Eigen::Matrix3d jac;
    rdf::rotate_with_jacobian(traj.delta_theta(i),
                              frames[i].pose.rotation * Vector3d::UnitX(), &jac);
    const Vector3d dL_dtheta = jac.transpose() * c;
    traj.accumulate_gradient(i, a, dL_dtheta, b, &tape);
  }
  CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-5);
}

TEST_CASE("Trajectory offset-only gradients skip the scale chain") {
  auto frames = line_frames(3, Vector3d(1, 1, 1), Vector3d(0.2, 0, 0), 0.1);
  rdf::Trajectory traj(frames);
  rdf::ParamRegistry registry;
  traj.register_params(&registry, /*include_scale=*/true);
  rdf::GradientTape tape(registry);
  traj.accumulate_offset_gradient(1, Vector3d(1, 2, 3), Vector3d(4, 5, 6),
                                  Vector3d(7, 8, 9), &tape);
  // Offsets of frame 1 received exactly the passed values...
  for (int k = 0; k < 9; ++k) {
    CHECK(tape.grad()[9 + k] == doctest::Approx(k + 1.0));
  }
  // ...and the scale entry (registered last) stayed untouched.
  CHECK(tape.grad()[registry.total_size() - 1] == doctest::Approx(0.0));
}
