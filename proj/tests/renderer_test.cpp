// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <optional>
#include <vector>

#include <doctest.h>

#include <rdfield/field.hpp>
#include <rdfield/renderer.hpp>
#include <rdfield/rng.hpp>

#include "renderer_internal.hpp"
#include "test_util.hpp"

using Eigen::Vector3d;
using Eigen::VectorXd;
using Eigen::VectorXi;

namespace {

rdf::RadarConfig small_radar() {
  rdf::RadarConfig config;
  config.n_range = 8;
  config.n_doppler = 8;
  config.n_antenna = 1;
  config.range_resolution = 1.0;
  config.doppler_resolution = 0.1;
  config.samples_per_ray = 16;
  config.circle_samples = 8;
  return config;
}

/// Geometry whose alpha is a constant logistic(bias) everywhere inside.
rdf::GeometryField constant_alpha_field(const Eigen::AlignedBox3d& bounds,
                                        double bias) {
  return rdf::GeometryField(bounds, {2}, 1, 2, bias);
}

}  // namespace

TEST_CASE("RadarConfig: axis helpers and validation") {
  const rdf::RadarConfig config = small_radar();
  CHECK(config.range_center(0) == doctest::Approx(0.5));
  CHECK(config.range_center(7) == doctest::Approx(7.5));
  CHECK(config.max_range() == doctest::Approx(8.0));
  // Doppler bin n/2 is exactly zero; bins are symmetric around it.
  CHECK(config.doppler_value(4) == doctest::Approx(0.0));
  CHECK(config.doppler_value(5) == doctest::Approx(0.1));
  CHECK(config.doppler_value(0) == doctest::Approx(-0.4));

  rdf::RadarConfig bad = config;
  bad.n_range = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.range_resolution = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.samples_per_ray = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("LinearSampler: slice centers without jitter, bounded with jitter") {
  std::vector<double> ts;
  rdf::LinearSampler plain(false);
  plain.sample(Vector3d::Zero(), Vector3d::UnitX(), 1.0, 5.0, 4, nullptr, &ts);
  REQUIRE(ts.size() == 4);
  CHECK(ts[0] == doctest::Approx(1.5));
  CHECK(ts[1] == doctest::Approx(2.5));
  CHECK(ts[2] == doctest::Approx(3.5));
  CHECK(ts[3] == doctest::Approx(4.5));

  rdf::Rng rng(7);
  rdf::LinearSampler jittered(true);
  ts.clear();
  jittered.sample(Vector3d::Zero(), Vector3d::UnitX(), 1.0, 5.0, 32, &rng, &ts);
  REQUIRE(ts.size() == 32);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(ts[i] >= 1.0 + i * 0.125);       // stays in its stratum
    CHECK(ts[i] <= 1.0 + (i + 1) * 0.125);
  }
}

TEST_CASE("intersect_bounds: hits, misses, interior origins, and the floor") {
  const Eigen::AlignedBox3d box(Vector3d(-1, -1, -1), Vector3d(1, 1, 1));
  double t0 = 0, t1 = 0;
  REQUIRE(rdf::intersect_bounds(box, Vector3d(-3, 0, 0), Vector3d::UnitX(), 0,
                                &t0, &t1));
  CHECK(t0 == doctest::Approx(2.0));
  CHECK(t1 == doctest::Approx(4.0));
  CHECK_FALSE(rdf::intersect_bounds(box, Vector3d(-3, 2, 0), Vector3d::UnitX(),
                                    0, &t0, &t1));
  // From inside, entry is clipped to the floor.
  REQUIRE(rdf::intersect_bounds(box, Vector3d::Zero(), Vector3d::UnitZ(), 0.25,
                                &t0, &t1));
  CHECK(t0 == doctest::Approx(0.25));
  CHECK(t1 == doctest::Approx(1.0));
  // Axis-parallel ray outside the slab misses.
  CHECK_FALSE(rdf::intersect_bounds(box, Vector3d(0, 5, 0), Vector3d::UnitX(),
                                    0, &t0, &t1));
}

TEST_CASE("composite_bins: three closed-form amplitude cases") {
  rdf::RadarConfig config = small_radar();
  VectorXd amplitude, trans(config.n_range);

  SUBCASE("unit bin at range 4: amplitude is exactly 1/16") {
    VectorXd bar_alpha = VectorXd::Zero(8), bar_c = VectorXd::Zero(8),
             bar_r = VectorXd::Zero(8);
    VectorXi count = VectorXi::Zero(8);
    bar_alpha[4] = 1.0;
    bar_c[4] = 1.0;
    bar_r[4] = 4.0;
    count[4] = 1;
    rdf::internal::composite_bins(bar_alpha, bar_c, bar_r, count, config,
                                  &amplitude, &trans);
    CHECK(amplitude[4] == 0.0625);  // 1 * 1 * 1 / 4^2, exact in binary
    CHECK(trans[4] == 1.0);
    for (int b = 0; b < 8; ++b) {
      if (b != 4) CHECK(amplitude[b] == 0.0);
    }
  }

  SUBCASE("two occupied bins: squared transmittance after a half-opaque bin") {
    VectorXd bar_alpha = VectorXd::Zero(8), bar_c = VectorXd::Zero(8),
             bar_r = VectorXd::Zero(8);
    VectorXi count = VectorXi::Zero(8);
    bar_alpha[2] = 0.5;
    bar_c[2] = 0.5;
    bar_r[2] = 2.0;
    count[2] = 1;
    bar_alpha[5] = 1.0;
    bar_c[5] = 1.0;
    bar_r[5] = 2.0;
    count[5] = 1;
    rdf::internal::composite_bins(bar_alpha, bar_c, bar_r, count, config,
                                  &amplitude, &trans);
    // Bin 2: 0.5 * 0.5 / 4 = 0.0625 with full transmittance.
    CHECK(amplitude[2] == 0.0625);
    // Bin 5 sees T = (1 - 0.5)^2 = 0.25 (two-way attenuation): 0.25 / 4.
    CHECK(trans[5] == 0.25);
    CHECK(amplitude[5] == 0.0625);
  }

  SUBCASE("near-field clamp: bin ranges floor at a quarter bin width") {
    VectorXd bar_alpha = VectorXd::Zero(8), bar_c = VectorXd::Zero(8),
             bar_r = VectorXd::Zero(8);
    VectorXi count = VectorXi::Zero(8);
    bar_alpha[0] = 0.0625;
    bar_c[0] = 0.0625;
    bar_r[0] = 0.1;  // clamps to 0.25 * range_resolution = 0.25
    count[0] = 1;
    rdf::internal::composite_bins(bar_alpha, bar_c, bar_r, count, config,
                                  &amplitude, &trans);
    CHECK(amplitude[0] == 0.0625);  // 0.0625 * 0.0625 / 0.25^2
  }

  SUBCASE("empty bins leave the transmittance untouched") {
    VectorXd bar_alpha = VectorXd::Constant(8, 0.9), bar_c = VectorXd::Ones(8),
             bar_r = VectorXd::LinSpaced(8, 0.5, 7.5);
    VectorXi count = VectorXi::Ones(8);
    count[3] = 0;  // a gap in the ray's sample coverage
    rdf::internal::composite_bins(bar_alpha, bar_c, bar_r, count, config,
                                  &amplitude, &trans);
    CHECK(amplitude[3] == 0.0);
    CHECK(trans[4] == trans[3]);  // the gap attenuates nothing at all
    CHECK(trans[3] ==
          doctest::Approx(trans[2] * 0.01).epsilon(1e-12));  // bin 2 does
  }
}

TEST_CASE("eval_radar_ray: per-bin averages of a constant-alpha field") {
  const Eigen::AlignedBox3d bounds(Vector3d(-10, -10, -10), Vector3d(10, 10, 10));
  const rdf::GeometryField geometry = constant_alpha_field(bounds, 0.0);
  rdf::RadarConfig config = small_radar();
  const rdf::RadarSceneRefs refs{&geometry, nullptr, nullptr, nullptr};

  // Two samples in bin 1, one in bin 3; alpha = logistic(0) = 0.5 everywhere.
  const std::vector<double> ts{1.25, 1.75, 3.5};
  rdf::internal::RayEval eval;
  rdf::internal::eval_radar_ray(refs, Vector3d::Zero(), Vector3d::UnitX(), ts,
                                config, false, &eval);
  CHECK(eval.count[1] == 2);
  CHECK(eval.count[3] == 1);
  CHECK(eval.bar_r[1] == doctest::Approx(1.5));
  CHECK(eval.bar_r[3] == doctest::Approx(3.5));
  CHECK(eval.bar_alpha[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eval.bar_c[1] == doctest::Approx(1.0));  // no appearance model

  // Amplitudes agree with the shared compositing core.
  VectorXd amplitude, trans(config.n_range);
  rdf::internal::composite_bins(eval.bar_alpha, eval.bar_c, eval.bar_r,
                                eval.count, config, &amplitude, &trans);
  CHECK((eval.amplitude - amplitude).norm() < 1e-15);

  SUBCASE("samples at or beyond max range are dropped") {
    std::vector<double> with_far = ts;
    with_far.push_back(config.max_range());
    with_far.push_back(config.max_range() + 3.0);
    rdf::internal::RayEval eval2;
    rdf::internal::eval_radar_ray(refs, Vector3d::Zero(), Vector3d::UnitX(),
                                  with_far, config, false, &eval2);
    CHECK((eval2.amplitude - eval.amplitude).norm() < 1e-15);
  }
}

TEST_CASE("render_amplitude_along_ray: gain is a linear multiplier") {
  const Eigen::AlignedBox3d bounds(Vector3d(-10, -10, -10), Vector3d(10, 10, 10));
  const rdf::GeometryField geometry = constant_alpha_field(bounds, 0.0);
  rdf::RadarConfig config = small_radar();
  const rdf::RadarSceneRefs refs{&geometry, nullptr, nullptr, nullptr};
  const std::vector<double> ts{4.0};

  const VectorXd unit =
      rdf::render_amplitude_along_ray(refs, Vector3d::Zero(), Vector3d::UnitX(),
                                      ts, 1.0, config);
  const VectorXd doubled =
      rdf::render_amplitude_along_ray(refs, Vector3d::Zero(), Vector3d::UnitX(),
                                      ts, 2.0, config);
  // Single sample at r = 4 with alpha 0.5: amplitude = 0.5 / 16; gain 2
  // makes the textbook 1/16.
  CHECK(unit[4] == doctest::Approx(0.03125).epsilon(1e-12));
  CHECK(doubled[4] == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK((doubled - 2.0 * unit).norm() < 1e-15);
}

TEST_CASE("render_doppler_column: zeros outside the reachable Doppler band") {
  auto config = rdtest::small_field_config();
  rdf::SceneField field(config);
  rdf::Rng rng(3);
  field.randomize(&rng);
  const rdf::RadarSceneRefs refs{&field.geometry_radar, &field.radar_appearance,
                                 &field.normals, &field.gains};
  rdf::RadarConfig radar = small_radar();
  radar.n_antenna = 2;

  rdf::SensorState state;
  state.position = Vector3d(-1.5, 0, 0);
  state.velocity = Vector3d(0.2, 0, 0);  // speed 0.2 < |doppler_value(0)| = 0.4
  const rdf::LinearSampler sampler(false);
  const VectorXd y =
      rdf::render_doppler_column(refs, state, 0, 0, radar, sampler, 99);
  CHECK(y.norm() == doctest::Approx(0.0));

  SUBCASE("the same seed reproduces the same column bit for bit") {
    rdf::LinearSampler jittered(true);
    const VectorXd a =
        rdf::render_doppler_column(refs, state, 5, 1, radar, jittered, 1234);
    const VectorXd b =
        rdf::render_doppler_column(refs, state, 5, 1, radar, jittered, 1234);
    const VectorXd c =
        rdf::render_doppler_column(refs, state, 5, 1, radar, jittered, 1235);
    CHECK((a - b).norm() == 0.0);
    CHECK((a - c).norm() > 0.0);  // different stream actually changes samples
  }
}

TEST_CASE("render_frame: column isolation, worker invariance, degeneracy") {
  auto config = rdtest::small_field_config();
  rdf::SceneField field(config);
  rdf::Rng rng(5);
  field.randomize(&rng);
  const rdf::RadarSceneRefs refs{&field.geometry_radar, &field.radar_appearance,
                                 &field.normals, &field.gains};
  rdf::RadarConfig radar = small_radar();
  radar.n_antenna = 2;
  radar.n_doppler = 6;

  rdf::SensorState state;
  state.position = Vector3d(-1.2, 0.3, 0);
  state.base_rotation = Eigen::Quaterniond::Identity();
  state.velocity = Vector3d(0.35, 0.1, 0);
  const rdf::LinearSampler sampler(true);

  const auto frame = rdf::render_frame(refs, state, 0.0, radar, sampler,
                                       /*seed=*/77, /*n_workers=*/1);
  REQUIRE(frame.has_value());
  CHECK(frame->n_range == radar.n_range);
  CHECK(frame->n_doppler == 6);
  CHECK(frame->n_antenna == 2);

  SUBCASE("per-column renders with the frame's column seeds match the cube") {
    for (int j = 0; j < radar.n_doppler; ++j) {
      for (int k = 0; k < radar.n_antenna; ++k) {
        const VectorXd column = rdf::render_doppler_column(
            refs, state, j, k, radar, sampler,
            rdf::internal::column_seed(77, j));
        for (int i = 0; i < radar.n_range; ++i) {
          CHECK(frame->at(i, j, k) == column[i]);
        }
      }
    }
  }

  SUBCASE("worker count does not change a single bit") {
    const auto multi = rdf::render_frame(refs, state, 0.0, radar, sampler, 77,
                                         /*n_workers=*/3);
    REQUIRE(multi.has_value());
    for (std::size_t i = 0; i < frame->cube.size(); ++i) {
      CHECK(frame->cube[i] == multi->cube[i]);
    }
  }

  SUBCASE("a crawling sensor cannot be rendered") {
    rdf::SensorState slow = state;
    slow.velocity = Vector3d(1e-5, 0, 0);
    CHECK_FALSE(
        rdf::render_frame(refs, slow, 0.0, radar, sampler, 77, 1).has_value());
  }
}

TEST_CASE("render_doppler_column_backward: analytic gradients vs finite "
          "differences") {
  auto config = rdtest::small_field_config();
  rdf::SceneField field(config);
  rdf::Rng rng(9);
  field.randomize(&rng);
  // Keep every contributing sample away from the retroreflectance kink:
  // normals lean hard against +x while the rays travel roughly +x.
  for (int level = 0; level < field.normals.grid().n_levels(); ++level) {
    auto& data = field.normals.grid().level_data(level);
    const int res = field.normals.grid().level_resolution(level);
    for (int v = 0; v < res * res * res; ++v) {
      data[3 * v + 0] = -1.0 + 0.05 * rng.uniform(-1, 1);
      data[3 * v + 1] = 0.05 * rng.uniform(-1, 1);
      data[3 * v + 2] = 0.05 * rng.uniform(-1, 1);
    }
  }
  rdf::ParamRegistry registry;
  field.register_params(&registry);

  rdf::RadarConfig radar = small_radar();
  radar.n_antenna = 2;
  radar.n_range = 6;
  radar.range_resolution = 0.5;
  radar.samples_per_ray = 8;
  radar.circle_samples = 6;

  rdf::SensorState state;
  state.position = Vector3d(-1.4, 0.2, 0.1);
  state.velocity = Vector3d(0.4, 0.05, 0);
  state.delta_theta = Vector3d(0.02, -0.01, 0.03);
  const rdf::LinearSampler sampler(false);
  const rdf::RadarSceneRefs refs{&field.geometry_radar, &field.radar_appearance,
                                 &field.normals, &field.gains};

  const int j = 5, k = 1;  // doppler_value(5) = 0.1, within the speed
  const uint64_t seed = 4242;
  VectorXd weights(radar.n_range);
  rdf::Rng wrng(11);
  for (int i = 0; i < radar.n_range; ++i) weights[i] = wrng.uniform(-1, 1);

  rdf::GradientTape tape(registry);
  rdf::render_doppler_column_backward(refs, state, j, k, radar, sampler, seed,
                                      weights, &tape, nullptr);
  const auto loss = [&] {
    return weights.dot(
        rdf::render_doppler_column(refs, state, j, k, radar, sampler, seed));
  };
  // Spot-check a spread of parameters from every block (full FD over all
  // parameters is the acceptance suite's job).
  std::vector<std::size_t> indices;
  for (std::size_t b = 0; b < registry.n_blocks(); ++b) {
    const auto& block = registry.block(b);
    for (std::size_t q = 0; q < std::min<std::size_t>(block.size, 4); ++q) {
      indices.push_back(block.offset + (block.size / 5) * q + q % 2);
    }
  }
  CHECK(rdtest::worst_grad_error(registry, tape, loss, indices, 1e-4) < 1e-3);
}

TEST_CASE("camera ray: compositing oracle and gradients") {
  const Eigen::AlignedBox3d bounds(Vector3d(-5, -5, -5), Vector3d(5, 5, 5));
  SUBCASE("constant field composites to the closed-form opacity") {
    const rdf::GeometryField geometry = constant_alpha_field(bounds, 0.0);
    const rdf::CameraSceneRefs refs{&geometry, nullptr};  // white appearance
    const std::vector<double> ts{0.5, 1.0, 1.5, 2.0};
    Vector3d rgb;
    double depth = 0, wsum = 0;
    rdf::render_camera_ray(refs, Vector3d(-4, 0, 0), Vector3d::UnitX(), ts,
                           &rgb, &depth, &wsum);
    // alpha = 0.5 per sample: total weight 1 - (1/2)^4 = 0.9375.
    CHECK(wsum == doctest::Approx(0.9375).epsilon(1e-12));
    CHECK(rgb[0] == doctest::Approx(0.9375).epsilon(1e-12));
    // Depth = sum w_i t_i / sum w_i with w = (1/2, 1/4, 1/8, 1/16).
    const double want =
        (0.5 * 0.5 + 0.25 * 1.0 + 0.125 * 1.5 + 0.0625 * 2.0) / 0.9375;
    CHECK(depth == doctest::Approx(want).epsilon(1e-12));
  }

  SUBCASE("gradients through geometry and appearance") {
    auto config = rdtest::small_field_config();
    rdf::SceneField field(config);
    rdf::Rng rng(13);
    field.randomize(&rng);
    rdf::ParamRegistry registry;
    field.register_params(&registry);
    const rdf::CameraSceneRefs refs{&field.geometry_camera,
                                    &field.camera_appearance};
    const Vector3d origin(-1.8, 0.2, 0.1);
    const Vector3d dir = Vector3d(1, 0.15, -0.1).normalized();
    std::vector<double> ts;
    rdf::LinearSampler(false).sample(origin, dir, 0.2, 3.5, 12, nullptr, &ts);

    const Vector3d dL_drgb(0.7, -0.3, 0.5);
    rdf::GradientTape tape(registry);
    rdf::render_camera_ray_backward(refs, origin, dir, ts, dL_drgb, &tape);
    const auto loss = [&] {
      Vector3d rgb;
      double depth = 0;
      rdf::render_camera_ray(refs, origin, dir, ts, &rgb, &depth);
      return dL_drgb.dot(rgb);
    };
    std::vector<std::size_t> indices;
    for (std::size_t b = 0; b < registry.n_blocks(); ++b) {
      const auto& block = registry.block(b);
      const std::string& name = block.name;
      if (name.rfind("camera_geometry", 0) != 0 &&
          name.rfind("camera_appearance", 0) != 0) {
        continue;  // the camera path reads only these
      }
      for (std::size_t q = 0; q < std::min<std::size_t>(block.size, 6); ++q) {
        indices.push_back(block.offset + (block.size / 7) * q);
      }
    }
    CHECK(rdtest::worst_grad_error(registry, tape, loss, indices, 1e-4) < 1e-3);
  }
}

TEST_CASE("render_camera_image: deterministic and shaped correctly") {
  auto config = rdtest::small_field_config();
  rdf::SceneField field(config);
  rdf::Rng rng(15);
  field.randomize(&rng);
  const rdf::CameraSceneRefs refs{&field.geometry_camera,
                                  &field.camera_appearance};
  rdf::CameraIntrinsics cam;
  cam.width = 12;
  cam.height = 10;
  cam.fx = cam.fy = 12;
  cam.cx = 6;
  cam.cy = 5;
  rdf::SensorState state;
  state.position = Vector3d(-1.9, 0, 0);
  const rdf::LinearSampler sampler(true);
  const auto a = rdf::render_camera_image(refs, state, cam, 10, sampler, 5, 1);
  const auto b = rdf::render_camera_image(refs, state, cam, 10, sampler, 5, 2);
  CHECK(a.width == 12);
  CHECK(a.height == 10);
  CHECK(a.rgb.size() == 12 * 10 * 3);
  for (std::size_t i = 0; i < a.rgb.size(); ++i) CHECK(a.rgb[i] == b.rgb[i]);
}

TEST_CASE("render_range_azimuth: a lone target peaks in the right column") {
  // Saturate the single grid vertex closest to a point at azimuth ~10 degrees,
  // range ~2, in the z = 0 plane (17 vertices over [-4,4] puts a vertex plane
  // exactly at z = 0, where the zero-elevation rays travel).
  const Eigen::AlignedBox3d bounds(Vector3d(-4, -4, -4), Vector3d(4, 4, 4));
  rdf::GeometryField geometry(bounds, {17}, 1, 2, -9.0);
  const double az_nominal = 10.0 * M_PI / 180.0;
  const Vector3d target(2.0 * std::cos(az_nominal), 2.0 * std::sin(az_nominal),
                        0.0);
  auto& data = geometry.grid().level_data(0);
  const int res = 17;
  int best = -1;
  double best_d = 1e9;
  Vector3d best_pos = Vector3d::Zero();
  for (int ix = 0; ix < res; ++ix) {
    for (int iy = 0; iy < res; ++iy) {
      for (int iz = 0; iz < res; ++iz) {
        const Vector3d v =
            bounds.min() +
            (bounds.sizes().array() * Eigen::Array3d(ix, iy, iz) / (res - 1))
                .matrix();
        const double d = (v - target).norm();
        if (d < best_d) {
          best_d = d;
          best_pos = v;
          best = static_cast<int>(
              rdf::MultiResGrid::vertex_index(res, 1, ix, iy, iz, 0));
        }
      }
    }
  }
  REQUIRE(best >= 0);
  CHECK(best_pos.z() == 0.0);
  data[best] = 50.0;

  // The density head has zero weights at construction; make it read the
  // feature directly so the blob shows up against the -9 bias.
  geometry.density_head().W(0, 0) = 1.0;

  const rdf::RadarSceneRefs refs{&geometry, nullptr, nullptr, nullptr};
  rdf::RadarConfig radar = small_radar();
  radar.n_range = 16;
  radar.range_resolution = 0.25;
  radar.samples_per_ray = 64;
  rdf::SensorState state;  // at the origin, boresight +x
  state.velocity = Vector3d(0.5, 0, 0);

  const int n_az = 33;
  const double span = 60.0 * M_PI / 180.0;
  const Eigen::MatrixXd map = rdf::render_range_azimuth(
      refs, state, n_az, span, 4, radar, rdf::LinearSampler(false), 3, 1);
  CHECK(map.rows() == 16);
  CHECK(map.cols() == n_az);

  int peak_row = 0, peak_col = 0;
  map.maxCoeff(&peak_row, &peak_col);
  // +azimuth is toward +y; the peak column must bracket the vertex azimuth.
  const double bin_width = span / n_az;
  const double col_center = -span / 2 + (peak_col + 0.5) * bin_width;
  const double az_vertex = std::atan2(best_pos.y(), best_pos.x());
  CHECK(std::abs(col_center - az_vertex) <= bin_width);
  // ... and the peak row must straddle the vertex range.
  const double row_center = (peak_row + 0.5) * radar.range_resolution;
  CHECK(std::abs(row_center - best_pos.norm()) <= 2 * radar.range_resolution);
}
