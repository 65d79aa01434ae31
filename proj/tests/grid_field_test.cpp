// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <doctest.h>

#include <rdfield/field.hpp>
#include <rdfield/grid.hpp>
#include <rdfield/params.hpp>
#include <rdfield/rng.hpp>
#include <rdfield/sh.hpp>

#include "test_util.hpp"

using Eigen::AlignedBox3d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

AlignedBox3d unit_box() {
  return AlignedBox3d(Vector3d(-1, -1, -1), Vector3d(1, 1, 1));
}

}  // namespace

TEST_CASE("MultiResGrid: vertex queries reproduce stored features exactly") {
  rdf::MultiResGrid grid(unit_box(), {3}, 2);
  rdf::Rng rng(5);
  for (long i = 0; i < grid.level_data(0).size(); ++i) {
    grid.level_data(0)[i] = rng.uniform(-1, 1);
  }
  // Vertex (ix, iy, iz) of a resolution-3 level sits at -1 + index * 1.0.
  for (int ix = 0; ix < 3; ++ix) {
    for (int iy = 0; iy < 3; ++iy) {
      for (int iz = 0; iz < 3; ++iz) {
        VectorXd feat;
        REQUIRE(grid.query(Vector3d(-1 + ix, -1 + iy, -1 + iz), &feat));
        for (int f = 0; f < 2; ++f) {
          const std::size_t idx = rdf::MultiResGrid::vertex_index(3, 2, ix, iy, iz, f);
          CHECK(feat[f] == doctest::Approx(grid.level_data(0)[idx]).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("MultiResGrid: cell-center query averages the 8 corners") {
  rdf::MultiResGrid grid(unit_box(), {2}, 1);  // one cell spanning the box
  double sum = 0;
  for (long i = 0; i < 8; ++i) {
    grid.level_data(0)[i] = 0.125 * (i + 1);
    sum += grid.level_data(0)[i];
  }
  VectorXd feat;
  REQUIRE(grid.query(Vector3d::Zero(), &feat));
  CHECK(feat[0] == doctest::Approx(sum / 8).epsilon(1e-12));
}

TEST_CASE("MultiResGrid: queries outside the bounds return the zero feature") {
  rdf::MultiResGrid grid(unit_box(), {2, 4}, 2);
  grid.fill(3.0);
  VectorXd feat;
  CHECK_FALSE(grid.query(Vector3d(1.5, 0, 0), &feat));
  CHECK(feat.size() == grid.total_feature_dim());
  CHECK(feat.norm() == doctest::Approx(0.0));
  CHECK_FALSE(grid.contains(Vector3d(0, -1.01, 0)));
  CHECK(grid.contains(Vector3d(0.99, 0.99, -0.99)));
}

TEST_CASE("MultiResGrid: spatial derivatives match finite differences") {
  rdf::MultiResGrid grid(unit_box(), {3, 5}, 2);
  rdf::Rng rng(17);
  for (int level = 0; level < grid.n_levels(); ++level) {
    for (long i = 0; i < grid.level_data(level).size(); ++i) {
      grid.level_data(level)[i] = rng.uniform(-1, 1);
    }
  }
  const Vector3d x(0.37, -0.21, 0.64);  // generic interior point
  VectorXd feat;
  Eigen::Matrix<double, Eigen::Dynamic, 3> dfeat;
  REQUIRE(grid.query(x, &feat, &dfeat));
  const double h = 1e-6;
  for (int axis = 0; axis < 3; ++axis) {
    Vector3d up = x, down = x;
    up[axis] += h;
    down[axis] -= h;
    VectorXd fu, fd;
    grid.query(up, &fu);
    grid.query(down, &fd);
    const VectorXd want = (fu - fd) / (2 * h);
    CHECK((dfeat.col(axis) - want).norm() < 1e-6);
  }
}

TEST_CASE("MultiResGrid: accumulate_gradient is the adjoint of query") {
  rdf::MultiResGrid grid(unit_box(), {3, 4}, 2);
  rdf::ParamRegistry registry;
  grid.register_params(&registry, "grid");
  rdf::Rng rng(23);
  for (int level = 0; level < grid.n_levels(); ++level) {
    for (long i = 0; i < grid.level_data(level).size(); ++i) {
      grid.level_data(level)[i] = rng.uniform(-1, 1);
    }
  }
  const Vector3d x(-0.13, 0.42, 0.78);
  VectorXd dL_dfeat(grid.total_feature_dim());
  for (long i = 0; i < dL_dfeat.size(); ++i) dL_dfeat[i] = rng.uniform(-1, 1);

  rdf::GradientTape tape(registry);
  grid.accumulate_gradient(x, dL_dfeat, &tape);
  const auto loss = [&] {
    VectorXd feat;
    grid.query(x, &feat);
    return dL_dfeat.dot(feat);
  };
  CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-6);
}

TEST_CASE("MultiResGrid: set_bounds moves the mapping, not the data") {
  rdf::MultiResGrid grid(unit_box(), {4}, 1);
  rdf::Rng rng(29);
  for (long i = 0; i < grid.level_data(0).size(); ++i) {
    grid.level_data(0)[i] = rng.uniform(-1, 1);
  }
  const Vector3d x(0.31, -0.62, 0.05);
  VectorXd before;
  grid.query(x, &before);
  const double s = 2.5;
  grid.set_bounds(AlignedBox3d(s * unit_box().min(), s * unit_box().max()));
  VectorXd after;
  grid.query(s * x, &after);  // same relative position in the box
  CHECK((before - after).norm() < 1e-12);
}

TEST_CASE("WrappedGrid2D: periodic azimuth, clamped elevation, exact vertices") {
  rdf::WrappedGrid2D grid(8, 4, -0.5, 0.5);
  rdf::Rng rng(31);
  for (long i = 0; i < grid.data().size(); ++i) grid.data()[i] = rng.uniform(-1, 1);

  SUBCASE("azimuth wraps with period 2 pi") {
    for (int trial = 0; trial < 10; ++trial) {
      const double az = rng.uniform(-3, 3), el = rng.uniform(-0.5, 0.5);
      CHECK(grid.query(az, el) ==
            doctest::Approx(grid.query(az + 2 * M_PI, el)).epsilon(1e-12));
      CHECK(grid.query(az, el) ==
            doctest::Approx(grid.query(az - 2 * M_PI, el)).epsilon(1e-12));
    }
  }
  SUBCASE("elevation clamps at the grid edges") {
    const double az = 1.1;
    CHECK(grid.query(az, 0.9) == doctest::Approx(grid.query(az, 0.5)));
    CHECK(grid.query(az, -0.9) == doctest::Approx(grid.query(az, -0.5)));
  }
  SUBCASE("angular derivatives match finite differences") {
    const double az = 0.73, el = 0.12, h = 1e-6;
    double daz = 0, del = 0;
    grid.query(az, el, &daz, &del);
    CHECK(rdtest::rel_err(daz, (grid.query(az + h, el) - grid.query(az - h, el)) /
                                   (2 * h), 1e-6) < 1e-5);
    CHECK(rdtest::rel_err(del, (grid.query(az, el + h) - grid.query(az, el - h)) /
                                   (2 * h), 1e-6) < 1e-5);
  }
  SUBCASE("gradient scatter is the adjoint of query") {
    rdf::ParamRegistry registry;
    grid.register_params(&registry, "gain0");
    rdf::GradientTape tape(registry);
    const double az = -2.2, el = 0.31;
    grid.accumulate_gradient(az, el, 1.0, &tape);
    const auto loss = [&] { return grid.query(az, el); };
    CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-6);
  }
}

TEST_CASE("AffineHead: apply and gradient accumulation") {
  rdf::AffineHead head;
  head.init(2, 3);
  rdf::Rng rng(37);
  head.randomize(&rng, 0.5);
  rdf::ParamRegistry registry;
  head.register_params(&registry, "head");

  VectorXd in(3), dL_dout(2);
  for (int i = 0; i < 3; ++i) in[i] = rng.uniform(-1, 1);
  for (int i = 0; i < 2; ++i) dL_dout[i] = rng.uniform(-1, 1);

  CHECK((head.apply(in) - (head.W * in + head.b)).norm() < 1e-15);

  rdf::GradientTape tape(registry);
  VectorXd dL_din = VectorXd::Zero(3);
  head.accumulate_gradient(in, dL_dout, &tape, &dL_din);
  const auto loss = [&] { return dL_dout.dot(head.apply(in)); };
  CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-6);
  CHECK((dL_din - head.W.transpose() * dL_dout).norm() < 1e-12);
}

TEST_CASE("GeometryField: alpha is the squashed head output, zero outside") {
  rdf::GeometryField field(unit_box(), {3}, 2, 4, /*density_bias_init=*/0.0);
  // Zero grid features + zero head weights + bias 0 => alpha = logistic(0).
  rdf::GeometryField::Sample s;
  field.query(Vector3d(0.2, 0.1, -0.3), &s);
  CHECK(s.inside);
  CHECK(s.alpha == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.code.size() == 4);

  field.query(Vector3d(2, 0, 0), &s);
  CHECK_FALSE(s.inside);
  CHECK(s.alpha == doctest::Approx(0.0));
  CHECK(field.query_alpha(Vector3d(2, 0, 0)) == doctest::Approx(0.0));
}

TEST_CASE("GeometryField: gradients (parameters and spatial) check out") {
  rdf::GeometryField field(unit_box(), {3, 4}, 2, 3, -0.5);
  rdf::Rng rng(41);
  field.randomize(&rng, 0.8, 0.6);
  rdf::ParamRegistry registry;
  field.register_params(&registry, "geo");

  const Vector3d x(0.27, -0.44, 0.11);
  rdf::GeometryField::Sample s;
  field.query(x, &s);
  REQUIRE(s.inside);

  VectorXd dL_dcode(3);
  for (int i = 0; i < 3; ++i) dL_dcode[i] = rng.uniform(-1, 1);
  const double dL_dalpha = 0.7;

  rdf::GradientTape tape(registry);
  field.accumulate_gradient(x, s, dL_dalpha, &dL_dcode, &tape);
  const auto loss = [&] {
    rdf::GeometryField::Sample q;
    field.query(x, &q);
    return dL_dalpha * q.alpha + dL_dcode.dot(q.code);
  };
  CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-5);

  SUBCASE("query_alpha spatial derivative") {
    Vector3d dalpha_dx;
    field.query_alpha(x, &dalpha_dx);
    const double h = 1e-6;
    for (int axis = 0; axis < 3; ++axis) {
      Vector3d up = x, down = x;
      up[axis] += h;
      down[axis] -= h;
      const double fd = (field.query_alpha(up) - field.query_alpha(down)) / (2 * h);
      CHECK(rdtest::rel_err(dalpha_dx[axis], fd, 1e-7) < 1e-4);
    }
  }
}

TEST_CASE("distill_into copies the camera geometry verbatim") {
  auto config = rdtest::small_field_config();
  rdf::GeometryField src(config.bounds, config.resolutions, config.feature_dim,
                         config.code_dim);
  rdf::GeometryField dst(config.bounds, config.resolutions, config.feature_dim,
                         config.code_dim);
  rdf::Rng rng(43);
  src.randomize(&rng, 1.0, 0.7);
  rdf::distill_into(src, &dst);
  rdf::Rng probe(44);
  for (int trial = 0; trial < 30; ++trial) {
    const Vector3d x(probe.uniform(-2, 2), probe.uniform(-2, 2),
                     probe.uniform(-1, 1));
    rdf::GeometryField::Sample a, b;
    src.query(x, &a);
    dst.query(x, &b);
    CHECK(a.alpha == doctest::Approx(b.alpha).epsilon(1e-15));
    CHECK((a.code - b.code).norm() < 1e-15);
  }
}

TEST_CASE("brdf_bases: closed-form values and the retro lobe shape") {
  const auto config = rdf::BRDFConfig::geometric(3, 0.1, 1.0);
  REQUIRE(config.count() == 3);
  // Roughnesses are geometrically spaced between the endpoints.
  CHECK(config.roughnesses.front() == doctest::Approx(0.1));
  CHECK(config.roughnesses.back() == doctest::Approx(1.0));

  VectorXd beta;
  // Perfect retro-reflection (omega exactly opposing the normal): beta = 1.
  rdf::brdf_bases(config, -1.0, &beta);
  for (int i = 0; i < 3; ++i) CHECK(beta[i] == doctest::Approx(1.0).epsilon(1e-12));
  // Grazing and beyond: the away-facing side is flat at exp(-1/rho).
  rdf::brdf_bases(config, 0.3, &beta);
  for (int i = 0; i < 3; ++i) {
    CHECK(beta[i] == doctest::Approx(std::exp(-1.0 / config.roughnesses[i])));
  }
  // Halfway: exp(-(1/rho) * 0.5).
  rdf::brdf_bases(config, -0.5, &beta);
  for (int i = 0; i < 3; ++i) {
    CHECK(beta[i] == doctest::Approx(std::exp(-0.5 / config.roughnesses[i])));
  }
  // Sharper roughness decays faster away from the retro direction.
  CHECK(beta[0] < beta[2]);

  SUBCASE("derivative matches finite differences away from the kink") {
    VectorXd dbeta;
    rdf::brdf_bases(config, -0.4, &beta, &dbeta);
    const double h = 1e-7;
    VectorXd up, down;
    rdf::brdf_bases(config, -0.4 + h, &up);
    rdf::brdf_bases(config, -0.4 - h, &down);
    for (int i = 0; i < 3; ++i) {
      CHECK(rdtest::rel_err(dbeta[i], (up[i] - down[i]) / (2 * h), 1e-9) < 1e-5);
    }
  }
}

TEST_CASE("RadarAppearance: positivity, activations, and gradients") {
  const auto brdf = rdf::BRDFConfig::geometric(4, 0.05, 2.0);
  rdf::RadarAppearance app(3, brdf, 2, true);
  rdf::Rng rng(47);
  app.randomize(&rng, 0.5);

  VectorXd code(3);
  code << 0.3, -0.2, 0.5;
  const Vector3d omega = Vector3d(1, 0.2, -0.1).normalized();
  const Vector3d normal = Vector3d(-1, -0.1, 0.2).normalized();  // u < 0
  rdf::RadarAppearance::Eval eval;
  app.query(code, omega, normal, &eval);
  CHECK(eval.c_r >= 0.0);
  CHECK(eval.u == doctest::Approx(omega.dot(normal)));
  CHECK(eval.input.size() == app.input_dim());
  CHECK(app.input_dim() == 3 + 4 + rdf::sh_basis_size(2));

  SUBCASE("exp activation exponentiates the head output") {
    rdf::RadarAppearance app_exp(3, brdf, 2, true,
                                 rdf::RadarAppearance::Activation::kExp);
    rdf::RadarAppearance::Eval e;
    app_exp.query(code, omega, normal, &e);
    CHECK(e.c_r == doctest::Approx(std::exp(e.z)).epsilon(1e-12));
  }

  SUBCASE("parameter and input gradients match finite differences") {
    rdf::ParamRegistry registry;
    app.register_params(&registry, "radar_appearance");
    rdf::GradientTape tape(registry);
    VectorXd dL_dcode = VectorXd::Zero(3);
    Vector3d dL_domega = Vector3d::Zero(), dL_dnormal = Vector3d::Zero();
    app.accumulate_gradient(eval, 1.0, &tape, &dL_dcode, &dL_domega, &dL_dnormal);

    const auto loss = [&] {
      rdf::RadarAppearance::Eval e;
      app.query(code, omega, normal, &e);
      return e.c_r;
    };
    CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-5);

    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      const double saved = code[i];
      code[i] = saved + h;
      rdf::RadarAppearance::Eval up;
      app.query(code, omega, normal, &up);
      code[i] = saved - h;
      rdf::RadarAppearance::Eval down;
      app.query(code, omega, normal, &down);
      code[i] = saved;
      CHECK(rdtest::rel_err(dL_dcode[i], (up.c_r - down.c_r) / (2 * h), 1e-7) <
            1e-4);
    }
  }

  SUBCASE("a hidden layer keeps gradients correct") {
    rdf::RadarAppearance deep(3, brdf, 2, true,
                              rdf::RadarAppearance::Activation::kSoftplus, 8);
    rdf::Rng r2(48);
    deep.randomize(&r2, 0.5);
    rdf::ParamRegistry registry;
    deep.register_params(&registry, "radar_appearance");
    rdf::RadarAppearance::Eval e;
    deep.query(code, omega, normal, &e);
    rdf::GradientTape tape(registry);
    deep.accumulate_gradient(e, 1.0, &tape);
    const auto loss = [&] {
      rdf::RadarAppearance::Eval q;
      deep.query(code, omega, normal, &q);
      return q.c_r;
    };
    CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-5);
  }
}

TEST_CASE("CameraAppearance: colors stay in (0,1) and gradients check out") {
  rdf::CameraAppearance app(4, 2);
  rdf::Rng rng(53);
  app.randomize(&rng, 0.8);
  VectorXd code(4);
  code << 0.1, -0.6, 0.4, 0.9;
  const Vector3d omega = Vector3d(0.3, -1, 0.2).normalized();
  rdf::CameraAppearance::Eval eval;
  app.query(code, omega, &eval);
  for (int c = 0; c < 3; ++c) {
    CHECK(eval.rgb[c] > 0.0);
    CHECK(eval.rgb[c] < 1.0);
    CHECK(eval.rgb[c] == doctest::Approx(rdf::logistic(eval.z[c])));
  }

  rdf::ParamRegistry registry;
  app.register_params(&registry, "camera_appearance");
  rdf::GradientTape tape(registry);
  const Vector3d dL_drgb(0.2, -0.7, 1.1);
  app.accumulate_gradient(eval, dL_drgb, &tape);
  const auto loss = [&] {
    rdf::CameraAppearance::Eval e;
    app.query(code, omega, &e);
    return dL_drgb.dot(e.rgb);
  };
  CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-5);
}

TEST_CASE("NormalField: unit output, +z fallback, gradients") {
  rdf::NormalField normals(unit_box(), {3, 4});
  SUBCASE("zero grid degenerates to +z with a degenerate flag") {
    rdf::NormalField::Eval eval;
    normals.query(Vector3d(0.1, 0.2, 0.3), &eval);
    CHECK(eval.degenerate);
    CHECK(eval.n.isApprox(Vector3d::UnitZ()));
  }
  SUBCASE("populated grid returns unit normals and correct gradients") {
    rdf::ParamRegistry registry;
    normals.register_params(&registry, "normals");
    rdf::Rng rng(59);
    for (int level = 0; level < normals.grid().n_levels(); ++level) {
      auto& data = normals.grid().level_data(level);
      for (long i = 0; i < data.size(); ++i) data[i] = rng.uniform(-1, 1);
    }
    const Vector3d x(0.19, -0.33, 0.41);
    rdf::NormalField::Eval eval;
    normals.query(x, &eval);
    REQUIRE_FALSE(eval.degenerate);
    CHECK(eval.n.norm() == doctest::Approx(1.0).epsilon(1e-12));

    const Vector3d dL_dn(0.4, 1.2, -0.8);
    rdf::GradientTape tape(registry);
    normals.accumulate_gradient(x, eval, dL_dn, &tape);
    const auto loss = [&] {
      rdf::NormalField::Eval e;
      normals.query(x, &e);
      return dL_dn.dot(e.n);
    };
    CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-5);
  }
}

TEST_CASE("AntennaGainModel: log storage guarantees positive gains") {
  rdf::AntennaGainModel gains(3, 8, 4);
  CHECK(gains.n_antenna() == 3);
  rdf::AntennaGainModel::Eval eval;
  // Zero log-gain grid => unit gain everywhere.
  gains.query(1, Vector3d(0.6, -0.3, 0.1).normalized(), &eval);
  CHECK(eval.gain == doctest::Approx(1.0).epsilon(1e-12));

  rdf::ParamRegistry registry;
  gains.register_params(&registry, "gains");
  rdf::Rng rng(61);
  for (int k = 0; k < 3; ++k) {
    auto& data = gains.grid(k).data();
    for (long i = 0; i < data.size(); ++i) data[i] = rng.uniform(-1, 1);
  }
  const Vector3d dir = Vector3d(0.8, 0.4, -0.2).normalized();
  gains.query(2, dir, &eval);
  CHECK(eval.gain > 0.0);
  CHECK(eval.gain == doctest::Approx(std::exp(eval.log_gain)).epsilon(1e-12));

  rdf::GradientTape tape(registry);
  Vector3d dL_ddir = Vector3d::Zero();
  gains.accumulate_gradient(2, dir, eval, 1.0, &tape, &dL_ddir);
  const auto loss = [&] {
    rdf::AntennaGainModel::Eval e;
    gains.query(2, dir, &e);
    return e.gain;
  };
  CHECK(rdtest::worst_grad_error(registry, tape, loss) < 1e-5);
}

TEST_CASE("eval_sh: band sizes, the constant band, and direction derivatives") {
  CHECK(rdf::sh_basis_size(0) == 1);
  CHECK(rdf::sh_basis_size(2) == 9);
  CHECK(rdf::sh_basis_size(4) == 25);

  std::vector<double> basis(25);
  const Vector3d dir = Vector3d(0.4, -0.7, 0.59).normalized();
  rdf::eval_sh(4, dir, basis.data());
  // Band 0 is the constant 1 / (2 sqrt(pi)).
  CHECK(basis[0] == doctest::Approx(0.5 / std::sqrt(M_PI)).epsilon(1e-12));
  // Band 1 is proportional to (y, z, x) in the real SH convention.
  const double c1 = std::sqrt(3.0 / (4.0 * M_PI));
  CHECK(basis[1] == doctest::Approx(-c1 * dir.y()).epsilon(1e-9));
  CHECK(basis[2] == doctest::Approx(c1 * dir.z()).epsilon(1e-9));
  CHECK(basis[3] == doctest::Approx(-c1 * dir.x()).epsilon(1e-9));

  SUBCASE("sum of squares per band is rotation invariant") {
    // The band-l squared norms equal (2l+1)/(4 pi) for any unit direction.
    for (int l = 0; l <= 4; ++l) {
      double sum = 0;
      for (int m = -l; m <= l; ++m) {
        const double v = basis[l * l + (m + l)];
        sum += v * v;
      }
      CHECK(sum == doctest::Approx((2 * l + 1) / (4 * M_PI)).epsilon(1e-9));
    }
  }

  SUBCASE("ambient Jacobian matches finite differences") {
    Eigen::Matrix<double, Eigen::Dynamic, 3> jac;
    rdf::eval_sh(3, dir, basis.data(), &jac);
    const double h = 1e-6;
    for (int axis = 0; axis < 3; ++axis) {
      Vector3d up = dir, down = dir;
      up[axis] += h;
      down[axis] -= h;
      std::vector<double> bu(16), bd(16);
      rdf::eval_sh(3, up, bu.data());
      rdf::eval_sh(3, down, bd.data());
      for (int i = 0; i < 16; ++i) {
        CHECK(rdtest::rel_err(jac(i, axis), (bu[i] - bd[i]) / (2 * h), 1e-6) <
              1e-4);
      }
    }
  }
}
