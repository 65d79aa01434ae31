// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdfield/threading.hpp"
#include "renderer_internal.hpp"

namespace rdf {
namespace {

constexpr double kLogitClamp = 9.2;  // alpha within [1e-4, 1 - 1e-4]

double logit(double p) {
  p = std::clamp(p, 1e-4, 1.0 - 1e-4);
  return std::log(p / (1.0 - p));
}

double inv_softplus(double y) {
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

// Fixed light for the synthetic camera shading (purely spatial so the
// learned color field can represent it).
const Eigen::Vector3d kLightDir = Eigen::Vector3d(0.35, 0.25, 0.9).normalized();

Eigen::Quaterniond look_rotation(const Eigen::Vector3d& forward,
                                 const Eigen::Vector3d& up_hint) {
  const Eigen::Vector3d f = forward.normalized();
  Eigen::Vector3d up = up_hint - up_hint.dot(f) * f;
  if (up.squaredNorm() < 1e-12) {
    const Eigen::Vector3d alt = Eigen::Vector3d::UnitY();
    up = alt - alt.dot(f) * f;
  }
  up.normalize();
  Eigen::Matrix3d m;
  m.col(0) = f;          // sensor x: boresight
  m.col(1) = up.cross(f);  // sensor y: left
  m.col(2) = up;         // sensor z: up
  return Eigen::Quaterniond(m);
}

}  // namespace

double Primitive::signed_distance(const Eigen::Vector3d& x) const {
  switch (kind) {
    case Kind::kBox: {
      const Eigen::Vector3d q = (x - center).cwiseAbs() - param;
      const Eigen::Vector3d outside = q.cwiseMax(0.0);
      return outside.norm() + std::min(q.maxCoeff(), 0.0);
    }
    case Kind::kSphere:
      return (x - center).norm() - param.x();
    case Kind::kSlab:
      return std::abs((x - center).dot(param)) - 0.5 * thickness;
  }
  return std::numeric_limits<double>::infinity();
}

Eigen::Vector3d Primitive::normal_at(const Eigen::Vector3d& x) const {
  switch (kind) {
    case Kind::kBox: {
      const Eigen::Vector3d q = x - center;
      const Eigen::Vector3d d = q.cwiseAbs() - param;
      int axis;
      d.maxCoeff(&axis);
      Eigen::Vector3d n = Eigen::Vector3d::Zero();
      n[axis] = q[axis] >= 0.0 ? 1.0 : -1.0;
      return n;
    }
    case Kind::kSphere: {
      const Eigen::Vector3d d = x - center;
      const double norm = d.norm();
      return norm > 1e-12 ? Eigen::Vector3d(d / norm) : Eigen::Vector3d::UnitZ();
    }
    case Kind::kSlab: {
      const double side = (x - center).dot(param);
      return side >= 0.0 ? param : Eigen::Vector3d(-param);
    }
  }
  return Eigen::Vector3d::UnitZ();
}

int SceneSpec::closest(const Eigen::Vector3d& x, double* sd) const {
  int best = -1;
  double best_sd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const double d = primitives[i].signed_distance(x);
    if (d < best_sd) {
      best_sd = d;
      best = static_cast<int>(i);
    }
  }
  if (sd != nullptr) *sd = best_sd;
  return best;
}

double SceneSpec::alpha_camera(const Eigen::Vector3d& x) const {
  double alpha = 0.0;
  for (const Primitive& p : primitives) {
    if (p.signed_distance(x) < 0.0) {
      alpha = std::max(alpha, p.material.camera_opacity);
    }
  }
  return alpha;
}

double SceneSpec::alpha_radar(const Eigen::Vector3d& x) const {
  double alpha = 0.0;
  for (const Primitive& p : primitives) {
    if (p.signed_distance(x) < 0.0) {
      alpha = std::max(alpha, p.material.radar_opacity);
    }
  }
  return alpha;
}

Eigen::Vector3d SceneSpec::normal(const Eigen::Vector3d& x) const {
  const int i = closest(x);
  return i >= 0 ? primitives[static_cast<std::size_t>(i)].normal_at(x)
                : Eigen::Vector3d::UnitZ();
}

double SceneSpec::radar_reflectance(const Eigen::Vector3d& x,
                                    const Eigen::Vector3d& omega) const {
  const int i = closest(x);
  if (i < 0) return 0.0;
  const Primitive& p = primitives[static_cast<std::size_t>(i)];
  BRDFConfig single;
  single.roughnesses = {p.material.rho};
  Eigen::VectorXd beta(1);
  brdf_bases(single, omega.dot(p.normal_at(x)), &beta);
  return p.material.reflectivity * beta[0];
}

Eigen::Vector3d SceneSpec::camera_color(const Eigen::Vector3d& x) const {
  const int i = closest(x);
  if (i < 0) return Eigen::Vector3d::Zero();
  const Primitive& p = primitives[static_cast<std::size_t>(i)];
  const double lambert =
      0.35 + 0.65 * std::max(0.0, p.normal_at(x).dot(kLightDir));
  return lambert * p.material.albedo;
}

double gt_antenna_gain(int k, int n_antenna, const Eigen::Vector3d& dir_sensor) {
  double az, el;
  direction_to_az_el(dir_sensor, &az, &el);
  const double beam = std::exp(-(az * az) - (el * el) / (0.7 * 0.7));
  const double phase = 2.0 * M_PI * k / std::max(1, n_antenna);
  const double ripple =
      1.0 + 0.25 * std::sin(3.0 * az + phase) * std::cos(2.0 * el + 0.5 * phase);
  return beam * ripple;
}

SceneSpec make_scene(const std::string& name, uint64_t seed,
                     double azimuth_separation_deg) {
  SceneSpec scene;
  scene.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(-1.2, -1.2, -0.7),
                                     Eigen::Vector3d(1.2, 1.2, 0.9));
  auto ground = [] {
    Primitive g;
    g.kind = Primitive::Kind::kSlab;
    g.center = Eigen::Vector3d(0.0, 0.0, -0.55);
    g.param = Eigen::Vector3d::UnitZ();
    g.thickness = 0.2;
    g.material.reflectivity = 0.25;
    g.material.rho = 1.5;
    g.material.albedo = Eigen::Vector3d(0.45, 0.42, 0.38);
    return g;
  };

  if (name == "blocks") {
    scene.primitives.push_back(ground());
    Rng rng(Rng::mix(0x5ce9e5b10cULL, seed));
    const double rhos[4] = {0.1, 0.3, 1.0, 3.0};
    const int n_objects = 4;
    for (int i = 0; i < n_objects; ++i) {
      Primitive p;
      const bool box = (i % 2) == 0;
      p.kind = box ? Primitive::Kind::kBox : Primitive::Kind::kSphere;
      // Spread objects over quadrants so seeds rarely overlap them.
      const double qx = (i & 1) ? 1.0 : -1.0;
      const double qy = (i & 2) ? 1.0 : -1.0;
      p.center = Eigen::Vector3d(qx * rng.uniform(0.15, 0.65),
                                 qy * rng.uniform(0.15, 0.65),
                                 rng.uniform(-0.3, 0.05));
      const double size = rng.uniform(0.14, 0.3);
      p.param = box ? Eigen::Vector3d(size, rng.uniform(0.14, 0.3),
                                      rng.uniform(0.14, 0.3))
                    : Eigen::Vector3d(size, 0.0, 0.0);
      p.material.reflectivity = rng.uniform(0.3, 0.9);
      p.material.rho = rhos[rng.uniform_index(4)];
      p.material.albedo = Eigen::Vector3d(rng.uniform(0.2, 0.9),
                                          rng.uniform(0.2, 0.9),
                                          rng.uniform(0.2, 0.9));
      scene.primitives.push_back(p);
    }
    return scene;
  }

  if (name == "see-through") {
    scene.primitives.push_back(ground());
    // Strong reflector hidden inside a camera-opaque, radar-transparent
    // shell (four sides + lid; the ground closes the bottom).
    Primitive target;
    target.kind = Primitive::Kind::kSphere;
    target.center = Eigen::Vector3d(0.35, -0.25, -0.15);
    target.param = Eigen::Vector3d(0.16, 0.0, 0.0);
    target.material.reflectivity = 0.95;
    target.material.rho = 0.15;
    target.material.albedo = Eigen::Vector3d(0.9, 0.2, 0.2);
    scene.primitives.push_back(target);

    Material shell;
    shell.camera_opacity = 1.0;
    shell.radar_opacity = 0.04;
    shell.reflectivity = 0.04;
    shell.rho = 2.0;
    shell.albedo = Eigen::Vector3d(0.6, 0.5, 0.3);
    const Eigen::Vector3d c = target.center;
    const double h = 0.3;           // shell half width
    const double t = 0.02;          // wall half thickness
    const double ground_top = -0.45;  // walls reach down to the ground slab
    const double top = c.z() + 0.3;
    const double mid_z = 0.5 * (top + ground_top);
    const double half_z = 0.5 * (top - ground_top);
    auto add_wall = [&](const Eigen::Vector3d& center,
                        const Eigen::Vector3d& half) {
      Primitive w;
      w.kind = Primitive::Kind::kBox;
      w.center = center;
      w.param = half;
      w.material = shell;
      scene.primitives.push_back(w);
    };
    add_wall({c.x() + h, c.y(), mid_z}, {t, h, half_z});
    add_wall({c.x() - h, c.y(), mid_z}, {t, h, half_z});
    add_wall({c.x(), c.y() + h, mid_z}, {h, t, half_z});
    add_wall({c.x(), c.y() - h, mid_z}, {h, t, half_z});
    add_wall({c.x(), c.y(), top}, {h + t, h + t, t});

    // Visible reference target outside the shell.
    Primitive reference;
    reference.kind = Primitive::Kind::kBox;
    reference.center = Eigen::Vector3d(-0.45, 0.4, -0.25);
    reference.param = Eigen::Vector3d(0.18, 0.18, 0.2);
    reference.material.reflectivity = 0.7;
    reference.material.rho = 0.4;
    reference.material.albedo = Eigen::Vector3d(0.2, 0.5, 0.8);
    scene.primitives.push_back(reference);
    return scene;
  }

  if (name == "plates") {
    // Strongly retroreflective upright plates facing different directions.
    // An orbiting sensor sees each face flare over a narrow orbit arc, which
    // a smooth direction-only appearance model cannot reproduce.
    scene.primitives.push_back(ground());
    Rng rng(Rng::mix(0x9a7e5bULL, seed));
    struct Facing {
      Eigen::Vector3d center;
      bool thin_x;  // thin axis = plate normal direction
    };
    const Facing facings[5] = {
        {{0.55, 0.0, -0.2}, true},   {{-0.55, 0.1, -0.15}, true},
        {{0.0, 0.55, -0.25}, false}, {{0.1, -0.55, -0.1}, false},
        {{0.0, 0.0, -0.2}, true},
    };
    for (const Facing& f : facings) {
      Primitive p;
      p.kind = Primitive::Kind::kBox;
      p.center = f.center + Eigen::Vector3d(rng.uniform(-0.05, 0.05),
                                            rng.uniform(-0.05, 0.05), 0.0);
      const double half_w = rng.uniform(0.18, 0.26);
      const double half_h = rng.uniform(0.18, 0.26);
      const double half_t = 0.03;
      p.param = f.thin_x ? Eigen::Vector3d(half_t, half_w, half_h)
                         : Eigen::Vector3d(half_w, half_t, half_h);
      p.material.reflectivity = rng.uniform(0.75, 0.95);
      p.material.rho = 0.08;  // sharp retro lobe
      p.material.albedo = Eigen::Vector3d(0.8, 0.8, 0.75);
      scene.primitives.push_back(p);
    }
    return scene;
  }

  if (name == "two-targets") {
    // Two equal-range spheres split symmetrically in azimuth as seen from a
    // sensor on +x looking toward the origin (azimuth measured at 2 m).
    const double r = 2.0;
    const double half_sep = 0.5 * azimuth_separation_deg * M_PI / 180.0;
    scene.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(-1.0, -1.0, -0.5),
                                       Eigen::Vector3d(1.0, 1.0, 0.5));
    for (int s = -1; s <= 1; s += 2) {
      Primitive p;
      p.kind = Primitive::Kind::kSphere;
      // The sensor is expected at (r, 0, 0) looking along -x; offsets are
      // lateral (world y) around the origin.
      p.center = Eigen::Vector3d(0.0, s * r * std::tan(half_sep), 0.0);
      p.param = Eigen::Vector3d(0.06, 0.0, 0.0);
      p.material.reflectivity = 0.9;
      p.material.rho = 0.2;
      scene.primitives.push_back(p);
    }
    return scene;
  }

  throw std::invalid_argument("make_scene: unknown scene name '" + name + "'");
}

Trajectory make_trajectory(const TrajectorySpec& spec) {
  if (spec.n_frames < 2) {
    throw std::invalid_argument("make_trajectory: need at least 2 frames");
  }
  if (spec.speed < kMinSpeed) {
    throw std::invalid_argument("make_trajectory: speed is degenerate");
  }
  std::vector<FrameState> frames;
  frames.reserve(static_cast<std::size_t>(spec.n_frames));
  switch (spec.kind) {
    case TrajectorySpec::Kind::kOrbit: {
      const double omega = spec.speed / spec.radius;  // angular rate
      for (int i = 0; i < spec.n_frames; ++i) {
        const double t = i * spec.dt;
        const double phi = omega * t;
        FrameState f;
        f.time = t;
        f.pose.position = Eigen::Vector3d(spec.radius * std::cos(phi),
                                          spec.radius * std::sin(phi),
                                          spec.height);
        f.velocity = Eigen::Vector3d(-spec.speed * std::sin(phi),
                                     spec.speed * std::cos(phi), 0.0);
        f.pose.rotation = look_rotation(
            Eigen::Vector3d(0, 0, 0) - f.pose.position, Eigen::Vector3d::UnitZ());
        frames.push_back(f);
      }
      break;
    }
    case TrajectorySpec::Kind::kLawnmower: {
      // Serpentine passes along x at stepped y, boresight along the motion.
      const double leg = spec.radius;
      const double row_step = 0.35;
      double x = -0.5 * leg, y = -0.6, dir = 1.0;
      for (int i = 0; i < spec.n_frames; ++i) {
        const double t = i * spec.dt;
        FrameState f;
        f.time = t;
        f.pose.position = Eigen::Vector3d(x, y, spec.height);
        f.velocity = Eigen::Vector3d(dir * spec.speed, 0.0, 0.0);
        f.pose.rotation =
            look_rotation(f.velocity, Eigen::Vector3d::UnitZ());
        frames.push_back(f);
        x += dir * spec.speed * spec.dt;
        if (std::abs(x) > 0.5 * leg) {
          x = std::clamp(x, -0.5 * leg, 0.5 * leg);
          dir = -dir;
          y += row_step;
        }
      }
      break;
    }
    case TrajectorySpec::Kind::kRandomWalk: {
      Rng rng(Rng::mix(0x7ea7e57ULL, spec.seed));
      Eigen::Vector3d p(spec.radius, 0.0, spec.height);
      Eigen::Vector3d v = Eigen::Vector3d(-1.0, 0.5, 0.0).normalized() *
                          spec.speed;
      for (int i = 0; i < spec.n_frames; ++i) {
        const double t = i * spec.dt;
        FrameState f;
        f.time = t;
        f.pose.position = p;
        f.velocity = v;
        f.pose.rotation = look_rotation(v, Eigen::Vector3d::UnitZ());
        frames.push_back(f);
        Eigen::Vector3d dv(rng.normal(), rng.normal(), 0.3 * rng.normal());
        v += 0.25 * spec.speed * spec.dt * dv;
        v = v.normalized() * spec.speed;  // keep the pace constant
        p += v * spec.dt;
      }
      break;
    }
  }
  return Trajectory(std::move(frames));
}

namespace {

/// Aggregates one ground-truth radar ray into per-bin averages.
void eval_gt_ray(const SceneSpec& scene, const Eigen::Vector3d& origin,
                 const Eigen::Vector3d& omega, const std::vector<double>& ts,
                 const RadarConfig& config, Eigen::VectorXd* bar_alpha,
                 Eigen::VectorXd* bar_c, Eigen::VectorXd* bar_r,
                 Eigen::VectorXi* count, Eigen::VectorXd* amplitude) {
  const int nr = config.n_range;
  bar_alpha->setZero(nr);
  bar_c->setZero(nr);
  bar_r->setZero(nr);
  count->setZero(nr);
  for (double t : ts) {
    const int bin = static_cast<int>(t / config.range_resolution);
    if (bin < 0 || bin >= nr) continue;
    const Eigen::Vector3d x = origin + t * omega;
    (*bar_alpha)[bin] += scene.alpha_radar(x);
    (*bar_c)[bin] += scene.radar_reflectance(x, omega);
    (*bar_r)[bin] += t;
    (*count)[bin] += 1;
  }
  for (int b = 0; b < nr; ++b) {
    if ((*count)[b] == 0) continue;
    const double inv_n = 1.0 / (*count)[b];
    (*bar_alpha)[b] *= inv_n;
    (*bar_c)[b] *= inv_n;
    (*bar_r)[b] *= inv_n;
  }
  internal::composite_bins(*bar_alpha, *bar_c, *bar_r, *count, config,
                           amplitude, nullptr);
}

}  // namespace

RangeDopplerFrame render_frame_analytic(const SceneSpec& scene,
                                        const SensorState& state,
                                        double timestamp,
                                        const RadarConfig& config,
                                        const RaySampler& sampler, uint64_t seed,
                                        int n_workers, bool with_gains) {
  config.validate();
  const double speed = state.velocity.norm();
  if (speed < kMinSpeed) {
    throw std::invalid_argument("render_frame_analytic: degenerate velocity");
  }
  RangeDopplerFrame frame(config.n_range, config.n_doppler, config.n_antenna,
                          timestamp);
  const Eigen::Quaterniond rot = state.rotation();
  parallel_for(
      config.n_doppler,
      [&](std::size_t js) {
        const int j = static_cast<int>(js);
        const auto circle = build_doppler_circle(
            state.velocity, config.doppler_value(j), config.circle_samples);
        if (!circle || circle->arc_measure <= 0.0) return;
        const double weight = circle->arc_measure / speed;
        Eigen::MatrixXd cols =
            Eigen::MatrixXd::Zero(config.n_range, config.n_antenna);
        std::vector<double> ts;
        Eigen::VectorXd bar_alpha, bar_c, bar_r, amp;
        Eigen::VectorXi count;
        for (int m = 0; m < static_cast<int>(circle->directions.size()); ++m) {
          const Eigen::Vector3d& w = circle->directions[m];
          Rng rng = internal::ray_rng(internal::column_seed(seed, j), m);
          ts.clear();
          sampler.sample(state.position, w, internal::radar_t_near(config),
                         config.max_range(), config.samples_per_ray, &rng, &ts);
          eval_gt_ray(scene, state.position, w, ts, config, &bar_alpha, &bar_c,
                      &bar_r, &count, &amp);
          if (with_gains) {
            const Eigen::Vector3d dir_sensor = rot.conjugate() * w;
            for (int k = 0; k < config.n_antenna; ++k) {
              cols.col(k) +=
                  gt_antenna_gain(k, config.n_antenna, dir_sensor) * amp;
            }
          } else {
            for (int k = 0; k < config.n_antenna; ++k) cols.col(k) += amp;
          }
        }
        for (int i = 0; i < config.n_range; ++i) {
          const double s = weight * config.range_center(i);
          for (int k = 0; k < config.n_antenna; ++k) {
            frame.at(i, j, k) = s * cols(i, k);
          }
        }
      },
      n_workers);
  return frame;
}

Eigen::MatrixXd render_range_azimuth_analytic(
    const SceneSpec& scene, const SensorState& state, int n_azimuth,
    double azimuth_span, int rays_per_bin, const RadarConfig& config,
    const RaySampler& sampler, uint64_t seed, int n_workers) {
  if (n_azimuth < 1 || rays_per_bin < 1 || azimuth_span <= 0.0) {
    throw std::invalid_argument("render_range_azimuth_analytic: invalid grid");
  }
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(config.n_range, n_azimuth);
  const Eigen::Quaterniond rot = state.rotation();
  const double bin_width = azimuth_span / n_azimuth;
  parallel_for(
      n_azimuth,
      [&](std::size_t as) {
        const int a = static_cast<int>(as);
        const double az_lo = -0.5 * azimuth_span + a * bin_width;
        std::vector<double> ts;
        Eigen::VectorXd bar_alpha, bar_c, bar_r, amp;
        Eigen::VectorXi count;
        for (int s = 0; s < rays_per_bin; ++s) {
          const double az = az_lo + (s + 0.5) * bin_width / rays_per_bin;
          const Eigen::Vector3d w =
              rot * Eigen::Vector3d(std::cos(az), std::sin(az), 0.0);
          Rng rng = internal::ray_rng(internal::column_seed(seed, a), s);
          ts.clear();
          sampler.sample(state.position, w, internal::radar_t_near(config),
                         config.max_range(), config.samples_per_ray, &rng, &ts);
          eval_gt_ray(scene, state.position, w, ts, config, &bar_alpha, &bar_c,
                      &bar_r, &count, &amp);
          map.col(a) += amp;
        }
        map.col(a) /= rays_per_bin;
      },
      n_workers);
  return map;
}

RenderedImage render_camera_image_analytic(const SceneSpec& scene,
                                           const SensorState& state,
                                           const CameraIntrinsics& intrinsics,
                                           int samples_per_ray,
                                           const RaySampler& sampler,
                                           uint64_t seed, int n_workers) {
  RenderedImage image(intrinsics.width, intrinsics.height);
  const Eigen::Quaterniond rot = state.rotation();
  parallel_for(
      static_cast<std::size_t>(intrinsics.height),
      [&](std::size_t vs) {
        const int v = static_cast<int>(vs);
        std::vector<double> ts;
        for (int u = 0; u < intrinsics.width; ++u) {
          const Eigen::Vector3d dir =
              rot * intrinsics.pixel_direction(u + 0.5, v + 0.5);
          double t0, t1;
          if (!intersect_bounds(scene.bounds, state.position, dir, 1e-4, &t0,
                                &t1)) {
            continue;
          }
          Rng rng = internal::ray_rng(internal::column_seed(seed, v), u);
          ts.clear();
          sampler.sample(state.position, dir, t0, t1, samples_per_ray, &rng,
                         &ts);
          Eigen::Vector3d color = Eigen::Vector3d::Zero();
          double depth_acc = 0.0, wsum = 0.0, trans = 1.0;
          for (double t : ts) {
            const Eigen::Vector3d x = state.position + t * dir;
            const double a = scene.alpha_camera(x);
            if (a <= 0.0) continue;
            const double w = a * trans;
            color += w * scene.camera_color(x);
            depth_acc += w * t;
            wsum += w;
            trans *= 1.0 - a;
          }
          const std::size_t p =
              static_cast<std::size_t>(v) * intrinsics.width + u;
          image.rgb[3 * p + 0] = color[0];
          image.rgb[3 * p + 1] = color[1];
          image.rgb[3 * p + 2] = color[2];
          image.depth[p] = wsum > 1e-8 ? depth_acc / wsum : -1.0;
        }
      },
      n_workers);
  return image;
}

namespace {

/// World position of a grid vertex (vertex-centered layout).
Eigen::Vector3d vertex_position(const Eigen::AlignedBox3d& bounds, int res,
                                int ix, int iy, int iz) {
  const Eigen::Vector3d extent = bounds.max() - bounds.min();
  return bounds.min() +
         Eigen::Vector3d(extent.x() * ix / (res - 1),
                         extent.y() * iy / (res - 1),
                         extent.z() * iz / (res - 1));
}

/// Bakes occupancy + payload into a geometry field: the finest level gets a
/// logit ramp in feature 0 and a reflectance payload in feature 1; heads are
/// set to pass-through selectors.
void bake_geometry(const SceneSpec& scene, bool radar, GeometryField* field,
                   RadarAppearance::Activation activation) {
  MultiResGrid& grid = field->grid();
  for (int l = 0; l + 1 < grid.n_levels(); ++l) grid.level_data(l).setZero();
  const int finest = grid.n_levels() - 1;
  const int res = grid.level_resolution(finest);
  const int fd = grid.feature_dim();
  const Eigen::Vector3d extent = grid.bounds().max() - grid.bounds().min();
  const double voxel = extent.mean() / (res - 1);
  Eigen::VectorXd& data = grid.level_data(finest);
  data.setZero();
  for (int iz = 0; iz < res; ++iz) {
    for (int iy = 0; iy < res; ++iy) {
      for (int ix = 0; ix < res; ++ix) {
        const Eigen::Vector3d x =
            vertex_position(grid.bounds(), res, ix, iy, iz);
        double sd;
        const int ci = scene.closest(x, &sd);
        if (ci < 0) continue;
        const Material& mat =
            scene.primitives[static_cast<std::size_t>(ci)].material;
        const double opacity = radar ? mat.radar_opacity : mat.camera_opacity;
        const double ramp = logistic(-sd * kLogitClamp / voxel);
        const double alpha = opacity * ramp;
        data[MultiResGrid::vertex_index(res, fd, ix, iy, iz, 0)] =
            std::clamp(logit(alpha), -kLogitClamp, kLogitClamp);
        if (fd > 1 && radar) {
          const double payload =
              activation == RadarAppearance::Activation::kExp
                  ? std::log(std::max(mat.reflectivity, 1e-4))
                  : inv_softplus(std::max(mat.reflectivity, 1e-4));
          data[MultiResGrid::vertex_index(res, fd, ix, iy, iz, 1)] = payload;
        }
      }
    }
  }
  // Density head: select finest-level feature 0.
  AffineHead& density = field->density_head();
  density.W.setZero();
  density.W(0, finest * fd + 0) = 1.0;
  density.b.setZero();
  // Code head: route the payload into code channel 0.
  AffineHead& code = field->code_head();
  code.W.setZero();
  if (fd > 1) code.W(0, finest * fd + 1) = 1.0;
  code.b.setZero();
}

}  // namespace

void bake_scene(const SceneSpec& scene, SceneField* field) {
  if (field->config.radar_hidden_width != 0) {
    throw std::invalid_argument(
        "bake_scene: canonical heads require radar_hidden_width = 0");
  }
  bake_geometry(scene, false, &field->geometry_camera,
                field->config.reflectance_activation);
  bake_geometry(scene, true, &field->geometry_radar,
                field->config.reflectance_activation);

  // Radar reflectance: activation(code0), i.e. the payload carries the
  // activation-inverted material reflectivity. BRDF/SH columns stay zero
  // (the baked appearance is diffuse).
  AffineHead& radar_head = field->radar_appearance.head();
  radar_head.W.setZero();
  radar_head.W(0, 0) = 1.0;
  radar_head.b.setZero();

  // Camera color: flat mean albedo via the bias.
  Eigen::Vector3d albedo = Eigen::Vector3d::Zero();
  for (const Primitive& p : scene.primitives) albedo += p.material.albedo;
  if (!scene.primitives.empty()) {
    albedo /= static_cast<double>(scene.primitives.size());
  }
  AffineHead& cam_head = field->camera_appearance.head();
  cam_head.W.setZero();
  for (int c = 0; c < 3; ++c) cam_head.b[c] = logit(albedo[c]);

  // Normals: analytic surface normals on the finest level, coarser levels
  // cleared (the field normalizes at query time).
  MultiResGrid& ngrid = field->normals.grid();
  for (int l = 0; l + 1 < ngrid.n_levels(); ++l) ngrid.level_data(l).setZero();
  const int finest = ngrid.n_levels() - 1;
  const int res = ngrid.level_resolution(finest);
  Eigen::VectorXd& ndata = ngrid.level_data(finest);
  for (int iz = 0; iz < res; ++iz) {
    for (int iy = 0; iy < res; ++iy) {
      for (int ix = 0; ix < res; ++ix) {
        const Eigen::Vector3d x =
            vertex_position(ngrid.bounds(), res, ix, iy, iz);
        const Eigen::Vector3d n = scene.normal(x);
        for (int f = 0; f < 3; ++f) {
          ndata[MultiResGrid::vertex_index(res, 3, ix, iy, iz, f)] = n[f];
        }
      }
    }
  }
  // Gains are left untouched (unit by fresh initialization); ground-truth
  // gains exist only in the analytic render path.
}

Dataset generate_dataset(const DatasetConfig& config) {
  if (!(config.hidden_scale > 0.0)) {
    throw std::invalid_argument("generate_dataset: hidden scale must be positive");
  }
  Dataset out;
  out.hidden_scale = config.hidden_scale;
  out.noise_scale = config.noise_scale;
  out.noise_dof = config.noise_dof;
  const int workers =
      config.n_workers > 0 ? config.n_workers : default_worker_count();

  Trajectory metric = make_trajectory(config.trajectory);
  RadarConfig rc = config.radar;
  rc.samples_per_ray = config.gt_samples_per_ray;
  const LinearSampler gt_sampler(true);

  out.frames.reserve(metric.size());
  for (std::size_t i = 0; i < metric.size(); ++i) {
    const SensorState state = SensorState::from_frame(metric[i]);
    RangeDopplerFrame frame = render_frame_analytic(
        config.scene, state, metric[i].time, rc, gt_sampler,
        Rng::mix(config.seed, 0xF7A3E5ULL + i), workers);
    if (config.noise_scale > 0.0) {
      Rng noise(Rng::mix(config.seed, 0xD00DULL + i));
      for (double& v : frame.cube) {
        v += noise.chi_square(config.noise_dof, config.noise_scale);
      }
    }
    out.frames.push_back(std::move(frame));
    if (config.camera_every > 0 &&
        i % static_cast<std::size_t>(config.camera_every) == 0) {
      out.images.push_back(render_camera_image_analytic(
          config.scene, state, config.camera, 48, gt_sampler,
          Rng::mix(config.seed, 0xCA11E4AULL + i), workers));
      out.image_frame_index.push_back(static_cast<int>(i));
    }
  }
  // Publish the trajectory (and the suggested working volume) with the
  // hidden scale divided out.
  out.trajectory = apply_scale(metric, 1.0 / config.hidden_scale);
  out.bounds =
      Eigen::AlignedBox3d(config.scene.bounds.min() / config.hidden_scale,
                          config.scene.bounds.max() / config.hidden_scale);
  return out;
}

}  // namespace rdf
