// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rdfield/threading.hpp"
#include "renderer_internal.hpp"

namespace rdf {

void RadarConfig::validate() const {
  if (n_range < 1 || n_doppler < 2 || n_antenna < 1) {
    throw std::invalid_argument("RadarConfig: cube dimensions must be positive");
  }
  if (range_resolution <= 0.0 || doppler_resolution <= 0.0) {
    throw std::invalid_argument("RadarConfig: bin resolutions must be positive");
  }
  if (samples_per_ray < 1 || circle_samples < 1) {
    throw std::invalid_argument("RadarConfig: sample counts must be positive");
  }
}

RangeDopplerFrame::RangeDopplerFrame(int nr, int nd, int na, double t)
    : timestamp(t), n_range(nr), n_doppler(nd), n_antenna(na),
      cube(static_cast<std::size_t>(nr) * nd * na, 0.0),
      mask(static_cast<std::size_t>(nr) * nd * na, 1) {}

void LinearSampler::sample(const Eigen::Vector3d& /*origin*/,
                           const Eigen::Vector3d& /*dir*/, double t_near,
                           double t_far, int n, Rng* rng,
                           std::vector<double>* ts) const {
  const double step = (t_far - t_near) / n;
  for (int i = 0; i < n; ++i) {
    const double frac = jitter_ ? rng->uniform() : 0.5;
    ts->push_back(t_near + (i + frac) * step);
  }
}

bool intersect_bounds(const Eigen::AlignedBox3d& box, const Eigen::Vector3d& origin,
                      const Eigen::Vector3d& dir, double t_min_floor,
                      double* t_enter, double* t_exit) {
  double t0 = t_min_floor;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (origin[a] < box.min()[a] || origin[a] > box.max()[a]) return false;
      continue;
    }
    double lo = (box.min()[a] - origin[a]) / dir[a];
    double hi = (box.max()[a] - origin[a]) / dir[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  if (t1 <= t0) return false;
  *t_enter = t0;
  *t_exit = t1;
  return true;
}

namespace internal {

void eval_radar_ray(const RadarSceneRefs& refs, const Eigen::Vector3d& origin,
                    const Eigen::Vector3d& omega, const std::vector<double>& ts,
                    const RadarConfig& config, bool keep_samples, RayEval* out) {
  const int nr = config.n_range;
  out->bar_alpha = Eigen::VectorXd::Zero(nr);
  out->bar_c = Eigen::VectorXd::Zero(nr);
  out->bar_r = Eigen::VectorXd::Zero(nr);
  out->count = Eigen::VectorXi::Zero(nr);
  out->trans = Eigen::VectorXd::Ones(nr);
  out->amplitude = Eigen::VectorXd::Zero(nr);
  out->samples.clear();

  const bool with_appearance = refs.appearance != nullptr;
  SampleEval scratch;
  for (double t : ts) {
    const int bin = static_cast<int>(t / config.range_resolution);
    if (bin < 0 || bin >= nr) continue;
    const Eigen::Vector3d x = origin + t * omega;
    SampleEval& s = keep_samples ? out->samples.emplace_back() : scratch;
    s.t = t;
    s.bin = bin;
    refs.geometry->query(x, &s.geo, with_appearance);
    if (with_appearance) {
      refs.normals->query(x, &s.normal);
      refs.appearance->query(s.geo.code, omega, s.normal.n, &s.app);
      s.c = s.app.c_r;
    } else {
      s.c = 1.0;
    }
    out->bar_alpha[bin] += s.geo.alpha;
    out->bar_c[bin] += s.c;
    out->bar_r[bin] += t;
    out->count[bin] += 1;
  }

  for (int b = 0; b < nr; ++b) {
    if (out->count[b] == 0) continue;
    const double inv_n = 1.0 / out->count[b];
    out->bar_alpha[b] *= inv_n;
    out->bar_c[b] *= inv_n;
    out->bar_r[b] *= inv_n;
  }
  composite_bins(out->bar_alpha, out->bar_c, out->bar_r, out->count, config,
                 &out->amplitude, &out->trans);
}

void composite_bins(const Eigen::VectorXd& bar_alpha,
                    const Eigen::VectorXd& bar_c, const Eigen::VectorXd& bar_r,
                    const Eigen::VectorXi& count, const RadarConfig& config,
                    Eigen::VectorXd* amplitude, Eigen::VectorXd* trans) {
  const int nr = config.n_range;
  amplitude->setZero(nr);
  double t = 1.0;
  for (int b = 0; b < nr; ++b) {
    if (trans != nullptr) (*trans)[b] = t;
    if (count[b] == 0) continue;
    const double r = clamped_bin_range(bar_r[b], config);
    (*amplitude)[b] = bar_c[b] * bar_alpha[b] * t / (r * r);
    const double rem = 1.0 - bar_alpha[b];
    t *= rem * rem;
  }
}

}  // namespace internal

Eigen::VectorXd render_amplitude_along_ray(const RadarSceneRefs& refs,
                                           const Eigen::Vector3d& origin,
                                           const Eigen::Vector3d& omega,
                                           const std::vector<double>& ts,
                                           double gain, const RadarConfig& config) {
  if (refs.geometry == nullptr) {
    throw std::invalid_argument("render_amplitude_along_ray: geometry is required");
  }
  if (refs.appearance != nullptr && refs.normals == nullptr) {
    throw std::invalid_argument(
        "render_amplitude_along_ray: appearance model requires a normal field");
  }
  if (!std::is_sorted(ts.begin(), ts.end())) {
    throw std::invalid_argument("render_amplitude_along_ray: samples must be sorted");
  }
  internal::RayEval ray;
  internal::eval_radar_ray(refs, origin, omega, ts, config, false, &ray);
  return gain * ray.amplitude;
}

namespace {

// Shared forward core: renders the gain-free per-direction profiles of one
// Doppler circle and hands them to `emit(direction index, world direction,
// gain-free amplitudes)`. Returns the per-sample arc weight divided by speed
// (the column is scaled by weight * r_i afterwards), or 0 for an empty
// circle.
template <typename Emit>
double for_each_circle_direction(const RadarSceneRefs& refs,
                                 const SensorState& state, int j,
                                 const RadarConfig& config,
                                 const RaySampler& sampler, uint64_t seed,
                                 Emit&& emit) {
  const double speed = state.velocity.norm();
  if (speed < kMinSpeed) {
    throw std::invalid_argument("radar render: sensor speed is degenerate");
  }
  const double doppler = config.doppler_value(j);
  const auto circle = build_doppler_circle(state.velocity, doppler,
                                           config.circle_samples);
  if (!circle || circle->arc_measure <= 0.0) return 0.0;

  const double t_near = internal::radar_t_near(config);
  const double t_far = config.max_range();
  std::vector<double> ts;
  internal::RayEval ray;
  for (int m = 0; m < static_cast<int>(circle->directions.size()); ++m) {
    const Eigen::Vector3d& w = circle->directions[m];
    Rng rng = internal::ray_rng(seed, m);
    ts.clear();
    sampler.sample(state.position, w, t_near, t_far, config.samples_per_ray,
                   &rng, &ts);
    internal::eval_radar_ray(refs, state.position, w, ts, config, false, &ray);
    emit(m, w, ray.amplitude);
  }
  return circle->arc_measure / speed;
}

Eigen::VectorXd apply_column_weight(Eigen::VectorXd column, double weight,
                                    const RadarConfig& config) {
  for (int i = 0; i < config.n_range; ++i) {
    column[i] *= weight * config.range_center(i);
  }
  return column;
}

}  // namespace

Eigen::VectorXd render_doppler_column(const RadarSceneRefs& refs,
                                      const SensorState& state, int j, int k,
                                      const RadarConfig& config,
                                      const RaySampler& sampler, uint64_t seed) {
  const Eigen::Quaterniond rot = state.rotation();
  Eigen::VectorXd column = Eigen::VectorXd::Zero(config.n_range);
  const double weight = for_each_circle_direction(
      refs, state, j, config, sampler, seed,
      [&](int /*m*/, const Eigen::Vector3d& w, const Eigen::VectorXd& amp) {
        double gain = 1.0;
        if (refs.gains != nullptr) {
          AntennaGainModel::Eval g;
          refs.gains->query(k, rot.conjugate() * w, &g);
          gain = g.gain;
        }
        column += gain * amp;
      });
  if (weight == 0.0) return column;
  return apply_column_weight(std::move(column), weight, config);
}

std::optional<RangeDopplerFrame> render_frame(const RadarSceneRefs& refs,
                                              const SensorState& state,
                                              double timestamp,
                                              const RadarConfig& config,
                                              const RaySampler& sampler,
                                              uint64_t seed, int n_workers) {
  config.validate();
  if (state.velocity.norm() < kMinSpeed) return std::nullopt;

  RangeDopplerFrame frame(config.n_range, config.n_doppler, config.n_antenna,
                          timestamp);
  const Eigen::Quaterniond rot = state.rotation();
  // One task per Doppler column; the geometry/appearance work is shared
  // across antennas since only the gain differs.
  parallel_for(
      config.n_doppler,
      [&](std::size_t js) {
        const int j = static_cast<int>(js);
        Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(config.n_range,
                                                     config.n_antenna);
        const double weight = for_each_circle_direction(
            refs, state, j, config, sampler, internal::column_seed(seed, j),
            [&](int /*m*/, const Eigen::Vector3d& w, const Eigen::VectorXd& amp) {
              if (refs.gains != nullptr) {
                const Eigen::Vector3d dir_sensor = rot.conjugate() * w;
                AntennaGainModel::Eval g;
                for (int k = 0; k < config.n_antenna; ++k) {
                  refs.gains->query(k, dir_sensor, &g);
                  cols.col(k) += g.gain * amp;
                }
              } else {
                for (int k = 0; k < config.n_antenna; ++k) cols.col(k) += amp;
              }
            });
        if (weight != 0.0) {
          for (int i = 0; i < config.n_range; ++i) {
            const double s = weight * config.range_center(i);
            for (int k = 0; k < config.n_antenna; ++k) {
              frame.at(i, j, k) = s * cols(i, k);
            }
          }
        }
      },
      n_workers);
  return frame;
}

Eigen::MatrixXd render_range_azimuth(const RadarSceneRefs& refs,
                                     const SensorState& state, int n_azimuth,
                                     double azimuth_span, int rays_per_bin,
                                     const RadarConfig& config,
                                     const RaySampler& sampler, uint64_t seed,
                                     int n_workers) {
  if (n_azimuth < 1 || rays_per_bin < 1 || azimuth_span <= 0.0) {
    throw std::invalid_argument("render_range_azimuth: invalid grid shape");
  }
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(config.n_range, n_azimuth);
  const Eigen::Quaterniond rot = state.rotation();
  const double bin_width = azimuth_span / n_azimuth;
  const double t_near = internal::radar_t_near(config);
  const double t_far = config.max_range();
  parallel_for(
      n_azimuth,
      [&](std::size_t as) {
        const int a = static_cast<int>(as);
        const double az_lo = -0.5 * azimuth_span + a * bin_width;
        std::vector<double> ts;
        internal::RayEval ray;
        for (int s = 0; s < rays_per_bin; ++s) {
          const double az = az_lo + (s + 0.5) * bin_width / rays_per_bin;
          const Eigen::Vector3d dir_sensor(std::cos(az), std::sin(az), 0.0);
          const Eigen::Vector3d w = rot * dir_sensor;
          Rng rng = internal::ray_rng(internal::column_seed(seed, a), s);
          ts.clear();
          sampler.sample(state.position, w, t_near, t_far,
                         config.samples_per_ray, &rng, &ts);
          internal::eval_radar_ray(refs, state.position, w, ts, config, false,
                                   &ray);
          map.col(a) += ray.amplitude;
        }
        map.col(a) /= rays_per_bin;
      },
      n_workers);
  // Keep the radar amplitude convention (inverse-square applied in
  // eval_radar_ray); azimuth maps carry no circle weight.
  return map;
}

void render_camera_ray(const CameraSceneRefs& refs, const Eigen::Vector3d& origin,
                       const Eigen::Vector3d& dir, const std::vector<double>& ts,
                       Eigen::Vector3d* rgb, double* depth, double* weight_sum) {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double depth_acc = 0.0;
  double wsum = 0.0;
  double trans = 1.0;
  GeometryField::Sample geo;
  CameraAppearance::Eval app;
  for (double t : ts) {
    const Eigen::Vector3d x = origin + t * dir;
    refs.geometry->query(x, &geo, refs.appearance != nullptr);
    if (geo.alpha <= 0.0) continue;
    const double w = geo.alpha * trans;
    if (refs.appearance != nullptr) {
      refs.appearance->query(geo.code, dir, &app);
      color += w * app.rgb;
    } else {
      color.array() += w;
    }
    depth_acc += w * t;
    wsum += w;
    trans *= 1.0 - geo.alpha;
  }
  *rgb = color;
  *depth = wsum > 1e-8 ? depth_acc / wsum : -1.0;
  if (weight_sum != nullptr) *weight_sum = wsum;
}

RenderedImage render_camera_image(const CameraSceneRefs& refs,
                                  const SensorState& state,
                                  const CameraIntrinsics& intrinsics,
                                  int samples_per_ray, const RaySampler& sampler,
                                  uint64_t seed, int n_workers) {
  if (refs.geometry == nullptr) {
    throw std::invalid_argument("render_camera_image: geometry is required");
  }
  RenderedImage image(intrinsics.width, intrinsics.height);
  const Eigen::Quaterniond rot = state.rotation();
  const Eigen::AlignedBox3d& box = refs.geometry->grid().bounds();
  parallel_for(
      static_cast<std::size_t>(intrinsics.height),
      [&](std::size_t vs) {
        const int v = static_cast<int>(vs);
        std::vector<double> ts;
        Eigen::Vector3d rgb;
        double depth;
        for (int u = 0; u < intrinsics.width; ++u) {
          const Eigen::Vector3d dir =
              rot * intrinsics.pixel_direction(u + 0.5, v + 0.5);
          double t0, t1;
          if (!intersect_bounds(box, state.position, dir, 1e-4, &t0, &t1)) {
            continue;  // background stays black, depth -1
          }
          Rng rng = internal::ray_rng(internal::column_seed(seed, v), u);
          ts.clear();
          sampler.sample(state.position, dir, t0, t1, samples_per_ray, &rng,
                         &ts);
          render_camera_ray(refs, state.position, dir, ts, &rgb, &depth);
          const std::size_t p = static_cast<std::size_t>(v) * intrinsics.width + u;
          image.rgb[3 * p + 0] = rgb[0];
          image.rgb[3 * p + 1] = rgb[1];
          image.rgb[3 * p + 2] = rgb[2];
          image.depth[p] = depth;
        }
      },
      n_workers);
  return image;
}

void backward(GradientTape* tape, double loss) { tape->finalize(loss); }

}  // namespace rdf
