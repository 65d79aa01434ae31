// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "rdfield/threading.hpp"
#include "renderer_internal.hpp"

namespace rdf {

SensorState sensor_state(const Trajectory& trajectory, std::size_t i) {
  const FrameState& base = trajectory[i];
  SensorState s;
  s.position = trajectory.scale() * base.pose.position + trajectory.delta_p(i);
  s.base_rotation = base.pose.rotation;
  s.delta_theta = trajectory.delta_theta(i);
  s.velocity = trajectory.scale() * base.velocity + trajectory.delta_v(i);
  return s;
}

namespace {

/// One JSON-lines record; keys are fixed so logs stay machine-parsable
/// without a serializer dependency in the core library.
void log_line(std::ostream* log, int stage, int iter, double loss, double l1,
              double extra, const char* extra_key, double lr) {
  if (log == nullptr) return;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"stage\":%d,\"iter\":%d,\"loss\":%.6g,\"l1\":%.6g,"
                "\"%s\":%.6g,\"lr\":%.6g}\n",
                stage, iter, loss, l1, extra_key, extra, lr);
  (*log) << buf;
  log->flush();
}

std::vector<int> all_antennas(int n) {
  std::vector<int> ks(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) ks[static_cast<std::size_t>(k)] = k;
  return ks;
}

/// Keeps only the listed antenna slices of a frame (in list order).
RangeDopplerFrame extract_antennas(const RangeDopplerFrame& frame,
                                   const std::vector<int>& ks) {
  RangeDopplerFrame out(frame.n_range, frame.n_doppler,
                        static_cast<int>(ks.size()), frame.timestamp);
  for (int i = 0; i < frame.n_range; ++i) {
    for (int j = 0; j < frame.n_doppler; ++j) {
      for (std::size_t a = 0; a < ks.size(); ++a) {
        const std::size_t src = frame.index(i, j, ks[a]);
        const std::size_t dst = out.index(i, j, static_cast<int>(a));
        out.cube[dst] = frame.cube[src];
        out.mask[dst] = frame.mask[src];
      }
    }
  }
  return out;
}

Eigen::Vector3d uniform_in_box(const Eigen::AlignedBox3d& box, Rng* rng) {
  return Eigen::Vector3d(rng->uniform(box.min().x(), box.max().x()),
                         rng->uniform(box.min().y(), box.max().y()),
                         rng->uniform(box.min().z(), box.max().z()));
}

}  // namespace

struct Trainer::Impl {
  ProposalField prop_coarse;
  ProposalField prop_fine;
  std::unique_ptr<GradientTape> tape_storage;
  std::vector<GradientTape> worker_tapes;
  int workers;

  Impl(const Eigen::AlignedBox3d& bounds, int n_workers)
      : prop_coarse(bounds, 32), prop_fine(bounds, 64), workers(n_workers) {}

  /// Called once every learnable block (including the proposals) is in the
  /// registry; tapes must be sized after the last add_block.
  void finish_registration(ParamRegistry* reg) {
    prop_coarse.register_params(reg, "proposal/coarse");
    prop_fine.register_params(reg, "proposal/fine");
    tape_storage = std::make_unique<GradientTape>(*reg);
    for (int w = 0; w < workers; ++w) worker_tapes.emplace_back(*reg);
  }

  GradientTape& tape() { return *tape_storage; }

  void reset_tapes() {
    tape().reset();
    for (auto& t : worker_tapes) t.reset();
  }

  /// Fixed slot-order reduction, so a given worker count always reproduces
  /// the same result.
  void merge_tapes() {
    for (auto& t : worker_tapes) tape().add(t);
  }
};

Trainer::Trainer(SceneField* field, Trajectory* trajectory,
                 const Dataset& dataset, const TrainConfig& config)
    : field_(field), trajectory_(trajectory), dataset_(dataset),
      config_(config) {
  if (field == nullptr || trajectory == nullptr) {
    throw std::invalid_argument("Trainer: null field or trajectory");
  }
  if (dataset.frames.empty()) {
    throw std::invalid_argument("Trainer: dataset has no radar frames");
  }
  if (trajectory->size() < dataset.frames.size()) {
    throw std::invalid_argument("Trainer: trajectory shorter than dataset");
  }
  config_.radar.validate();
  if (config_.train_fraction <= 0.0 || config_.train_fraction > 1.0) {
    throw std::invalid_argument("Trainer: train_fraction outside (0, 1]");
  }
  for (int k : config_.train_antennas) {
    if (k < 0 || k >= config_.radar.n_antenna) {
      throw std::invalid_argument("Trainer: trained antenna out of range");
    }
  }
  field_->register_params(&registry_);
  trajectory_->register_params(&registry_, /*include_scale=*/true);
  const int workers = config_.n_workers > 0
                          ? config_.n_workers
                          : static_cast<int>(default_worker_count());
  impl_ = std::make_unique<Impl>(field_->config.bounds, workers);
  impl_->finish_registration(&registry_);

  const std::size_t n = dataset.frames.size();
  if (!config_.train_ids.empty() || !config_.test_ids.empty()) {
    // Explicit split: must partition [0, n) exactly.
    std::vector<int> seen(n, 0);
    for (std::size_t id : config_.train_ids) {
      if (id >= n) throw std::invalid_argument("Trainer: split id out of range");
      ++seen[id];
    }
    for (std::size_t id : config_.test_ids) {
      if (id >= n) throw std::invalid_argument("Trainer: split id out of range");
      ++seen[id];
    }
    for (int c : seen) {
      if (c != 1) {
        throw std::invalid_argument(
            "Trainer: explicit split must cover every frame exactly once");
      }
    }
    if (config_.train_ids.empty()) {
      throw std::invalid_argument("Trainer: explicit split has no train frames");
    }
    train_ids_ = config_.train_ids;
    test_ids_ = config_.test_ids;
  } else {
    const auto n_train = static_cast<std::size_t>(
        std::max<double>(1.0, std::floor(config_.train_fraction *
                                         static_cast<double>(n))));
    for (std::size_t i = 0; i < n; ++i) {
      (i < n_train ? train_ids_ : test_ids_).push_back(i);
    }
  }
}

Trainer::~Trainer() = default;

TrainSummary Trainer::run_camera_stage() {
  TrainSummary summary;
  if (dataset_.images.empty() || config_.stage1.iterations <= 0) {
    return summary;
  }
  const CameraIntrinsics& cam = config_.camera;
  const CameraSceneRefs refs{&field_->geometry_camera,
                             &field_->camera_appearance};
  const ProposalSampler sampler(&impl_->prop_coarse, &impl_->prop_fine,
                                config_.proposal_coarse, config_.proposal_fine,
                                /*jitter=*/true);
  const Eigen::AlignedBox3d bounds = field_->geometry_camera.grid().bounds();
  const TrainWeights& w = config_.weights;
  const int total = config_.stage1.iterations;
  const int batch = std::max(1, config_.rays_per_batch);
  const int traced = std::min(config_.proposal_rays, batch);

  Optimizer opt(&registry_, OptimConfig{});
  opt.set_default_lr(0.0);

  struct Pick {
    std::size_t image;
    int u, v;
  };
  std::vector<Pick> picks(static_cast<std::size_t>(batch));
  std::vector<double> worker_loss(impl_->worker_tapes.size());

  for (int iter = 0; iter < total; ++iter) {
    const double lr = exponential_lr(config_.stage1.lr_begin,
                                     config_.stage1.lr_end, iter, total);
    opt.set_block_lr("camera_geometry", lr);
    opt.set_block_lr("camera_appearance", lr);
    opt.set_block_lr("proposal", lr);
    impl_->reset_tapes();
    std::fill(worker_loss.begin(), worker_loss.end(), 0.0);

    const uint64_t iter_seed = Rng::mix(config_.seed, 0x57A6E100ULL + iter);
    Rng pick_rng(iter_seed);
    for (auto& p : picks) {
      p.image = pick_rng.uniform_index(dataset_.images.size());
      p.u = static_cast<int>(pick_rng.uniform_index(cam.width));
      p.v = static_cast<int>(pick_rng.uniform_index(cam.height));
    }

    const double l1_scale = w.camera_l1 / (3.0 * batch);
    const double il_scale = w.interlevel / std::max(1, traced);
    parallel_for_workers(
        picks.size(),
        [&](std::size_t pi, std::size_t slot) {
          const Pick& p = picks[pi];
          GradientTape* tape = &impl_->worker_tapes[slot];
          const RenderedImage& image = dataset_.images[p.image];
          const auto frame_id = static_cast<std::size_t>(
              dataset_.image_frame_index[p.image]);
          const SensorState state = sensor_state(*trajectory_, frame_id);
          const Eigen::Vector3d dir =
              state.rotation() * cam.pixel_direction(p.u + 0.5, p.v + 0.5);
          double t0, t1;
          if (!intersect_bounds(bounds, state.position, dir, 1e-4, &t0, &t1)) {
            return;
          }
          Rng ray_rng(Rng::mix(iter_seed, 0xBEEF00ULL + pi));
          std::vector<double> ts;
          ProposalTrace trace;
          const bool with_trace = pi < static_cast<std::size_t>(traced);
          if (with_trace) {
            sampler.sample_with_trace(state.position, dir, t0, t1,
                                      config_.camera_samples_per_ray, &ray_rng,
                                      &ts, &trace);
          } else {
            sampler.sample(state.position, dir, t0, t1,
                           config_.camera_samples_per_ray, &ray_rng, &ts);
          }

          Eigen::Vector3d rgb;
          double depth;
          render_camera_ray(refs, state.position, dir, ts, &rgb, &depth);
          const std::size_t px =
              (static_cast<std::size_t>(p.v) * cam.width + p.u) * 3;
          const Eigen::Vector3d target(image.rgb[px], image.rgb[px + 1],
                                       image.rgb[px + 2]);
          double l1_sum = 0.0;
          std::size_t cnt = 0;
          Eigen::VectorXd dL_drgb = Eigen::VectorXd::Zero(3);
          masked_l1(rgb, target, nullptr, l1_scale, &l1_sum, &cnt, &dL_drgb);
          worker_loss[slot] += l1_scale * l1_sum;
          render_camera_ray_backward(refs, state.position, dir, ts,
                                     Eigen::Vector3d(dL_drgb), tape);

          if (with_trace) {
            // Interlevel supervision: field weights (stop-grad) bound the
            // proposal weights of both levels.
            Eigen::VectorXd alpha(ts.size());
            for (std::size_t si = 0; si < ts.size(); ++si) {
              alpha[static_cast<Eigen::Index>(si)] =
                  field_->geometry_camera.query_alpha(state.position +
                                                      ts[si] * dir);
            }
            Eigen::VectorXd w_field;
            composite_weights(alpha, &w_field);
            std::vector<double> field_bounds;
            interval_bounds(ts, t0, t1, &field_bounds);
            const ProposalField* levels[2] = {&impl_->prop_coarse,
                                              &impl_->prop_fine};
            for (int l = 0; l < 2; ++l) {
              const ProposalTrace::Level& lv =
                  trace.levels[static_cast<std::size_t>(l)];
              Eigen::VectorXd dL_dw = Eigen::VectorXd::Zero(lv.weight.size());
              worker_loss[slot] +=
                  il_scale * loss_interlevel(field_bounds, w_field, lv.bounds,
                                             lv.weight, il_scale, &dL_dw);
              Eigen::VectorXd dL_dalpha;
              composite_weights_backward(lv.alpha, dL_dw, &dL_dalpha);
              for (std::size_t si = 0; si < lv.ts.size(); ++si) {
                const auto ei = static_cast<Eigen::Index>(si);
                levels[l]->accumulate_gradient(
                    state.position + lv.ts[si] * dir, lv.alpha[ei],
                    dL_dalpha[ei], tape);
              }
            }
          }
        },
        impl_->workers);

    impl_->merge_tapes();
    double loss = 0.0;
    for (double v : worker_loss) loss += v;
    if (!std::isfinite(loss)) {
      summary.diverged = true;
      summary.iterations = iter;
      summary.final_loss = loss;
      return summary;
    }
    impl_->tape().finalize(loss);
    opt.step(impl_->tape());
    summary.final_loss = loss;
    summary.iterations = iter + 1;
    if (config_.log != nullptr && (iter % config_.log_every == 0 ||
                                   iter + 1 == total)) {
      log_line(config_.log, 1, iter, loss, loss, 0.0, "interlevel", lr);
    }
  }
  return summary;
}

void Trainer::distill_geometry_to_radar() {
  distill_into(field_->geometry_camera, &field_->geometry_radar);
}

void Trainer::prepare_radar_targets() {
  if (targets_ready_) return;
  std::vector<double> speeds;
  speeds.reserve(dataset_.frames.size());
  for (std::size_t i = 0; i < dataset_.frames.size(); ++i) {
    speeds.push_back(sensor_state(*trajectory_, i).velocity.norm());
  }
  noise_ = NoiseFit{};  // threshold 0: no masking when the fit fails
  try {
    const NoiseFit fit = fit_noise(dataset_.frames, speeds, config_.radar);
    if (std::isfinite(fit.threshold) && std::isfinite(fit.dof) &&
        fit.dof > 0.0) {
      noise_ = fit;
    }
  } catch (const InsufficientData&) {
  } catch (const std::exception&) {
    // Degenerate noise statistics (e.g. a noise-free synthetic dataset)
    // simply disable masking.
  }

  std::vector<RangeDopplerFrame> train_frames;
  train_frames.reserve(train_ids_.size());
  for (std::size_t id : train_ids_) train_frames.push_back(dataset_.frames[id]);
  norm_ = compute_normalization(train_frames);
  train_frames.clear();

  targets_ = dataset_.frames;
  normalize_and_mask(&targets_, noise_, norm_);
  targets_ready_ = true;
}

TrainSummary Trainer::run_radar_stage() {
  prepare_radar_targets();
  TrainSummary summary;
  if (config_.stage2.iterations <= 0) return summary;

  const RadarSceneRefs refs{config_.use_camera_geometry_for_radar
                                ? &field_->geometry_camera
                                : &field_->geometry_radar,
                            &field_->radar_appearance, &field_->normals,
                            &field_->gains};
  const GeometryField& radar_geom = *refs.geometry;
  const Eigen::AlignedBox3d bounds = radar_geom.grid().bounds();
  const LinearSampler sampler(/*jitter=*/true);
  const TrainWeights& w = config_.weights;
  const RadarConfig& rc = config_.radar;
  const std::vector<int> antennas = config_.train_antennas.empty()
                                        ? all_antennas(rc.n_antenna)
                                        : config_.train_antennas;
  const int total = config_.stage2.iterations;
  const int batch = std::max(1, config_.columns_per_batch);
  const double inv_span = 1.0 / (norm_.hi - norm_.lo);
  const bool couple_occupancy =
      !config_.use_camera_geometry_for_radar && w.bce > 0.0;

  Optimizer opt(&registry_, OptimConfig{});
  opt.set_default_lr(0.0);

  struct Tuple {
    std::size_t frame;
    int j, k;
  };
  std::vector<Tuple> tuples;
  std::vector<double> worker_loss(impl_->worker_tapes.size());

  for (int iter = 0; iter < total; ++iter) {
    const double lr = exponential_lr(config_.stage2.lr_begin,
                                     config_.stage2.lr_end, iter, total);
    const double lr_pose =
        config_.train_pose
            ? exponential_lr(config_.lr_pose_begin, config_.lr_pose_end, iter,
                             total)
            : 0.0;
    if (!config_.use_camera_geometry_for_radar) {
      opt.set_block_lr("radar_geometry", lr);
    }
    opt.set_block_lr("radar_appearance", lr);
    opt.set_block_lr("normals", lr);
    opt.set_block_lr("gains", lr);
    opt.set_block_lr("trajectory/offsets", lr_pose);
    impl_->reset_tapes();
    std::fill(worker_loss.begin(), worker_loss.end(), 0.0);

    const uint64_t iter_seed = Rng::mix(config_.seed, 0xBA7C4200ULL + iter);
    Rng pick_rng(iter_seed);
    tuples.clear();
    for (int attempt = 0; attempt < 4 * batch &&
                          static_cast<int>(tuples.size()) < batch;
         ++attempt) {
      Tuple t;
      t.frame = train_ids_[pick_rng.uniform_index(train_ids_.size())];
      t.j = static_cast<int>(pick_rng.uniform_index(rc.n_doppler));
      t.k = antennas[pick_rng.uniform_index(antennas.size())];
      // Require at least one valid target cell so every tuple carries loss.
      const RangeDopplerFrame& target = targets_[t.frame];
      bool any = false;
      for (int i = 0; i < rc.n_range && !any; ++i) {
        any = target.valid(i, t.j, t.k);
      }
      if (any) tuples.push_back(t);
    }

    const double l1_scale =
        w.radar_l1 / std::max<std::size_t>(1, tuples.size());
    parallel_for_workers(
        tuples.size(),
        [&](std::size_t ti, std::size_t slot) {
          const Tuple& t = tuples[ti];
          GradientTape* tape = &impl_->worker_tapes[slot];
          const SensorState state = sensor_state(*trajectory_, t.frame);
          const uint64_t col_seed = Rng::mix(iter_seed, 0xC01ULL + ti);
          const Eigen::VectorXd pred = render_doppler_column(
              refs, state, t.j, t.k, rc, sampler, col_seed);
          const RangeDopplerFrame& target = targets_[t.frame];
          // Per-column masked mean in normalized units.
          double sum = 0.0;
          std::size_t cnt = 0;
          for (int i = 0; i < rc.n_range; ++i) {
            if (target.valid(i, t.j, t.k)) ++cnt;
          }
          if (cnt == 0) return;
          Eigen::VectorXd dL_dY = Eigen::VectorXd::Zero(rc.n_range);
          const double cell_scale = l1_scale / static_cast<double>(cnt);
          for (int i = 0; i < rc.n_range; ++i) {
            if (!target.valid(i, t.j, t.k)) continue;
            const double diff =
                norm_.apply_linear(pred[i]) - target.at(i, t.j, t.k);
            sum += std::abs(diff);
            dL_dY[i] = cell_scale * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) *
                       inv_span;
          }
          worker_loss[slot] += cell_scale * sum;
          PoseGrad pg;
          render_doppler_column_backward(refs, state, t.j, t.k, rc, sampler,
                                         col_seed, dL_dY, tape,
                                         config_.train_pose ? &pg : nullptr);
          if (config_.train_pose) {
            trajectory_->accumulate_gradient(t.frame, pg.dposition, pg.dtheta,
                                             pg.dvelocity, tape);
          }
        },
        impl_->workers);
    impl_->merge_tapes();
    double loss = 0.0;
    for (double v : worker_loss) loss += v;
    double ssim_term = 0.0;

    // Structural term on one full (frame, antenna) slice at a fixed cadence.
    if (w.radar_ssim > 0.0 && config_.ssim_every > 0 &&
        (iter + 1) % config_.ssim_every == 0) {
      Rng srng(Rng::mix(iter_seed, 0x551AULL));
      const std::size_t fr = train_ids_[srng.uniform_index(train_ids_.size())];
      const int kr = antennas[srng.uniform_index(antennas.size())];
      const SensorState state = sensor_state(*trajectory_, fr);
      const uint64_t frame_seed = Rng::mix(iter_seed, 0xF4A3ULL);
      const auto frame = render_frame(refs, state, dataset_.frames[fr].timestamp,
                                      rc, sampler, frame_seed, impl_->workers);
      if (frame) {
        Eigen::MatrixXd pred = slice(*frame, kr);
        for (int c = 0; c < pred.cols(); ++c) {
          for (int r = 0; r < pred.rows(); ++r) {
            pred(r, c) = norm_.apply_linear(pred(r, c));
          }
        }
        const Eigen::MatrixXd target = slice(targets_[fr], kr);
        const MaskMatrix mask = slice_mask(targets_[fr], kr);
        SsimTerms terms;
        const double s = masked_ssim(pred, target, mask, &terms);
        ssim_term = w.radar_ssim * (1.0 - s);
        loss += ssim_term;
        Eigen::MatrixXd dL_dpred = Eigen::MatrixXd::Zero(pred.rows(),
                                                         pred.cols());
        masked_ssim_backward(pred, target, mask, terms, -w.radar_ssim,
                             &dL_dpred);
        for (auto& t : impl_->worker_tapes) t.reset();
        std::vector<PoseGrad> worker_pose(impl_->worker_tapes.size());
        parallel_for_workers(
            static_cast<std::size_t>(rc.n_doppler),
            [&](std::size_t js, std::size_t slot) {
              const int j = static_cast<int>(js);
              if (dL_dpred.col(j).isZero(0.0)) return;
              const Eigen::VectorXd dL_dY = dL_dpred.col(j) * inv_span;
              PoseGrad pg;
              render_doppler_column_backward(
                  refs, state, j, kr, rc, sampler,
                  internal::column_seed(frame_seed, j), dL_dY,
                  &impl_->worker_tapes[slot],
                  config_.train_pose ? &pg : nullptr);
              if (config_.train_pose) {
                worker_pose[slot].dposition += pg.dposition;
                worker_pose[slot].dtheta += pg.dtheta;
                worker_pose[slot].dvelocity += pg.dvelocity;
              }
            },
            impl_->workers);
        impl_->merge_tapes();
        if (config_.train_pose) {
          PoseGrad pg;
          for (const auto& wp : worker_pose) {
            pg.dposition += wp.dposition;
            pg.dtheta += wp.dtheta;
            pg.dvelocity += wp.dvelocity;
          }
          trajectory_->accumulate_gradient(fr, pg.dposition, pg.dtheta,
                                           pg.dvelocity, &impl_->tape());
        }
      }
    }

    // Occupancy coupling: radar alpha pulled toward the (frozen) camera
    // alpha at random points; measurements can and do override this.
    if (couple_occupancy && config_.bce_samples > 0) {
      Rng brng(Rng::mix(iter_seed, 0xBCEULL));
      const int n = config_.bce_samples;
      Eigen::VectorXd alpha_r(n), alpha_c(n);
      std::vector<Eigen::Vector3d> xs(static_cast<std::size_t>(n));
      std::vector<GeometryField::Sample> samples(
          static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        xs[static_cast<std::size_t>(i)] = uniform_in_box(bounds, &brng);
        field_->geometry_radar.query(xs[static_cast<std::size_t>(i)],
                                     &samples[static_cast<std::size_t>(i)],
                                     /*need_code=*/false);
        alpha_r[i] = samples[static_cast<std::size_t>(i)].alpha;
        alpha_c[i] =
            field_->geometry_camera.query_alpha(xs[static_cast<std::size_t>(i)]);
      }
      Eigen::VectorXd dL_dalpha = Eigen::VectorXd::Zero(n);
      const double bce_scale = w.bce / n;
      loss += bce_scale *
              bce_occupancy_sum(alpha_r, alpha_c, bce_scale, &dL_dalpha);
      for (int i = 0; i < n; ++i) {
        field_->geometry_radar.accumulate_gradient(
            xs[static_cast<std::size_t>(i)],
            samples[static_cast<std::size_t>(i)], dL_dalpha[i], nullptr,
            &impl_->tape());
      }
    }

    // Normal-field supervision at occupancy-weighted random points.
    if ((w.normals_gradient > 0.0 || w.normals_orientation > 0.0) &&
        config_.normal_samples > 0) {
      Rng nrng(Rng::mix(iter_seed, 0x4014A15ULL));
      std::vector<Eigen::Vector3d> xs, omegas;
      std::vector<double> weights;
      const std::size_t fr =
          train_ids_[nrng.uniform_index(train_ids_.size())];
      const Eigen::Vector3d origin = sensor_state(*trajectory_, fr).position;
      for (int i = 0; i < config_.normal_samples; ++i) {
        const Eigen::Vector3d x = uniform_in_box(bounds, &nrng);
        const double a = radar_geom.query_alpha(x);
        if (a < 1e-3) continue;
        xs.push_back(x);
        weights.push_back(a);
        const Eigen::Vector3d d = x - origin;
        omegas.push_back(d.norm() > 1e-9 ? Eigen::Vector3d(d.normalized())
                                         : Eigen::Vector3d::UnitX());
      }
      if (!xs.empty()) {
        loss += loss_normals_gradient(field_->normals, radar_geom, xs, weights,
                                      w.normals_gradient, &impl_->tape());
        loss += loss_normals_orientation(field_->normals, xs, weights, omegas,
                                         w.normals_orientation, &impl_->tape());
      }
    }

    if (config_.train_pose) {
      const PoseRegTerms terms =
          pose_regularizers(*trajectory_, w.pose_reg, &impl_->tape());
      loss += terms.weighted(w.pose_reg);
    }

    if (!std::isfinite(loss)) {
      summary.diverged = true;
      summary.iterations = iter;
      summary.final_loss = loss;
      return summary;
    }
    impl_->tape().finalize(loss);
    opt.step(impl_->tape());
    summary.final_loss = loss;
    summary.iterations = iter + 1;
    if (config_.log != nullptr && (iter % config_.log_every == 0 ||
                                   iter + 1 == total)) {
      log_line(config_.log, 2, iter, loss, loss - ssim_term, ssim_term, "ssim",
               lr);
    }
  }
  return summary;
}

RangeDopplerFrame Trainer::render_model_frame(std::size_t frame_id) const {
  const RadarSceneRefs refs{config_.use_camera_geometry_for_radar
                                ? &field_->geometry_camera
                                : &field_->geometry_radar,
                            &field_->radar_appearance, &field_->normals,
                            &field_->gains};
  const LinearSampler sampler(/*jitter=*/false);
  const auto frame = render_frame(
      refs, sensor_state(*trajectory_, frame_id),
      dataset_.frames[frame_id].timestamp, config_.radar, sampler,
      Rng::mix(config_.seed, 0xE7A1000ULL + frame_id), impl_->workers);
  return frame ? *frame
               : RangeDopplerFrame(config_.radar.n_range,
                                   config_.radar.n_doppler,
                                   config_.radar.n_antenna,
                                   dataset_.frames[frame_id].timestamp);
}

EvalReport Trainer::evaluate(const std::vector<std::size_t>& frame_ids,
                             const std::vector<int>& antennas) {
  prepare_radar_targets();
  std::vector<RangeDopplerFrame> preds, targets;
  preds.reserve(frame_ids.size());
  targets.reserve(frame_ids.size());
  for (std::size_t id : frame_ids) {
    RangeDopplerFrame pred = render_model_frame(id);
    for (double& v : pred.cube) v = norm_.apply(v);
    if (antennas.empty()) {
      preds.push_back(std::move(pred));
      targets.push_back(targets_[id]);
    } else {
      preds.push_back(extract_antennas(pred, antennas));
      targets.push_back(extract_antennas(targets_[id], antennas));
    }
  }
  return evaluate_frames(preds, targets);
}

void Trainer::blend_untrained_gains() {
  if (config_.train_antennas.empty()) return;
  const int n = field_->gains.n_antenna();
  std::vector<bool> trained(static_cast<std::size_t>(n), false);
  for (int k : config_.train_antennas) trained[static_cast<std::size_t>(k)] = true;
  Eigen::VectorXd mean;
  int count = 0;
  for (int k = 0; k < n; ++k) {
    if (!trained[static_cast<std::size_t>(k)]) continue;
    const Eigen::VectorXd& d = field_->gains.grid(k).data();
    if (count == 0) {
      mean = d;
    } else {
      mean += d;
    }
    ++count;
  }
  if (count == 0) return;
  mean /= static_cast<double>(count);
  for (int k = 0; k < n; ++k) {
    if (!trained[static_cast<std::size_t>(k)]) {
      field_->gains.grid(k).data() = mean;
    }
  }
}

void Trainer::apply_metric_scale(double s) {
  if (!(s > 0.0)) {
    throw std::invalid_argument("apply_metric_scale: scale must be positive");
  }
  trajectory_->set_scale(s);
  // Grids keep their vertex values; only the coordinate frame stretches, so
  // the camera-stage fields transport exactly into metric coordinates.
  const Eigen::AlignedBox3d b(field_->config.bounds.min() * s,
                              field_->config.bounds.max() * s);
  field_->config.bounds = b;
  field_->geometry_camera.grid().set_bounds(b);
  field_->geometry_radar.grid().set_bounds(b);
  field_->normals.grid().set_bounds(b);
  impl_->prop_coarse.grid().set_bounds(b);
  impl_->prop_fine.grid().set_bounds(b);
}

PipelineResult run_fit_pipeline(SceneField* field, Trajectory* trajectory,
                                const Dataset& dataset,
                                const PipelineConfig& config) {
  PipelineResult result;
  Trainer trainer(field, trajectory, dataset, config.train);
  result.stage1 = trainer.run_camera_stage();
  if (result.stage1.diverged) {
    result.diverged = true;
    return result;
  }
  if (config.run_scale_calibration) {
    ScaleSearchConfig search = config.scale_search;
    if (search.n_workers == 0) search.n_workers = config.train.n_workers;
    result.scale = optimize_scale(field->geometry_camera, *trajectory,
                                  dataset.frames, search);
    trainer.apply_metric_scale(result.scale.s_opt);
  }
  trainer.distill_geometry_to_radar();
  result.stage2 = trainer.run_radar_stage();
  if (result.stage2.diverged) {
    result.diverged = true;
    return result;
  }
  trainer.blend_untrained_gains();
  result.heldout = trainer.evaluate(trainer.test_ids());
  return result;
}

}  // namespace rdf
