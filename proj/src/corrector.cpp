#include "polarndf/corrector.hpp"

#include <algorithm>
#include <cmath>

#include "polarndf/error.hpp"
#include "polarndf/kernels.hpp"
#include "polarndf/metrics.hpp"
#include "polarndf/transforms.hpp"

namespace polarndf {

namespace {

void place_derived(CartesianPose& pose, const Skeleton& skel) {
  for (const auto& d : skel.derived_joints()) {
    Vec2 sum{0.0, 0.0};
    for (int s : d.sources) sum = sum + pose.at(static_cast<std::size_t>(s));
    pose.set(static_cast<std::size_t>(d.joint), (1.0 / static_cast<double>(d.sources.size())) * sum);
  }
}

}  // namespace

std::array<Vec2, kNumKeypoints> correction_gradient(const NdfModel& model, const CartesianPose& pose,
                                                    const Skeleton& skel, double* value) {
  const PolarPose polar = to_polar(pose, skel);
  std::vector<double> g(model.input_size());
  NdfWorkspace ws(model);
  const double f = input_gradient(model, polar.flat(), g, ws);
  if (value) *value = f;
  return polar_gradient_to_cartesian(pose, skel, g);
}

CorrectionResult correct(const NdfModel& model, const CartesianPose& pose, const Skeleton& skel,
                         const CorrectionConfig& cfg) {
  if (cfg.max_iters < 1) throw Error(ErrorKind::Config, "correction needs max_iters >= 1");
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorKind::Config, "correction learning rate must be positive");
  const AdamConfig adam{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
  const auto root = static_cast<std::size_t>(skel.root_index());

  CorrectionResult out;
  CartesianPose x = pose;
  std::vector<double> params(2 * kNumKeypoints);
  std::vector<double> grads(2 * kNumKeypoints);
  AdamState state(params.size());
  NdfWorkspace ws(model);
  std::vector<double> g(model.input_size());

  for (int i = 0;; ++i) {
    const PolarPose polar = to_polar(x, skel);
    const double f = input_gradient(model, polar.flat(), g, ws);
    if (!std::isfinite(f)) throw Error(ErrorKind::NonFinite, "non-finite distance during correction");
    if (cfg.record_trajectory) out.trajectory.push_back({i, x, f});
    out.final_distance = f;
    if (f < cfg.stop_threshold || i == cfg.max_iters) break;

    const auto cart = polar_gradient_to_cartesian(x, skel, g);
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      params[2 * k] = x.keypoints[k].x;
      params[2 * k + 1] = x.keypoints[k].y;
      const bool fixed = k == root;
      grads[2 * k] = fixed ? 0.0 : cart[k].x;
      grads[2 * k + 1] = fixed ? 0.0 : cart[k].y;
    }
    for (double v : grads) {
      if (!std::isfinite(v)) throw Error(ErrorKind::DegeneratePose, "non-finite correction gradient");
    }
    adam_step(params, grads, state, adam);
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      if (k == root) continue;
      x.set(k, {params[2 * k], params[2 * k + 1]});
    }
    place_derived(x, skel);
    out.iterations_used = i + 1;
  }
  out.corrected = x;
  return out;
}

std::vector<double> stop_threshold_candidates(const NdfModel& model, std::span<const PolarPose> val_reals,
                                              std::span<const double> percentiles) {
  if (val_reals.empty()) throw Error(ErrorKind::EmptyValidation, "no validation reals");
  static constexpr double kDefault[] = {50, 75, 90, 95, 99};
  if (percentiles.empty()) percentiles = kDefault;
  const auto f = kernels::omp::evaluate(model, val_reals);
  std::vector<double> out;
  for (double p : percentiles) out.push_back(percentile(f, p));
  return out;
}

double calibrate_stop_threshold(const NdfModel& model, std::span<const CartesianPose> val_detections,
                                std::span<const CartesianPose> val_gts, const Skeleton& skel,
                                std::span<const double> thresholds_to_try, const CorrectionConfig& cfg) {
  if (val_detections.empty() || val_gts.empty()) throw Error(ErrorKind::EmptyValidation, "no validation poses");
  if (val_detections.size() != val_gts.size()) {
    throw Error(ErrorKind::LengthMismatch, "validation detections and ground truths differ in length");
  }
  if (thresholds_to_try.empty()) throw Error(ErrorKind::Config, "no stop-threshold candidates");

  // Iterates do not depend on the threshold, so one unstopped run per pose
  // covers every candidate: a threshold stops at the first iterate below it.
  CorrectionConfig run = cfg;
  run.stop_threshold = 0.0;
  run.record_trajectory = true;
  const auto results = kernels::omp::correct_batch(model, val_detections, skel, run);

  double best_tau = thresholds_to_try.front();
  double best_pck = -1.0;
  for (double tau : thresholds_to_try) {
    double sum = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& traj = results[i].trajectory;
      const CartesianPose* chosen = &traj.back().pose;
      for (const auto& point : traj) {
        if (point.distance < tau) {
          chosen = &point.pose;
          break;
        }
      }
      sum += pck(*chosen, val_gts[i], skel, 0.1).fraction;
    }
    const double score = sum / static_cast<double>(results.size());
    if (score > best_pck || (score == best_pck && tau > best_tau)) {
      best_pck = score;
      best_tau = tau;
    }
  }
  return best_tau;
}

BestIterateReport best_iterate_analysis(const std::vector<std::vector<CartesianPose>>& trajectories,
                                        std::span<const CartesianPose> gts, const Skeleton& skel, double t) {
  if (trajectories.size() != gts.size()) throw Error(ErrorKind::LengthMismatch, "trajectories and ground truths");
  BestIterateReport r;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (trajectories[i].empty()) throw Error(ErrorKind::LengthMismatch, "empty trajectory");
    double best = 0.0;
    for (const auto& p : trajectories[i]) best = std::max(best, pck(p, gts[i], skel, t).fraction);
    r.best_per_pose.push_back(best);
    r.final_per_pose.push_back(pck(trajectories[i].back(), gts[i], skel, t).fraction);
  }
  if (!gts.empty()) {
    const double n = static_cast<double>(gts.size());
    for (double v : r.best_per_pose) r.best_mean += v;
    for (double v : r.final_per_pose) r.final_mean += v;
    r.best_mean /= n;
    r.final_mean /= n;
  }
  return r;
}

std::vector<std::vector<CartesianPose>> padded_trajectories(const std::vector<CorrectionResult>& results,
                                                            std::size_t length) {
  std::vector<std::vector<CartesianPose>> out;
  out.reserve(results.size());
  for (const auto& r : results) {
    std::vector<CartesianPose> poses;
    for (const auto& p : r.trajectory) poses.push_back(p.pose);
    if (poses.empty()) poses.push_back(r.corrected);
    if (poses.size() > length) poses.resize(length);
    while (poses.size() < length) poses.push_back(poses.back());
    out.push_back(std::move(poses));
  }
  return out;
}

}  // namespace polarndf
