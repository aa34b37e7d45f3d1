#pragma once

#include <span>
#include <vector>

#include "polarndf/adam.hpp"
#include "polarndf/ndf.hpp"
#include "polarndf/pose.hpp"
#include "polarndf/skeleton.hpp"

namespace polarndf {

struct CorrectionConfig {
  double learning_rate = 1e-4;
  int max_iters = 100;
  // Stop once the prior's distance drops below this value.
  double stop_threshold = 0.0;
  bool record_trajectory = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrajectoryPoint {
  int iteration = 0;
  CartesianPose pose;
  double distance = 0.0;
};

struct CorrectionResult {
  CartesianPose corrected;
  int iterations_used = 0;
  double final_distance = 0.0;
  std::vector<TrajectoryPoint> trajectory;
};

// Minimizes f(to_polar(x)) over the Cartesian keypoints with Adam, the root
// held fixed. Iteration i evaluates f(x_i); it stops when f < threshold or
// after max_iters updates. `pose` should be normalized.
CorrectionResult correct(const NdfModel& model, const CartesianPose& pose, const Skeleton& skel,
                         const CorrectionConfig& cfg);

// Gradient of f(to_polar(x)) with respect to the 17 keypoints.
std::array<Vec2, kNumKeypoints> correction_gradient(const NdfModel& model, const CartesianPose& pose,
                                                    const Skeleton& skel, double* value = nullptr);

// Candidate thresholds: the given percentiles of f over validation reals.
std::vector<double> stop_threshold_candidates(const NdfModel& model, std::span<const PolarPose> val_reals,
                                              std::span<const double> percentiles = {});

// Picks the candidate maximizing validation PCK@0.1 of the corrected
// detections (ties go to the larger threshold). Detections and ground truths
// are normalized and aligned.
double calibrate_stop_threshold(const NdfModel& model, std::span<const CartesianPose> val_detections,
                                std::span<const CartesianPose> val_gts, const Skeleton& skel,
                                std::span<const double> thresholds_to_try, const CorrectionConfig& cfg);

struct BestIterateReport {
  std::vector<double> best_per_pose;
  std::vector<double> final_per_pose;
  double best_mean = 0.0;
  double final_mean = 0.0;
};

// Per pose, the highest PCK over every recorded iterate versus the last one.
BestIterateReport best_iterate_analysis(const std::vector<std::vector<CartesianPose>>& trajectories,
                                        std::span<const CartesianPose> gts, const Skeleton& skel, double t);

// Pads each trajectory with its last pose up to `length` entries.
std::vector<std::vector<CartesianPose>> padded_trajectories(const std::vector<CorrectionResult>& results,
                                                            std::size_t length);

}  // namespace polarndf
