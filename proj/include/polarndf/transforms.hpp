#pragma once

#include <array>

#include "polarndf/pose.hpp"
#include "polarndf/skeleton.hpp"

namespace polarndf {

// Connections shorter than this map to the direction (1, 0).
inline constexpr double kDegenerateLength = 1e-12;

PolarPose to_polar(const CartesianPose& pose, const Skeleton& skel);

// Forward kinematics from the root; derived joints are placed at the mean of
// their sources. Confidences are dropped.
CartesianPose to_cartesian(const PolarPose& polar, const Skeleton& skel, Vec2 root_position);

// Root to the origin and vertical keypoint extent to 1.
NormalizationTransform normalization_for(const CartesianPose& pose, const Skeleton& skel);
CartesianPose normalize(const CartesianPose& pose, const Skeleton& skel);

CartesianPose flip_horizontal(const CartesianPose& pose, const Skeleton& skel);

// Linear interpolation in Cartesian space; (factor - 1) frames inserted
// between each consecutive pair, frames re-indexed 0..(n-1)*factor.
PoseSequence interpolate_sequence(const PoseSequence& seq, int factor);

// Jacobian-transpose of to_polar: maps a gradient over the J polar triples to
// a gradient over the 17 keypoint positions (derived joints receive zero).
std::array<Vec2, kNumKeypoints> polar_gradient_to_cartesian(const CartesianPose& pose, const Skeleton& skel,
                                                            std::span<const double> polar_gradient);

}  // namespace polarndf
