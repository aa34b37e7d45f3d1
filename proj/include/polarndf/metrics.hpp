#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polarndf/pose.hpp"
#include "polarndf/skeleton.hpp"

namespace polarndf {

enum class DistanceKind { geodesic, arc_radius, angular };

DistanceKind parse_distance_kind(std::string_view text);
std::string_view to_string(DistanceKind kind);

struct DistanceWeights {
  std::vector<double> w;

  static DistanceWeights ones(std::size_t num_connections) { return {std::vector<double>(num_connections, 1.0)}; }
  static DistanceWeights from(const Skeleton& skel) { return {skel.distance_weights()}; }
  std::size_t size() const { return w.size(); }
};

// Weighted Euclidean distance between per-connection vectors r * (cos, sin).
double geodesic_dist(const PolarPose& a, const PolarPose& b, const DistanceWeights& w);
// sum_j w_j (r_a * arccos(<dir_a, dir_b>) + |r_a - r_b|). Not symmetric: the
// arc is measured at the first argument's radius.
double arc_radius_dist(const PolarPose& a, const PolarPose& b, const DistanceWeights& w);
// sum_j w_j arccos(<dir_a, dir_b>).
double angular_dist(const PolarPose& a, const PolarPose& b, const DistanceWeights& w);
double pose_distance(DistanceKind kind, const PolarPose& a, const PolarPose& b, const DistanceWeights& w);

// Angle in [0, pi] between two unit directions. Equals arccos of their dot
// product, computed as atan2(|cross|, dot): exact zero for identical
// directions and no NaN for antipodal or slightly non-unit inputs.
double direction_angle(double a1, double a2, double b1, double b2);

struct KnnResult {
  std::vector<std::size_t> indices;
  std::vector<double> distances;  // ascending; ties by lower bank index
};

// Exact brute-force search; the query is the first distance argument.
KnnResult knn(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k, DistanceKind kind,
              const DistanceWeights& w);

struct PriorQueryResult {
  std::vector<std::size_t> neighbor_indices;
  std::vector<double> neighbor_distances;
  std::vector<double> pose_weights;
  PolarPose prior_pose;
  double manifold_distance = 0.0;
};

// w_i = (1 - d_i / sum d) / (K - 1); uniform when every d_i is zero.
std::vector<double> prior_pose_weights(std::span<const double> distances);

// Prior pose and manifold distance from an already computed neighbor set.
PriorQueryResult prior_from_neighbors(const PolarPose& query, std::span<const PolarPose> bank, KnnResult neighbors,
                                      DistanceKind kind, const DistanceWeights& w);

// Distance-weighted mean of the K nearest bank poses (re-normalized onto the
// polar constraints) and the query's distance to it.
PriorQueryResult prior_distance(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k,
                                DistanceKind kind, const DistanceWeights& w);

struct PckResult {
  std::array<bool, kNumKeypoints> correct{};
  double fraction = 0.0;
};

PckResult pck(const CartesianPose& pred, const CartesianPose& gt, const Skeleton& skel, double t);
// Explicit reference pair (reference distance = |gt[ref_a] - gt[ref_b]|).
PckResult pck(const CartesianPose& pred, const CartesianPose& gt, int ref_a, int ref_b, double t);

// table[joint][iteration][threshold]: mean correctness over the poses.
using JointCurves = std::vector<std::vector<std::vector<double>>>;

JointCurves joint_wise_pck_curves(const std::vector<std::vector<CartesianPose>>& iterates,
                                  const std::vector<CartesianPose>& gts, const Skeleton& skel,
                                  std::span<const double> thresholds);

// Mean PCK fraction over aligned pose lists.
double mean_pck(std::span<const CartesianPose> preds, std::span<const CartesianPose> gts, const Skeleton& skel,
                double t);

// Nearest-rank percentile (p in [0, 100]) of a nonempty list.
double percentile(std::vector<double> values, double p);

}  // namespace polarndf
