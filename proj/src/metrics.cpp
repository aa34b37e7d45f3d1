#include "polarndf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polarndf/error.hpp"
#include "polarndf/kernels.hpp"

namespace polarndf {

DistanceKind parse_distance_kind(std::string_view text) {
  if (text == "geodesic") return DistanceKind::geodesic;
  if (text == "arc_radius" || text == "arc-radius") return DistanceKind::arc_radius;
  if (text == "angular") return DistanceKind::angular;
  throw Error(ErrorKind::Config, "unknown distance kind '" + std::string(text) + "'");
}

std::string_view to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::geodesic: return "geodesic";
    case DistanceKind::arc_radius: return "arc_radius";
    case DistanceKind::angular: return "angular";
  }
  return "?";
}

namespace {

void check_shapes(const PolarPose& a, const PolarPose& b, const DistanceWeights& w) {
  if (a.size() != b.size() || a.size() != w.size()) {
    throw Error(ErrorKind::LengthMismatch, "distance between poses of " + std::to_string(a.size()) + " and " +
                                               std::to_string(b.size()) + " connections with " +
                                               std::to_string(w.size()) + " weights");
  }
}

}  // namespace

double direction_angle(double a1, double a2, double b1, double b2) {
  return std::atan2(std::abs(a1 * b2 - a2 * b1), a1 * b1 + a2 * b2);
}

double geodesic_dist(const PolarPose& a, const PolarPose& b, const DistanceWeights& w) {
  check_shapes(a, b, w);
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double dx = a.r(j) * a.theta1(j) - b.r(j) * b.theta1(j);
    const double dy = a.r(j) * a.theta2(j) - b.r(j) * b.theta2(j);
    sum += w.w[j] * std::sqrt(dx * dx + dy * dy);
  }
  return sum;
}

double arc_radius_dist(const PolarPose& a, const PolarPose& b, const DistanceWeights& w) {
  check_shapes(a, b, w);
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double angle = direction_angle(a.theta1(j), a.theta2(j), b.theta1(j), b.theta2(j));
    sum += w.w[j] * (a.r(j) * angle + std::abs(a.r(j) - b.r(j)));
  }
  return sum;
}

double angular_dist(const PolarPose& a, const PolarPose& b, const DistanceWeights& w) {
  check_shapes(a, b, w);
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    sum += w.w[j] * direction_angle(a.theta1(j), a.theta2(j), b.theta1(j), b.theta2(j));
  }
  return sum;
}

double pose_distance(DistanceKind kind, const PolarPose& a, const PolarPose& b, const DistanceWeights& w) {
  switch (kind) {
    case DistanceKind::geodesic: return geodesic_dist(a, b, w);
    case DistanceKind::arc_radius: return arc_radius_dist(a, b, w);
    case DistanceKind::angular: return angular_dist(a, b, w);
  }
  return 0.0;
}

KnnResult knn(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k, DistanceKind kind,
              const DistanceWeights& w) {
  return kernels::omp::knn(query, bank, k, kind, w);
}

std::vector<double> prior_pose_weights(std::span<const double> distances) {
  const std::size_t k = distances.size();
  if (k < 2) throw Error(ErrorKind::KTooSmall, "prior pose weights need K >= 2");
  const double total = std::accumulate(distances.begin(), distances.end(), 0.0);
  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  if (total > 0.0) {
    for (std::size_t i = 0; i < k; ++i) w[i] = (1.0 - distances[i] / total) / static_cast<double>(k - 1);
  }
  return w;
}

PriorQueryResult prior_distance(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k,
                                DistanceKind kind, const DistanceWeights& w) {
  if (k < 2) throw Error(ErrorKind::KTooSmall, "prior distance needs K >= 2, got " + std::to_string(k));
  return prior_from_neighbors(query, bank, knn(query, bank, k, kind, w), kind, w);
}

PriorQueryResult prior_from_neighbors(const PolarPose& query, std::span<const PolarPose> bank, KnnResult nn,
                                      DistanceKind kind, const DistanceWeights& w) {
  const std::size_t k = nn.indices.size();
  PriorQueryResult out;
  out.pose_weights = prior_pose_weights(nn.distances);
  std::vector<double> mean(query.flat().size(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto src = bank[nn.indices[i]].flat();
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += out.pose_weights[i] * src[c];
  }
  out.prior_pose = PolarPose::from_flat(std::move(mean));
  repair(out.prior_pose);
  out.manifold_distance = pose_distance(kind, query, out.prior_pose, w);
  out.neighbor_indices = std::move(nn.indices);
  out.neighbor_distances = std::move(nn.distances);
  return out;
}

PckResult pck(const CartesianPose& pred, const CartesianPose& gt, int ref_a, int ref_b, double t) {
  const double ref = (gt.at(static_cast<std::size_t>(ref_a)) - gt.at(static_cast<std::size_t>(ref_b))).norm();
  if (!(ref > 0.0)) throw Error(ErrorKind::DegenerateReference, "PCK reference distance is zero");
  const double limit = t * ref;
  PckResult out;
  std::size_t hits = 0;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    out.correct[j] = (pred.at(j) - gt.at(j)).norm() <= limit;
    hits += out.correct[j] ? 1 : 0;
  }
  out.fraction = static_cast<double>(hits) / static_cast<double>(kNumKeypoints);
  return out;
}

PckResult pck(const CartesianPose& pred, const CartesianPose& gt, const Skeleton& skel, double t) {
  return pck(pred, gt, skel.shoulder_left_index(), skel.hip_right_index(), t);
}

JointCurves joint_wise_pck_curves(const std::vector<std::vector<CartesianPose>>& iterates,
                                  const std::vector<CartesianPose>& gts, const Skeleton& skel,
                                  std::span<const double> thresholds) {
  if (iterates.size() != gts.size()) {
    throw Error(ErrorKind::LengthMismatch, "iterate lists and ground truths differ in count");
  }
  const std::size_t n_iter = iterates.empty() ? 0 : iterates.front().size();
  for (const auto& it : iterates) {
    if (it.size() != n_iter) throw Error(ErrorKind::LengthMismatch, "iterate lists have different lengths");
  }
  JointCurves table(kNumKeypoints, std::vector<std::vector<double>>(n_iter, std::vector<double>(thresholds.size(), 0.0)));
  if (gts.empty()) return table;
  for (std::size_t p = 0; p < gts.size(); ++p) {
    for (std::size_t i = 0; i < n_iter; ++i) {
      for (std::size_t t = 0; t < thresholds.size(); ++t) {
        const auto res = pck(iterates[p][i], gts[p], skel, thresholds[t]);
        for (std::size_t j = 0; j < kNumKeypoints; ++j) table[j][i][t] += res.correct[j] ? 1.0 : 0.0;
      }
    }
  }
  const double n = static_cast<double>(gts.size());
  for (auto& joint : table)
    for (auto& row : joint)
      for (auto& v : row) v /= n;
  return table;
}

double mean_pck(std::span<const CartesianPose> preds, std::span<const CartesianPose> gts, const Skeleton& skel,
                double t) {
  if (preds.size() != gts.size()) throw Error(ErrorKind::LengthMismatch, "prediction/ground-truth count mismatch");
  if (preds.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += pck(preds[i], gts[i], skel, t).fraction;
  return sum / static_cast<double>(preds.size());
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::LengthMismatch, "percentile of an empty list");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

}  // namespace polarndf
