#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "polarndf/error.hpp"
#include "polarndf/kernels.hpp"
#include "polarndf/metrics.hpp"

using namespace polarndf;

namespace {

PolarPose one(double angle, double r) {
  PolarPose p(1);
  p.set_triple(0, {std::cos(angle), std::sin(angle), r});
  return p;
}

}  // namespace

TEST_CASE("geodesic equals weighted endpoint-vector distance") {
  std::mt19937_64 rng(11);
  std::vector<double> wv(16);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (auto& v : wv) v = u(rng);
  const DistanceWeights w{wv};
  for (int t = 0; t < 100; ++t) {
    const auto a = testutil::random_polar(rng, 16), b = testutil::random_polar(rng, 16);
    double acc = 0.0;
    for (std::size_t j = 0; j < 16; ++j) {
      const double dx = a.r(j) * a.theta1(j) - b.r(j) * b.theta1(j);
      const double dy = a.r(j) * a.theta2(j) - b.r(j) * b.theta2(j);
      acc += wv[j] * std::sqrt(dx * dx + dy * dy);
    }
    CHECK(geodesic_dist(a, b, w) == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("arc-radius and angular single-connection values") {
  const auto w = DistanceWeights::ones(1);
  CHECK(arc_radius_dist(one(0.0, 2.0), one(std::numbers::pi / 2, 1.0), w) ==
        doctest::Approx(2.0 * std::numbers::pi / 2 + 1.0));
  CHECK(angular_dist(one(0.3, 2.0), one(1.3, 7.0), w) == doctest::Approx(1.0));
  CHECK(angular_dist(one(0.0, 1.0), one(std::numbers::pi, 1.0), w) == doctest::Approx(std::numbers::pi));
  CHECK(direction_angle(1.0, 0.0, 1.0, 0.0) == 0.0);
  CHECK(std::isfinite(direction_angle(1.0, 1e-17, -1.0, 0.0)));
}

TEST_CASE("length mismatch is rejected") {
  CHECK_THROWS_AS(geodesic_dist(PolarPose(2), PolarPose(3), DistanceWeights::ones(2)), Error);
}

TEST_CASE("prior weights: closed form, uniform on zeros, K >= 2") {
  const std::vector<double> d{2.0, 2.0};
  const auto w = prior_pose_weights(d);
  CHECK(w[0] == doctest::Approx(0.5));
  const std::vector<double> z{0.0, 0.0, 0.0};
  for (double v : prior_pose_weights(z)) CHECK(v == doctest::Approx(1.0 / 3.0));
  const std::vector<double> single{1.0};
  CHECK_THROWS_AS(prior_pose_weights(single), Error);
}

TEST_CASE("prior distance of a bank member duplicated K times is zero") {
  std::mt19937_64 rng(12);
  const auto p = testutil::random_polar(rng, 16);
  std::vector<PolarPose> bank{p, p, p, testutil::random_polar(rng, 16)};
  const auto r = prior_distance(p, bank, 3, DistanceKind::arc_radius, DistanceWeights::ones(16));
  CHECK(r.manifold_distance == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.prior_pose.is_valid());
  CHECK(r.neighbor_indices == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("knn variants agree with the full sort, ties to the lower index") {
  std::mt19937_64 rng(13);
  const auto w = DistanceWeights::ones(16);
  std::vector<PolarPose> bank;
  for (int i = 0; i < 600; ++i) bank.push_back(i % 7 == 6 ? bank[static_cast<std::size_t>(i / 3)] : testutil::random_polar(rng, 16));
  for (auto kind : {DistanceKind::geodesic, DistanceKind::arc_radius, DistanceKind::angular}) {
    for (int q = 0; q < 30; ++q) {
      const auto query = q % 3 == 0 ? bank[static_cast<std::size_t>(q * 5)] : testutil::random_polar(rng, 16);
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t i = 0; i < bank.size(); ++i) all.emplace_back(pose_distance(kind, query, bank[i], w), i);
      std::sort(all.begin(), all.end());
      for (const auto& res : {knn(query, bank, 7, kind, w), kernels::knn_pruned(query, bank, 7, kind, w),
                              kernels::serial::knn(query, bank, 7, kind, w), kernels::omp::knn(query, bank, 7, kind, w)}) {
        REQUIRE(res.indices.size() == 7);
        for (std::size_t i = 0; i < 7; ++i) {
          CHECK(res.indices[i] == all[i].second);
          CHECK(res.distances[i] == all[i].first);
        }
      }
    }
  }
  CHECK_THROWS_AS(knn(bank[0], bank, 5000, DistanceKind::geodesic, w), Error);
}

TEST_CASE("pck reference is the left-shoulder to right-hip distance") {
  const auto s = Skeleton::h36m17();
  CartesianPose gt;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) gt.set(j, {static_cast<double>(j), 0.0});
  gt.set(static_cast<std::size_t>(s.shoulder_left_index()), {0.0, 10.0});
  gt.set(static_cast<std::size_t>(s.hip_right_index()), {0.0, 0.0});
  auto pred = gt;
  pred.set(0, {gt.at(0).x + 1.0, 0.0});   // error 1 = 0.1 * ref
  pred.set(16, {gt.at(16).x + 2.0, 0.0});  // error 2
  const auto r = pck(pred, gt, s, 0.1);
  CHECK(r.correct[0]);
  CHECK_FALSE(r.correct[16]);
  CHECK(r.fraction == doctest::Approx(16.0 / 17.0));
  CHECK(pck(gt, gt, s, 0.05).fraction == 1.0);
  CartesianPose degenerate;
  CHECK_THROWS_AS(pck(degenerate, degenerate, s, 0.1), Error);
}

TEST_CASE("joint curves aggregate like per-frame pck") {
  std::mt19937_64 rng(14);
  const auto s = Skeleton::h36m17();
  std::vector<CartesianPose> gts;
  std::vector<std::vector<CartesianPose>> its;
  for (int p = 0; p < 3; ++p) {
    gts.push_back(testutil::random_pose(rng));
    its.push_back({testutil::random_pose(rng), gts.back()});
  }
  const std::vector<double> th{0.1, 0.5};
  const auto table = joint_wise_pck_curves(its, gts, s, th);
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    double expect = 0.0;
    for (int p = 0; p < 3; ++p) expect += pck(its[static_cast<std::size_t>(p)][0], gts[static_cast<std::size_t>(p)], s, 0.5).correct[j];
    CHECK(table[j][0][1] == doctest::Approx(expect / 3.0));
    CHECK(table[j][1][0] == 1.0);
  }
}

TEST_CASE("nearest-rank percentile") {
  CHECK(percentile({5, 1, 4, 2, 3}, 50) == 3);
  CHECK(percentile({5, 1, 4, 2, 3}, 0) == 1);
  CHECK(percentile({5, 1, 4, 2, 3}, 100) == 5);
  CHECK(percentile({1, 2, 3, 4}, 95) == 4);
  CHECK_THROWS_AS(percentile({}, 50), Error);
}
