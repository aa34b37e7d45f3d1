#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "polarndf/corrector.hpp"
#include "polarndf/error.hpp"
#include "polarndf/kernels.hpp"
#include "polarndf/metrics.hpp"

using namespace polarndf;

namespace {

NdfModel model() {
  auto a = NdfArchitecture::for_skeleton(Skeleton::h36m17());
  a.embedding_dim = 3;
  a.encoder_hidden = 6;
  a.decoder_hidden = {8};
  return NdfModel(a, 51);
}

std::vector<CartesianPose> poses(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CartesianPose> out;
  for (int i = 0; i < n; ++i) out.push_back(normalize(testutil::random_pose(rng), Skeleton::h36m17()));
  return out;
}

}  // namespace

TEST_CASE("correction gradient matches finite differences on keypoints") {
  const auto m = model();
  const auto s = Skeleton::h36m17();
  const auto x = poses(1, 52)[0];
  const auto g = correction_gradient(m, x, s);
  auto f = [&](const CartesianPose& p) { return forward(m, to_polar(p, s)); };
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    auto hi = x, lo = x;
    hi.keypoints[j].x += 1e-6;
    lo.keypoints[j].x -= 1e-6;
    CHECK(g[j].x == doctest::Approx((f(hi) - f(lo)) / 2e-6).epsilon(1e-5).scale(1e-7));
  }
}

TEST_CASE("correct: root fixed, f decreases, trajectory includes the start") {
  const auto m = model();
  const auto s = Skeleton::h36m17();
  CorrectionConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_iters = 30;
  cfg.record_trajectory = true;
  for (const auto& x : poses(5, 53)) {
    const auto r = correct(m, x, s, cfg);
    const auto root = static_cast<std::size_t>(s.root_index());
    CHECK(r.corrected.at(root) == x.at(root));
    REQUIRE(r.trajectory.size() == 31);
    CHECK(r.trajectory.front().pose == x);
    CHECK(r.trajectory.front().iteration == 0);
    CHECK(r.trajectory.back().distance < r.trajectory.front().distance);
    CHECK(r.iterations_used == 30);
  }
}

TEST_CASE("correct stops once f drops below the threshold") {
  const auto m = model();
  const auto s = Skeleton::h36m17();
  const auto x = poses(1, 54)[0];
  CorrectionConfig cfg;
  cfg.stop_threshold = 1e9;
  cfg.record_trajectory = true;
  const auto r = correct(m, x, s, cfg);
  CHECK(r.iterations_used == 0);
  CHECK(r.corrected == x);
  cfg.max_iters = 0;
  CHECK_THROWS_AS(correct(m, x, s, cfg), Error);
}

TEST_CASE("serial and omp correction agree") {
  const auto m = model();
  const auto s = Skeleton::h36m17();
  const auto xs = poses(9, 55);
  CorrectionConfig cfg;
  cfg.max_iters = 10;
  cfg.learning_rate = 1e-3;
  const auto a = kernels::serial::correct_batch(m, xs, s, cfg);
  const auto b = kernels::omp::correct_batch(m, xs, s, cfg);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(a[i].corrected == b[i].corrected);
}

TEST_CASE("stop threshold calibration equals a brute-force sweep") {
  const auto m = model();
  const auto s = Skeleton::h36m17();
  const auto gts = poses(8, 56);
  std::vector<CartesianPose> dets;
  std::mt19937_64 rng(57);
  std::normal_distribution<double> n(0.0, 0.03);
  for (auto g : gts) {
    for (auto& k : g.keypoints) {
      k.x += n(rng);
      k.y += n(rng);
    }
    dets.push_back(g);
  }
  CorrectionConfig cfg;
  cfg.max_iters = 15;
  cfg.learning_rate = 5e-3;
  std::vector<PolarPose> reals;
  for (const auto& g : gts) reals.push_back(to_polar(g, s));
  const auto cands = stop_threshold_candidates(m, reals);
  REQUIRE(cands.size() == 5);
  double best_tau = -1.0, best_pck = -1.0;
  for (double tau : cands) {
    auto c = cfg;
    c.stop_threshold = tau;
    std::vector<CartesianPose> out;
    for (const auto& d : dets) out.push_back(correct(m, d, s, c).corrected);
    const double p = mean_pck(out, gts, s, 0.1);
    if (p > best_pck || (p == best_pck && tau > best_tau)) {
      best_pck = p;
      best_tau = tau;
    }
  }
  CHECK(calibrate_stop_threshold(m, dets, gts, s, cands, cfg) == best_tau);
  CHECK_THROWS_AS(stop_threshold_candidates(m, {}), Error);
}

TEST_CASE("best-iterate analysis dominates the final iterate") {
  const auto s = Skeleton::h36m17();
  const auto gts = poses(4, 58);
  const auto noise = poses(4, 59);
  std::vector<std::vector<CartesianPose>> traj;
  for (std::size_t i = 0; i < 4; ++i) traj.push_back({gts[i], noise[i]});
  const auto r = best_iterate_analysis(traj, gts, s, 0.1);
  CHECK(r.best_mean == 1.0);
  CHECK(r.best_mean >= r.final_mean);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.best_per_pose[i] >= r.final_per_pose[i]);
}

TEST_CASE("trajectories pad with the last pose") {
  CorrectionResult a;
  a.corrected = poses(1, 60)[0];
  a.trajectory = {{0, poses(1, 61)[0], 1.0}};
  CorrectionResult b;
  b.corrected = poses(1, 62)[0];
  const auto t = padded_trajectories({a, b}, 3);
  REQUIRE(t.size() == 2);
  CHECK(t[0].size() == 3);
  CHECK(t[0][2] == a.trajectory[0].pose);
  CHECK(t[1][0] == b.corrected);
}
