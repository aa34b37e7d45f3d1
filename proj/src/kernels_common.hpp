#pragma once

// Per-item bodies shared by the serial and OpenMP kernels.

#include <algorithm>
#include <cmath>

#include "polarndf/error.hpp"
#include "polarndf/kernels.hpp"
#include "polarndf/transforms.hpp"

namespace polarndf::kernels::detail {

inline void check_knn_args(std::size_t bank_size, std::size_t k) {
  if (k < 1) throw Error(ErrorKind::KTooSmall, "knn needs k >= 1");
  if (bank_size < k) {
    throw Error(ErrorKind::BankTooSmall, "bank of " + std::to_string(bank_size) + " poses is smaller than k = " +
                                             std::to_string(k));
  }
}

// Per-connection term of each distance kind; summed in connection order
// exactly as the metrics functions do.
inline double distance_term(DistanceKind kind, const PolarPose& a, const PolarPose& b, std::size_t j) {
  switch (kind) {
    case DistanceKind::geodesic: {
      const double dx = a.r(j) * a.theta1(j) - b.r(j) * b.theta1(j);
      const double dy = a.r(j) * a.theta2(j) - b.r(j) * b.theta2(j);
      return std::sqrt(dx * dx + dy * dy);
    }
    case DistanceKind::arc_radius:
      return a.r(j) * direction_angle(a.theta1(j), a.theta2(j), b.theta1(j), b.theta2(j)) + std::abs(a.r(j) - b.r(j));
    case DistanceKind::angular:
      return direction_angle(a.theta1(j), a.theta2(j), b.theta1(j), b.theta2(j));
  }
  return 0.0;
}

struct Candidate {
  double distance;
  std::size_t index;
  bool operator<(const Candidate& o) const { return distance < o.distance || (distance == o.distance && index < o.index); }
};

// Scans bank[begin, end) keeping the k best candidates (sorted) in `top`.
inline void pruned_scan(const PolarPose& query, std::span<const PolarPose> bank, std::size_t begin, std::size_t end,
                        std::size_t k, DistanceKind kind, const DistanceWeights& w, std::vector<Candidate>& top) {
  const std::size_t J = query.size();
  for (std::size_t i = begin; i < end; ++i) {
    const PolarPose& b = bank[i];
    if (b.size() != J) throw Error(ErrorKind::LengthMismatch, "bank pose has a different connection count");
    const bool full = top.size() == k;
    const double bound = full ? top.back().distance : 0.0;
    double sum = 0.0;
    bool pruned = false;
    for (std::size_t j = 0; j < J; ++j) {
      sum += w.w[j] * distance_term(kind, query, b, j);
      // Terms are nonnegative, so the partial sum never decreases; a later
      // index with an equal distance loses the tie anyway.
      if (full && sum >= bound) {
        pruned = true;
        break;
      }
    }
    if (pruned) continue;
    Candidate c{sum, i};
    auto pos = std::upper_bound(top.begin(), top.end(), c);
    top.insert(pos, c);
    if (top.size() > k) top.pop_back();
  }
}

inline KnnResult to_result(const std::vector<Candidate>& top) {
  KnnResult r;
  for (const auto& c : top) {
    r.indices.push_back(c.index);
    r.distances.push_back(c.distance);
  }
  return r;
}

inline PolarPose make_fake(std::size_t i, std::span<const PolarPose> gts, const ErrorBank& bank,
                           const SynthesisConfig& cfg, const Skeleton& skel) {
  const auto draw = draw_fake(cfg.seed, i, bank.size(), gts.size(), cfg.fixed_u);
  return compose_fake(gts[draw.gt_index], bank.errors[draw.error_index], draw.u, to_polar(draw.noise, skel),
                      cfg.lambda);
}

inline void check_fake_args(std::span<const PolarPose> gts, const ErrorBank& bank, const SynthesisConfig& cfg,
                            std::span<const PolarPose> labeling_bank) {
  if (bank.empty()) throw Error(ErrorKind::EmptyBank, "error bank is empty");
  if (gts.empty()) throw Error(ErrorKind::EmptyGts, "no ground-truth poses to perturb");
  if (cfg.multiplier < 1) throw Error(ErrorKind::Config, "fake multiplier must be >= 1");
  if (cfg.weights.size() != gts.front().size()) throw Error(ErrorKind::LengthMismatch, "distance weights length");
  if (cfg.k < 2) throw Error(ErrorKind::KTooSmall, "labeling needs K >= 2");
  check_knn_args(labeling_bank.size(), cfg.k);
}

// One fake's full projection schedule; frozen fakes are never touched again.
inline double project_one(const NdfModel& model, PolarPose& x, int n_iters, double tau,
                          std::vector<std::vector<char>>& active, std::size_t index, NdfWorkspace& ws,
                          std::vector<double>& grad) {
  bool moving = true;
  double f = 0.0;
  bool f_current = false;
  for (int n = 0; n < n_iters; ++n) {
    if (!moving) {
      active[static_cast<std::size_t>(n)][index] = 0;
      continue;
    }
    f = input_gradient(model, x.flat(), grad, ws);
    if (n > 0 && f < tau) {
      // Checked after the previous update.
      moving = false;
      f_current = true;
      active[static_cast<std::size_t>(n)][index] = 0;
      continue;
    }
    active[static_cast<std::size_t>(n)][index] = 1;
    auto flat = x.flat();
    for (std::size_t c = 0; c < flat.size(); ++c) flat[c] -= f * grad[c];
    repair(x);
    f_current = false;
  }
  if (!f_current) f = forward(model, x.flat(), ws);
  return f;
}

}  // namespace polarndf::kernels::detail
