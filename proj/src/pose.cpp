#include "polarndf/pose.hpp"

#include <algorithm>
#include <limits>

#include "polarndf/error.hpp"
#include "polarndf/transforms.hpp"

namespace polarndf {

bool CartesianPose::is_finite() const {
  return std::all_of(keypoints.begin(), keypoints.end(),
                     [](const Keypoint2D& k) { return std::isfinite(k.x) && std::isfinite(k.y); });
}

double max_abs_difference(const CartesianPose& a, const CartesianPose& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    m = std::max({m, std::abs(a.keypoints[j].x - b.keypoints[j].x), std::abs(a.keypoints[j].y - b.keypoints[j].y)});
  }
  return m;
}

PolarPose PolarPose::from_flat(std::vector<double> values) {
  if (values.size() % 3 != 0) throw Error(ErrorKind::LengthMismatch, "polar pose length must be a multiple of 3");
  PolarPose p;
  p.values_ = std::move(values);
  return p;
}

bool PolarPose::is_valid(double tol) const {
  for (std::size_t j = 0; j < size(); ++j) {
    const auto t = triple(j);
    if (std::abs(t.theta1 * t.theta1 + t.theta2 * t.theta2 - 1.0) > tol || !(t.r >= 0.0)) return false;
  }
  return is_finite();
}

bool PolarPose::is_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void repair(PolarPose& pose) {
  for (std::size_t j = 0; j < pose.size(); ++j) {
    auto t = pose.triple(j);
    const double n = std::hypot(t.theta1, t.theta2);
    if (n > kDegenerateLength && std::isfinite(n)) {
      t.theta1 /= n;
      t.theta2 /= n;
    } else {
      t.theta1 = 1.0;
      t.theta2 = 0.0;
    }
    t.r = std::max(t.r, 0.0);
    pose.set_triple(j, t);
  }
}

CartesianPose NormalizationTransform::apply(const CartesianPose& pose) const {
  CartesianPose out = pose;
  for (auto& k : out.keypoints) {
    k.x = scale * (k.x - origin.x);
    k.y = scale * (k.y - origin.y);
  }
  return out;
}

CartesianPose NormalizationTransform::invert(const CartesianPose& pose) const {
  CartesianPose out = pose;
  for (auto& k : out.keypoints) {
    k.x = k.x / scale + origin.x;
    k.y = k.y / scale + origin.y;
  }
  return out;
}

PolarPose to_polar(const CartesianPose& pose, const Skeleton& skel) {
  const auto& conns = skel.connections();
  PolarPose out(conns.size());
  for (std::size_t j = 0; j < conns.size(); ++j) {
    const Vec2 d = pose.at(static_cast<std::size_t>(conns[j].child)) - pose.at(static_cast<std::size_t>(conns[j].parent));
    const double r = d.norm();
    if (r > kDegenerateLength) {
      out.set_triple(j, {d.x / r, d.y / r, r});
    } else {
      out.set_triple(j, {1.0, 0.0, r});
    }
  }
  return out;
}

CartesianPose to_cartesian(const PolarPose& polar, const Skeleton& skel, Vec2 root_position) {
  const auto& conns = skel.connections();
  if (polar.size() != conns.size()) {
    throw Error(ErrorKind::LengthMismatch, "polar pose has " + std::to_string(polar.size()) + " connections, skeleton " +
                                               std::to_string(conns.size()));
  }
  CartesianPose out;
  out.set(static_cast<std::size_t>(skel.root_index()), root_position);
  for (std::size_t j = 0; j < conns.size(); ++j) {
    const auto t = polar.triple(j);
    const Vec2 parent = out.at(static_cast<std::size_t>(conns[j].parent));
    out.set(static_cast<std::size_t>(conns[j].child), parent + Vec2{t.r * t.theta1, t.r * t.theta2});
  }
  for (const auto& d : skel.derived_joints()) {
    Vec2 sum{};
    for (int s : d.sources) sum = sum + out.at(static_cast<std::size_t>(s));
    out.set(static_cast<std::size_t>(d.joint), (1.0 / static_cast<double>(d.sources.size())) * sum);
  }
  return out;
}

NormalizationTransform normalization_for(const CartesianPose& pose, const Skeleton& skel) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& k : pose.keypoints) {
    lo = std::min(lo, k.y);
    hi = std::max(hi, k.y);
  }
  const double extent = hi - lo;
  if (!(extent > 1e-9) || !std::isfinite(extent)) {
    throw Error(ErrorKind::DegeneratePose, "vertical extent " + std::to_string(extent) + " is too small to normalize");
  }
  return {1.0 / extent, pose.at(static_cast<std::size_t>(skel.root_index()))};
}

CartesianPose normalize(const CartesianPose& pose, const Skeleton& skel) {
  return normalization_for(pose, skel).apply(pose);
}

CartesianPose flip_horizontal(const CartesianPose& pose, const Skeleton& skel) {
  CartesianPose out;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    Keypoint2D k = pose.keypoints[static_cast<std::size_t>(skel.mirrored(static_cast<int>(j)))];
    k.x = -k.x;
    out.keypoints[j] = k;
  }
  return out;
}

PoseSequence interpolate_sequence(const PoseSequence& seq, int factor) {
  if (factor < 1) throw Error(ErrorKind::Config, "interpolation factor must be >= 1");
  if (seq.frames.size() < 2) {
    throw Error(ErrorKind::TooFewFrames, "sequence '" + seq.sequence_id + "' has " + std::to_string(seq.frames.size()) +
                                             " frame(s); interpolation needs 2");
  }
  PoseSequence out = seq;
  out.frames.clear();
  out.frames.reserve((seq.frames.size() - 1) * static_cast<std::size_t>(factor) + 1);
  long long index = 0;
  for (std::size_t i = 0; i + 1 < seq.frames.size(); ++i) {
    const auto& a = seq.frames[i].pose;
    const auto& b = seq.frames[i + 1].pose;
    out.frames.push_back({index++, a});
    for (int k = 1; k < factor; ++k) {
      const double s = static_cast<double>(k) / factor;
      CartesianPose p;
      for (std::size_t j = 0; j < kNumKeypoints; ++j) {
        const auto& ka = a.keypoints[j];
        const auto& kb = b.keypoints[j];
        p.keypoints[j].x = (1.0 - s) * ka.x + s * kb.x;
        p.keypoints[j].y = (1.0 - s) * ka.y + s * kb.y;
        if (ka.confidence && kb.confidence) p.keypoints[j].confidence = (1.0 - s) * *ka.confidence + s * *kb.confidence;
      }
      out.frames.push_back({index++, p});
    }
  }
  out.frames.push_back({index, seq.frames.back().pose});
  return out;
}

std::array<Vec2, kNumKeypoints> polar_gradient_to_cartesian(const CartesianPose& pose, const Skeleton& skel,
                                                            std::span<const double> polar_gradient) {
  std::array<Vec2, kNumKeypoints> grad{};
  const auto& conns = skel.connections();
  for (std::size_t j = 0; j < conns.size(); ++j) {
    const auto p = static_cast<std::size_t>(conns[j].parent);
    const auto c = static_cast<std::size_t>(conns[j].child);
    const Vec2 d = pose.at(c) - pose.at(p);
    const double r = d.norm();
    const double g1 = polar_gradient[3 * j];
    const double g2 = polar_gradient[3 * j + 1];
    const double gr = polar_gradient[3 * j + 2];
    Vec2 gd{};
    if (r > kDegenerateLength) {
      const double u1 = d.x / r;
      const double u2 = d.y / r;
      // d(theta)/d(delta) = (I - u u^T) / r, d(r)/d(delta) = u.
      const double proj = g1 * u1 + g2 * u2;
      gd.x = (g1 - proj * u1) / r + gr * u1;
      gd.y = (g2 - proj * u2) / r + gr * u2;
    }
    // Degenerate connections: the direction is the constant (1, 0) and r is
    // not differentiable; no gradient flows.
    grad[c] = grad[c] + gd;
    grad[p] = grad[p] - gd;
  }
  return grad;
}

}  // namespace polarndf
