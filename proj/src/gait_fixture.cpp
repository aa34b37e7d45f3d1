#include "polarndf/gait_fixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "polarndf/error.hpp"

namespace polarndf {

namespace {

constexpr double kPi = std::numbers::pi;

std::string sequence_id(const GaitConfig& cfg, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", i);
  return cfg.id_prefix + buf;
}

struct Body {
  double thigh, shin, hip, torso, neck, head, shoulder, upper_arm, forearm;
  double leg_swing, arm_swing, knee_flex, elbow_flex, lean;
  double cadence, phase0, facing, scale;
  Vec2 start, drift;
};

Body sample_body(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jit(0.9, 1.1);
  std::uniform_real_distribution<double> amp(0.8, 1.25);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Body b{};
  b.thigh = 0.25 * jit(rng);
  b.shin = 0.24 * jit(rng);
  b.hip = 0.06 * jit(rng);
  b.torso = 0.14 * jit(rng);  // hip->spine and spine->thorax each
  b.neck = 0.07 * jit(rng);
  b.head = 0.06 * jit(rng);
  b.shoulder = 0.09 * jit(rng);
  b.upper_arm = 0.16 * jit(rng);
  b.forearm = 0.14 * jit(rng);
  b.leg_swing = 0.4 * amp(rng);
  b.arm_swing = 0.35 * amp(rng);
  b.knee_flex = 0.5 * amp(rng);
  b.elbow_flex = 0.4 * amp(rng);
  b.lean = 0.08 * amp(rng);
  b.cadence = 0.18 + 0.14 * unit(rng);
  b.phase0 = 2.0 * kPi * unit(rng);
  b.facing = unit(rng) < 0.5 ? -1.0 : 1.0;
  b.scale = 150.0 + 150.0 * unit(rng);
  b.start = {200.0 + 400.0 * unit(rng), 250.0 + 100.0 * unit(rng)};
  b.drift = {b.facing * b.scale * (0.01 + 0.01 * unit(rng)), 0.0};
  return b;
}

Vec2 dir(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Image coordinates, y pointing down.
CartesianPose gait_pose(const Body& b, int frame, const Skeleton& skel) {
  const double phi = b.phase0 + b.cadence * frame;
  const double f = b.facing;
  const double down = kPi / 2.0, up = -kPi / 2.0;
  auto idx = [&](const char* name) { return static_cast<std::size_t>(skel.joint_index(name)); };

  CartesianPose p;
  const Vec2 root = b.start + static_cast<double>(frame) * b.drift + Vec2{0.0, -0.01 * b.scale * std::cos(2.0 * phi)};
  auto place = [&](const char* name, Vec2 at) { p.set(idx(name), at); };
  auto leg = [&](const char* hip, const char* knee, const char* ankle, double side, double phase, Vec2 origin) {
    const Vec2 h = origin + b.hip * Vec2{side, 0.0};
    const double thigh_angle = down - f * b.leg_swing * std::sin(phase);
    const double flex = b.knee_flex * 0.5 * (1.0 + std::sin(phase + 1.2));
    const Vec2 k = h + b.thigh * dir(thigh_angle);
    const Vec2 a = k + b.shin * dir(thigh_angle + f * flex);
    place(hip, h);
    place(knee, k);
    place(ankle, a);
  };
  auto arm = [&](const char* shoulder, const char* elbow, const char* wrist, double side, double phase,
                 Vec2 thorax) {
    const Vec2 s = thorax + b.shoulder * Vec2{side, 0.0};
    const double upper = down + f * b.arm_swing * std::sin(phase);
    const double flex = b.elbow_flex * 0.5 * (1.0 + std::sin(phase + 0.6));
    const Vec2 e = s + b.upper_arm * dir(upper);
    const Vec2 w = e + b.forearm * dir(upper - f * flex);
    place(shoulder, s);
    place(elbow, e);
    place(wrist, w);
  };

  const Vec2 origin{0.0, 0.0};
  place("Hip", origin);
  // Right side drawn on the left of the image when facing +x.
  leg("RHip", "RKnee", "RAnkle", -1.0, phi, origin);
  leg("LHip", "LKnee", "LAnkle", 1.0, phi + kPi, origin);
  const double torso_angle = up + f * (b.lean + 0.03 * std::sin(2.0 * phi));
  const Vec2 spine = origin + b.torso * dir(torso_angle);
  const Vec2 thorax = spine + b.torso * dir(torso_angle);
  place("Spine", spine);
  place("Thorax", thorax);
  const Vec2 nose = thorax + b.neck * dir(up + f * 0.45);
  place("Nose", nose);
  place("Head", nose + b.head * dir(up - f * 0.2));
  arm("LShoulder", "LElbow", "LWrist", 1.0, phi, thorax);
  arm("RShoulder", "RElbow", "RWrist", -1.0, phi + kPi, thorax);

  // To image scale and position.
  for (auto& kp : p.keypoints) {
    kp.x = root.x + b.scale * kp.x;
    kp.y = root.y + b.scale * kp.y;
  }
  return p;
}

CartesianPose detect(const CartesianPose& gt, double height, const GaitConfig& cfg, const Skeleton& skel,
                     std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CartesianPose d = gt;
  if (unit(rng) < cfg.swap_prob) {
    // Swap one limb pair (arm or leg chain).
    const bool arms = unit(rng) < 0.5;
    for (const auto& [l, r] : skel.left_right_pairs()) {
      const auto& name = skel.joint_names()[static_cast<std::size_t>(l)];
      const bool is_arm = name.find("Shoulder") != std::string::npos || name.find("Elbow") != std::string::npos ||
                          name.find("Wrist") != std::string::npos;
      if (is_arm == arms) std::swap(d.keypoints[static_cast<std::size_t>(l)], d.keypoints[static_cast<std::size_t>(r)]);
    }
  }
  for (auto& kp : d.keypoints) {
    double conf = 0.9;
    kp.x += cfg.jitter * height * normal(rng);
    kp.y += cfg.jitter * height * normal(rng);
    if (unit(rng) < cfg.outlier_prob) {
      kp.x += cfg.outlier_scale * height * normal(rng);
      kp.y += cfg.outlier_scale * height * normal(rng);
      conf = 0.5;
    }
    kp.confidence = std::clamp(conf + cfg.confidence_noise * (unit(rng) - 0.5), 0.0, 1.0);
  }
  return d;
}

}  // namespace

GaitFixture make_gait_fixture(const GaitConfig& cfg, const Skeleton& skel) {
  if (cfg.sequences < 1 || cfg.frames < 1) throw Error(ErrorKind::Config, "gait fixture needs sequences and frames");
  GaitFixture out;
  for (int s = 0; s < cfg.sequences; ++s) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    const Body body = sample_body(rng);
    PoseSequence gt{sequence_id(cfg, s), "gt", true, {}};
    PoseSequence det{sequence_id(cfg, s), "sim_detector", false, {}};
    for (int f = 0; f < cfg.frames; ++f) {
      const CartesianPose pose = gait_pose(body, f, skel);
      gt.frames.push_back({f, pose});
      det.frames.push_back({f, detect(pose, body.scale, cfg, skel, rng)});
    }
    out.gts.push_back(std::move(gt));
    out.detections.push_back(std::move(det));
  }
  return out;
}

FixtureSplit default_fixture_split(const GaitConfig& cfg) {
  FixtureSplit split;
  for (int s = 0; s < cfg.sequences; ++s) {
    const int slot = s % 10;
    auto& list = slot < 5 ? split.train : (slot < 7 ? split.val : split.test);
    list.push_back(sequence_id(cfg, s));
  }
  return split;
}

}  // namespace polarndf
