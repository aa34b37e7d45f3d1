#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polarndf/pose.hpp"
#include "polarndf/skeleton.hpp"

namespace polarndf {

// Procedural walking sequences: sinusoidal joint angles over the H36M joint
// set, with per-sequence body proportions, cadence, facing and image scale.
struct GaitConfig {
  int sequences = 20;
  int frames = 50;
  std::uint64_t seed = 7;
  std::string id_prefix = "gait_";
  // Simulated detector, in units of body height.
  double jitter = 0.01;          // per-coordinate Gaussian sigma
  double outlier_prob = 0.08;    // per joint
  double outlier_scale = 0.08;   // sigma of an outlier offset
  double swap_prob = 0.04;       // per frame, left/right limb swap
  double confidence_noise = 0.1;
};

struct GaitFixture {
  std::vector<PoseSequence> gts;
  std::vector<PoseSequence> detections;  // source "sim_detector"
};

// Requires a skeleton over the H36M joint names.
GaitFixture make_gait_fixture(const GaitConfig& cfg, const Skeleton& skel);

// Default split of a 20-sequence fixture: 10 train, 4 val, 6 test ids.
struct FixtureSplit {
  std::vector<std::string> train, val, test;
};
FixtureSplit default_fixture_split(const GaitConfig& cfg);

}  // namespace polarndf
