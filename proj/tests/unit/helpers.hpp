#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "polarndf/pose.hpp"
#include "polarndf/skeleton.hpp"
#include "polarndf/transforms.hpp"

namespace testutil {

inline polarndf::CartesianPose random_pose(std::mt19937_64& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  polarndf::CartesianPose p;
  for (auto& kp : p.keypoints) {
    kp.x = u(rng);
    kp.y = u(rng);
  }
  return p;
}

inline polarndf::PolarPose random_polar(std::mt19937_64& rng, std::size_t J) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> len(0.05, 0.5);
  polarndf::PolarPose p(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double a = angle(rng);
    p.set_triple(j, {std::cos(a), std::sin(a), len(rng)});
  }
  return p;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(POLARNDF_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
