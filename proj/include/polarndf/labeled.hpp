#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "polarndf/pose.hpp"

namespace polarndf {

// A training sample: a polar pose and its target distance to the manifold.
struct LabeledPose {
  PolarPose pose;
  double distance = 0.0;
  bool is_real = false;
};

// Text records behind a magic/version header:
//   POLARNDF-LABELED 1
//   connections <J>
//   theta1_0,theta2_0,r_0,...,distance,is_real
std::string format_labeled(const std::vector<LabeledPose>& samples, std::size_t num_connections);
std::vector<LabeledPose> parse_labeled(std::string_view text, std::string_view origin = "<string>");
void write_labeled_file(const std::filesystem::path& path, const std::vector<LabeledPose>& samples,
                        std::size_t num_connections);
std::vector<LabeledPose> read_labeled_file(const std::filesystem::path& path);

std::vector<PolarPose> poses_of(const std::vector<LabeledPose>& samples);

}  // namespace polarndf
