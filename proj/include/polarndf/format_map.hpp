#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polarndf/config.hpp"
#include "polarndf/io.hpp"
#include "polarndf/pose.hpp"
#include "polarndf/skeleton.hpp"

namespace polarndf {

// Maps a detector keypoint layout onto the 17 skeleton slots. Each slot is
// filled from one source keypoint or from the mean of several (used to
// synthesize pelvis/spine/thorax joints that detectors do not emit).
struct FormatMap {
  std::string name;
  std::size_t source_width = 3;  // 2 = (x, y), 3 = (x, y, confidence)
  std::array<std::vector<int>, kNumKeypoints> slots;

  static FormatMap from_config(const ConfigDocument& doc, const Skeleton& skel);
  static FormatMap load(const std::filesystem::path& path, const Skeleton& skel);
  static FormatMap identity();
};

// A detector pose: source keypoints, absent ones as nullopt.
using SourceKeypoints = std::vector<std::optional<Keypoint2D>>;

CartesianPose convert_format(const SourceKeypoints& source, const FormatMap& map);

struct SourceRecord {
  std::string sequence_id;
  long long frame_index = 0;
  std::string source;
  SourceKeypoints keypoints;
};

// Same line layout as pose files, but with any number of source tuples of
// `width` fields; empty or "nan" coordinates mark a missing keypoint.
std::vector<SourceRecord> parse_source_records(std::string_view text, std::size_t width,
                                               std::string_view origin = "<string>");

std::vector<PoseRecord> convert_records(const std::vector<SourceRecord>& records, const FormatMap& map);

}  // namespace polarndf
