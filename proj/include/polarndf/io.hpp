#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "polarndf/pose.hpp"

namespace polarndf {

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
// Fixed two-decimal rendering used for percentage tables.
std::string format_percent(double fraction);

// Writes to `<path>.tmp` and renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// One pose per line:
//   sequence_id, frame_index, source, x0, y0[, c0], ..., x16, y16[, c16]
// Lines starting with '#' and blank lines are skipped.
struct PoseRecord {
  std::string sequence_id;
  long long frame_index = 0;
  std::string source = "gt";
  CartesianPose pose;
};

std::vector<PoseRecord> parse_pose_records(std::string_view text, std::string_view origin = "<string>");
std::vector<PoseRecord> read_pose_file(const std::filesystem::path& path);
std::string format_pose_records(const std::vector<PoseRecord>& records);
void write_pose_file(const std::filesystem::path& path, const std::vector<PoseRecord>& records);

// Groups records by sequence id (first-appearance order) and checks frame
// indices are strictly increasing within each sequence.
std::vector<PoseSequence> group_sequences(const std::vector<PoseRecord>& records);
std::vector<PoseRecord> flatten_sequences(const std::vector<PoseSequence>& sequences);

}  // namespace polarndf
