#include "polarndf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "polarndf/config.hpp"
#include "polarndf/error.hpp"

namespace polarndf {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorKind::Io, "cannot format double");
  return std::string(buf, ptr);
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
  return buf;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::Io, "short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<PoseRecord> parse_pose_records(std::string_view text, std::string_view origin) {
  std::vector<PoseRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = trim(text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    start = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    const auto fields = split(line, ',');
    const std::size_t coords = fields.size() >= 3 ? fields.size() - 3 : 0;
    std::size_t width = 0;
    if (coords == 2 * kNumKeypoints) width = 2;
    if (coords == 3 * kNumKeypoints) width = 3;
    if (width == 0) {
      throw Error(ErrorKind::Parse, where + ": expected 3 + 34 or 3 + 51 fields, got " + std::to_string(fields.size()));
    }
    PoseRecord rec;
    rec.sequence_id = fields[0];
    if (rec.sequence_id.empty()) throw Error(ErrorKind::Parse, where + ": empty sequence id");
    rec.frame_index = parse_int(fields[1], where + " frame_index");
    rec.source = fields[2];
    for (std::size_t j = 0; j < kNumKeypoints; ++j) {
      auto& k = rec.pose.keypoints[j];
      k.x = parse_double(fields[3 + width * j], where + " x" + std::to_string(j));
      k.y = parse_double(fields[4 + width * j], where + " y" + std::to_string(j));
      if (width == 3) k.confidence = parse_double(fields[5 + width * j], where + " c" + std::to_string(j));
    }
    if (!rec.pose.is_finite()) throw Error(ErrorKind::Parse, where + ": non-finite coordinate");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<PoseRecord> read_pose_file(const std::filesystem::path& path) {
  return parse_pose_records(read_file(path), path.string());
}

std::string format_pose_records(const std::vector<PoseRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    const bool with_conf = std::all_of(rec.pose.keypoints.begin(), rec.pose.keypoints.end(),
                                       [](const Keypoint2D& k) { return k.confidence.has_value(); });
    out += rec.sequence_id;
    out += ',';
    out += std::to_string(rec.frame_index);
    out += ',';
    out += rec.source;
    for (const auto& k : rec.pose.keypoints) {
      out += ',';
      out += format_double(k.x);
      out += ',';
      out += format_double(k.y);
      if (with_conf) {
        out += ',';
        out += format_double(*k.confidence);
      }
    }
    out += '\n';
  }
  return out;
}

void write_pose_file(const std::filesystem::path& path, const std::vector<PoseRecord>& records) {
  atomic_write(path, format_pose_records(records));
}

std::vector<PoseSequence> group_sequences(const std::vector<PoseRecord>& records) {
  std::vector<PoseSequence> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.sequence_id, rec.source);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      PoseSequence seq;
      seq.sequence_id = rec.sequence_id;
      seq.source = rec.source;
      seq.is_ground_truth = rec.source == "gt";
      out.push_back(std::move(seq));
    }
    auto& seq = out[it->second];
    if (!seq.frames.empty() && rec.frame_index <= seq.frames.back().frame_index) {
      throw Error(ErrorKind::Parse, "sequence '" + rec.sequence_id + "': frame index " + std::to_string(rec.frame_index) +
                                        " not strictly increasing");
    }
    seq.frames.push_back({rec.frame_index, rec.pose});
  }
  return out;
}

std::vector<PoseRecord> flatten_sequences(const std::vector<PoseSequence>& sequences) {
  std::vector<PoseRecord> out;
  for (const auto& seq : sequences) {
    for (const auto& f : seq.frames) out.push_back({seq.sequence_id, f.frame_index, seq.source, f.pose});
  }
  return out;
}

}  // namespace polarndf
