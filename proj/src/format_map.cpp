#include "polarndf/format_map.hpp"

#include <cmath>

#include "polarndf/error.hpp"

namespace polarndf {

FormatMap FormatMap::from_config(const ConfigDocument& doc, const Skeleton& skel) {
  FormatMap m;
  const auto& top = doc.section("");
  m.name = top.get_string("name", "format");
  const auto width = top.get_int("source_width", 3);
  if (width != 2 && width != 3) throw Error(ErrorKind::Config, "source_width must be 2 or 3");
  m.source_width = static_cast<std::size_t>(width);

  std::array<bool, kNumKeypoints> seen{};
  for (const auto& [target, sources] : doc.section("map").entries()) {
    const auto slot = static_cast<std::size_t>(skel.joint_index(target));
    if (seen[slot]) throw Error(ErrorKind::Config, "format map '" + m.name + "': slot '" + target + "' mapped twice");
    seen[slot] = true;
    for (const auto& s : split(sources, ',')) {
      const auto idx = parse_int(s, "[map] " + target);
      if (idx < 0) throw Error(ErrorKind::Config, "[map] " + target + ": negative source index");
      m.slots[slot].push_back(static_cast<int>(idx));
    }
    if (m.slots[slot].empty()) throw Error(ErrorKind::Config, "[map] " + target + ": no source index");
  }
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    if (!seen[j]) {
      throw Error(ErrorKind::Config, "format map '" + m.name + "' does not cover slot '" + skel.joint_names()[j] + "'");
    }
  }
  return m;
}

FormatMap FormatMap::load(const std::filesystem::path& path, const Skeleton& skel) {
  return from_config(ConfigDocument::load(path), skel);
}

FormatMap FormatMap::identity() {
  FormatMap m;
  m.name = "identity";
  for (std::size_t j = 0; j < kNumKeypoints; ++j) m.slots[j] = {static_cast<int>(j)};
  return m;
}

CartesianPose convert_format(const SourceKeypoints& source, const FormatMap& map) {
  CartesianPose out;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    double x = 0.0, y = 0.0, c = 0.0;
    bool all_conf = true;
    for (int s : map.slots[j]) {
      const auto idx = static_cast<std::size_t>(s);
      if (idx >= source.size() || !source[idx]) {
        throw Error(ErrorKind::MissingSourceJoint, "format '" + map.name + "': source keypoint " + std::to_string(s) +
                                                       " required for slot " + std::to_string(j) + " is absent");
      }
      x += source[idx]->x;
      y += source[idx]->y;
      if (source[idx]->confidence) {
        c += *source[idx]->confidence;
      } else {
        all_conf = false;
      }
    }
    const double n = static_cast<double>(map.slots[j].size());
    out.keypoints[j].x = x / n;
    out.keypoints[j].y = y / n;
    if (all_conf) out.keypoints[j].confidence = c / n;
  }
  return out;
}

std::vector<SourceRecord> parse_source_records(std::string_view text, std::size_t width, std::string_view origin) {
  std::vector<SourceRecord> out;
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
    if (fields.size() < 3 || (fields.size() - 3) % width != 0) {
      throw Error(ErrorKind::Parse, where + ": field count " + std::to_string(fields.size()) +
                                        " is not 3 + a multiple of " + std::to_string(width));
    }
    SourceRecord rec;
    rec.sequence_id = fields[0];
    if (rec.sequence_id.empty()) throw Error(ErrorKind::Parse, where + ": empty sequence id");
    rec.frame_index = parse_int(fields[1], where + " frame_index");
    rec.source = fields[2];
    const std::size_t n = (fields.size() - 3) / width;
    rec.keypoints.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& fx = fields[3 + width * j];
      const auto& fy = fields[4 + width * j];
      if (fx.empty() || fy.empty() || fx == "nan" || fy == "nan") continue;
      Keypoint2D k;
      k.x = parse_double(fx, where + " x" + std::to_string(j));
      k.y = parse_double(fy, where + " y" + std::to_string(j));
      if (width == 3) k.confidence = parse_double(fields[5 + width * j], where + " c" + std::to_string(j));
      if (!std::isfinite(k.x) || !std::isfinite(k.y)) continue;
      rec.keypoints[j] = k;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<PoseRecord> convert_records(const std::vector<SourceRecord>& records, const FormatMap& map) {
  std::vector<PoseRecord> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    out.push_back({rec.sequence_id, rec.frame_index, rec.source, convert_format(rec.keypoints, map)});
  }
  return out;
}

}  // namespace polarndf
