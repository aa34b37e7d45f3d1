#include "polarndf/labeled.hpp"

#include "polarndf/config.hpp"
#include "polarndf/error.hpp"
#include "polarndf/io.hpp"

namespace polarndf {

namespace {
constexpr std::string_view kMagic = "POLARNDF-LABELED";
constexpr int kVersion = 1;
}  // namespace

std::string format_labeled(const std::vector<LabeledPose>& samples, std::size_t num_connections) {
  std::string out = std::string(kMagic) + " " + std::to_string(kVersion) + "\nconnections " +
                    std::to_string(num_connections) + "\n";
  for (const auto& s : samples) {
    if (s.pose.size() != num_connections) throw Error(ErrorKind::LengthMismatch, "labeled pose has wrong J");
    for (double v : s.pose.flat()) {
      out += format_double(v);
      out += ',';
    }
    out += format_double(s.distance);
    out += s.is_real ? ",1\n" : ",0\n";
  }
  return out;
}

std::vector<LabeledPose> parse_labeled(std::string_view text, std::string_view origin) {
  const auto lines = split(text, '\n');
  const std::string o(origin);
  if (lines.size() < 2) throw Error(ErrorKind::FormatVersionMismatch, o + ": missing labeled-data header");
  const auto head = split(lines[0], ' ');
  if (head.size() != 2 || head[0] != kMagic) throw Error(ErrorKind::FormatVersionMismatch, o + ": bad magic");
  if (parse_int(head[1], o + " version") != kVersion) {
    throw Error(ErrorKind::FormatVersionMismatch, o + ": unsupported version " + head[1]);
  }
  const auto jline = split(lines[1], ' ');
  if (jline.size() != 2 || jline[0] != "connections") throw Error(ErrorKind::Parse, o + ":2: expected 'connections J'");
  const auto j = static_cast<std::size_t>(parse_int(jline[1], o + ":2"));

  std::vector<LabeledPose> out;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = o + ":" + std::to_string(i + 1);
    const auto fields = split(lines[i], ',');
    if (fields.size() != 3 * j + 2) throw Error(ErrorKind::Parse, where + ": expected " + std::to_string(3 * j + 2) + " fields");
    std::vector<double> v(3 * j);
    for (std::size_t c = 0; c < 3 * j; ++c) v[c] = parse_double(fields[c], where);
    LabeledPose s;
    s.pose = PolarPose::from_flat(std::move(v));
    s.distance = parse_double(fields[3 * j], where);
    s.is_real = parse_bool(fields[3 * j + 1], where);
    if (!(s.distance >= 0.0)) throw Error(ErrorKind::Parse, where + ": negative distance");
    out.push_back(std::move(s));
  }
  return out;
}

void write_labeled_file(const std::filesystem::path& path, const std::vector<LabeledPose>& samples,
                        std::size_t num_connections) {
  atomic_write(path, format_labeled(samples, num_connections));
}

std::vector<LabeledPose> read_labeled_file(const std::filesystem::path& path) {
  return parse_labeled(read_file(path), path.string());
}

std::vector<PolarPose> poses_of(const std::vector<LabeledPose>& samples) {
  std::vector<PolarPose> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.pose);
  return out;
}

}  // namespace polarndf
