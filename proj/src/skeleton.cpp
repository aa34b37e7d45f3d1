#include "polarndf/skeleton.hpp"

#include <algorithm>
#include <sstream>

#include "polarndf/error.hpp"
#include "polarndf/pose.hpp"

namespace polarndf {

namespace {

constexpr std::string_view kH36m17 = R"(# Human3.6M 17-keypoint skeleton, one connection per non-root joint.
name = h36m17
root = Hip

[joints]
Hip
RHip
RKnee
RAnkle
LHip
LKnee
LAnkle
Spine
Thorax
Nose
Head
LShoulder
LElbow
LWrist
RShoulder
RElbow
RWrist

[connections]
Hip -> RHip
RHip -> RKnee
RKnee -> RAnkle
Hip -> LHip
LHip -> LKnee
LKnee -> LAnkle
Hip -> Spine
Spine -> Thorax
Thorax -> Nose
Nose -> Head
Thorax -> LShoulder
LShoulder -> LElbow
LElbow -> LWrist
Thorax -> RShoulder
RShoulder -> RElbow
RElbow -> RWrist

[mirror]
RHip, LHip
RKnee, LKnee
RAnkle, LAnkle
RShoulder, LShoulder
RElbow, LElbow
RWrist, LWrist

[pck]
left_shoulder = LShoulder
right_hip = RHip
)";

constexpr std::string_view kH36m17J15 = R"(# Human3.6M 17-keypoint skeleton with a merged pelvis-thorax chain (J = 15).
name = h36m17_j15
root = Hip

[joints]
Hip
RHip
RKnee
RAnkle
LHip
LKnee
LAnkle
Spine
Thorax
Nose
Head
LShoulder
LElbow
LWrist
RShoulder
RElbow
RWrist

[connections]
Hip -> RHip
RHip -> RKnee
RKnee -> RAnkle
Hip -> LHip
LHip -> LKnee
LKnee -> LAnkle
Hip -> Thorax
Thorax -> Nose
Nose -> Head
Thorax -> LShoulder
LShoulder -> LElbow
LElbow -> LWrist
Thorax -> RShoulder
RShoulder -> RElbow
RElbow -> RWrist

[derived]
Spine = Hip, Thorax

[mirror]
RHip, LHip
RKnee, LKnee
RAnkle, LAnkle
RShoulder, LShoulder
RElbow, LElbow
RWrist, LWrist

[pck]
left_shoulder = LShoulder
right_hip = RHip
)";

}  // namespace

std::string_view Skeleton::h36m17_text() { return kH36m17; }
std::string_view Skeleton::h36m17_j15_text() { return kH36m17J15; }

Skeleton Skeleton::h36m17() {
  static const Skeleton skel = from_config(ConfigDocument::parse(kH36m17, "<h36m17>"));
  return skel;
}

Skeleton Skeleton::h36m17_j15() {
  static const Skeleton skel = from_config(ConfigDocument::parse(kH36m17J15, "<h36m17_j15>"));
  return skel;
}

Skeleton Skeleton::load(const std::filesystem::path& path) { return from_config(ConfigDocument::load(path)); }

int Skeleton::joint_index(std::string_view name) const {
  for (std::size_t i = 0; i < joint_names_.size(); ++i) {
    if (joint_names_[i] == name) return static_cast<int>(i);
  }
  throw Error(ErrorKind::Config, "skeleton '" + name_ + "': unknown joint '" + std::string(name) + "'");
}

int Skeleton::mirrored(int joint) const { return mirror_of_.at(static_cast<std::size_t>(joint)); }

Skeleton Skeleton::from_config(const ConfigDocument& doc) {
  Skeleton s;
  const auto& top = doc.section("");
  s.name_ = top.get_string("name", "skeleton");
  s.joint_names_ = doc.section("joints").items();
  if (s.joint_names_.size() != kNumKeypoints) {
    throw Error(ErrorKind::Config, "skeleton must list exactly 17 joints, got " + std::to_string(s.joint_names_.size()));
  }
  s.root_ = s.joint_index(top.require("root"));

  std::vector<Connection> unordered;
  for (const auto& item : doc.section("connections").items()) {
    const auto arrow = item.find("->");
    if (arrow == std::string::npos) throw Error(ErrorKind::Config, "connection '" + item + "' must read 'Parent -> Child'");
    unordered.push_back({s.joint_index(trim(item.substr(0, arrow))), s.joint_index(trim(item.substr(arrow + 2)))});
  }
  // Stable topological order: repeatedly emit connections whose parent is placed.
  std::vector<bool> placed(kNumKeypoints, false);
  placed[static_cast<std::size_t>(s.root_)] = true;
  std::vector<bool> used(unordered.size(), false);
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t i = 0; i < unordered.size(); ++i) {
      if (used[i] || !placed[static_cast<std::size_t>(unordered[i].parent)]) continue;
      used[i] = true;
      progress = true;
      placed[static_cast<std::size_t>(unordered[i].child)] = true;
      s.connections_.push_back(unordered[i]);
    }
  }
  if (s.connections_.size() != unordered.size()) {
    throw Error(ErrorKind::Config, "skeleton connections are not a tree reachable from the root");
  }

  for (const auto& item : doc.section("mirror").items()) {
    const auto parts = split(item, ',');
    if (parts.size() != 2) throw Error(ErrorKind::Config, "mirror entry '" + item + "' must be 'A, B'");
    s.mirror_.emplace_back(s.joint_index(parts[0]), s.joint_index(parts[1]));
  }
  if (const auto* derived = doc.find("derived")) {
    for (const auto& [joint, sources] : derived->entries()) {
      DerivedJoint d{s.joint_index(joint), {}};
      for (const auto& src : split(sources, ',')) d.sources.push_back(s.joint_index(src));
      if (d.sources.empty()) throw Error(ErrorKind::Config, "derived joint '" + joint + "' has no sources");
      s.derived_.push_back(std::move(d));
    }
  }
  const auto& pck = doc.section("pck");
  s.shoulder_left_ = s.joint_index(pck.require("left_shoulder"));
  s.hip_right_ = s.joint_index(pck.require("right_hip"));

  s.weights_.assign(s.connections_.size(), 1.0);
  if (const auto* w = doc.find("weights")) {
    for (const auto& [child, value] : w->entries()) {
      const int c = s.joint_index(child);
      auto it = std::find_if(s.connections_.begin(), s.connections_.end(), [c](const Connection& k) { return k.child == c; });
      if (it == s.connections_.end()) throw Error(ErrorKind::Config, "weight for '" + child + "' which ends no connection");
      const double v = parse_double(value, "[weights] " + child);
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::Config, "weight for '" + child + "' must be finite and >= 0");
      s.weights_[static_cast<std::size_t>(it - s.connections_.begin())] = v;
    }
  }
  s.validate_and_index();
  return s;
}

void Skeleton::validate_and_index() {
  std::vector<int> child_count(kNumKeypoints, 0);
  for (const auto& c : connections_) {
    if (c.parent == c.child) throw Error(ErrorKind::Config, "self-connection on '" + joint_names_[static_cast<std::size_t>(c.child)] + "'");
    ++child_count[static_cast<std::size_t>(c.child)];
  }
  std::vector<bool> is_derived(kNumKeypoints, false);
  for (const auto& d : derived_) {
    is_derived[static_cast<std::size_t>(d.joint)] = true;
    for (int src : d.sources) {
      if (std::any_of(derived_.begin(), derived_.end(), [src](const DerivedJoint& o) { return o.joint == src; })) {
        throw Error(ErrorKind::Config, "derived joint sources must be kinematic joints");
      }
    }
  }
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    const std::string& n = joint_names_[j];
    if (static_cast<int>(j) == root_) {
      if (child_count[j] != 0) throw Error(ErrorKind::Config, "root '" + n + "' cannot be a child");
    } else if (is_derived[j]) {
      if (child_count[j] != 0) throw Error(ErrorKind::Config, "derived joint '" + n + "' cannot be a connection child");
    } else if (child_count[j] != 1) {
      throw Error(ErrorKind::Config, "joint '" + n + "' must be the child of exactly one connection");
    }
  }
  for (const auto& c : connections_) {
    if (is_derived[static_cast<std::size_t>(c.parent)]) throw Error(ErrorKind::Config, "derived joint cannot be a connection parent");
  }

  parent_connection_.assign(connections_.size(), -1);
  for (std::size_t j = 0; j < connections_.size(); ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      if (connections_[k].child == connections_[j].parent) parent_connection_[j] = static_cast<int>(k);
    }
  }
  mirror_of_.resize(kNumKeypoints);
  for (std::size_t j = 0; j < kNumKeypoints; ++j) mirror_of_[j] = static_cast<int>(j);
  for (auto [a, b] : mirror_) {
    mirror_of_[static_cast<std::size_t>(a)] = b;
    mirror_of_[static_cast<std::size_t>(b)] = a;
  }
}

std::uint64_t Skeleton::hash() const {
  // FNV-1a over a canonical text form of the topology.
  std::ostringstream os;
  for (const auto& n : joint_names_) os << n << ';';
  os << '|' << root_ << '|';
  for (const auto& c : connections_) os << c.parent << '>' << c.child << ';';
  os << '|';
  for (const auto& d : derived_) {
    os << d.joint << '=';
    for (int s : d.sources) os << s << ',';
    os << ';';
  }
  const std::string text = os.str();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace polarndf
