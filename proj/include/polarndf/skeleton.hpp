#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polarndf/config.hpp"

namespace polarndf {

struct Connection {
  int parent = 0;
  int child = 0;
  friend bool operator==(const Connection&, const Connection&) = default;
};

// A joint that is not reached by any connection and is instead placed at the
// mean of other joints after forward kinematics (e.g. a merged spine).
struct DerivedJoint {
  int joint = 0;
  std::vector<int> sources;
};

class Skeleton {
 public:
  static Skeleton from_config(const ConfigDocument& doc);
  static Skeleton load(const std::filesystem::path& path);

  // Human3.6M 17-keypoint order, 16 connections covering every joint.
  static Skeleton h36m17();
  // Same joints, 15 connections: pelvis connects straight to the thorax and
  // the spine keypoint is the pelvis/thorax midpoint.
  static Skeleton h36m17_j15();
  static std::string_view h36m17_text();
  static std::string_view h36m17_j15_text();

  const std::string& name() const { return name_; }
  const std::vector<std::string>& joint_names() const { return joint_names_; }
  // Connections in topological order (every parent placed before use).
  const std::vector<Connection>& connections() const { return connections_; }
  std::size_t num_connections() const { return connections_.size(); }
  int root_index() const { return root_; }
  const std::vector<std::pair<int, int>>& left_right_pairs() const { return mirror_; }
  const std::vector<DerivedJoint>& derived_joints() const { return derived_; }
  int shoulder_left_index() const { return shoulder_left_; }
  int hip_right_index() const { return hip_right_; }
  // Mirror image of a joint index (identity for central joints).
  int mirrored(int joint) const;
  // Per-connection distance weights (default all ones).
  const std::vector<double>& distance_weights() const { return weights_; }
  // For connection j, the index of the connection ending at j's parent, or
  // -1 when j starts at the root.
  const std::vector<int>& parent_connections() const { return parent_connection_; }

  int joint_index(std::string_view name) const;
  std::uint64_t hash() const;

 private:
  void validate_and_index();

  std::string name_;
  std::vector<std::string> joint_names_;
  std::vector<Connection> connections_;
  int root_ = 0;
  std::vector<std::pair<int, int>> mirror_;
  std::vector<DerivedJoint> derived_;
  int shoulder_left_ = 0;
  int hip_right_ = 0;
  std::vector<double> weights_;
  std::vector<int> parent_connection_;
  std::vector<int> mirror_of_;
};

}  // namespace polarndf
