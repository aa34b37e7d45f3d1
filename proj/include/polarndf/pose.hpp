#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace polarndf {

inline constexpr std::size_t kNumKeypoints = 17;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
  double norm() const { return std::hypot(x, y); }
};

struct Keypoint2D {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> confidence;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Keypoint2D&, const Keypoint2D&) = default;
};

struct CartesianPose {
  std::array<Keypoint2D, kNumKeypoints> keypoints{};

  Vec2 at(std::size_t joint) const { return keypoints[joint].position(); }
  void set(std::size_t joint, Vec2 p) {
    keypoints[joint].x = p.x;
    keypoints[joint].y = p.y;
  }
  bool is_finite() const;
  friend bool operator==(const CartesianPose&, const CartesianPose&) = default;
};

// Largest per-coordinate absolute difference.
double max_abs_difference(const CartesianPose& a, const CartesianPose& b);

struct PolarTriple {
  double theta1 = 1.0;
  double theta2 = 0.0;
  double r = 0.0;
  friend bool operator==(const PolarTriple&, const PolarTriple&) = default;
};

// J connection triples (cos, sin, length), stored flat so the network can
// read them as a 3J vector.
class PolarPose {
 public:
  PolarPose() = default;
  explicit PolarPose(std::size_t num_connections) : values_(3 * num_connections, 0.0) {
    for (std::size_t j = 0; j < num_connections; ++j) values_[3 * j] = 1.0;
  }
  static PolarPose from_flat(std::vector<double> values);

  std::size_t size() const { return values_.size() / 3; }
  PolarTriple triple(std::size_t j) const { return {values_[3 * j], values_[3 * j + 1], values_[3 * j + 2]}; }
  void set_triple(std::size_t j, PolarTriple t) {
    values_[3 * j] = t.theta1;
    values_[3 * j + 1] = t.theta2;
    values_[3 * j + 2] = t.r;
  }
  double theta1(std::size_t j) const { return values_[3 * j]; }
  double theta2(std::size_t j) const { return values_[3 * j + 1]; }
  double r(std::size_t j) const { return values_[3 * j + 2]; }

  std::span<const double> flat() const { return values_; }
  std::span<double> flat() { return values_; }

  // Unit-norm angular pairs (within tol) and r >= 0.
  bool is_valid(double tol = 1e-9) const;
  bool is_finite() const;

  friend bool operator==(const PolarPose&, const PolarPose&) = default;

 private:
  std::vector<double> values_;
};

// Restores the polar invariants after an unconstrained update: each angular
// pair is rescaled to unit norm (degenerate pairs become (1, 0)) and r is
// clamped at zero.
void repair(PolarPose& pose);

struct PoseFrame {
  long long frame_index = 0;
  CartesianPose pose;
};

struct PoseSequence {
  std::string sequence_id;
  std::string source = "gt";
  bool is_ground_truth = true;
  std::vector<PoseFrame> frames;
};

// Uniform scale about an origin: normalized = scale * (p - origin).
struct NormalizationTransform {
  double scale = 1.0;
  Vec2 origin{};

  CartesianPose apply(const CartesianPose& pose) const;
  CartesianPose invert(const CartesianPose& pose) const;
};

}  // namespace polarndf
