#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "polarndf/io.hpp"
#include "polarndf/labeled.hpp"
#include "polarndf/metrics.hpp"
#include "polarndf/pose.hpp"
#include "polarndf/skeleton.hpp"

namespace polarndf {

// Polar-space detection errors: each entry is to_polar(detection) minus
// to_polar(ground truth), componentwise (3J values).
struct ErrorBank {
  std::size_t num_connections = 0;
  std::vector<std::vector<double>> errors;
  std::vector<std::string> sources;

  std::size_t size() const { return errors.size(); }
  bool empty() const { return errors.empty(); }
};

// Lists aligned index by index; both normalized.
ErrorBank build_error_bank(std::span<const CartesianPose> detections, std::span<const CartesianPose> gts,
                           const Skeleton& skel, const std::string& source = "detector");
// Aligns records by (sequence_id, frame_index); every detection must have a
// ground truth and vice versa.
ErrorBank build_error_bank(const std::vector<PoseRecord>& detections, const std::vector<PoseRecord>& gts,
                           const Skeleton& skel);

struct SynthesisConfig {
  int multiplier = 50;
  double lambda = 0.01;
  std::uint64_t seed = 0;
  DistanceKind kind = DistanceKind::arc_radius;
  std::size_t k = 3;
  DistanceWeights weights;
  // Pins the error scale u instead of drawing u ~ U(0, 1).
  std::optional<double> fixed_u;
};

// The random choices behind one fake.
struct FakeDraw {
  double u = 0.0;
  std::size_t error_index = 0;
  std::size_t gt_index = 0;
  CartesianPose noise;  // standard normal per coordinate
};

// Independent stream per fake index, derived from the seed only.
std::mt19937_64 fake_stream(std::uint64_t seed, std::uint64_t index);
FakeDraw draw_fake(std::uint64_t seed, std::uint64_t index, std::size_t bank_size, std::size_t num_gts,
                   std::optional<double> fixed_u);

// u * error + gt + lambda * to_polar(noise), then repaired onto the polar
// constraints.
PolarPose compose_fake(const PolarPose& gt, std::span<const double> error, double u, const PolarPose& noise_polar,
                       double lambda);

// multiplier * |gts| fakes, each labeled with its distance to the prior pose
// of its K nearest poses in `labeling_bank`.
std::vector<LabeledPose> generate_fakes(std::span<const PolarPose> gts, const ErrorBank& bank,
                                        const SynthesisConfig& cfg, std::span<const PolarPose> labeling_bank,
                                        const Skeleton& skel);

// Per sequence: interpolated frames (factor) plus their horizontal flips, as
// polar poses with distance 0. Single-frame sequences contribute the frame
// and its flip.
std::vector<LabeledPose> augment_reals(const std::vector<PoseSequence>& gts, const Skeleton& skel, int factor);

}  // namespace polarndf
