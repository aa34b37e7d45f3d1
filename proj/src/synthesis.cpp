#include "polarndf/synthesis.hpp"

#include <map>

#include "polarndf/error.hpp"
#include "polarndf/kernels.hpp"
#include "polarndf/transforms.hpp"

namespace polarndf {

ErrorBank build_error_bank(std::span<const CartesianPose> detections, std::span<const CartesianPose> gts,
                           const Skeleton& skel, const std::string& source) {
  if (detections.size() != gts.size()) {
    throw Error(ErrorKind::AlignmentError, std::to_string(detections.size()) + " detections vs " +
                                               std::to_string(gts.size()) + " ground truths");
  }
  ErrorBank bank;
  bank.num_connections = skel.num_connections();
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const auto d = to_polar(detections[i], skel);
    const auto g = to_polar(gts[i], skel);
    std::vector<double> e(d.flat().size());
    for (std::size_t c = 0; c < e.size(); ++c) e[c] = d.flat()[c] - g.flat()[c];
    bank.errors.push_back(std::move(e));
    bank.sources.push_back(source);
  }
  return bank;
}

ErrorBank build_error_bank(const std::vector<PoseRecord>& detections, const std::vector<PoseRecord>& gts,
                           const Skeleton& skel) {
  std::map<std::pair<std::string, long long>, const PoseRecord*> by_key;
  for (const auto& g : gts) by_key[{g.sequence_id, g.frame_index}] = &g;
  if (detections.size() != gts.size()) {
    throw Error(ErrorKind::AlignmentError, std::to_string(detections.size()) + " detections vs " +
                                               std::to_string(gts.size()) + " ground truths");
  }
  ErrorBank bank;
  bank.num_connections = skel.num_connections();
  for (const auto& d : detections) {
    auto it = by_key.find({d.sequence_id, d.frame_index});
    if (it == by_key.end()) {
      throw Error(ErrorKind::AlignmentError, "detection " + d.sequence_id + "/" + std::to_string(d.frame_index) +
                                                 " has no ground truth");
    }
    const std::array<CartesianPose, 1> det{normalize(d.pose, skel)};
    const std::array<CartesianPose, 1> gt{normalize(it->second->pose, skel)};
    auto one = build_error_bank(det, gt, skel, d.source);
    bank.errors.push_back(std::move(one.errors.front()));
    bank.sources.push_back(d.source);
  }
  return bank;
}

std::mt19937_64 fake_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x4e44u};
  return std::mt19937_64(seq);
}

FakeDraw draw_fake(std::uint64_t seed, std::uint64_t index, std::size_t bank_size, std::size_t num_gts,
                   std::optional<double> fixed_u) {
  auto rng = fake_stream(seed, index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  FakeDraw d;
  d.u = unit(rng);
  if (fixed_u) d.u = *fixed_u;
  d.error_index = std::uniform_int_distribution<std::size_t>(0, bank_size - 1)(rng);
  d.gt_index = std::uniform_int_distribution<std::size_t>(0, num_gts - 1)(rng);
  for (auto& k : d.noise.keypoints) {
    k.x = normal(rng);
    k.y = normal(rng);
  }
  return d;
}

PolarPose compose_fake(const PolarPose& gt, std::span<const double> error, double u, const PolarPose& noise_polar,
                       double lambda) {
  std::vector<double> v(gt.flat().size());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = u * error[c] + gt.flat()[c] + lambda * noise_polar.flat()[c];
  auto out = PolarPose::from_flat(std::move(v));
  repair(out);
  return out;
}

std::vector<LabeledPose> generate_fakes(std::span<const PolarPose> gts, const ErrorBank& bank,
                                        const SynthesisConfig& cfg, std::span<const PolarPose> labeling_bank,
                                        const Skeleton& skel) {
  return kernels::omp::generate_fakes(gts, bank, cfg, labeling_bank, skel);
}

std::vector<LabeledPose> augment_reals(const std::vector<PoseSequence>& gts, const Skeleton& skel, int factor) {
  std::vector<LabeledPose> out;
  for (const auto& seq : gts) {
    std::vector<CartesianPose> frames;
    if (seq.frames.size() >= 2) {
      for (const auto& f : interpolate_sequence(seq, factor).frames) frames.push_back(f.pose);
    } else {
      for (const auto& f : seq.frames) frames.push_back(f.pose);
    }
    for (const auto& p : frames) out.push_back({to_polar(p, skel), 0.0, true});
    for (const auto& p : frames) out.push_back({to_polar(flip_horizontal(p, skel), skel), 0.0, true});
  }
  return out;
}

}  // namespace polarndf
