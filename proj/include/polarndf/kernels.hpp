#pragma once

// Data-parallel kernels. Each operation has an OpenMP implementation (`omp`)
// used by the library and a plain serial reference (`serial`) kept for tests
// and the benchmark. The omp variants are deterministic: results do not
// depend on the thread count.

#include <span>
#include <vector>

#include "polarndf/corrector.hpp"
#include "polarndf/metrics.hpp"
#include "polarndf/ndf.hpp"
#include "polarndf/synthesis.hpp"

namespace polarndf::kernels {

struct ProjectionResult {
  std::vector<PolarPose> poses;
  // active[n][i]: fake i was moved during iteration n.
  std::vector<std::vector<char>> active;
  std::vector<double> final_distance;
};

// Gradients are summed in fixed-size chunks combined by a pairwise tree.
inline constexpr std::size_t kReductionChunk = 8;

// Exact KNN by a single-thread scan that stops summing a candidate once its
// partial distance can no longer enter the top k.
KnnResult knn_pruned(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k, DistanceKind kind,
                     const DistanceWeights& w);

namespace serial {

KnnResult knn(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k, DistanceKind kind,
              const DistanceWeights& w);
std::vector<PriorQueryResult> prior_distance_batch(std::span<const PolarPose> queries, std::span<const PolarPose> bank,
                                                   std::size_t k, DistanceKind kind, const DistanceWeights& w);
std::vector<double> evaluate(const NdfModel& model, std::span<const PolarPose> poses);
LossBreakdown batch_loss(const NdfModel& model, std::span<const LabeledPose> batch, const LossWeights& weights,
                         std::vector<double>& param_grad);
ProjectionResult project_batch(const NdfModel& model, std::span<const PolarPose> fakes, int n_iters, double tau);
std::vector<LabeledPose> generate_fakes(std::span<const PolarPose> gts, const ErrorBank& bank,
                                        const SynthesisConfig& cfg, std::span<const PolarPose> labeling_bank,
                                        const Skeleton& skel);
std::vector<CorrectionResult> correct_batch(const NdfModel& model, std::span<const CartesianPose> poses,
                                            const Skeleton& skel, const CorrectionConfig& cfg);

}  // namespace serial

namespace omp {

KnnResult knn(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k, DistanceKind kind,
              const DistanceWeights& w);
std::vector<PriorQueryResult> prior_distance_batch(std::span<const PolarPose> queries, std::span<const PolarPose> bank,
                                                   std::size_t k, DistanceKind kind, const DistanceWeights& w);
std::vector<double> evaluate(const NdfModel& model, std::span<const PolarPose> poses);
LossBreakdown batch_loss(const NdfModel& model, std::span<const LabeledPose> batch, const LossWeights& weights,
                         std::vector<double>& param_grad);
ProjectionResult project_batch(const NdfModel& model, std::span<const PolarPose> fakes, int n_iters, double tau);
std::vector<LabeledPose> generate_fakes(std::span<const PolarPose> gts, const ErrorBank& bank,
                                        const SynthesisConfig& cfg, std::span<const PolarPose> labeling_bank,
                                        const Skeleton& skel);
std::vector<CorrectionResult> correct_batch(const NdfModel& model, std::span<const CartesianPose> poses,
                                            const Skeleton& skel, const CorrectionConfig& cfg);

}  // namespace omp

// Sets the OpenMP worker count for subsequent kernels (0 keeps the default).
void set_workers(int workers);

}  // namespace polarndf::kernels
