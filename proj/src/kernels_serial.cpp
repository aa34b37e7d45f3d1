#include <algorithm>
#include <numeric>

#include "kernels_common.hpp"

namespace polarndf::kernels {

KnnResult knn_pruned(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k, DistanceKind kind,
                     const DistanceWeights& w) {
  detail::check_knn_args(bank.size(), k);
  if (w.size() != query.size()) throw Error(ErrorKind::LengthMismatch, "distance weights length");
  std::vector<detail::Candidate> top;
  top.reserve(k + 1);
  detail::pruned_scan(query, bank, 0, bank.size(), k, kind, w, top);
  return detail::to_result(top);
}

namespace serial {

KnnResult knn(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k, DistanceKind kind,
              const DistanceWeights& w) {
  detail::check_knn_args(bank.size(), k);
  std::vector<detail::Candidate> all(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) all[i] = {pose_distance(kind, query, bank[i], w), i};
  std::sort(all.begin(), all.end());
  all.resize(k);
  return detail::to_result(all);
}

std::vector<PriorQueryResult> prior_distance_batch(std::span<const PolarPose> queries, std::span<const PolarPose> bank,
                                                   std::size_t k, DistanceKind kind, const DistanceWeights& w) {
  if (k < 2) throw Error(ErrorKind::KTooSmall, "prior distance needs K >= 2");
  std::vector<PriorQueryResult> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(prior_from_neighbors(q, bank, serial::knn(q, bank, k, kind, w), kind, w));
  return out;
}

std::vector<double> evaluate(const NdfModel& model, std::span<const PolarPose> poses) {
  NdfWorkspace ws(model);
  std::vector<double> out(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) out[i] = forward(model, poses[i].flat(), ws);
  return out;
}

LossBreakdown batch_loss(const NdfModel& model, std::span<const LabeledPose> batch, const LossWeights& weights,
                         std::vector<double>& param_grad) {
  param_grad.assign(model.num_parameters(), 0.0);
  NdfWorkspace ws(model);
  LossBreakdown total;
  for (const auto& s : batch) total += sample_loss(model, s.pose.flat(), s.distance, s.is_real, weights, param_grad, ws);
  return total;
}

ProjectionResult project_batch(const NdfModel& model, std::span<const PolarPose> fakes, int n_iters, double tau) {
  ProjectionResult out;
  out.poses.assign(fakes.begin(), fakes.end());
  out.active.assign(static_cast<std::size_t>(std::max(n_iters, 0)), std::vector<char>(fakes.size(), 0));
  out.final_distance.resize(fakes.size());
  NdfWorkspace ws(model);
  std::vector<double> grad(model.input_size());
  for (std::size_t i = 0; i < fakes.size(); ++i) {
    out.final_distance[i] = detail::project_one(model, out.poses[i], n_iters, tau, out.active, i, ws, grad);
  }
  return out;
}

std::vector<LabeledPose> generate_fakes(std::span<const PolarPose> gts, const ErrorBank& bank,
                                        const SynthesisConfig& cfg, std::span<const PolarPose> labeling_bank,
                                        const Skeleton& skel) {
  detail::check_fake_args(gts, bank, cfg, labeling_bank);
  const std::size_t m = static_cast<std::size_t>(cfg.multiplier) * gts.size();
  std::vector<LabeledPose> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i].pose = detail::make_fake(i, gts, bank, cfg, skel);
    const auto nn = serial::knn(out[i].pose, labeling_bank, cfg.k, cfg.kind, cfg.weights);
    out[i].distance = prior_from_neighbors(out[i].pose, labeling_bank, nn, cfg.kind, cfg.weights).manifold_distance;
    out[i].is_real = false;
  }
  return out;
}

std::vector<CorrectionResult> correct_batch(const NdfModel& model, std::span<const CartesianPose> poses,
                                            const Skeleton& skel, const CorrectionConfig& cfg) {
  std::vector<CorrectionResult> out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back(correct(model, p, skel, cfg));
  return out;
}

}  // namespace serial
}  // namespace polarndf::kernels
