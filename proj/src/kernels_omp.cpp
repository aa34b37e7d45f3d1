#include <omp.h>

#include <algorithm>
#include <exception>
#include <memory>

#include "kernels_common.hpp"

namespace polarndf::kernels {

namespace {

constexpr std::size_t kKnnChunk = 256;

// Runs body(i) for i in [0, n) in parallel and rethrows the first exception
// (by index) on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, bool dynamic = false) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
  if (dynamic) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// One workspace per OpenMP thread, built lazily.
class WorkspacePool {
 public:
  explicit WorkspacePool(const NdfModel& model) : model_(model), pool_(static_cast<std::size_t>(omp_get_max_threads())) {}
  NdfWorkspace& local() {
    auto& slot = pool_[static_cast<std::size_t>(omp_get_thread_num())];
    if (!slot) slot = std::make_unique<NdfWorkspace>(model_);
    return *slot;
  }

 private:
  const NdfModel& model_;
  std::vector<std::unique_ptr<NdfWorkspace>> pool_;
};

}  // namespace

void set_workers(int workers) {
  if (workers > 0) omp_set_num_threads(workers);
}

namespace omp {

KnnResult knn(const PolarPose& query, std::span<const PolarPose> bank, std::size_t k, DistanceKind kind,
              const DistanceWeights& w) {
  detail::check_knn_args(bank.size(), k);
  if (w.size() != query.size()) throw Error(ErrorKind::LengthMismatch, "distance weights length");
  const std::size_t chunks = (bank.size() + kKnnChunk - 1) / kKnnChunk;
  std::vector<std::vector<detail::Candidate>> local(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    local[c].reserve(k + 1);
    detail::pruned_scan(query, bank, c * kKnnChunk, std::min(bank.size(), (c + 1) * kKnnChunk), k, kind, w, local[c]);
  });
  // Every global top-k member is in its chunk's local top-k.
  std::vector<detail::Candidate> merged;
  for (const auto& l : local) merged.insert(merged.end(), l.begin(), l.end());
  std::sort(merged.begin(), merged.end());
  merged.resize(k);
  return detail::to_result(merged);
}

std::vector<PriorQueryResult> prior_distance_batch(std::span<const PolarPose> queries, std::span<const PolarPose> bank,
                                                   std::size_t k, DistanceKind kind, const DistanceWeights& w) {
  if (k < 2) throw Error(ErrorKind::KTooSmall, "prior distance needs K >= 2");
  detail::check_knn_args(bank.size(), k);
  std::vector<PriorQueryResult> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    out[i] = prior_from_neighbors(queries[i], bank, knn_pruned(queries[i], bank, k, kind, w), kind, w);
  }, true);
  return out;
}

std::vector<double> evaluate(const NdfModel& model, std::span<const PolarPose> poses) {
  std::vector<double> out(poses.size());
  WorkspacePool pool(model);
  parallel_for(poses.size(), [&](std::size_t i) { out[i] = forward(model, poses[i].flat(), pool.local()); });
  return out;
}

LossBreakdown batch_loss(const NdfModel& model, std::span<const LabeledPose> batch, const LossWeights& weights,
                         std::vector<double>& param_grad) {
  const std::size_t P = model.num_parameters();
  const std::size_t chunks = (batch.size() + kReductionChunk - 1) / kReductionChunk;
  if (chunks == 0) {
    param_grad.assign(P, 0.0);
    return {};
  }
  std::vector<std::vector<double>> partial(chunks);
  std::vector<LossBreakdown> losses(chunks);
  WorkspacePool pool(model);
  parallel_for(chunks, [&](std::size_t c) {
    partial[c].assign(P, 0.0);
    auto& ws = pool.local();
    const std::size_t end = std::min(batch.size(), (c + 1) * kReductionChunk);
    for (std::size_t i = c * kReductionChunk; i < end; ++i) {
      const auto& s = batch[i];
      losses[c] += sample_loss(model, s.pose.flat(), s.distance, s.is_real, weights, partial[c], ws);
    }
  }, true);
  // Fixed pairwise tree: the summation order depends only on the batch size.
  for (std::size_t stride = 1; stride < chunks; stride *= 2) {
    const std::size_t pairs = (chunks + 2 * stride - 1) / (2 * stride);
    parallel_for(pairs, [&](std::size_t p) {
      const std::size_t a = p * 2 * stride;
      const std::size_t b = a + stride;
      if (b >= chunks) return;
      for (std::size_t i = 0; i < P; ++i) partial[a][i] += partial[b][i];
      losses[a] += losses[b];
    });
  }
  param_grad = std::move(partial[0]);
  return losses[0];
}

ProjectionResult project_batch(const NdfModel& model, std::span<const PolarPose> fakes, int n_iters, double tau) {
  ProjectionResult out;
  out.poses.assign(fakes.begin(), fakes.end());
  out.active.assign(static_cast<std::size_t>(std::max(n_iters, 0)), std::vector<char>(fakes.size(), 0));
  out.final_distance.resize(fakes.size());
  WorkspacePool pool(model);
  std::vector<std::vector<double>> grads(static_cast<std::size_t>(omp_get_max_threads()),
                                         std::vector<double>(model.input_size()));
  parallel_for(fakes.size(), [&](std::size_t i) {
    auto& grad = grads[static_cast<std::size_t>(omp_get_thread_num())];
    out.final_distance[i] = detail::project_one(model, out.poses[i], n_iters, tau, out.active, i, pool.local(), grad);
  }, true);
  return out;
}

std::vector<LabeledPose> generate_fakes(std::span<const PolarPose> gts, const ErrorBank& bank,
                                        const SynthesisConfig& cfg, std::span<const PolarPose> labeling_bank,
                                        const Skeleton& skel) {
  detail::check_fake_args(gts, bank, cfg, labeling_bank);
  const std::size_t m = static_cast<std::size_t>(cfg.multiplier) * gts.size();
  std::vector<LabeledPose> out(m);
  parallel_for(m, [&](std::size_t i) {
    out[i].pose = detail::make_fake(i, gts, bank, cfg, skel);
    const auto nn = knn_pruned(out[i].pose, labeling_bank, cfg.k, cfg.kind, cfg.weights);
    out[i].distance = prior_from_neighbors(out[i].pose, labeling_bank, nn, cfg.kind, cfg.weights).manifold_distance;
    out[i].is_real = false;
  }, true);
  return out;
}

std::vector<CorrectionResult> correct_batch(const NdfModel& model, std::span<const CartesianPose> poses,
                                            const Skeleton& skel, const CorrectionConfig& cfg) {
  std::vector<CorrectionResult> out(poses.size());
  parallel_for(poses.size(), [&](std::size_t i) { out[i] = correct(model, poses[i], skel, cfg); }, true);
  return out;
}

}  // namespace omp
}  // namespace polarndf::kernels
