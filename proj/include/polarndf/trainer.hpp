#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "polarndf/adam.hpp"
#include "polarndf/labeled.hpp"
#include "polarndf/metrics.hpp"
#include "polarndf/ndf.hpp"

namespace polarndf {

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 20;
  int projection_iters = 20;
  // Freezing threshold for the first epoch; later epochs use the percentile
  // of f over validation reals. 0 freezes nothing.
  double projection_threshold = 0.0;
  double projection_percentile = 95.0;
  std::size_t batch_size = 256;
  LossWeights loss;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool batch_projection = true;
  // Train on projected (relabeled) fakes; false keeps the original fakes and
  // only runs the projection for its statistics.
  bool use_projected_fakes = true;
  // Repeat reals in each epoch's ordering to roughly match the fake count.
  bool rebalance = false;
  DistanceKind kind = DistanceKind::arc_radius;
  std::size_t k = 3;
  DistanceWeights weights;
  std::uint64_t seed = 0;
};

struct EpochRow {
  int epoch = 0;
  // Per-sample means over the epoch.
  double loss_real = 0.0;
  double loss_fake = 0.0;
  double loss_grad = 0.0;
  double loss_total = 0.0;
  double val_real_f = 0.0;
  double val_fake_f = 0.0;
  double val_abs_error = 0.0;
  double tau = 0.0;
  // Share of (fake, iteration) projection slots that moved a pose.
  double projection_active = 0.0;
};

struct TrainReport {
  std::string label;
  std::vector<EpochRow> rows;
  std::vector<std::string> checkpoint_paths;

  std::string to_csv() const;
  void write(const std::filesystem::path& path) const;
};

struct TrainResult {
  NdfModel best;
  NdfModel last;
  int best_epoch = 0;  // 0 when no epoch ran
  TrainReport report;
};

// One of the five ablation names, or "custom".
std::string ablation_label(Representation rep, DistanceKind kind, bool batch_projection, bool grad_loss);

void optimizer_step(NdfModel& model, std::span<const double> grads, AdamState& state, const TrainConfig& cfg);

// p-th nearest-rank percentile of f over the validation reals.
double calibrate_projection_threshold(const NdfModel& model, std::span<const PolarPose> val_reals,
                                      double p = 95.0);

// Batch-projection-augmented training. The best model is the one with the
// lowest mean |f - d| over val_data.
TrainResult train(NdfModel model, std::span<const LabeledPose> train_data, std::span<const LabeledPose> val_data,
                  std::span<const PolarPose> real_bank, const TrainConfig& cfg,
                  const std::function<void(const EpochRow&)>& on_epoch = {});

}  // namespace polarndf
