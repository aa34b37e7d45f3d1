#include "polarndf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "polarndf/error.hpp"
#include "polarndf/io.hpp"
#include "polarndf/kernels.hpp"

namespace polarndf {

std::string TrainReport::to_csv() const {
  std::string out = "# config: " + label + "\n";
  out += "config,epoch,loss_real,loss_fake,loss_grad,loss_total,val_real_f,val_fake_f,val_abs_error,tau,"
         "projection_active\n";
  for (const auto& r : rows) {
    out += label + "," + std::to_string(r.epoch);
    for (double v : {r.loss_real, r.loss_fake, r.loss_grad, r.loss_total, r.val_real_f, r.val_fake_f,
                     r.val_abs_error, r.tau, r.projection_active}) {
      out += "," + format_double(v);
    }
    out += "\n";
  }
  for (const auto& p : checkpoint_paths) out += "# checkpoint: " + p + "\n";
  return out;
}

void TrainReport::write(const std::filesystem::path& path) const { atomic_write(path, to_csv()); }

std::string ablation_label(Representation rep, DistanceKind kind, bool batch_projection, bool grad_loss) {
  if (rep == Representation::angular) {
    return kind == DistanceKind::angular && batch_projection && grad_loss ? "Angular baseline" : "custom";
  }
  if (kind == DistanceKind::arc_radius) {
    if (batch_projection && grad_loss) return "Polar baseline";
    if (!batch_projection && grad_loss) return "Polar w/o bp";
    if (batch_projection && !grad_loss) return "Polar w/o grad. loss";
    return "custom";
  }
  if (kind == DistanceKind::geodesic && batch_projection && grad_loss) return "Polar w/o AR. dist.";
  return "custom";
}

void optimizer_step(NdfModel& model, std::span<const double> grads, AdamState& state, const TrainConfig& cfg) {
  adam_step(model.parameters(), grads, state, {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});
}

double calibrate_projection_threshold(const NdfModel& model, std::span<const PolarPose> val_reals, double p) {
  if (val_reals.empty()) throw Error(ErrorKind::EmptyValidation, "no validation reals for the projection threshold");
  return percentile(kernels::omp::evaluate(model, val_reals), p);
}

namespace {

struct ValStats {
  double real_f = 0.0;
  double fake_f = 0.0;
  double abs_error = 0.0;
  std::vector<double> real_values;
};

ValStats validate(const NdfModel& model, std::span<const LabeledPose> val) {
  ValStats s;
  if (val.empty()) return s;
  std::vector<PolarPose> poses;
  poses.reserve(val.size());
  for (const auto& v : val) poses.push_back(v.pose);
  const auto f = kernels::omp::evaluate(model, poses);
  std::size_t nr = 0, nf = 0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    s.abs_error += std::abs(f[i] - val[i].distance);
    if (val[i].is_real) {
      s.real_f += f[i];
      s.real_values.push_back(f[i]);
      ++nr;
    } else {
      s.fake_f += f[i];
      ++nf;
    }
  }
  if (nr) s.real_f /= static_cast<double>(nr);
  if (nf) s.fake_f /= static_cast<double>(nf);
  s.abs_error /= static_cast<double>(val.size());
  return s;
}

void check_config(const TrainConfig& cfg, std::size_t num_connections) {
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorKind::Config, "learning rate must be positive");
  if (cfg.epochs < 0) throw Error(ErrorKind::Config, "epochs must be >= 0");
  if (cfg.projection_iters < 0) throw Error(ErrorKind::Config, "projection iterations must be >= 0");
  if (!(cfg.projection_threshold >= 0.0)) throw Error(ErrorKind::Config, "projection threshold must be >= 0");
  if (cfg.batch_size < 1) throw Error(ErrorKind::Config, "batch size must be >= 1");
  if (cfg.k < 2) throw Error(ErrorKind::KTooSmall, "relabeling needs K >= 2");
  if (cfg.weights.size() != num_connections) throw Error(ErrorKind::LengthMismatch, "distance weights length");
}

}  // namespace

TrainResult train(NdfModel model, std::span<const LabeledPose> train_data, std::span<const LabeledPose> val_data,
                  std::span<const PolarPose> real_bank, const TrainConfig& cfg,
                  const std::function<void(const EpochRow&)>& on_epoch) {
  check_config(cfg, model.architecture().num_connections());

  std::vector<std::size_t> reals, fakes;
  for (std::size_t i = 0; i < train_data.size(); ++i) (train_data[i].is_real ? reals : fakes).push_back(i);
  const bool needs_reals = cfg.loss.real != 0.0 || (cfg.loss.grad_loss && cfg.loss.grad != 0.0);
  if (reals.empty() && needs_reals) throw Error(ErrorKind::NoReals, "training data has no real poses");
  if (fakes.empty() && cfg.loss.fake != 0.0) throw Error(ErrorKind::NoFakes, "training data has no fake poses");
  const bool projecting = cfg.batch_projection && cfg.projection_iters > 0 && !fakes.empty();
  if (projecting && real_bank.size() < cfg.k) {
    throw Error(ErrorKind::BankTooSmall, "real bank is smaller than K for relabeling");
  }

  // Epoch ordering pool; reals optionally repeated.
  std::vector<std::size_t> pool;
  const std::size_t repeat = cfg.rebalance && !reals.empty() ? std::max<std::size_t>(1, fakes.size() / reals.size()) : 1;
  for (std::size_t i = 0; i < train_data.size(); ++i) {
    const std::size_t times = train_data[i].is_real ? repeat : 1;
    for (std::size_t t = 0; t < times; ++t) pool.push_back(i);
  }

  std::vector<PolarPose> val_reals;
  for (const auto& v : val_data) {
    if (v.is_real) val_reals.push_back(v.pose);
  }

  TrainResult result;
  result.report.label = ablation_label(model.architecture().representation, cfg.kind, cfg.batch_projection,
                                       cfg.loss.grad_loss);
  result.best = model;
  double best_error = std::numeric_limits<double>::infinity();
  AdamState adam(model.num_parameters());
  double tau = cfg.projection_threshold;
  std::vector<double> grads;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> order = pool;
    std::shuffle(order.begin(), order.end(), rng);

    LossBreakdown epoch_loss;
    double active_slots = 0.0, total_slots = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<LabeledPose> batch;
      std::vector<PolarPose> batch_fakes;
      std::vector<std::size_t> fake_slots;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const LabeledPose& s = train_data[order[i]];
        if (!s.is_real) {
          fake_slots.push_back(batch.size());
          batch_fakes.push_back(s.pose);
        }
        batch.push_back(s);
      }
      if (projecting && !batch_fakes.empty()) {
        auto projected = kernels::omp::project_batch(model, batch_fakes, cfg.projection_iters, tau);
        for (const auto& row : projected.active) {
          for (char a : row) active_slots += a;
          total_slots += static_cast<double>(row.size());
        }
        if (cfg.use_projected_fakes) {
          const auto priors =
              kernels::omp::prior_distance_batch(projected.poses, real_bank, cfg.k, cfg.kind, cfg.weights);
          for (std::size_t i = 0; i < fake_slots.size(); ++i) {
            batch[fake_slots[i]].pose = std::move(projected.poses[i]);
            batch[fake_slots[i]].distance = priors[i].manifold_distance;
          }
        }
      }
      const LossBreakdown loss = loss_and_param_gradients(model, batch, cfg.loss, grads);
      if (!std::isfinite(loss.total)) {
        throw Error(ErrorKind::NonFinite, "non-finite loss in epoch " + std::to_string(epoch));
      }
      optimizer_step(model, grads, adam, cfg);
      epoch_loss += loss;
    }

    EpochRow row;
    row.epoch = epoch;
    const double nr = static_cast<double>(epoch_loss.num_real);
    const double nf = static_cast<double>(epoch_loss.num_fake);
    row.loss_real = nr > 0 ? epoch_loss.real / nr : 0.0;
    row.loss_grad = nr > 0 ? epoch_loss.grad / nr : 0.0;
    row.loss_fake = nf > 0 ? epoch_loss.fake / nf : 0.0;
    row.loss_total = nr + nf > 0 ? epoch_loss.total / (nr + nf) : 0.0;
    row.tau = tau;
    row.projection_active = total_slots > 0 ? active_slots / total_slots : 0.0;

    const ValStats val = validate(model, val_data);
    row.val_real_f = val.real_f;
    row.val_fake_f = val.fake_f;
    row.val_abs_error = val.abs_error;
    if (val_data.empty() || val.abs_error < best_error) {
      best_error = val.abs_error;
      result.best = model;
      result.best_epoch = epoch;
    }
    if (!val.real_values.empty()) tau = percentile(val.real_values, cfg.projection_percentile);

    result.report.rows.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  result.last = std::move(model);
  return result;
}

}  // namespace polarndf
