#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "polarndf/labeled.hpp"
#include "polarndf/pose.hpp"
#include "polarndf/skeleton.hpp"

namespace polarndf {

// Which components of each polar triple the network reads. The angular
// variant ignores connection lengths.
enum class Representation : std::uint32_t { polar = 0, angular = 1 };

Representation parse_representation(std::string_view text);
std::string_view to_string(Representation r);

enum class Activation : std::uint32_t { identity = 0, softplus = 1 };

struct NdfArchitecture {
  // parent_connection[j] is the connection whose embedding feeds j's encoder
  // (-1 for connections leaving the root). Must be topologically ordered.
  std::vector<int> parent_connection;
  Representation representation = Representation::polar;
  int embedding_dim = 8;
  int encoder_hidden = 64;
  std::vector<int> decoder_hidden{256, 256};
  std::uint64_t skeleton_hash = 0;

  std::size_t num_connections() const { return parent_connection.size(); }
  int input_per_connection() const { return representation == Representation::polar ? 3 : 2; }

  static NdfArchitecture for_skeleton(const Skeleton& skel, Representation rep = Representation::polar);
};

struct DenseLayout {
  int in = 0;
  int out = 0;
  std::size_t weight_offset = 0;  // out x in, row-major
  std::size_t bias_offset = 0;
  Activation act = Activation::identity;
};

// f = softplus(decoder(encoder(x))). The encoder runs one small MLP per
// connection in topological order; each takes the connection's triple and its
// parent connection's embedding. Parameters live in one flat vector, laid out
// layer by layer (weights then bias), encoder connections first.
class NdfModel {
 public:
  NdfModel() = default;
  NdfModel(NdfArchitecture arch, std::uint64_t seed);
  // Same layout, given parameters (no initialization).
  NdfModel(NdfArchitecture arch, std::uint64_t seed, std::vector<double> params);

  const NdfArchitecture& architecture() const { return arch_; }
  const std::vector<DenseLayout>& layers() const { return layers_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::size_t num_parameters() const { return params_.size(); }
  std::uint64_t seed() const { return seed_; }
  std::size_t input_size() const { return 3 * arch_.num_connections(); }

  const DenseLayout& encoder_hidden(std::size_t j) const { return layers_[2 * j]; }
  const DenseLayout& encoder_out(std::size_t j) const { return layers_[2 * j + 1]; }
  std::size_t first_decoder_layer() const { return 2 * arch_.num_connections(); }

 private:
  void build_layout();

  NdfArchitecture arch_;
  std::uint64_t seed_ = 0;
  std::vector<DenseLayout> layers_;
  std::vector<double> params_;
};

// Scratch buffers for one evaluation; reuse across calls on one thread.
class NdfWorkspace {
 public:
  explicit NdfWorkspace(const NdfModel& model);

  struct Layer {
    std::vector<double> x, pre, y;     // primal
    std::vector<double> xd, pd, yd;    // tangent (directional derivative)
    std::vector<double> ybar, ydbar;   // adjoints of y, yd
    std::vector<double> pbar, pdbar;   // adjoints of pre, pd
    std::vector<double> xbar, xdbar;   // adjoints of x, xd
  };
  std::vector<Layer> layers;
  std::vector<double> embedding_bar, embedding_dbar;
  double out_pre = 0.0, out_pre_dot = 0.0;
};

double forward(const NdfModel& model, std::span<const double> x, NdfWorkspace& ws);
double forward(const NdfModel& model, const PolarPose& x);

// Writes df/dx (3J values; length slots are zero for the angular variant) and
// returns f.
double input_gradient(const NdfModel& model, std::span<const double> x, std::span<double> grad, NdfWorkspace& ws);
std::vector<double> input_gradient(const NdfModel& model, const PolarPose& x);

struct LossWeights {
  double real = 1.0;
  double fake = 1.0;
  double grad = 1.0;
  bool grad_loss = true;
  // Per-sample squared error / squared gradient norm instead of plain norms.
  bool squared = false;
};

struct LossBreakdown {
  double real = 0.0;
  double fake = 0.0;
  double grad = 0.0;
  double total = 0.0;
  std::size_t num_real = 0;
  std::size_t num_fake = 0;

  LossBreakdown& operator+=(const LossBreakdown& o);
};

// Loss of a single sample; adds the parameter gradient of its weighted
// contribution into `param_grad` (when non-empty).
LossBreakdown sample_loss(const NdfModel& model, std::span<const double> x, double target, bool is_real,
                          const LossWeights& weights, std::span<double> param_grad, NdfWorkspace& ws);

// Sums over the batch: real = sum |f - d| on reals, fake = sum |f - d| on
// fakes, grad = sum ||df/dx|| on reals; total is the weighted sum.
// `param_grad` is resized and overwritten with d(total)/d(theta).
LossBreakdown loss_and_param_gradients(const NdfModel& model, std::span<const LabeledPose> batch,
                                       const LossWeights& weights, std::vector<double>& param_grad);

// Little-endian binary: magic, version, hyperparameters, skeleton hash,
// parameter count, parameters, checksum.
void checkpoint_save(const NdfModel& model, const std::filesystem::path& path);
std::vector<std::uint8_t> checkpoint_bytes(const NdfModel& model);
NdfModel checkpoint_load(const std::filesystem::path& path, std::optional<std::uint64_t> expected_skeleton_hash = {});
NdfModel checkpoint_from_bytes(std::span<const std::uint8_t> bytes,
                               std::optional<std::uint64_t> expected_skeleton_hash = {});

}  // namespace polarndf
