#pragma once

// Command implementations behind the CLI. Every command reads a validated
// PipelineConfig and writes its outputs under `out/<command>/`.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polarndf/config.hpp"
#include "polarndf/corrector.hpp"
#include "polarndf/ndf.hpp"
#include "polarndf/skeleton.hpp"
#include "polarndf/trainer.hpp"

namespace polarndf {

inline const std::vector<std::string> kSplitNames = {"train_full", "train_half", "train_quarter", "val", "test"};
inline const std::vector<double> kPckThresholds = {0.05, 0.1, 0.2, 0.5};

struct ConvertJob {
  std::string tag;
  std::filesystem::path input;
  std::filesystem::path map;
  std::filesystem::path output;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  int workers = 0;
  bool verbose = true;  // progress lines on stderr
  std::filesystem::path out = "out";
  std::filesystem::path gt;
  std::map<std::string, std::filesystem::path> detections;  // tag -> canonical pose file
  std::vector<ConvertJob> convert;
  Skeleton skeleton = Skeleton::h36m17();
  std::map<std::string, std::vector<std::string>> splits;

  int interpolation = 5;

  int multiplier = 50;
  int val_multiplier = 50;
  double lambda = 0.01;
  std::vector<std::string> bank_sources;  // empty = every detection tag

  Representation representation = Representation::polar;
  int embedding_dim = 8;
  int encoder_hidden = 64;
  std::vector<int> decoder_hidden{256, 256};

  TrainConfig train;
  std::string train_split = "train_full";

  CorrectionConfig correction;
  bool calibrate_stop = true;
  std::vector<double> stop_percentiles{50, 75, 90, 95, 99};
  bool trajectories = false;
  std::string model_id;  // empty = checkpoint file stem
  std::string correct_split = "test";

  // Parses and validates; relative paths resolve against `base_dir`. Throws
  // Error(Config) on any invalid value.
  static PipelineConfig from_document(const ConfigDocument& doc, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);

  // Re-checks invariants after command-line overrides.
  void validate() const;

  std::filesystem::path dir(const std::string& command) const { return out / command; }
  const std::vector<std::string>& split(const std::string& name) const;
  NdfArchitecture architecture() const;
};

struct ConvertSummary {
  std::size_t records = 0;
};
ConvertSummary convert_file(const std::filesystem::path& input, const std::filesystem::path& map_path,
                            const Skeleton& skel, const std::filesystem::path& output);

struct PrepareSummary {
  std::map<std::string, std::size_t> poses;      // raw gt poses per split
  std::map<std::string, std::size_t> sequences;  // per split
  std::map<std::string, std::size_t> samples;    // labeled reals written per split
};
PrepareSummary run_prepare(const PipelineConfig& cfg);

struct SynthSummary {
  std::size_t bank_size = 0;
  std::size_t train_fakes = 0;
  std::size_t val_fakes = 0;
};
SynthSummary run_synth(const PipelineConfig& cfg);

TrainResult run_train(const PipelineConfig& cfg);

struct CorrectSummary {
  std::string model_id;
  double stop_threshold = 0.0;
  std::map<std::string, std::filesystem::path> outputs;  // tag -> corrected pose file
  std::size_t poses = 0;
};
// `checkpoint` defaults to out/train/model.ckpt; `inputs` to every detection
// tag, restricted to the correction split.
CorrectSummary run_correct(const PipelineConfig& cfg, std::optional<std::filesystem::path> checkpoint = {},
                           std::map<std::string, std::filesystem::path> inputs = {});

struct EvalRow {
  std::string model;
  std::string method;
  std::vector<double> pck;  // fractions at kPckThresholds
  std::size_t poses = 0;
};
struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalRow> best_iterate;  // baseline/opt. converged pairs
  std::string to_csv() const;
  std::string best_iterate_csv() const;
};
struct EvalInput {
  std::string model;   // row label, e.g. detector tag
  std::string method;  // "raw" or "corrected"
  std::filesystem::path poses;
  std::optional<std::filesystem::path> trajectories;
};
// Aligns every prediction with `gt` by (sequence, frame); `split_ids`, when
// nonempty, restricts the evaluation to those sequences. Writes pck.csv,
// summary.json and, for inputs with trajectories, joint curves and the
// best-iterate table into out_dir.
EvalReport run_eval(const std::vector<EvalInput>& inputs, const std::filesystem::path& gt, const Skeleton& skel,
                    const std::vector<std::string>& split_ids, const std::filesystem::path& out_dir);
// Raw detections plus the corrected outputs of run_correct.
EvalReport run_eval(const PipelineConfig& cfg);

// convert (for configured jobs), prepare, synth, train, correct, eval.
EvalReport run_pipeline(const PipelineConfig& cfg);

// Trajectory dumps: one CSV per pose, "iteration,distance,x0,y0,...".
void write_trajectory(const std::filesystem::path& path, const std::vector<TrajectoryPoint>& trajectory);
std::vector<TrajectoryPoint> read_trajectory(const std::filesystem::path& path);

}  // namespace polarndf
