// polarndf command-line front end.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "polarndf/error.hpp"
#include "polarndf/format_map.hpp"
#include "polarndf/gait_fixture.hpp"
#include "polarndf/io.hpp"
#include "polarndf/kernels.hpp"
#include "polarndf/pipeline.hpp"

namespace fs = std::filesystem;
using namespace polarndf;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Shared {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  bool quiet = false;
};

void add_shared(CLI::App* cmd, Shared& s) {
  cmd->add_option("--config", s.config, "Pipeline config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", s.seed, "Global seed");
  cmd->add_option("--workers", s.workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", s.out, "Output directory");
  cmd->add_flag("--quiet", s.quiet, "No progress output");
}

// Training and model flags; unset ones keep the config's values.
struct TrainFlags {
  std::optional<double> lr, projection_threshold, projection_percentile, weight_real, weight_fake, weight_grad, beta1,
      beta2, epsilon;
  std::optional<int> epochs, projection_iters, embedding_dim, encoder_hidden;
  std::optional<std::size_t> batch_size, k;
  std::optional<bool> batch_projection, grad_loss, squared_loss, use_projected_fakes, rebalance;
  std::optional<std::string> distance, representation, decoder_hidden, split;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--lr", f.lr, "Learning rate");
  cmd->add_option("--epochs", f.epochs, "Epochs (default 20, or 400 without batch projection)");
  cmd->add_option("--projection-iters", f.projection_iters, "Batch projection iterations per batch");
  cmd->add_option("--projection-threshold", f.projection_threshold, "Freezing threshold for the first epoch");
  cmd->add_option("--projection-percentile", f.projection_percentile, "Percentile of validation f used as threshold");
  cmd->add_option("--batch-size", f.batch_size, "Samples per batch");
  cmd->add_option("--weight-real", f.weight_real, "Weight of the real-pose loss");
  cmd->add_option("--weight-fake", f.weight_fake, "Weight of the fake-pose loss");
  cmd->add_option("--weight-grad", f.weight_grad, "Weight of the gradient loss");
  cmd->add_option("--beta1", f.beta1, "Adam first-moment decay");
  cmd->add_option("--beta2", f.beta2, "Adam second-moment decay");
  cmd->add_option("--epsilon", f.epsilon, "Adam epsilon");
  cmd->add_option("--batch-projection", f.batch_projection, "Batch projection augmentation (true/false)");
  cmd->add_option("--grad-loss", f.grad_loss, "Gradient loss term (true/false)");
  cmd->add_option("--squared-loss", f.squared_loss, "Squared per-sample losses (true/false)");
  cmd->add_option("--use-projected-fakes", f.use_projected_fakes, "Train on projected, relabeled fakes (true/false)");
  cmd->add_option("--rebalance", f.rebalance, "Repeat reals to balance fakes (true/false)");
  cmd->add_option("--distance", f.distance, "arc_radius | geodesic | angular");
  cmd->add_option("--k", f.k, "Nearest neighbors for distance labels");
  cmd->add_option("--representation", f.representation, "polar | angular");
  cmd->add_option("--embedding-dim", f.embedding_dim, "Per-connection embedding size L");
  cmd->add_option("--encoder-hidden", f.encoder_hidden, "Encoder hidden width");
  cmd->add_option("--decoder-hidden", f.decoder_hidden, "Decoder hidden widths, comma separated");
  cmd->add_option("--train-split", f.split, "train_full | train_half | train_quarter");
}

struct DataFlags {
  std::optional<int> interpolation, multiplier, val_multiplier;
  std::optional<double> lambda;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--interpolation", f.interpolation, "Interpolation factor for real poses");
  cmd->add_option("--multiplier", f.multiplier, "Fake poses per training ground-truth pose");
  cmd->add_option("--val-multiplier", f.val_multiplier, "Fake poses per validation ground-truth pose");
  cmd->add_option("--lambda", f.lambda, "Cartesian noise scale for fakes");
}

void apply(PipelineConfig& cfg, const DataFlags& f) {
  if (f.interpolation) cfg.interpolation = *f.interpolation;
  if (f.multiplier) cfg.multiplier = *f.multiplier;
  if (f.val_multiplier) cfg.val_multiplier = *f.val_multiplier;
  if (f.lambda) cfg.lambda = *f.lambda;
}

struct CorrectFlags {
  std::optional<std::string> checkpoint, stop_threshold, model_id, split;
  std::optional<double> lr;
  std::optional<int> max_iters;
  std::optional<bool> trajectories;
  std::vector<std::string> inputs;
};

void add_correct_flags(CLI::App* cmd, CorrectFlags& f, bool with_inputs) {
  cmd->add_option("--correct-lr", f.lr, "Correction learning rate");
  cmd->add_option("--max-iters", f.max_iters, "Correction iterations");
  cmd->add_option("--stop-threshold", f.stop_threshold, "Number, or 'calibrate' on the validation split");
  cmd->add_option("--trajectories", f.trajectories, "Dump one trajectory file per pose (true/false)");
  cmd->add_option("--model-id", f.model_id, "Model id in the corrected source tag");
  cmd->add_option("--correct-split", f.split, "Split to correct and evaluate");
  if (with_inputs) {
    cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint (default out/train/model.ckpt)");
    cmd->add_option("--input", f.inputs, "Detection files as TAG=PATH (default: configured detections)");
  }
}

PipelineConfig load_config(const Shared& s, bool required) {
  ConfigDocument doc;
  fs::path base;
  if (!s.config.empty()) {
    try {
      doc = ConfigDocument::load(s.config);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, e.what());
    }
    base = fs::path(s.config).parent_path();
  } else if (required) {
    throw Error(ErrorKind::Config, "--config is required for this command");
  }
  auto& top = doc.mutable_section("");
  if (s.seed) top.set("seed", std::to_string(*s.seed));
  if (s.workers) top.set("workers", std::to_string(*s.workers));
  PipelineConfig cfg = PipelineConfig::from_document(doc, base);
  if (!s.out.empty()) cfg.out = s.out;
  cfg.verbose = !s.quiet;
  kernels::set_workers(cfg.workers);
  return cfg;
}

void apply(PipelineConfig& cfg, const TrainFlags& f, const Shared& s) {
  auto& t = cfg.train;
  if (f.lr) t.learning_rate = *f.lr;
  if (f.batch_projection) {
    t.batch_projection = *f.batch_projection;
    // Without projection the longer schedule applies unless epochs are pinned.
    bool pinned = f.epochs.has_value();
    if (!s.config.empty()) pinned = pinned || ConfigDocument::load(s.config).section("train").has("epochs");
    if (!pinned) t.epochs = t.batch_projection ? 20 : 400;
  }
  if (f.epochs) t.epochs = *f.epochs;
  if (f.projection_iters) t.projection_iters = *f.projection_iters;
  if (f.projection_threshold) t.projection_threshold = *f.projection_threshold;
  if (f.projection_percentile) t.projection_percentile = *f.projection_percentile;
  if (f.batch_size) t.batch_size = *f.batch_size;
  if (f.weight_real) t.loss.real = *f.weight_real;
  if (f.weight_fake) t.loss.fake = *f.weight_fake;
  if (f.weight_grad) t.loss.grad = *f.weight_grad;
  if (f.beta1) t.beta1 = *f.beta1;
  if (f.beta2) t.beta2 = *f.beta2;
  if (f.epsilon) t.epsilon = *f.epsilon;
  if (f.grad_loss) t.loss.grad_loss = *f.grad_loss;
  if (f.squared_loss) t.loss.squared = *f.squared_loss;
  if (f.use_projected_fakes) t.use_projected_fakes = *f.use_projected_fakes;
  if (f.rebalance) t.rebalance = *f.rebalance;
  if (f.distance) t.kind = parse_distance_kind(*f.distance);
  if (f.k) t.k = *f.k;
  if (f.representation) cfg.representation = parse_representation(*f.representation);
  if (f.embedding_dim) cfg.embedding_dim = *f.embedding_dim;
  if (f.encoder_hidden) cfg.encoder_hidden = *f.encoder_hidden;
  if (f.decoder_hidden) {
    cfg.decoder_hidden.clear();
    for (const auto& w : split(*f.decoder_hidden, ',')) {
      cfg.decoder_hidden.push_back(static_cast<int>(parse_int(w, "--decoder-hidden")));
    }
  }
  if (f.split) cfg.train_split = *f.split;
}

void apply(PipelineConfig& cfg, const CorrectFlags& f) {
  if (f.lr) cfg.correction.learning_rate = *f.lr;
  if (f.max_iters) cfg.correction.max_iters = *f.max_iters;
  if (f.stop_threshold) {
    if (*f.stop_threshold == "calibrate") {
      cfg.calibrate_stop = true;
    } else {
      cfg.calibrate_stop = false;
      cfg.correction.stop_threshold = parse_double(*f.stop_threshold, "--stop-threshold");
    }
  }
  if (f.trajectories) cfg.trajectories = *f.trajectories;
  if (f.model_id) cfg.model_id = *f.model_id;
  if (f.split) cfg.correct_split = *f.split;
}

// Bad override values are usage errors.
template <typename Fn>
void as_usage(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
}

std::map<std::string, fs::path> parse_inputs(const std::vector<std::string>& specs) {
  std::map<std::string, fs::path> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      out[fs::path(s).stem().string()] = s;
    } else {
      out[s.substr(0, eq)] = s.substr(eq + 1);
    }
  }
  return out;
}

// COCO-WholeBody body order (17 + 6 foot points) from H36M poses, for the
// fixture's raw detector file.
std::string coco_records(const std::vector<PoseSequence>& seqs, const Skeleton& skel) {
  const char* order[] = {"Nose",   "Head",   "Head",   "Head",   "Head",   "LShoulder", "RShoulder", "LElbow",
                         "RElbow", "LWrist", "RWrist", "LHip",   "RHip",   "LKnee",     "RKnee",     "LAnkle",
                         "RAnkle", "LAnkle", "LAnkle", "LAnkle", "RAnkle", "RAnkle",    "RAnkle"};
  std::string out;
  for (const auto& seq : seqs) {
    for (const auto& f : seq.frames) {
      out += seq.sequence_id + "," + std::to_string(f.frame_index) + "," + seq.source;
      for (const char* name : order) {
        const auto& kp = f.pose.keypoints[static_cast<std::size_t>(skel.joint_index(name))];
        out += "," + format_double(kp.x) + "," + format_double(kp.y) + "," + format_double(kp.confidence.value_or(1.0));
      }
      out += "\n";
    }
  }
  return out;
}

void write_fixture(const fs::path& dir, const GaitConfig& gc, int epochs) {
  const Skeleton skel = Skeleton::h36m17();
  const auto fx = make_gait_fixture(gc, skel);
  write_pose_file(dir / "gt.poses", flatten_sequences(fx.gts));
  write_pose_file(dir / "sim_detector.poses", flatten_sequences(fx.detections));
  atomic_write(dir / "sim_detector.coco", coco_records(fx.detections, skel));
  atomic_write(dir / "h36m17.cfg", std::string(Skeleton::h36m17_text()));
  atomic_write(dir / "coco_wholebody_body.map",
               read_file(fs::path(POLARNDF_DATA_DIR) / "formats" / "coco_wholebody_body.map"));

  const auto split = default_fixture_split(gc);
  std::string cfg =
      "# Synthetic gait fixture, quarter-scale network.\n"
      "seed = " + std::to_string(gc.seed) + "\n"
      "out = out\n\n"
      "[paths]\ngt = gt.poses\nskeleton = h36m17.cfg\n\n"
      "[convert.sim_detector]\ninput = sim_detector.coco\nmap = coco_wholebody_body.map\n\n";
  auto list = [&](const std::string& name, const std::vector<std::string>& ids, std::size_t n) {
    cfg += "[split." + name + "]\n";
    for (std::size_t i = 0; i < std::min(n, ids.size()); ++i) cfg += ids[i] + "\n";
    cfg += "\n";
  };
  list("train_full", split.train, split.train.size());
  list("train_half", split.train, (split.train.size() + 1) / 2);
  list("train_quarter", split.train, (split.train.size() + 3) / 4);
  list("val", split.val, split.val.size());
  list("test", split.test, split.test.size());
  cfg +=
      "[prepare]\ninterpolation = 1\n\n"
      "[synth]\nmultiplier = 50\nval_multiplier = 5\nlambda = 0.01\nk = 3\ndistance = arc_radius\n\n"
      "[model]\nrepresentation = polar\nembedding_dim = 8\nencoder_hidden = 16\ndecoder_hidden = 64, 64\n\n"
      "[train]\nlearning_rate = 0.0001\nepochs = " + std::to_string(epochs) +
      "\nprojection_iters = 20\nbatch_size = 32\n\n"
      "[correct]\nlearning_rate = 0.0001\nmax_iters = 100\nstop_threshold = calibrate\ntrajectories = true\n";
  atomic_write(dir / "pipeline.cfg", cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polar-coordinate neural distance field pose prior"};
  app.require_subcommand(1);

  Shared shared;
  TrainFlags train_flags;
  DataFlags data_flags;
  CorrectFlags correct_flags;

  auto* convert = app.add_subcommand("convert", "Convert detector keypoint files to the 17-keypoint pose format");
  add_shared(convert, shared);
  std::vector<std::string> convert_inputs;
  std::string convert_map, convert_output;
  convert->add_option("inputs", convert_inputs, "Source files")->required()->check(CLI::ExistingFile);
  convert->add_option("--map", convert_map, "Format map file")->required()->check(CLI::ExistingFile);
  convert->add_option("--output", convert_output, "Output file (single input only)");

  auto* prepare = app.add_subcommand("prepare", "Normalize, split and augment ground-truth poses");
  add_shared(prepare, shared);
  add_data_flags(prepare, data_flags);
  auto* synth = app.add_subcommand("synth", "Build the error bank and generate labeled fake poses");
  add_shared(synth, shared);
  add_data_flags(synth, data_flags);
  synth->add_option("--distance", train_flags.distance, "Distance for fake labels");
  synth->add_option("--k", train_flags.k, "Nearest neighbors for fake labels");
  auto* train_cmd = app.add_subcommand("train", "Train the distance field");
  add_shared(train_cmd, shared);
  add_train_flags(train_cmd, train_flags);
  auto* correct_cmd = app.add_subcommand("correct", "Correct detections against a trained prior");
  add_shared(correct_cmd, shared);
  add_correct_flags(correct_cmd, correct_flags, true);

  auto* eval = app.add_subcommand("eval", "PCK tables, joint-wise curves and best-iterate analysis");
  add_shared(eval, shared);
  std::vector<std::string> eval_preds;
  std::string eval_gt, eval_traj;
  std::vector<std::string> eval_split;
  eval->add_option("--pred", eval_preds, "Prediction files as MODEL:METHOD=PATH or PATH");
  eval->add_option("--gt", eval_gt, "Ground-truth pose file");
  eval->add_option("--trajectories", eval_traj, "Trajectory directory for the first prediction");
  eval->add_option("--sequences", eval_split, "Restrict to these sequence ids");

  auto* pipeline = app.add_subcommand("pipeline", "convert, prepare, synth, train, correct and eval in one run");
  add_shared(pipeline, shared);
  add_data_flags(pipeline, data_flags);
  add_train_flags(pipeline, train_flags);
  add_correct_flags(pipeline, correct_flags, false);

  auto* fixture = app.add_subcommand("fixture", "Write the synthetic gait fixture and its pipeline config");
  add_shared(fixture, shared);
  GaitConfig gait;
  int fixture_epochs = 20;
  fixture->add_option("--sequences", gait.sequences, "Sequences")->check(CLI::PositiveNumber);
  fixture->add_option("--frames", gait.frames, "Frames per sequence")->check(CLI::PositiveNumber);
  fixture->add_option("--epochs", fixture_epochs, "Epochs written into the config")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (convert->parsed()) {
      const Skeleton skel = shared.config.empty() ? Skeleton::h36m17() : load_config(shared, false).skeleton;
      if (!convert_output.empty() && convert_inputs.size() != 1) {
        throw Error(ErrorKind::Config, "--output needs exactly one input");
      }
      const fs::path out_dir = shared.out.empty() ? fs::path("out") / "convert" : fs::path(shared.out);
      for (const auto& in : convert_inputs) {
        const fs::path target =
            convert_output.empty() ? out_dir / (fs::path(in).stem().string() + ".poses") : fs::path(convert_output);
        const auto s = convert_file(in, convert_map, skel, target);
        if (!shared.quiet) std::clog << "[polarndf] convert: " << in << " -> " << target << " (" << s.records << " records)\n";
      }
    } else if (prepare->parsed()) {
      auto cfg = load_config(shared, true);
      as_usage([&] {
        apply(cfg, data_flags);
        cfg.validate();
      });
      const auto s = run_prepare(cfg);
      for (const auto& [name, n] : s.poses) std::cout << name << "," << n << "\n";
    } else if (synth->parsed()) {
      auto cfg = load_config(shared, true);
      as_usage([&] {
        apply(cfg, data_flags);
        apply(cfg, train_flags, shared);
        cfg.validate();
      });
      const auto s = run_synth(cfg);
      std::cout << "error_bank," << s.bank_size << "\ntrain_fakes," << s.train_fakes << "\nval_fakes," << s.val_fakes
                << "\n";
    } else if (train_cmd->parsed()) {
      auto cfg = load_config(shared, true);
      as_usage([&] {
        apply(cfg, train_flags, shared);
        cfg.validate();
      });
      const auto r = run_train(cfg);
      std::cout << r.report.to_csv();
    } else if (correct_cmd->parsed()) {
      auto cfg = load_config(shared, true);
      as_usage([&] {
        apply(cfg, correct_flags);
        cfg.validate();
      });
      std::optional<fs::path> ckpt;
      if (correct_flags.checkpoint) ckpt = *correct_flags.checkpoint;
      const auto s = run_correct(cfg, ckpt, parse_inputs(correct_flags.inputs));
      for (const auto& [tag, path] : s.outputs) std::cout << tag << "," << path.string() << "\n";
    } else if (eval->parsed()) {
      if (eval_preds.empty()) {
        const auto r = run_eval(load_config(shared, true));
        std::cout << r.to_csv();
      } else {
        if (eval_gt.empty()) throw Error(ErrorKind::Config, "--gt is required with --pred");
        const Skeleton skel = shared.config.empty() ? Skeleton::h36m17() : load_config(shared, false).skeleton;
        std::vector<EvalInput> inputs;
        for (const auto& spec : eval_preds) {
          EvalInput in;
          const auto eq = spec.find('=');
          std::string label = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
          in.poses = eq == std::string::npos ? spec : spec.substr(eq + 1);
          const auto colon = label.find(':');
          in.model = label.substr(0, colon);
          in.method = colon == std::string::npos ? "pred" : label.substr(colon + 1);
          inputs.push_back(in);
        }
        if (!eval_traj.empty()) inputs.front().trajectories = eval_traj;
        const fs::path out_dir = shared.out.empty() ? fs::path("out") / "eval" : fs::path(shared.out);
        std::cout << run_eval(inputs, eval_gt, skel, eval_split, out_dir).to_csv();
      }
    } else if (pipeline->parsed()) {
      auto cfg = load_config(shared, true);
      as_usage([&] {
        apply(cfg, data_flags);
        apply(cfg, train_flags, shared);
        apply(cfg, correct_flags);
        cfg.validate();
      });
      std::cout << run_pipeline(cfg).to_csv();
    } else if (fixture->parsed()) {
      if (shared.seed) gait.seed = *shared.seed;
      const fs::path dir = shared.out.empty() ? fs::path("fixture") : fs::path(shared.out);
      write_fixture(dir, gait, fixture_epochs);
      if (!shared.quiet) std::clog << "[polarndf] fixture written to " << dir << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "polarndf: " << to_string(e.kind()) << ": " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Config:
        return kUsage;
      case ErrorKind::NonFinite:
        return kNumerical;
      default:
        return kData;
    }
  } catch (const std::exception& e) {
    std::cerr << "polarndf: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
