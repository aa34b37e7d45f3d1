#include "polarndf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include <json.hpp>

#include "polarndf/error.hpp"
#include "polarndf/format_map.hpp"
#include "polarndf/io.hpp"
#include "polarndf/kernels.hpp"
#include "polarndf/labeled.hpp"
#include "polarndf/metrics.hpp"
#include "polarndf/synthesis.hpp"
#include "polarndf/transforms.hpp"

namespace polarndf {

namespace fs = std::filesystem;

namespace {

void log(const PipelineConfig& cfg, const std::string& line) {
  if (cfg.verbose) std::clog << "[polarndf] " << line << '\n';
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::vector<int> parse_int_list(const std::string& text, std::string_view context) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) out.push_back(static_cast<int>(parse_int(part, context)));
  return out;
}

std::vector<double> parse_double_list(const std::string& text, std::string_view context) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part, context));
  return out;
}

using Key = std::pair<std::string, long long>;

std::vector<PoseRecord> filter_split(const std::vector<PoseRecord>& records, const std::vector<std::string>& ids) {
  if (ids.empty()) return records;
  const std::set<std::string> keep(ids.begin(), ids.end());
  std::vector<PoseRecord> out;
  for (const auto& r : records) {
    if (keep.count(r.sequence_id)) out.push_back(r);
  }
  return out;
}

std::map<Key, CartesianPose> index_records(const std::vector<PoseRecord>& records, const std::string& what) {
  std::map<Key, CartesianPose> out;
  for (const auto& r : records) {
    if (!out.emplace(Key{r.sequence_id, r.frame_index}, r.pose).second) {
      throw Error(ErrorKind::AlignmentError, what + ": duplicate pose for " + r.sequence_id + " frame " +
                                                 std::to_string(r.frame_index));
    }
  }
  return out;
}

std::string file_safe(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
  }
  return s;
}

fs::path trajectory_path(const fs::path& dir, const std::string& sequence_id, long long frame) {
  return dir / (file_safe(sequence_id) + "__" + std::to_string(frame) + ".csv");
}

std::vector<PolarPose> polar_of(const std::vector<PoseRecord>& records, const Skeleton& skel) {
  std::vector<PolarPose> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(to_polar(r.pose, skel));
  return out;
}

// A split's records from the gt file; every listed sequence must be present.
std::vector<PoseRecord> split_records(const std::vector<PoseRecord>& all, const std::vector<std::string>& ids,
                                      const std::string& name) {
  auto out = filter_split(all, ids);
  std::set<std::string> seen;
  for (const auto& r : out) seen.insert(r.sequence_id);
  for (const auto& id : ids) {
    if (!seen.count(id)) {
      throw Error(ErrorKind::AlignmentError, "split '" + name + "': sequence '" + id + "' not in the ground truth");
    }
  }
  return out;
}

std::vector<PoseRecord> normalized(std::vector<PoseRecord> records, const Skeleton& skel) {
  for (auto& r : records) r.pose = normalize(r.pose, skel);
  return records;
}

}  // namespace

// ---------------------------------------------------------------- config

const std::vector<std::string>& PipelineConfig::split(const std::string& name) const {
  static const std::vector<std::string> empty;
  auto it = splits.find(name);
  return it == splits.end() ? empty : it->second;
}

NdfArchitecture PipelineConfig::architecture() const {
  auto arch = NdfArchitecture::for_skeleton(skeleton, representation);
  arch.embedding_dim = embedding_dim;
  arch.encoder_hidden = encoder_hidden;
  arch.decoder_hidden = decoder_hidden;
  return arch;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
  if (workers < 0) fail("workers must be >= 0");
  if (interpolation < 1) fail("prepare.interpolation must be >= 1");
  if (multiplier < 1 || val_multiplier < 0) fail("synth multipliers must be positive");
  if (!(lambda >= 0.0)) fail("synth.lambda must be >= 0");
  if (train.k < 2) fail("synth.k must be >= 2");
  if (embedding_dim < 1 || encoder_hidden < 1) fail("model widths must be positive");
  for (int w : decoder_hidden) {
    if (w < 1) fail("model.decoder_hidden widths must be positive");
  }
  if (!(train.learning_rate > 0.0)) fail("train.learning_rate must be positive");
  if (train.epochs < 0) fail("train.epochs must be >= 0");
  if (train.projection_iters < 0) fail("train.projection_iters must be >= 0");
  if (!(train.projection_threshold >= 0.0)) fail("train.projection_threshold must be >= 0");
  if (!(train.projection_percentile >= 0.0 && train.projection_percentile <= 100.0)) {
    fail("train.projection_percentile must lie in [0, 100]");
  }
  if (train.batch_size < 1) fail("train.batch_size must be >= 1");
  if (!(correction.learning_rate > 0.0)) fail("correct.learning_rate must be positive");
  if (correction.max_iters < 1) fail("correct.max_iters must be >= 1");
  if (!(correction.stop_threshold >= 0.0)) fail("correct.stop_threshold must be >= 0");
  for (double p : stop_percentiles) {
    if (!(p >= 0.0 && p <= 100.0)) fail("correct.stop_percentiles must lie in [0, 100]");
  }
  if (calibrate_stop && stop_percentiles.empty()) fail("correct.stop_percentiles is empty");

  for (const auto& [name, ids] : splits) {
    if (std::find(kSplitNames.begin(), kSplitNames.end(), name) == kSplitNames.end()) {
      fail("unknown split '" + name + "'");
    }
    std::set<std::string> uniq(ids.begin(), ids.end());
    if (uniq.size() != ids.size()) fail("split '" + name + "' lists a sequence twice");
  }
  // train_full, val and test are disjoint; the smaller training splits nest.
  const std::vector<std::string> disjoint = {"train_full", "val", "test"};
  for (std::size_t a = 0; a < disjoint.size(); ++a) {
    for (std::size_t b = a + 1; b < disjoint.size(); ++b) {
      for (const auto& id : split(disjoint[a])) {
        const auto& other = split(disjoint[b]);
        if (std::find(other.begin(), other.end(), id) != other.end()) {
          fail("splits '" + disjoint[a] + "' and '" + disjoint[b] + "' overlap on '" + id + "'");
        }
      }
    }
  }
  auto nested = [&](const std::string& inner, const std::string& outer) {
    for (const auto& id : split(inner)) {
      const auto& o = split(outer);
      if (std::find(o.begin(), o.end(), id) == o.end()) {
        fail("split '" + inner + "' sequence '" + id + "' is not in '" + outer + "'");
      }
    }
  };
  nested("train_half", "train_full");
  nested("train_quarter", "train_half");
  if (train_split != "train_full" && train_split != "train_half" && train_split != "train_quarter") {
    fail("train.split must be one of train_full, train_half, train_quarter");
  }
  if (std::find(kSplitNames.begin(), kSplitNames.end(), correct_split) == kSplitNames.end()) {
    fail("correct.split '" + correct_split + "' is not a split name");
  }
  if (train.weights.size() != skeleton.num_connections()) fail("distance weights do not match the skeleton");
}

PipelineConfig PipelineConfig::from_document(const ConfigDocument& doc, const fs::path& base_dir) {
  PipelineConfig c;
  try {
    const auto& top = doc.section("");
    c.seed = static_cast<std::uint64_t>(top.get_int("seed", 0));
    c.workers = static_cast<int>(top.get_int("workers", 0));
    c.out = resolve(base_dir, top.get_string("out", "out"));

    const auto& paths = doc.section("paths");
    if (auto gt = paths.get("gt")) c.gt = resolve(base_dir, *gt);
    if (auto sk = paths.get("skeleton")) c.skeleton = Skeleton::load(resolve(base_dir, *sk));

    for (const auto& [tag, path] : doc.section("detections").entries()) c.detections[tag] = resolve(base_dir, path);
    for (const auto& section : doc.sections()) {
      const std::string prefix = "convert.";
      if (section.name().rfind(prefix, 0) == 0) {
        ConvertJob job;
        job.tag = section.name().substr(prefix.size());
        job.input = resolve(base_dir, section.require("input"));
        job.map = resolve(base_dir, section.require("map"));
        job.output = section.has("output") ? resolve(base_dir, section.require("output"))
                                           : c.out / "convert" / (job.tag + ".poses");
        if (!c.detections.count(job.tag)) c.detections[job.tag] = job.output;
        c.convert.push_back(job);
      }
      const std::string split_prefix = "split.";
      if (section.name().rfind(split_prefix, 0) == 0) {
        c.splits[section.name().substr(split_prefix.size())] = section.items();
      }
    }

    c.interpolation = static_cast<int>(doc.section("prepare").get_int("interpolation", 5));

    const auto& synth = doc.section("synth");
    c.multiplier = static_cast<int>(synth.get_int("multiplier", 50));
    c.val_multiplier = static_cast<int>(synth.get_int("val_multiplier", c.multiplier));
    c.lambda = synth.get_double("lambda", 0.01);
    c.train.k = static_cast<std::size_t>(synth.get_int("k", 3));
    c.train.kind = parse_distance_kind(synth.get_string("distance", "arc_radius"));
    if (auto s = synth.get("bank_sources")) c.bank_sources = polarndf::split(*s, ',');

    const auto& model = doc.section("model");
    c.representation = parse_representation(model.get_string("representation", "polar"));
    c.embedding_dim = static_cast<int>(model.get_int("embedding_dim", 8));
    c.encoder_hidden = static_cast<int>(model.get_int("encoder_hidden", 64));
    if (auto d = model.get("decoder_hidden")) c.decoder_hidden = parse_int_list(*d, "model.decoder_hidden");

    const auto& tr = doc.section("train");
    auto& t = c.train;
    t.learning_rate = tr.get_double("learning_rate", t.learning_rate);
    t.batch_projection = tr.get_bool("batch_projection", t.batch_projection);
    t.epochs = static_cast<int>(tr.get_int("epochs", t.batch_projection ? 20 : 400));
    t.projection_iters = static_cast<int>(tr.get_int("projection_iters", t.projection_iters));
    t.projection_threshold = tr.get_double("projection_threshold", t.projection_threshold);
    t.projection_percentile = tr.get_double("projection_percentile", t.projection_percentile);
    t.batch_size = static_cast<std::size_t>(tr.get_int("batch_size", static_cast<long long>(t.batch_size)));
    t.loss.real = tr.get_double("weight_real", t.loss.real);
    t.loss.fake = tr.get_double("weight_fake", t.loss.fake);
    t.loss.grad = tr.get_double("weight_grad", t.loss.grad);
    t.loss.grad_loss = tr.get_bool("grad_loss", t.loss.grad_loss);
    t.loss.squared = tr.get_bool("squared_loss", t.loss.squared);
    t.use_projected_fakes = tr.get_bool("use_projected_fakes", t.use_projected_fakes);
    t.rebalance = tr.get_bool("rebalance", t.rebalance);
    t.beta1 = tr.get_double("beta1", t.beta1);
    t.beta2 = tr.get_double("beta2", t.beta2);
    t.epsilon = tr.get_double("epsilon", t.epsilon);
    c.train_split = tr.get_string("split", c.train_split);

    const auto& cr = doc.section("correct");
    c.correction.learning_rate = cr.get_double("learning_rate", c.correction.learning_rate);
    c.correction.max_iters = static_cast<int>(cr.get_int("max_iters", c.correction.max_iters));
    const std::string stop = cr.get_string("stop_threshold", "calibrate");
    if (stop == "calibrate") {
      c.calibrate_stop = true;
    } else {
      c.calibrate_stop = false;
      c.correction.stop_threshold = parse_double(stop, "correct.stop_threshold");
    }
    if (auto p = cr.get("stop_percentiles")) c.stop_percentiles = parse_double_list(*p, "correct.stop_percentiles");
    c.trajectories = cr.get_bool("trajectories", false);
    c.model_id = cr.get_string("model_id", "");
    c.correct_split = cr.get_string("split", c.correct_split);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    throw Error(ErrorKind::Config, e.what());
  }
  c.train.weights = DistanceWeights::from(c.skeleton);
  c.train.seed = c.seed;
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  ConfigDocument doc;
  try {
    doc = ConfigDocument::load(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return from_document(doc, path.parent_path());
}

// ---------------------------------------------------------------- convert

ConvertSummary convert_file(const fs::path& input, const fs::path& map_path, const Skeleton& skel,
                            const fs::path& output) {
  FormatMap map;
  try {
    map = FormatMap::load(map_path, skel);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  const auto source = parse_source_records(read_file(input), map.source_width, input.string());
  const auto records = convert_records(source, map);
  write_pose_file(output, records);
  return {records.size()};
}

// ---------------------------------------------------------------- prepare

PrepareSummary run_prepare(const PipelineConfig& cfg) {
  if (cfg.gt.empty()) throw Error(ErrorKind::Config, "paths.gt is not set");
  if (cfg.split(cfg.train_split).empty()) throw Error(ErrorKind::Config, "split '" + cfg.train_split + "' is empty");
  const Skeleton& skel = cfg.skeleton;
  const auto all = read_pose_file(cfg.gt);
  const fs::path dir = cfg.dir("prepare");

  PrepareSummary summary;
  ConfigDocument manifest;
  manifest.mutable_section("").set("skeleton", skel.name());
  manifest.mutable_section("").set("interpolation", std::to_string(cfg.interpolation));
  for (const auto& name : kSplitNames) {
    const auto& ids = cfg.split(name);
    if (ids.empty()) continue;
    const auto records = normalized(split_records(all, ids, name), skel);
    const auto sequences = group_sequences(records);
    std::vector<LabeledPose> samples;
    if (name == "test") {
      for (const auto& r : records) samples.push_back({to_polar(r.pose, skel), 0.0, true});
    } else {
      samples = augment_reals(sequences, skel, cfg.interpolation);
    }
    write_pose_file(dir / (name + ".poses"), records);
    write_labeled_file(dir / (name + ".labeled"), samples, skel.num_connections());
    summary.poses[name] = records.size();
    summary.sequences[name] = sequences.size();
    summary.samples[name] = samples.size();
    manifest.mutable_section("poses").set(name, std::to_string(records.size()));
    manifest.mutable_section("sequences").set(name, std::to_string(sequences.size()));
    manifest.mutable_section("samples").set(name, std::to_string(samples.size()));
    log(cfg, "prepare: " + name + " " + std::to_string(sequences.size()) + " sequences, " +
                 std::to_string(records.size()) + " poses, " + std::to_string(samples.size()) + " real samples");
  }
  atomic_write(dir / "manifest.txt", manifest.to_string());
  return summary;
}

// ---------------------------------------------------------------- synth

namespace {

ErrorBank bank_for_split(const PipelineConfig& cfg, const std::vector<PoseRecord>& gt_all,
                         const std::vector<std::string>& ids) {
  std::vector<std::string> tags = cfg.bank_sources;
  if (tags.empty()) {
    for (const auto& [tag, path] : cfg.detections) tags.push_back(tag);
  }
  ErrorBank bank;
  bank.num_connections = cfg.skeleton.num_connections();
  const auto gts = filter_split(gt_all, ids);
  for (const auto& tag : tags) {
    auto it = cfg.detections.find(tag);
    if (it == cfg.detections.end()) throw Error(ErrorKind::Config, "synth.bank_sources: unknown detection tag '" + tag + "'");
    const auto dets = filter_split(read_pose_file(it->second), ids);
    auto part = build_error_bank(dets, gts, cfg.skeleton);
    for (auto& e : part.errors) bank.errors.push_back(std::move(e));
    for (auto& s : part.sources) bank.sources.push_back(std::move(s));
  }
  if (bank.empty()) throw Error(ErrorKind::EmptyBank, "no detections to build the error bank from");
  return bank;
}

}  // namespace

SynthSummary run_synth(const PipelineConfig& cfg) {
  const Skeleton& skel = cfg.skeleton;
  const fs::path prep = cfg.dir("prepare");
  const fs::path dir = cfg.dir("synth");
  const auto gt_all = read_pose_file(cfg.gt);
  const ErrorBank bank = bank_for_split(cfg, gt_all, cfg.split(cfg.train_split));

  SynthesisConfig sc;
  sc.multiplier = cfg.multiplier;
  sc.lambda = cfg.lambda;
  sc.seed = cfg.seed;
  sc.kind = cfg.train.kind;
  sc.k = cfg.train.k;
  sc.weights = cfg.train.weights;

  SynthSummary summary;
  summary.bank_size = bank.size();
  {
    const auto gts = polar_of(read_pose_file(prep / (cfg.train_split + ".poses")), skel);
    const auto labeling = poses_of(read_labeled_file(prep / (cfg.train_split + ".labeled")));
    const auto fakes = kernels::omp::generate_fakes(gts, bank, sc, labeling, skel);
    write_labeled_file(dir / "train_fakes.labeled", fakes, skel.num_connections());
    summary.train_fakes = fakes.size();
  }
  if (!cfg.split("val").empty() && cfg.val_multiplier > 0) {
    sc.multiplier = cfg.val_multiplier;
    sc.seed = cfg.seed + 1;
    const auto gts = polar_of(read_pose_file(prep / "val.poses"), skel);
    const auto labeling = poses_of(read_labeled_file(prep / "val.labeled"));
    const auto fakes = kernels::omp::generate_fakes(gts, bank, sc, labeling, skel);
    write_labeled_file(dir / "val_fakes.labeled", fakes, skel.num_connections());
    summary.val_fakes = fakes.size();
  }
  ConfigDocument doc;
  doc.mutable_section("").set("error_bank", std::to_string(summary.bank_size));
  doc.mutable_section("").set("train_fakes", std::to_string(summary.train_fakes));
  doc.mutable_section("").set("val_fakes", std::to_string(summary.val_fakes));
  atomic_write(dir / "summary.txt", doc.to_string());
  log(cfg, "synth: error bank " + std::to_string(summary.bank_size) + ", " + std::to_string(summary.train_fakes) +
               " train fakes, " + std::to_string(summary.val_fakes) + " val fakes");
  return summary;
}

// ---------------------------------------------------------------- train

TrainResult run_train(const PipelineConfig& cfg) {
  const Skeleton& skel = cfg.skeleton;
  const fs::path prep = cfg.dir("prepare");
  const fs::path synth = cfg.dir("synth");
  const fs::path dir = cfg.dir("train");

  auto train_data = read_labeled_file(prep / (cfg.train_split + ".labeled"));
  const auto real_bank = poses_of(train_data);
  for (auto& f : read_labeled_file(synth / "train_fakes.labeled")) train_data.push_back(std::move(f));
  std::vector<LabeledPose> val_data;
  if (fs::exists(prep / "val.labeled")) val_data = read_labeled_file(prep / "val.labeled");
  if (fs::exists(synth / "val_fakes.labeled")) {
    for (auto& f : read_labeled_file(synth / "val_fakes.labeled")) val_data.push_back(std::move(f));
  }
  for (const auto& s : train_data) {
    if (s.pose.size() != skel.num_connections()) {
      throw Error(ErrorKind::SkeletonMismatch, "training data does not match the skeleton's connection count");
    }
  }

  NdfModel model(cfg.architecture(), cfg.seed);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  log(cfg, "train: " + ablation_label(cfg.representation, tc.kind, tc.batch_projection, tc.loss.grad_loss) + ", " +
               std::to_string(train_data.size()) + " samples, " + std::to_string(model.num_parameters()) +
               " parameters");
  auto result = train(std::move(model), train_data, val_data, real_bank, tc, [&](const EpochRow& row) {
    log(cfg, "epoch " + std::to_string(row.epoch) + " loss " + format_double(row.loss_total) + " val real/fake " +
                 format_double(row.val_real_f) + "/" + format_double(row.val_fake_f));
  });
  checkpoint_save(result.best, dir / "model.ckpt");
  checkpoint_save(result.last, dir / "last.ckpt");
  result.report.checkpoint_paths = {(dir / "model.ckpt").string(), (dir / "last.ckpt").string()};
  result.report.write(dir / "report.csv");
  return result;
}

// ---------------------------------------------------------------- correct

void write_trajectory(const fs::path& path, const std::vector<TrajectoryPoint>& trajectory) {
  std::string out = "iteration,distance";
  for (std::size_t k = 0; k < kNumKeypoints; ++k) out += ",x" + std::to_string(k) + ",y" + std::to_string(k);
  out += '\n';
  for (const auto& p : trajectory) {
    out += std::to_string(p.iteration) + "," + format_double(p.distance);
    for (const auto& kp : p.pose.keypoints) out += "," + format_double(kp.x) + "," + format_double(kp.y);
    out += '\n';
  }
  atomic_write(path, out);
}

std::vector<TrajectoryPoint> read_trajectory(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<TrajectoryPoint> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    const auto fields = split(line, ',');
    if (fields.size() != 2 + 2 * kNumKeypoints) throw Error(ErrorKind::Parse, ctx + ": expected 36 fields");
    TrajectoryPoint p;
    p.iteration = static_cast<int>(parse_int(fields[0], ctx));
    p.distance = parse_double(fields[1], ctx);
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      p.pose.set(k, {parse_double(fields[2 + 2 * k], ctx), parse_double(fields[3 + 2 * k], ctx)});
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

double calibrated_threshold(const PipelineConfig& cfg, const NdfModel& model) {
  const auto& val_ids = cfg.split("val");
  if (val_ids.empty()) throw Error(ErrorKind::Config, "stop-threshold calibration needs a val split");
  const Skeleton& skel = cfg.skeleton;
  std::vector<PolarPose> val_reals;
  for (const auto& s : read_labeled_file(cfg.dir("prepare") / "val.labeled")) {
    if (s.is_real) val_reals.push_back(s.pose);
  }
  const auto gts = index_records(filter_split(read_pose_file(cfg.gt), val_ids), "ground truth");
  std::vector<CartesianPose> dets, aligned;
  for (const auto& [tag, path] : cfg.detections) {
    for (const auto& r : filter_split(read_pose_file(path), val_ids)) {
      auto it = gts.find({r.sequence_id, r.frame_index});
      if (it == gts.end()) {
        throw Error(ErrorKind::AlignmentError, tag + ": no ground truth for " + r.sequence_id + " frame " +
                                                   std::to_string(r.frame_index));
      }
      // The ground truth goes through the detection's own transform, which
      // leaves PCK unchanged.
      const auto t = normalization_for(r.pose, skel);
      dets.push_back(t.apply(r.pose));
      aligned.push_back(t.apply(it->second));
    }
  }
  const auto candidates = stop_threshold_candidates(model, val_reals, cfg.stop_percentiles);
  return calibrate_stop_threshold(model, dets, aligned, skel, candidates, cfg.correction);
}

}  // namespace

CorrectSummary run_correct(const PipelineConfig& cfg, std::optional<fs::path> checkpoint,
                           std::map<std::string, fs::path> inputs) {
  const Skeleton& skel = cfg.skeleton;
  const fs::path ckpt = checkpoint.value_or(cfg.dir("train") / "model.ckpt");
  const NdfModel model = checkpoint_load(ckpt, skel.hash());
  if (inputs.empty()) inputs = cfg.detections;
  if (inputs.empty()) throw Error(ErrorKind::Config, "no detection files to correct");
  const fs::path dir = cfg.dir("correct");

  CorrectSummary summary;
  summary.model_id = cfg.model_id.empty() ? ckpt.stem().string() : cfg.model_id;
  CorrectionConfig cc = cfg.correction;
  if (cfg.calibrate_stop) cc.stop_threshold = calibrated_threshold(cfg, model);
  cc.record_trajectory = cfg.trajectories;
  summary.stop_threshold = cc.stop_threshold;
  log(cfg, "correct: model " + summary.model_id + ", stop threshold " + format_double(cc.stop_threshold));

  for (const auto& [tag, path] : inputs) {
    const auto records = filter_split(read_pose_file(path), cfg.split(cfg.correct_split));
    std::vector<NormalizationTransform> transforms;
    std::vector<CartesianPose> poses;
    for (const auto& r : records) {
      transforms.push_back(normalization_for(r.pose, skel));
      poses.push_back(transforms.back().apply(r.pose));
    }
    const auto results = kernels::omp::correct_batch(model, poses, skel, cc);
    std::vector<PoseRecord> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
      PoseRecord rec = records[i];
      rec.source = "corrected:" + summary.model_id;
      rec.pose = transforms[i].invert(results[i].corrected);
      out.push_back(std::move(rec));
      if (cfg.trajectories) {
        auto traj = results[i].trajectory;
        for (auto& p : traj) p.pose = transforms[i].invert(p.pose);
        write_trajectory(trajectory_path(dir / "trajectories" / file_safe(tag), records[i].sequence_id,
                                         records[i].frame_index),
                         traj);
      }
    }
    const fs::path file = dir / (file_safe(tag) + ".corrected.poses");
    write_pose_file(file, out);
    summary.outputs[tag] = file;
    summary.poses += out.size();
    log(cfg, "correct: " + tag + " " + std::to_string(out.size()) + " poses");
  }
  ConfigDocument doc;
  doc.mutable_section("").set("model_id", summary.model_id);
  doc.mutable_section("").set("checkpoint", ckpt.string());
  doc.mutable_section("").set("stop_threshold", format_double(summary.stop_threshold));
  atomic_write(dir / "summary.txt", doc.to_string());
  return summary;
}

// ---------------------------------------------------------------- eval

namespace {

std::string pck_header(const std::string& lead) {
  std::string h = lead;
  for (double t : kPckThresholds) h += ",PCK@" + format_double(t);
  return h;
}

std::string rows_csv(const std::vector<EvalRow>& rows) {
  std::string out = pck_header("model,method") + ",poses\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.method;
    for (double v : r.pck) out += "," + format_percent(v);
    out += "," + std::to_string(r.poses) + "\n";
  }
  return out;
}

nlohmann::json rows_json(const std::vector<EvalRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json pck;
    for (std::size_t i = 0; i < kPckThresholds.size(); ++i) {
      pck[format_double(kPckThresholds[i])] = std::round(10000.0 * r.pck[i]) / 100.0;
    }
    arr.push_back({{"model", r.model}, {"method", r.method}, {"poses", r.poses}, {"pck", pck}});
  }
  return arr;
}

}  // namespace

std::string EvalReport::to_csv() const { return rows_csv(rows); }
std::string EvalReport::best_iterate_csv() const { return rows_csv(best_iterate); }

EvalReport run_eval(const std::vector<EvalInput>& inputs, const fs::path& gt, const Skeleton& skel,
                    const std::vector<std::string>& split_ids, const fs::path& out_dir) {
  const auto gts = index_records(filter_split(read_pose_file(gt), split_ids), "ground truth");
  EvalReport report;
  for (const auto& in : inputs) {
    const auto preds = filter_split(read_pose_file(in.poses), split_ids);
    std::vector<CartesianPose> pred_poses, gt_poses;
    for (const auto& r : preds) {
      auto it = gts.find({r.sequence_id, r.frame_index});
      if (it == gts.end()) {
        throw Error(ErrorKind::AlignmentError, in.poses.string() + ": no ground truth for " + r.sequence_id +
                                                   " frame " + std::to_string(r.frame_index));
      }
      pred_poses.push_back(r.pose);
      gt_poses.push_back(it->second);
    }
    EvalRow row{in.model, in.method, {}, pred_poses.size()};
    for (double t : kPckThresholds) row.pck.push_back(pred_poses.empty() ? 0.0 : mean_pck(pred_poses, gt_poses, skel, t));
    report.rows.push_back(row);

    if (!in.trajectories || preds.empty()) continue;
    std::vector<CorrectionResult> loaded;
    std::size_t length = 0;
    for (const auto& r : preds) {
      CorrectionResult cr;
      cr.corrected = r.pose;
      cr.trajectory = read_trajectory(trajectory_path(*in.trajectories, r.sequence_id, r.frame_index));
      length = std::max(length, cr.trajectory.size());
      loaded.push_back(std::move(cr));
    }
    const auto iterates = padded_trajectories(loaded, length);
    const auto curves = joint_wise_pck_curves(iterates, gt_poses, skel, kPckThresholds);
    std::string csv = pck_header("joint,iteration") + "\n";
    for (std::size_t j = 0; j < curves.size(); ++j) {
      for (std::size_t it = 0; it < curves[j].size(); ++it) {
        csv += skel.joint_names()[j] + "," + std::to_string(it);
        for (double v : curves[j][it]) csv += "," + format_percent(v);
        csv += "\n";
      }
    }
    atomic_write(out_dir / ("joint_curves_" + file_safe(in.model) + ".csv"), csv);

    EvalRow base{in.model, "baseline", {}, preds.size()};
    EvalRow best{in.model, "opt. converged", {}, preds.size()};
    for (double t : kPckThresholds) {
      const auto a = best_iterate_analysis(iterates, gt_poses, skel, t);
      base.pck.push_back(a.final_mean);
      best.pck.push_back(a.best_mean);
    }
    report.best_iterate.push_back(base);
    report.best_iterate.push_back(best);
  }
  atomic_write(out_dir / "pck.csv", report.to_csv());
  nlohmann::json summary{{"thresholds", kPckThresholds}, {"rows", rows_json(report.rows)}};
  if (!report.best_iterate.empty()) {
    atomic_write(out_dir / "best_iterate.csv", report.best_iterate_csv());
    summary["best_iterate"] = rows_json(report.best_iterate);
  }
  atomic_write(out_dir / "summary.json", summary.dump(2) + "\n");
  return report;
}

EvalReport run_eval(const PipelineConfig& cfg) {
  std::vector<EvalInput> inputs;
  const fs::path corrected = cfg.dir("correct");
  for (const auto& [tag, path] : cfg.detections) {
    inputs.push_back({tag, "raw", path, {}});
    const fs::path file = corrected / (file_safe(tag) + ".corrected.poses");
    if (fs::exists(file)) {
      const fs::path traj = corrected / "trajectories" / file_safe(tag);
      inputs.push_back({tag, "corrected", file, fs::exists(traj) ? std::optional<fs::path>(traj) : std::nullopt});
    }
  }
  auto report = run_eval(inputs, cfg.gt, cfg.skeleton, cfg.split(cfg.correct_split), cfg.dir("eval"));
  for (const auto& r : report.rows) {
    log(cfg, "eval: " + r.model + " " + r.method + " PCK@0.1 " + format_percent(r.pck[1]));
  }
  return report;
}

EvalReport run_pipeline(const PipelineConfig& cfg) {
  for (const auto& job : cfg.convert) {
    const auto s = convert_file(job.input, job.map, cfg.skeleton, job.output);
    log(cfg, "convert: " + job.tag + " " + std::to_string(s.records) + " records");
  }
  run_prepare(cfg);
  run_synth(cfg);
  run_train(cfg);
  run_correct(cfg);
  return run_eval(cfg);
}

}  // namespace polarndf
