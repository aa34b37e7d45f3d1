#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "helpers.hpp"
#include "polarndf/error.hpp"
#include "polarndf/format_map.hpp"
#include "polarndf/io.hpp"
#include "polarndf/pipeline.hpp"

namespace fs = std::filesystem;
using namespace polarndf;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(POLARNDF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small fixture written by the CLI, shared by the tests below.
const fs::path& fixture_dir() {
  static const fs::path dir = [] {
    auto d = testutil::scratch("fixture");
    REQUIRE(run_cli("fixture --out " + d.string() + " --sequences 10 --frames 12 --epochs 2") == 0);
    return d;
  }();
  return dir;
}

PipelineConfig small_config(const fs::path& out) {
  auto cfg = PipelineConfig::load(fixture_dir() / "pipeline.cfg");
  cfg.out = out;
  cfg.verbose = false;
  cfg.multiplier = 4;
  cfg.val_multiplier = 2;
  cfg.encoder_hidden = 4;
  cfg.decoder_hidden = {8};
  cfg.train.epochs = 2;
  cfg.train.projection_iters = 3;
  cfg.train.batch_size = 64;
  cfg.correction.max_iters = 5;
  cfg.validate();
  return cfg;
}

std::string base_config_text() {
  return "[paths]\ngt = gt.poses\n[detections]\nd = d.poses\n"
         "[split.train_full]\na\nb\n[split.train_half]\na\n[split.train_quarter]\na\n"
         "[split.val]\nc\n[split.test]\nd\n";
}

}  // namespace

TEST_CASE("config validation rejects overlapping or inconsistent splits") {
  const fs::path base = "/tmp";
  CHECK_NOTHROW(PipelineConfig::from_document(ConfigDocument::parse(base_config_text()), base));
  auto kind = [&](const std::string& text) {
    try {
      PipelineConfig::from_document(ConfigDocument::parse(text), base);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  std::string overlap = base_config_text();
  overlap.replace(overlap.find("[split.test]\nd"), 14, "[split.test]\nb");
  CHECK(kind(overlap) == ErrorKind::Config);
  std::string not_subset = base_config_text();
  not_subset.replace(not_subset.find("[split.train_half]\na"), 20, "[split.train_half]\nz");
  CHECK(kind(not_subset) == ErrorKind::Config);
  CHECK(kind(base_config_text() + "[train]\nlearning_rate = -1\n") == ErrorKind::Config);
  CHECK(kind(base_config_text() + "[synth]\ndistance = manhattan\n") == ErrorKind::Config);
}

TEST_CASE("converting the fixture's COCO file reproduces its detections") {
  const auto& dir = fixture_dir();
  const auto skel = Skeleton::h36m17();
  const auto out = testutil::scratch("convert") / "det.poses";
  const auto summary = convert_file(dir / "sim_detector.coco", dir / "coco_wholebody_body.map", skel, out);
  const auto got = read_pose_file(out);
  const auto expect = read_pose_file(dir / "sim_detector.poses");
  REQUIRE(summary.records == expect.size());
  REQUIRE(got.size() == expect.size());
  // Directly mapped joints are copied; pelvis, spine and thorax are means.
  auto j = [&](const char* n) { return static_cast<std::size_t>(skel.joint_index(n)); };
  double worst = 0.0, worst_mean = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].sequence_id == expect[i].sequence_id);
    CHECK(got[i].frame_index == expect[i].frame_index);
    for (const char* n : {"RHip", "RKnee", "RAnkle", "LHip", "LKnee", "LAnkle", "Nose", "Head", "LShoulder", "LElbow",
                          "LWrist", "RShoulder", "RElbow", "RWrist"}) {
      worst = std::max(worst, (got[i].pose.at(j(n)) - expect[i].pose.at(j(n))).norm());
    }
    const auto& e = expect[i].pose;
    const Vec2 spine = 0.25 * (e.at(j("LShoulder")) + e.at(j("RShoulder")) + e.at(j("LHip")) + e.at(j("RHip")));
    worst_mean = std::max(worst_mean, (got[i].pose.at(j("Spine")) - spine).norm());
    worst_mean = std::max(worst_mean, (got[i].pose.at(j("Hip")) - 0.5 * (e.at(j("LHip")) + e.at(j("RHip")))).norm());
  }
  CHECK(worst < 1e-9);
  CHECK(worst_mean < 1e-9);
}

TEST_CASE("pipeline on the small fixture writes every artifact and is deterministic") {
  const auto out1 = testutil::scratch("pipe1"), out2 = testutil::scratch("pipe2");
  const auto report = run_pipeline(small_config(out1));
  run_pipeline(small_config(out2));
  for (const char* f : {"prepare/manifest.txt", "prepare/train_full.labeled", "synth/train_fakes.labeled",
                        "synth/val_fakes.labeled", "train/model.ckpt", "train/report.csv",
                        "correct/sim_detector.corrected.poses", "eval/pck.csv", "eval/summary.json",
                        "eval/best_iterate.csv"}) {
    CHECK_MESSAGE(fs::exists(out1 / f), f);
  }
  CHECK(read_file(out1 / "eval/pck.csv") == read_file(out2 / "eval/pck.csv"));
  auto rows_of = [](const std::string& csv) {
    std::string kept, line;
    std::istringstream in(csv);
    while (std::getline(in, line)) {
      if (line.rfind("# checkpoint:", 0) != 0) kept += line + "\n";
    }
    return kept;
  };
  CHECK(rows_of(read_file(out1 / "train/report.csv")) == rows_of(read_file(out2 / "train/report.csv")));
  const auto pck = read_file(out1 / "eval/pck.csv");
  CHECK(pck.rfind("model,method,PCK@0.05,PCK@0.1,PCK@0.2,PCK@0.5,poses\n", 0) == 0);
  REQUIRE(report.rows.size() == 2);
  for (const auto& corrected : read_pose_file(out1 / "correct/sim_detector.corrected.poses")) {
    CHECK(corrected.source.rfind("corrected:", 0) == 0);
  }
  CHECK(fs::exists(out1 / "correct/trajectories/sim_detector"));
}

TEST_CASE("eval of ground truth against itself is 100 percent") {
  const auto& dir = fixture_dir();
  const auto out = testutil::scratch("eval_self");
  const auto r = run_eval({{"gt", "raw", dir / "gt.poses", std::nullopt}}, dir / "gt.poses", Skeleton::h36m17(), {}, out);
  REQUIRE(r.rows.size() == 1);
  for (double v : r.rows[0].pck) CHECK(v == 1.0);
  CHECK(read_file(out / "pck.csv").find("gt,raw,100.00,100.00,100.00,100.00,") != std::string::npos);
}

TEST_CASE("trajectory files round trip") {
  const auto path = testutil::scratch("traj") / "t.csv";
  std::vector<TrajectoryPoint> t(2);
  t[0].distance = 0.5;
  t[1].iteration = 1;
  t[1].distance = 0.25;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) t[1].pose.set(j, {1.0 / 3.0, -static_cast<double>(j)});
  write_trajectory(path, t);
  const auto back = read_trajectory(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].pose.at(5) == t[1].pose.at(5));
  CHECK(back[1].distance == 0.25);
}

TEST_CASE("cli exit codes") {
  const auto& dir = fixture_dir();
  const auto out = testutil::scratch("cli");
  const std::string cfg = (dir / "pipeline.cfg").string();
  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("prepare --config " + cfg + " --out " + out.string() + " --lr 0") == 1);
  CHECK(run_cli("train --config " + cfg + " --out " + out.string() + " --lr -1") == 1);
  atomic_write(out / "broken.cfg", "[split.val]\na\n[split.test]\na\n");
  CHECK(run_cli("prepare --config " + (out / "broken.cfg").string()) == 1);
  // training before synth: missing data files
  CHECK(run_cli("train --config " + cfg + " --out " + (out / "empty").string()) == 2);
  atomic_write(out / "bad.poses", "x,0,gt,1,2,3\n");
  CHECK(run_cli("eval --config " + cfg + " --out " + out.string() + " --gt " + (out / "bad.poses").string() +
                " --pred a:raw=" + (dir / "gt.poses").string()) == 2);

  // A model with a NaN weight makes correction non-finite.
  auto arch = NdfArchitecture::for_skeleton(Skeleton::h36m17());
  arch.embedding_dim = 2;
  arch.encoder_hidden = 2;
  arch.decoder_hidden = {2};
  NdfModel nan_model(arch, 1);
  nan_model.parameters()[0] = std::nan("");
  checkpoint_save(nan_model, out / "nan.ckpt");
  CHECK(run_cli("correct --config " + cfg + " --out " + out.string() + " --checkpoint " + (out / "nan.ckpt").string() +
                " --input sim_detector=" + (dir / "sim_detector.poses").string() + " --stop-threshold 0") == 3);
}

TEST_CASE("shipped long-jump config parses") {
  const auto cfg = PipelineConfig::load(fs::path(POLARNDF_DATA_DIR) / "configs" / "longjump.cfg");
  CHECK(cfg.detections.size() == 3);
  CHECK(cfg.interpolation == 5);
  CHECK(cfg.train.epochs == 20);
  CHECK(cfg.calibrate_stop);
}
