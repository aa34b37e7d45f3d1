#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "polarndf/adam.hpp"
#include "polarndf/error.hpp"
#include "polarndf/kernels.hpp"
#include "polarndf/trainer.hpp"

using namespace polarndf;

namespace {

NdfArchitecture tiny() {
  auto a = NdfArchitecture::for_skeleton(Skeleton::h36m17());
  a.embedding_dim = 2;
  a.encoder_hidden = 4;
  a.decoder_hidden = {8};
  return a;
}

// Reals cluster around one pose; fakes are random poses labeled by their
// distance to the cluster.
struct Toy {
  std::vector<LabeledPose> train, val;
  std::vector<PolarPose> bank;
  Toy() {
    std::mt19937_64 rng(41);
    const auto center = testutil::random_polar(rng, 16);
    std::normal_distribution<double> jit(0.0, 0.02);
    auto near = [&] {
      auto p = center;
      for (auto& v : p.flat()) v += jit(rng);
      repair(p);
      return p;
    };
    const auto w = DistanceWeights::ones(16);
    for (int i = 0; i < 40; ++i) bank.push_back(near());
    for (const auto& b : bank) train.push_back({b, 0.0, true});
    for (int i = 0; i < 200; ++i) {
      const auto p = testutil::random_polar(rng, 16);
      const double d = prior_distance(p, bank, 3, DistanceKind::arc_radius, w).manifold_distance;
      (i < 160 ? train : val).push_back({p, d, false});
    }
    for (int i = 0; i < 10; ++i) val.push_back({near(), 0.0, true});
  }
};

TrainConfig base_config() {
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.epochs = 40;
  c.projection_iters = 2;
  c.batch_size = 16;
  c.weights = DistanceWeights::ones(16);
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("adam bias-corrected first step moves each parameter by lr") {
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> g{0.3, -4.0, 0.0};
  AdamState s(3);
  AdamConfig c;
  c.learning_rate = 0.01;
  adam_step(p, g, s, c);
  CHECK(p[0] == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(-1.99).epsilon(1e-6));
  CHECK(p[2] == 0.5);
  CHECK(s.step == 1);
}

TEST_CASE("zero epochs leave the model unchanged and the report empty") {
  Toy toy;
  auto cfg = base_config();
  cfg.epochs = 0;
  cfg.batch_projection = false;
  const NdfModel m(tiny(), 1);
  const auto r = train(m, toy.train, toy.val, toy.bank, cfg);
  CHECK(r.report.rows.empty());
  CHECK(r.best_epoch == 0);
  CHECK(std::equal(m.parameters().begin(), m.parameters().end(), r.best.parameters().begin()));
}

TEST_CASE("training separates a toy cluster from random fakes") {
  Toy toy;
  auto cfg = base_config();
  cfg.batch_projection = false;
  const auto r = train(NdfModel(tiny(), 1), toy.train, toy.val, toy.bank, cfg);
  REQUIRE(r.report.rows.size() == 40);
  CHECK(r.report.rows.back().loss_total < r.report.rows.front().loss_total);
  double real = 0.0, fake = 0.0;
  int nr = 0, nf = 0;
  for (const auto& s : toy.val) {
    const double f = forward(r.best, s.pose);
    (s.is_real ? real : fake) += f;
    (s.is_real ? nr : nf)++;
  }
  CHECK(real / nr < 0.5 * fake / nf);
  CHECK(r.report.label == "Polar w/o bp");
}

TEST_CASE("one-connection manifold: held-out reals score below held-out fakes") {
  // Manifold: a fixed direction with r in [0.9, 1.1]; fakes rotate and stretch it.
  NdfArchitecture arch;
  arch.parent_connection = {-1};
  arch.embedding_dim = 4;
  arch.encoder_hidden = 16;
  arch.decoder_hidden = {16};
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> len(0.9, 1.1), ang(-2.5, 2.5), far(0.2, 2.0);
  const auto w = DistanceWeights::ones(1);
  auto real = [&] {
    PolarPose p(1);
    p.set_triple(0, {0.6, 0.8, len(rng)});
    return p;
  };
  auto fake = [&] {
    PolarPose p(1);
    const double a = std::atan2(0.8, 0.6) + ang(rng);
    p.set_triple(0, {std::cos(a), std::sin(a), far(rng)});
    return p;
  };
  std::vector<PolarPose> bank;
  std::vector<LabeledPose> train_set, val_set;
  for (int i = 0; i < 50; ++i) bank.push_back(real());
  for (const auto& b : bank) train_set.push_back({b, 0.0, true});
  for (int i = 0; i < 500; ++i) {
    const auto p = fake();
    train_set.push_back({p, prior_distance(p, bank, 3, DistanceKind::arc_radius, w).manifold_distance, false});
  }
  for (int i = 0; i < 20; ++i) {
    const auto p = fake();
    val_set.push_back({real(), 0.0, true});
    val_set.push_back({p, prior_distance(p, bank, 3, DistanceKind::arc_radius, w).manifold_distance, false});
  }
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 20;
  cfg.batch_size = 32;
  cfg.weights = w;
  const auto r = train(NdfModel(arch, 2), train_set, val_set, bank, cfg);
  double fr = 0.0, ff = 0.0;
  for (int i = 0; i < 200; ++i) {
    fr += forward(r.best, real());
    ff += forward(r.best, fake());
  }
  CHECK(fr < ff);
}

TEST_CASE("batch projection runs, moves fakes and is reported") {
  Toy toy;
  auto cfg = base_config();
  cfg.epochs = 3;
  const auto r = train(NdfModel(tiny(), 1), toy.train, toy.val, toy.bank, cfg);
  REQUIRE(r.report.rows.size() == 3);
  CHECK(r.report.rows[0].tau == 0.0);
  CHECK(r.report.rows[0].projection_active == 1.0);
  for (const auto& row : r.report.rows) {
    CHECK(std::isfinite(row.loss_total));
    CHECK(row.projection_active > 0.0);
  }
  // epoch 2 freezes at the 95th percentile of f over validation reals after epoch 1
  auto one = cfg;
  one.epochs = 1;
  const auto first = train(NdfModel(tiny(), 1), toy.train, toy.val, toy.bank, one);
  std::vector<PolarPose> val_reals;
  for (const auto& v : toy.val) {
    if (v.is_real) val_reals.push_back(v.pose);
  }
  CHECK(r.report.rows[1].tau == calibrate_projection_threshold(first.last, val_reals, 95.0));
  CHECK(r.report.label == "Polar baseline");
}

TEST_CASE("training is deterministic given the seed") {
  Toy toy;
  auto cfg = base_config();
  cfg.epochs = 2;
  const auto a = train(NdfModel(tiny(), 1), toy.train, toy.val, toy.bank, cfg);
  const auto b = train(NdfModel(tiny(), 1), toy.train, toy.val, toy.bank, cfg);
  CHECK(std::equal(a.last.parameters().begin(), a.last.parameters().end(), b.last.parameters().begin()));
  CHECK(a.report.to_csv() == b.report.to_csv());
}

TEST_CASE("data errors") {
  Toy toy;
  auto cfg = base_config();
  std::vector<LabeledPose> fakes_only, reals_only;
  for (const auto& s : toy.train) (s.is_real ? reals_only : fakes_only).push_back(s);
  auto kind_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind_of([&] { train(NdfModel(tiny(), 1), fakes_only, toy.val, toy.bank, cfg); }) == ErrorKind::NoReals);
  CHECK(kind_of([&] { train(NdfModel(tiny(), 1), reals_only, toy.val, toy.bank, cfg); }) == ErrorKind::NoFakes);
  const std::vector<PolarPose> tiny_bank(toy.bank.begin(), toy.bank.begin() + 2);
  CHECK(kind_of([&] { train(NdfModel(tiny(), 1), toy.train, toy.val, tiny_bank, cfg); }) == ErrorKind::BankTooSmall);
  cfg.learning_rate = 0.0;
  CHECK(kind_of([&] { train(NdfModel(tiny(), 1), toy.train, toy.val, toy.bank, cfg); }) == ErrorKind::Config);
  CHECK_THROWS_AS(calibrate_projection_threshold(NdfModel(tiny(), 1), {}), Error);
}

TEST_CASE("non-finite loss is reported as such") {
  Toy toy;
  auto cfg = base_config();
  cfg.epochs = 1;
  NdfModel m(tiny(), 1);
  m.parameters()[0] = std::nan("");
  try {
    train(m, toy.train, toy.val, toy.bank, cfg);
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
}

TEST_CASE("ablation labels") {
  using R = Representation;
  using D = DistanceKind;
  CHECK(ablation_label(R::polar, D::arc_radius, true, true) == "Polar baseline");
  CHECK(ablation_label(R::angular, D::angular, true, true) == "Angular baseline");
  CHECK(ablation_label(R::polar, D::arc_radius, false, true) == "Polar w/o bp");
  CHECK(ablation_label(R::polar, D::arc_radius, true, false) == "Polar w/o grad. loss");
  CHECK(ablation_label(R::polar, D::geodesic, true, true) == "Polar w/o AR. dist.");
  CHECK(ablation_label(R::polar, D::geodesic, false, false) == "custom");
}

TEST_CASE("report csv layout") {
  TrainReport r;
  r.label = "Polar baseline";
  r.rows.push_back({1, 0.5, 0.25, 0.125, 0.875, 0.1, 0.2, 0.3, 0.0, 1.0});
  r.checkpoint_paths = {"out/train/model.ckpt"};
  const auto csv = r.to_csv();
  CHECK(csv.rfind("# config: Polar baseline\nconfig,epoch,", 0) == 0);
  CHECK(csv.find("Polar baseline,1,0.5,0.25,0.125,0.875,0.1,0.2,0.3,0,1\n") != std::string::npos);
  CHECK(csv.find("# checkpoint: out/train/model.ckpt") != std::string::npos);
}
