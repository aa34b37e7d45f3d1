#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "polarndf/error.hpp"
#include "polarndf/kernels.hpp"
#include "polarndf/ndf.hpp"

using namespace polarndf;

namespace {

NdfArchitecture small_arch(Representation rep = Representation::polar) {
  auto a = NdfArchitecture::for_skeleton(Skeleton::h36m17(), rep);
  a.embedding_dim = 3;
  a.encoder_hidden = 5;
  a.decoder_hidden = {7, 4};
  return a;
}

std::vector<LabeledPose> mixed_batch(std::mt19937_64& rng, int n) {
  std::vector<LabeledPose> out;
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int i = 0; i < n; ++i) out.push_back({testutil::random_polar(rng, 16), i % 3 == 0 ? 0.0 : d(rng), i % 3 == 0});
  return out;
}

}  // namespace

TEST_CASE("parameter count follows the layout") {
  const NdfModel m(small_arch(), 1);
  // encoder: 16 x [(3+3)*5+5 + 5*3+3], decoder: 48*7+7 + 7*4+4 + 4+1
  CHECK(m.num_parameters() == 16 * (35 + 18) + 343 + 32 + 5);
  const NdfModel ang(small_arch(Representation::angular), 1);
  CHECK(ang.num_parameters() == m.num_parameters() - 16 * 5);
}

TEST_CASE("output is finite and nonnegative, init is seeded") {
  std::mt19937_64 rng(31);
  const NdfModel a(small_arch(), 9), b(small_arch(), 9), c(small_arch(), 10);
  CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  CHECK_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
  for (int t = 0; t < 50; ++t) {
    const double f = forward(a, testutil::random_polar(rng, 16));
    CHECK(std::isfinite(f));
    CHECK(f >= 0.0);
  }
}

TEST_CASE("angular representation ignores lengths") {
  std::mt19937_64 rng(32);
  const NdfModel m(small_arch(Representation::angular), 2);
  auto x = testutil::random_polar(rng, 16);
  const double f0 = forward(m, x);
  for (std::size_t j = 0; j < 16; ++j) x.flat()[3 * j + 2] *= 3.0;
  CHECK(forward(m, x) == f0);
  const auto g = input_gradient(m, x);
  for (std::size_t j = 0; j < 16; ++j) CHECK(g[3 * j + 2] == 0.0);
}

TEST_CASE("input gradient matches finite differences") {
  std::mt19937_64 rng(33);
  const NdfModel m(small_arch(), 3);
  const auto x = testutil::random_polar(rng, 16);
  const auto g = input_gradient(m, x);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto hi = x, lo = x;
    hi.flat()[i] += 1e-6;
    lo.flat()[i] -= 1e-6;
    CHECK(g[i] == doctest::Approx((forward(m, hi) - forward(m, lo)) / 2e-6).epsilon(1e-5).scale(1e-6));
  }
}

TEST_CASE("parameter gradient of the full loss matches finite differences") {
  std::mt19937_64 rng(34);
  for (bool squared : {false, true}) {
    const NdfModel m(small_arch(), 4);
    const auto batch = mixed_batch(rng, 9);
    LossWeights w;
    w.real = 0.7;
    w.fake = 1.3;
    w.grad = 0.9;
    w.squared = squared;
    std::vector<double> grad;
    loss_and_param_gradients(m, batch, w, grad);
    auto total = [&](const NdfModel& mm) {
      std::vector<double> unused;
      return loss_and_param_gradients(mm, batch, w, unused).total;
    };
    for (std::size_t i = 0; i < m.num_parameters(); i += 7) {
      NdfModel hi = m, lo = m;
      hi.parameters()[i] += 1e-6;
      lo.parameters()[i] -= 1e-6;
      CHECK(grad[i] == doctest::Approx((total(hi) - total(lo)) / 2e-6).epsilon(1e-4).scale(1e-6));
    }
  }
}

TEST_CASE("loss terms sum per sample and respect switches") {
  std::mt19937_64 rng(35);
  const NdfModel m(small_arch(), 5);
  const auto batch = mixed_batch(rng, 6);
  LossWeights w;
  std::vector<double> grad;
  const auto l = loss_and_param_gradients(m, batch, w, grad);
  double real = 0.0, fake = 0.0, g = 0.0;
  for (const auto& s : batch) {
    const double f = forward(m, s.pose);
    if (s.is_real) {
      real += std::abs(f - s.distance);
      double n2 = 0.0;
      for (double v : input_gradient(m, s.pose)) n2 += v * v;
      g += std::sqrt(n2);
    } else {
      fake += std::abs(f - s.distance);
    }
  }
  CHECK(l.real == doctest::Approx(real));
  CHECK(l.fake == doctest::Approx(fake));
  CHECK(l.grad == doctest::Approx(g));
  CHECK(l.total == doctest::Approx(real + fake + g));
  CHECK(l.num_real == 2);
  w.grad_loss = false;
  CHECK(loss_and_param_gradients(m, batch, w, grad).total == doctest::Approx(real + fake));
}

TEST_CASE("serial and omp batch kernels agree bit for bit") {
  std::mt19937_64 rng(36);
  const NdfModel m(small_arch(), 6);
  const auto batch = mixed_batch(rng, 37);
  std::vector<double> ga, gb;
  const auto a = kernels::serial::batch_loss(m, batch, LossWeights{}, ga);
  const auto b = kernels::omp::batch_loss(m, batch, LossWeights{}, gb);
  CHECK(a.total == doctest::Approx(b.total).epsilon(1e-13));
  for (std::size_t i = 0; i < ga.size(); ++i) CHECK(ga[i] == doctest::Approx(gb[i]).epsilon(1e-12).scale(1e-14));
  const auto poses = poses_of(batch);
  CHECK(kernels::serial::evaluate(m, poses) == kernels::omp::evaluate(m, poses));
  const auto pa = kernels::serial::project_batch(m, poses, 4, 0.1);
  const auto pb = kernels::omp::project_batch(m, poses, 4, 0.1);
  CHECK(pa.poses == pb.poses);
  CHECK(pa.active == pb.active);
}

TEST_CASE("omp results do not depend on the thread count") {
  std::mt19937_64 rng(37);
  const NdfModel m(small_arch(), 7);
  const auto batch = mixed_batch(rng, 53);
  std::vector<double> g1, g3;
  kernels::set_workers(1);
  const auto a = kernels::omp::batch_loss(m, batch, LossWeights{}, g1);
  kernels::set_workers(3);
  const auto b = kernels::omp::batch_loss(m, batch, LossWeights{}, g3);
  kernels::set_workers(0);
  CHECK(a.total == b.total);
  CHECK(g1 == g3);
}

TEST_CASE("projection mask is monotone and zero iterations change nothing") {
  std::mt19937_64 rng(38);
  const NdfModel m(small_arch(), 8);
  const auto poses = poses_of(mixed_batch(rng, 20));
  const auto before = kernels::omp::evaluate(m, poses);
  const double tau = percentile(before, 50);
  const auto res = kernels::omp::project_batch(m, poses, 6, tau);
  REQUIRE(res.active.size() == 6);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t n = 1; n < 6; ++n) {
      if (!res.active[n - 1][i]) CHECK_FALSE(res.active[n][i]);
    }
    CHECK(res.poses[i].is_valid());
  }
  const auto none = kernels::omp::project_batch(m, poses, 0, 0.0);
  CHECK(none.poses == poses);
}

TEST_CASE("checkpoint round trip with non-default widths") {
  const auto dir = testutil::scratch("ckpt");
  auto arch = small_arch(Representation::angular);
  arch.decoder_hidden = {9, 6, 3};
  const NdfModel m(arch, 77);
  checkpoint_save(m, dir / "m.ckpt");
  const auto back = checkpoint_load(dir / "m.ckpt", Skeleton::h36m17().hash());
  CHECK(back.architecture().decoder_hidden == arch.decoder_hidden);
  CHECK(back.architecture().representation == Representation::angular);
  CHECK(std::equal(m.parameters().begin(), m.parameters().end(), back.parameters().begin()));
  std::mt19937_64 rng(39);
  const auto x = testutil::random_polar(rng, 16);
  CHECK(forward(back, x) == forward(m, x));

  try {
    checkpoint_load(dir / "m.ckpt", Skeleton::h36m17_j15().hash());
    FAIL("expected skeleton mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SkeletonMismatch);
  }
}

TEST_CASE("truncated or corrupted checkpoints are rejected") {
  const NdfModel m(small_arch(), 12);
  const auto bytes = checkpoint_bytes(m);
  for (std::size_t n = 0; n < bytes.size(); n += 1 + n / 4) {
    CHECK_THROWS_AS(checkpoint_from_bytes(std::span(bytes.data(), n)), Error);
  }
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(checkpoint_from_bytes(flipped), Error);
  auto magic = bytes;
  magic[0] ^= 0xff;
  try {
    checkpoint_from_bytes(magic);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FormatVersionMismatch);
  }
}
