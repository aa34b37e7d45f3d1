// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "polarndf/kernels.hpp"
#include "polarndf/transforms.hpp"

using namespace polarndf;

namespace {

PolarPose random_polar(std::mt19937_64& rng, std::size_t J) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> len(0.05, 0.5);
  PolarPose p(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double a = angle(rng);
    p.set_triple(j, {std::cos(a), std::sin(a), len(rng)});
  }
  return p;
}

struct Data {
  Skeleton skel = Skeleton::h36m17();
  NdfModel model;
  std::vector<PolarPose> bank, queries;
  std::vector<LabeledPose> batch;
  std::vector<CartesianPose> cartesian;
  Data() {
    auto arch = NdfArchitecture::for_skeleton(skel);
    arch.encoder_hidden = 16;
    arch.decoder_hidden = {64, 64};
    model = NdfModel(arch, 1);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 2000; ++i) bank.push_back(random_polar(rng, 16));
    for (int i = 0; i < 256; ++i) {
      queries.push_back(random_polar(rng, 16));
      batch.push_back({queries.back(), 0.3, i % 10 == 0});
      cartesian.push_back(to_cartesian(queries.back(), skel, {0.0, 0.0}));
    }
  }
};

const Data& data() {
  static const Data d;
  return d;
}

template <bool Omp>
void BM_knn(benchmark::State& state) {
  const auto& d = data();
  const auto w = DistanceWeights::ones(16);
  for (auto _ : state) {
    for (std::size_t q = 0; q < 16; ++q) {
      auto r = Omp ? kernels::omp::knn(d.queries[q], d.bank, 3, DistanceKind::arc_radius, w)
                   : kernels::serial::knn(d.queries[q], d.bank, 3, DistanceKind::arc_radius, w);
      benchmark::DoNotOptimize(r);
    }
  }
}

template <bool Omp>
void BM_prior_batch(benchmark::State& state) {
  const auto& d = data();
  const auto w = DistanceWeights::ones(16);
  for (auto _ : state) {
    auto r = Omp ? kernels::omp::prior_distance_batch(d.queries, d.bank, 3, DistanceKind::arc_radius, w)
                 : kernels::serial::prior_distance_batch(d.queries, d.bank, 3, DistanceKind::arc_radius, w);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Omp>
void BM_batch_loss(benchmark::State& state) {
  const auto& d = data();
  std::vector<double> grad;
  for (auto _ : state) {
    auto r = Omp ? kernels::omp::batch_loss(d.model, d.batch, LossWeights{}, grad)
                 : kernels::serial::batch_loss(d.model, d.batch, LossWeights{}, grad);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Omp>
void BM_project(benchmark::State& state) {
  const auto& d = data();
  for (auto _ : state) {
    auto r = Omp ? kernels::omp::project_batch(d.model, d.queries, 5, 0.0)
                 : kernels::serial::project_batch(d.model, d.queries, 5, 0.0);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Omp>
void BM_correct(benchmark::State& state) {
  const auto& d = data();
  CorrectionConfig cfg;
  cfg.max_iters = 10;
  const std::span<const CartesianPose> poses(d.cartesian.data(), 64);
  for (auto _ : state) {
    auto r = Omp ? kernels::omp::correct_batch(d.model, poses, d.skel, cfg)
                 : kernels::serial::correct_batch(d.model, poses, d.skel, cfg);
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

BENCHMARK(BM_knn<false>)->Name("knn/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_knn<true>)->Name("knn/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_prior_batch<false>)->Name("prior_batch/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_prior_batch<true>)->Name("prior_batch/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_loss<false>)->Name("batch_loss/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_loss<true>)->Name("batch_loss/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_project<false>)->Name("project/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_project<true>)->Name("project/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_correct<false>)->Name("correct/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_correct<true>)->Name("correct/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
