#include <benchmark/benchmark.h>

#include "dskd/losses.hpp"

using namespace dskd;

namespace {

Matrix filled(std::size_t r, std::size_t c, SeededRng& rng) {
  Matrix m(r, c);
  const auto v = rng.normal(r * c);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

void BM_SemLoss(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  SeededRng rng(1);
  const Matrix z1 = filled(64, d, rng), z2 = filled(64, d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(sem_loss(z1, z2, 5e-3, 1e-12));
}
BENCHMARK(BM_SemLoss)->Arg(64)->Arg(256);

void BM_DcmLoss(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  SeededRng rng(2);
  const Matrix t1 = filled(64, d, rng), t2 = filled(64, d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(dcm_loss(t1, t2, 1.0));
}
BENCHMARK(BM_DcmLoss)->Arg(32)->Arg(128);

void BM_GramDivergence(benchmark::State& state) {
  SeededRng rng(3);
  const Matrix z1 = filled(64, 256, rng), z2 = filled(64, 256, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gram_divergence(z1, z2));
}
BENCHMARK(BM_GramDivergence);

void BM_KdDivergence(benchmark::State& state) {
  SeededRng rng(4);
  const Matrix s = filled(64, 8, rng), t = filled(64, 8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(kd_logit_divergence(s, t, 4.0));
}
BENCHMARK(BM_KdDivergence);

}  // namespace
