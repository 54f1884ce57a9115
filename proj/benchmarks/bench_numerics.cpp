#include <benchmark/benchmark.h>

#include "dskd/numerics.hpp"

using namespace dskd;

namespace {

Matrix filled(std::size_t r, std::size_t c, SeededRng& rng) {
  Matrix m(r, c);
  const auto v = rng.normal(r * c);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SeededRng rng(1);
  const Matrix a = filled(64, n, rng), b = filled(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * 64 * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256);

// Cross-correlation shape: batch × d transposed against batch × d.
void BM_MatmulTn(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  SeededRng rng(2);
  const Matrix a = filled(64, d, rng), b = filled(64, d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_tn(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * 64 * d * d));
}
BENCHMARK(BM_MatmulTn)->RangeMultiplier(2)->Range(32, 256);

void BM_MatmulNt(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  SeededRng rng(3);
  const Matrix a = filled(64, d, rng), b = filled(64, d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_nt(a, b));
}
BENCHMARK(BM_MatmulNt)->RangeMultiplier(2)->Range(32, 256);

void BM_RngNormal(benchmark::State& state) {
  SeededRng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal(4096));
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_RngNormal);

}  // namespace
