#include <benchmark/benchmark.h>

#include "dskd/geo.hpp"

using namespace dskd::geo;

namespace {

void BM_SolvePointing(benchmark::State& state) {
  const RadarImageSpec image{4096, 4096, 10000};
  const LatLon radar{18.25, 109.50}, optics{18.2502, 109.5003};
  const OpticsConfig cfg{0.0, 20.0, 0.0088, 0.01, 0.2};
  double x = 0.0;
  for (auto _ : state) {
    x = x >= 4000.0 ? 0.0 : x + 1.0;
    benchmark::DoNotOptimize(solve_pointing({x, 1024, 10, 10}, image, radar, optics, cfg));
  }
}
BENCHMARK(BM_SolvePointing);

void BM_ForwardInverse(benchmark::State& state) {
  const LatLon radar{18.25, 109.50};
  double a = 0.0;
  for (auto _ : state) {
    a = a >= 359.0 ? 0.0 : a + 1.0;
    benchmark::DoNotOptimize(inverse_position(radar, forward_position(radar, {a, 4200.0})));
  }
}
BENCHMARK(BM_ForwardInverse);

}  // namespace
