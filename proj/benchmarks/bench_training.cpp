#include <benchmark/benchmark.h>

#include <vector>

#include "dskd/losses.hpp"
#include "dskd/model.hpp"

using namespace dskd;

namespace {

Matrix filled(std::size_t r, std::size_t c, SeededRng& rng) {
  Matrix m(r, c);
  const auto v = rng.normal(r * c);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

// One batch of 64 through the default student: forward, sem + cross-entropy, backward, sgd.
void BM_StudentStep(benchmark::State& state) {
  SeededRng rng(1);
  const Architecture arch = make_architecture(default_student_shape(100, 8, 256));
  ModelParams params = init_params(arch, rng);
  OptimizerState opt = make_optimizer_state(params);
  const Matrix x = filled(64, 100, rng);
  const Matrix z_teacher = filled(64, arch.projection_dim(), rng);
  std::vector<int> labels(64);
  for (std::size_t i = 0; i < 64; ++i) labels[i] = static_cast<int>(i % 8);
  for (auto _ : state) {
    const ForwardTrace tr = forward(params, x);
    Upstream up;
    up.logits = softmax_cross_entropy(tr.logits, labels).grad("logits");
    up.z = sem_loss(tr.z, z_teacher, 5e-3, 1e-12).grad("z1");
    sgd_step(params, backward(params, tr, up), opt, {});
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_StudentStep);

void BM_TeacherForward(benchmark::State& state) {
  SeededRng rng(2);
  const ModelParams params = init_params(make_architecture(default_teacher_shape(100, 8)), rng);
  const Matrix x = filled(64, 100, rng);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, x));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TeacherForward);

}  // namespace
