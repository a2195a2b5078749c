#include <benchmark/benchmark.h>

#include "asckit/losses.hpp"
#include "asckit/rng.hpp"

namespace {

asckit::Mat random_logits(int rows, uint64_t seed, double scale = 3.0) {
  asckit::Rng rng(seed);
  asckit::Mat m(rows, asckit::kNumClasses);
  for (auto& v : m.a) v = scale * rng.normal();
  return m;
}

void BM_KdLossGrad(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  const auto z_s = random_logits(b, 1);
  const auto z_t = random_logits(b, 2);
  asckit::Mat y(b, asckit::kNumClasses);
  for (int r = 0; r < b; ++r) y.at(r, r % asckit::kNumClasses) = 1.0;
  const asckit::KdParams p;
  for (auto _ : state) {
    asckit::Mat grad;
    benchmark::DoNotOptimize(asckit::kd_loss_grad(z_s, z_t, y, p, grad));
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_KdLossGrad)->Arg(32)->Arg(256);

void BM_FocusLossGrad(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  const auto z_s = random_logits(b, 3);
  const auto z_t = random_logits(b, 4);
  asckit::Mat y(b, asckit::kNumClasses);
  for (int r = 0; r < b; ++r) y.at(r, r % asckit::kNumClasses) = 1.0;
  const asckit::FocusParams p;
  for (auto _ : state) {
    asckit::Mat grad;
    benchmark::DoNotOptimize(asckit::focus_loss_grad(z_s, z_t, y, p, grad));
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_FocusLossGrad)->Arg(32)->Arg(256);

}  // namespace
