#include <benchmark/benchmark.h>

#include "asckit/losses.hpp"
#include "asckit/netspec.hpp"
#include "asckit/nn.hpp"
#include "asckit/rng.hpp"

namespace {

asckit::Tensor random_batch(const asckit::NetSpec& spec, int batch, uint64_t seed) {
  asckit::Rng rng(seed);
  asckit::Tensor x(batch, 1, spec.in_mels, spec.in_frames);
  for (auto& v : x.v) v = static_cast<float>(rng.normal());
  return x;
}

void bench_forward(benchmark::State& state, const char* preset) {
  const auto spec = asckit::build_preset(preset);
  asckit::nn::Model model(spec);
  asckit::Rng rng(1);
  model.init(rng);
  const int batch = static_cast<int>(state.range(0));
  const asckit::Tensor x = random_batch(spec, batch, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(x, false));
  }
  const auto macs = asckit::complexity(spec).macs;
  state.counters["MACs/s"] = benchmark::Counter(
      static_cast<double>(macs) * batch * state.iterations(),
      benchmark::Counter::kIsRate);
}

void BM_ForwardBcbl24(benchmark::State& state) { bench_forward(state, "bcbl24"); }
BENCHMARK(BM_ForwardBcbl24)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ForwardBcbl32(benchmark::State& state) { bench_forward(state, "bcbl32"); }
BENCHMARK(BM_ForwardBcbl32)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_TrainStepBcbl32(benchmark::State& state) {
  const auto spec = asckit::build_preset("bcbl32");
  asckit::nn::Model model(spec);
  asckit::Rng rng(3);
  model.init(rng);
  const int batch = static_cast<int>(state.range(0));
  const asckit::Tensor x = random_batch(spec, batch, 4);
  asckit::Mat y(batch, asckit::kNumClasses);
  for (int r = 0; r < batch; ++r) y.at(r, r % asckit::kNumClasses) = 1.0;
  auto params = model.parameters();
  asckit::nn::AdamW opt;
  asckit::KdParams p;
  p.lambda = 0.0;

  for (auto _ : state) {
    const asckit::Mat z = model.forward(x, true);
    asckit::Mat grad;
    asckit::kd_loss_grad(z, z, y, p, grad);
    model.zero_grad();
    model.backward(grad);
    opt.step(params, 1e-3);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainStepBcbl32)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
