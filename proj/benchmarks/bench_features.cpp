#include <benchmark/benchmark.h>

#include <cmath>

#include "asckit/corpus.hpp"
#include "asckit/features.hpp"

namespace {

asckit::AudioClip make_clip(int rate) {
  asckit::AudioClip clip;
  clip.sample_rate = rate;
  clip.meta.scene_label = "park";
  clip.samples.resize(static_cast<size_t>(rate));
  for (int t = 0; t < rate; ++t) {
    clip.samples[static_cast<size_t>(t)] =
        static_cast<float>(0.4 * std::sin(2.0 * M_PI * 650.0 * t / rate));
  }
  return clip;
}

void BM_LogmelBcbl44(benchmark::State& state) {
  const auto clip = make_clip(44100);
  const auto cfg = asckit::feature_preset("bcbl44");
  for (auto _ : state) {
    benchmark::DoNotOptimize(asckit::logmel(clip, cfg));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LogmelBcbl44)->Unit(benchmark::kMillisecond);

void BM_LogmelStudent32(benchmark::State& state) {
  const auto clip = make_clip(32000);
  const auto cfg = asckit::feature_preset("student32");
  for (auto _ : state) {
    benchmark::DoNotOptimize(asckit::logmel(clip, cfg));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LogmelStudent32)->Unit(benchmark::kMillisecond);

void BM_Resample44to32(benchmark::State& state) {
  const auto clip = make_clip(44100);
  for (auto _ : state) {
    benchmark::DoNotOptimize(asckit::resample(clip, 32000));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Resample44to32)->Unit(benchmark::kMillisecond);

}  // namespace
