#include <cmath>
#include <numeric>

#include "doctest.h"

#include "asckit/augment.hpp"

using namespace asckit;

namespace {

Tensor filled(int n, int mels, int frames, float value) {
  Tensor t(n, 1, mels, frames);
  std::fill(t.v.begin(), t.v.end(), value);
  return t;
}

Mat one_hot(const std::vector<int>& labels) {
  Mat y(static_cast<int>(labels.size()), kNumClasses);
  for (size_t i = 0; i < labels.size(); ++i) y.at(static_cast<int>(i), labels[i]) = 1.0;
  return y;
}

}  // namespace

TEST_CASE("mixup: lambda=1 is the identity") {
  Tensor x(2, 1, 4, 4);
  for (size_t i = 0; i < x.v.size(); ++i) x.v[i] = static_cast<float>(i);
  const Tensor orig = x;
  Mat y = one_hot({0, 1});
  MixupPlan plan{1.0, {1, 0}};
  apply_mixup(x, y, plan);
  CHECK(x.v == orig.v);
  CHECK(y.at(0, 0) == 1.0);
  CHECK(y.at(1, 1) == 1.0);
}

TEST_CASE("mixup: midpoint of 0-tensor and 2-tensor is all ones") {
  Tensor x(2, 1, 3, 3);
  for (int i = 0; i < 9; ++i) x.ptr(1, 0)[i] = 2.0f;
  Mat y = one_hot({0, 1});
  MixupPlan plan{0.5, {1, 0}};
  apply_mixup(x, y, plan);
  for (int i = 0; i < 9; ++i) {
    CHECK(x.ptr(0, 0)[i] == 1.0f);
    CHECK(x.ptr(1, 0)[i] == 1.0f);
  }
  CHECK(y.at(0, 0) == 0.5);
  CHECK(y.at(0, 1) == 0.5);
}

TEST_CASE("mixup: mixed target mass stays exactly 1") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int b = 2 + rng.uniform_int(6);
    Tensor x(b, 1, 2, 2);
    std::vector<int> labels;
    for (int i = 0; i < b; ++i) labels.push_back(rng.uniform_int(kNumClasses));
    Mat y = one_hot(labels);
    const MixupPlan plan = draw_mixup_plan(b, 1.0, rng);
    apply_mixup(x, y, plan);
    for (int r = 0; r < b; ++r) {
      double mass = 0.0;
      for (int c = 0; c < kNumClasses; ++c) mass += y.at(r, c);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("mixup: Beta(1,1) draws average to 0.5") {
  Rng rng(2024);
  double acc = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    acc += draw_mixup_plan(4, 1.0, rng).lambda;
  }
  CHECK(acc / n == doctest::Approx(0.5).epsilon(0.04));  // 0.5 +- 0.02
}

TEST_CASE("mixup: empty or single-item batch rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(draw_mixup_plan(0, 1.0, rng), validation_error);
  CHECK_THROWS_AS(draw_mixup_plan(1, 1.0, rng), validation_error);
}

TEST_CASE("freq_mixstyle: self-partner is the identity within 1e-5 relative") {
  Rng rng(3);
  SpectrogramBatch batch;
  batch.values = Tensor(2, 1, 16, 8);
  for (auto& v : batch.values.v) v = static_cast<float>(rng.normal() * 3.0 - 5.0);
  const Tensor orig = batch.values;
  freq_mixstyle_with(batch, 0.37, {0, 1});  // partner = self
  for (size_t i = 0; i < orig.v.size(); ++i) {
    const double rel = std::abs(batch.values.v[i] - orig.v[i]) /
                       std::max(1.0, std::abs(static_cast<double>(orig.v[i])));
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("freq_mixstyle: lambda=1 restores own statistics") {
  Rng rng(5);
  SpectrogramBatch batch;
  batch.values = Tensor(3, 1, 12, 10);
  for (auto& v : batch.values.v) v = static_cast<float>(rng.normal());
  const Tensor orig = batch.values;
  freq_mixstyle_with(batch, 1.0, {2, 0, 1});
  for (size_t i = 0; i < orig.v.size(); ++i) {
    const double rel = std::abs(batch.values.v[i] - orig.v[i]) /
                       std::max(1.0, std::abs(static_cast<double>(orig.v[i])));
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("freq_mixstyle: constant spectrograms mix to the mean statistics") {
  SpectrogramBatch batch;
  batch.values = Tensor(2, 1, 8, 6);
  for (int i = 0; i < 48; ++i) batch.values.ptr(0, 0)[i] = 2.0f;
  for (int i = 0; i < 48; ++i) batch.values.ptr(1, 0)[i] = 6.0f;
  freq_mixstyle_with(batch, 0.5, {1, 0});
  // Normalized A is 0 everywhere; denormalized mean is 0.5*2 + 0.5*6 = 4.
  for (int i = 0; i < 48; ++i) {
    CHECK(batch.values.ptr(0, 0)[i] == doctest::Approx(4.0).epsilon(1e-5));
    CHECK(batch.values.ptr(1, 0)[i] == doctest::Approx(4.0).epsilon(1e-5));
  }
}

TEST_CASE("freq_mixstyle: gate off is a no-op, small batch rejected") {
  Rng rng(6);
  SpectrogramBatch batch;
  batch.values = filled(2, 4, 4, 1.5f);
  const Tensor orig = batch.values;
  freq_mixstyle(batch, 0.3, false, rng);
  CHECK(batch.values.v == orig.v);

  SpectrogramBatch single;
  single.values = filled(1, 4, 4, 1.0f);
  CHECK_THROWS_AS(freq_mixstyle(single, 0.3, true, rng), validation_error);
}

TEST_CASE("dir_convolve: unit delta is the exact identity") {
  Rng rng(7);
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.resize(16000);
  for (auto& s : clip.samples) s = static_cast<float>(0.3 * rng.normal());
  const std::vector<std::vector<float>> bank = {{1.0f}};
  const AudioClip out = dir_convolve(clip, bank, true, rng);
  CHECK(out.samples == clip.samples);  // bitwise
}

TEST_CASE("dir_convolve: gate off returns the same content") {
  Rng rng(8);
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.assign(100, 0.25f);
  const std::vector<std::vector<float>> bank = {{0.5f, 0.5f}};
  const AudioClip out = dir_convolve(clip, bank, false, rng);
  CHECK(out.samples == clip.samples);
}

TEST_CASE("dir_convolve: delayed delta shifts the waveform") {
  Rng rng(9);
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.resize(64);
  clip.samples[0] = 1.5f;  // keep the peak inside the retained window
  for (size_t i = 1; i < clip.samples.size(); ++i) {
    clip.samples[i] = static_cast<float>(0.2 * rng.normal());
  }
  const int k = 3;
  std::vector<float> ir(static_cast<size_t>(k) + 1, 0.0f);
  ir.back() = 1.0f;
  const std::vector<std::vector<float>> bank = {ir};
  const AudioClip out = dir_convolve(clip, bank, true, rng);
  REQUIRE(out.samples.size() == clip.samples.size());
  for (int t = 0; t < k; ++t) CHECK(out.samples[static_cast<size_t>(t)] == 0.0f);
  for (size_t t = static_cast<size_t>(k); t < out.samples.size(); ++t) {
    CHECK(out.samples[t] == doctest::Approx(clip.samples[t - static_cast<size_t>(k)]).epsilon(1e-6));
  }
}

TEST_CASE("dir_convolve: empty bank rejected when applied") {
  Rng rng(10);
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.assign(16, 0.1f);
  const std::vector<std::vector<float>> bank;
  CHECK_THROWS_AS(dir_convolve(clip, bank, true, rng), validation_error);
}

TEST_CASE("freq_mask: max_bins=0 leaves the batch unchanged") {
  Rng rng(12);
  SpectrogramBatch batch;
  batch.values = Tensor(3, 1, 16, 8);
  for (size_t i = 0; i < batch.values.v.size(); ++i) batch.values.v[i] = static_cast<float>(i);
  const Tensor orig = batch.values;
  freq_mask(batch, 0, rng);
  CHECK(batch.values.v == orig.v);
}

TEST_CASE("freq_mask: full-width band masks the whole spectrogram") {
  Tensor values(1, 1, 8, 4);
  for (size_t i = 0; i < values.v.size(); ++i) values.v[i] = static_cast<float>(i + 1);
  apply_freq_mask_band(values, 0, 0, 8, -7.5f);
  for (float v : values.v) CHECK(v == -7.5f);
  CHECK_THROWS_AS(apply_freq_mask_band(values, 0, 4, 8, 0.0f), validation_error);
}

TEST_CASE("freq_mask: widths are uniform over {0..max} (chi-square at 0.01)") {
  Rng rng(314159);
  const int max_bins = 48;
  const int n_mels = 64, frames = 4;
  const int draws = 10000;
  std::vector<int> counts(static_cast<size_t>(max_bins) + 1, 0);

  for (int i = 0; i < draws; ++i) {
    SpectrogramBatch batch;
    batch.values = Tensor(1, 1, n_mels, frames);
    // Strictly increasing values; the fill (batch mean) can collide with at
    // most nothing since masked rows become constant rows.
    for (size_t j = 0; j < batch.values.v.size(); ++j) {
      batch.values.v[j] = static_cast<float>(j) * 0.5f + 1.0f;
    }
    freq_mask(batch, max_bins, rng);
    // Measure the masked width: rows that are constant.
    int width = 0;
    for (int m = 0; m < n_mels; ++m) {
      const float* row = batch.values.ptr(0, 0) + static_cast<size_t>(m) * frames;
      bool constant = true;
      for (int t = 1; t < frames; ++t) constant = constant && row[t] == row[0];
      if (constant) ++width;
    }
    REQUIRE(width <= max_bins);
    counts[static_cast<size_t>(width)]++;
  }

  const double expected = static_cast<double>(draws) / (max_bins + 1);
  double chi2 = 0.0;
  for (int w = 0; w <= max_bins; ++w) {
    const double d = counts[static_cast<size_t>(w)] - expected;
    chi2 += d * d / expected;
  }
  // 48 degrees of freedom, alpha = 0.01.
  CHECK(chi2 < 73.683);
}

TEST_CASE("pitch_shift_fmax: degenerate range returns the default fmax") {
  const auto cfg = feature_preset("passt44");
  Rng rng(13);
  CHECK(pitch_shift_fmax(cfg, rng, 1.0, 1.0) == cfg.effective_fmax());
}

TEST_CASE("pitch_shift_fmax: deterministic under a fixed seed") {
  const auto cfg = feature_preset("passt44");
  Rng a(321), b(321);
  CHECK(pitch_shift_fmax(cfg, a) == pitch_shift_fmax(cfg, b));
}

TEST_CASE("pitch_shift_fmax: draws stay inside the range") {
  const auto cfg = feature_preset("passt44");
  Rng rng(14);
  for (int i = 0; i < 1000; ++i) {
    const double f = pitch_shift_fmax(cfg, rng, 0.9, 1.0);
    CHECK(f >= 0.9 * cfg.effective_fmax());
    CHECK(f <= cfg.effective_fmax());
  }
  CHECK_THROWS_AS(pitch_shift_fmax(cfg, rng, 0.0, 1.0), validation_error);
  CHECK_THROWS_AS(pitch_shift_fmax(cfg, rng, 0.5, 1.2), validation_error);
}

TEST_CASE("augmentations replay exactly under a fixed seed") {
  auto run_chain = [](uint64_t seed) {
    Rng rng(seed);
    SpectrogramBatch batch;
    batch.values = Tensor(4, 1, 32, 10);
    Rng fill(1);
    for (auto& v : batch.values.v) v = static_cast<float>(fill.normal());
    freq_mixstyle(batch, 0.3, rng.uniform() < 0.9, rng);
    Mat y(4, kNumClasses);
    for (int r = 0; r < 4; ++r) y.at(r, r) = 1.0;
    const MixupPlan plan = draw_mixup_plan(4, 1.0, rng);
    apply_mixup(batch.values, y, plan);
    freq_mask(batch, 12, rng);
    return batch.values.v;
  };
  CHECK(run_chain(77) == run_chain(77));
  CHECK(run_chain(77) != run_chain(78));
}

TEST_CASE("augment config validation") {
  AugmentConfig cfg;
  cfg.validate(256);
  cfg.p_fms = 1.5;
  CHECK_THROWS_AS(cfg.validate(256), validation_error);
  cfg = AugmentConfig{};
  cfg.freq_mask_max = 300;
  CHECK_THROWS_AS(cfg.validate(256), validation_error);
}
