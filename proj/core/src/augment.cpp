#include "asckit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>

#include "asckit/fft.hpp"
#include "asckit/wav.hpp"

namespace fs = std::filesystem;

namespace asckit {

void AugmentConfig::validate(int n_mels) const {
  if (p_fms < 0.0 || p_fms > 1.0 || p_dir < 0.0 || p_dir > 1.0) {
    throw validation_error("augment: probabilities must be in [0,1]");
  }
  if (fms_alpha <= 0.0) throw validation_error("augment: fms_alpha must be > 0");
  if (mixup_alpha < 0.0) throw validation_error("augment: mixup_alpha must be >= 0");
  if (freq_mask_max < 0 || freq_mask_max > n_mels) {
    throw validation_error("augment: freq_mask_max must be in [0, n_mels]");
  }
}

MixupPlan draw_mixup_plan(int batch_size, double alpha, Rng& rng) {
  if (batch_size < 2) throw validation_error("mixup needs a batch of >= 2 items");
  MixupPlan plan;
  plan.lambda = alpha > 0.0 ? rng.beta(alpha, alpha) : 1.0;
  plan.partner.resize(static_cast<size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) plan.partner[static_cast<size_t>(i)] = i;
  rng.shuffle(plan.partner);
  return plan;
}

void apply_mixup(Tensor& x, Mat& targets, const MixupPlan& plan) {
  if (x.n != static_cast<int>(plan.partner.size()) || targets.rows != x.n) {
    throw validation_error("mixup: plan/batch size mismatch");
  }
  const double lam = plan.lambda;
  if (lam == 1.0) return;
  const Tensor x_orig = x;
  const Mat t_orig = targets;
  const int plane = x.c * x.plane();
  for (int i = 0; i < x.n; ++i) {
    const int j = plan.partner[static_cast<size_t>(i)];
    float* xi = x.v.data() + static_cast<size_t>(i) * plane;
    const float* a = x_orig.v.data() + static_cast<size_t>(i) * plane;
    const float* b = x_orig.v.data() + static_cast<size_t>(j) * plane;
    for (int p = 0; p < plane; ++p) {
      xi[p] = static_cast<float>(lam * a[p] + (1.0 - lam) * b[p]);
    }
    for (int c = 0; c < targets.cols; ++c) {
      targets.at(i, c) = lam * t_orig.at(i, c) + (1.0 - lam) * t_orig.at(j, c);
    }
  }
}

void apply_mixup_rows(Mat& rows, const MixupPlan& plan) {
  if (rows.rows != static_cast<int>(plan.partner.size())) {
    throw validation_error("mixup: plan/rows size mismatch");
  }
  const double lam = plan.lambda;
  if (lam == 1.0) return;
  const Mat orig = rows;
  for (int i = 0; i < rows.rows; ++i) {
    const int j = plan.partner[static_cast<size_t>(i)];
    for (int c = 0; c < rows.cols; ++c) {
      rows.at(i, c) = lam * orig.at(i, c) + (1.0 - lam) * orig.at(j, c);
    }
  }
}

void freq_mixstyle(SpectrogramBatch& batch, double alpha, bool apply, Rng& rng) {
  if (!apply) return;
  if (batch.values.n < 2) {
    throw validation_error("freq_mixstyle needs a batch of >= 2 items");
  }
  const double lam = rng.beta(alpha, alpha);
  std::vector<int> partner(static_cast<size_t>(batch.values.n));
  for (size_t i = 0; i < partner.size(); ++i) partner[i] = static_cast<int>(i);
  rng.shuffle(partner);
  freq_mixstyle_with(batch, lam, partner);
}

void freq_mixstyle_with(SpectrogramBatch& batch, double lam,
                        const std::vector<int>& partner) {
  Tensor& x = batch.values;
  if (static_cast<int>(partner.size()) != x.n) {
    throw validation_error("freq_mixstyle: partner permutation size mismatch");
  }
  const int mels = x.h, frames = x.w;
  constexpr double eps = 1e-5;

  // Per-item, per-frequency-band mean and std over time.
  Mat mean(x.n, mels), sd(x.n, mels);
  for (int i = 0; i < x.n; ++i) {
    const float* p = x.ptr(i, 0);
    for (int m = 0; m < mels; ++m) {
      double s = 0.0, s2 = 0.0;
      const float* row = p + static_cast<size_t>(m) * frames;
      for (int t = 0; t < frames; ++t) {
        s += row[t];
        s2 += static_cast<double>(row[t]) * row[t];
      }
      const double mu = s / frames;
      const double var = std::max(0.0, s2 / frames - mu * mu);
      mean.at(i, m) = mu;
      sd.at(i, m) = std::sqrt(var + eps);
    }
  }

  for (int i = 0; i < x.n; ++i) {
    const int j = partner[static_cast<size_t>(i)];
    float* p = x.ptr(i, 0);
    for (int m = 0; m < mels; ++m) {
      const double mu = mean.at(i, m), sig = sd.at(i, m);
      const double mu_mix = lam * mu + (1.0 - lam) * mean.at(j, m);
      const double sd_mix = lam * sig + (1.0 - lam) * sd.at(j, m);
      float* row = p + static_cast<size_t>(m) * frames;
      for (int t = 0; t < frames; ++t) {
        row[t] = static_cast<float>((row[t] - mu) / sig * sd_mix + mu_mix);
      }
    }
  }
}

namespace {

std::vector<float> convolve_full(const std::vector<float>& x,
                                 const std::vector<float>& h) {
  const size_t n = x.size(), m = h.size();
  // Direct form for short kernels (the unit-delta identity stays exact);
  // FFT overlap for long impulse responses.
  if (m <= 64) {
    std::vector<float> y(n, 0.0f);  // already truncated to input length
    for (size_t t = 0; t < n; ++t) {
      double acc = 0.0;
      const size_t k_max = std::min(m - 1, t);
      for (size_t k = 0; k <= k_max; ++k) {
        acc += static_cast<double>(h[k]) * x[t - k];
      }
      y[t] = static_cast<float>(acc);
    }
    return y;
  }
  const int size = next_pow2(static_cast<int>(n + m - 1));
  std::vector<std::complex<double>> fx(static_cast<size_t>(size)), fh(static_cast<size_t>(size));
  for (size_t i = 0; i < n; ++i) fx[i] = x[i];
  for (size_t i = 0; i < m; ++i) fh[i] = h[i];
  fft_inplace(fx);
  fft_inplace(fh);
  for (int i = 0; i < size; ++i) fx[static_cast<size_t>(i)] *= fh[static_cast<size_t>(i)];
  fft_inplace(fx, /*inverse=*/true);
  std::vector<float> y(n);
  for (size_t i = 0; i < n; ++i) y[i] = static_cast<float>(fx[i].real());
  return y;
}

float peak(const std::vector<float>& v) {
  float p = 0.0f;
  for (float s : v) p = std::max(p, std::abs(s));
  return p;
}

}  // namespace

AudioClip dir_convolve(const AudioClip& clip,
                       const std::vector<std::vector<float>>& dir_bank,
                       bool apply, Rng& rng) {
  if (!apply) return clip;
  if (dir_bank.empty()) throw validation_error("dir_convolve: empty DIR bank");
  const auto& ir = dir_bank[static_cast<size_t>(rng.uniform_int(static_cast<int>(dir_bank.size())))];
  if (ir.empty()) throw validation_error("dir_convolve: empty impulse response");

  AudioClip out = clip;
  out.samples = convolve_full(clip.samples, ir);
  const float pin = peak(clip.samples);
  const float pout = peak(out.samples);
  if (pout > 0.0f && pin > 0.0f) {
    const float scale = pin / pout;
    if (scale != 1.0f) {
      for (float& s : out.samples) s *= scale;
    }
  }
  return out;
}

void apply_freq_mask_band(Tensor& values, int item, int offset, int width,
                          float fill) {
  if (item < 0 || item >= values.n || offset < 0 || width < 0 ||
      offset + width > values.h) {
    throw validation_error("freq_mask: band out of range");
  }
  float* p = values.ptr(item, 0);
  for (int m = offset; m < offset + width; ++m) {
    float* row = p + static_cast<size_t>(m) * values.w;
    std::fill(row, row + values.w, fill);
  }
}

void freq_mask(SpectrogramBatch& batch, int max_bins, Rng& rng) {
  Tensor& x = batch.values;
  if (max_bins < 0 || max_bins > x.h) {
    throw validation_error("freq_mask: max_bins out of range");
  }
  if (max_bins == 0) return;

  // Fill value: batch mean of the unmasked spectrogram.
  double acc = 0.0;
  for (float v : x.v) acc += v;
  const float fill = static_cast<float>(acc / static_cast<double>(x.numel()));

  for (int i = 0; i < x.n; ++i) {
    const int w = rng.uniform_int(max_bins + 1);  // width in {0..max_bins}
    if (w == 0) continue;
    const int off = rng.uniform_int(x.h - w + 1);
    apply_freq_mask_band(x, i, off, w, fill);
  }
}

double pitch_shift_fmax(const FeatureConfig& config, Rng& rng, double shift_lo,
                        double shift_hi) {
  if (!(shift_lo > 0.0) || shift_lo > shift_hi || shift_hi > 1.0) {
    throw validation_error("pitch_shift_fmax: shift range must be within (0, 1]");
  }
  const double draw = rng.uniform(shift_lo, shift_hi) * config.effective_fmax();
  if (draw > config.sample_rate / 2.0) {
    throw validation_error("pitch_shift_fmax: draw above Nyquist");
  }
  return draw;
}

std::vector<std::vector<float>> load_dir_bank(const std::string& dir,
                                              int target_rate) {
  if (!fs::is_directory(dir)) {
    throw validation_error("DIR bank directory not found: " + dir);
  }
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") {
      files.push_back(e.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<std::vector<float>> bank;
  for (const auto& f : files) {
    WavData wav = read_wav(f);
    if (wav.sample_rate != target_rate) {
      AudioClip tmp;
      tmp.sample_rate = wav.sample_rate;
      tmp.samples = std::move(wav.samples);
      bank.push_back(resample(tmp, target_rate).samples);
    } else {
      bank.push_back(std::move(wav.samples));
    }
  }
  return bank;
}

}  // namespace asckit
