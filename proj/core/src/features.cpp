#include "asckit/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>

#include "asckit/fft.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace asckit {

void FeatureConfig::validate() const {
  if (sample_rate <= 0 || n_mels <= 0 || win_length <= 0 || hop_length <= 0) {
    throw validation_error("feature config '" + name + "' has non-positive fields");
  }
  if (n_fft < win_length || (n_fft & (n_fft - 1)) != 0) {
    throw validation_error("feature config '" + name +
                           "': n_fft must be a power of two >= win_length");
  }
  if (fmax > 0.0 && fmax > sample_rate / 2.0) {
    throw validation_error("feature config '" + name + "': fmax above Nyquist");
  }
}

FeatureConfig feature_preset(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  FeatureConfig c;
  if (key == "bcbl44") {
    c = {"bcbl44", 44100, 256, 75.0, 11.0, 3308, 500, 4096, 0.0, 0.0};
  } else if (key == "student32") {
    c = {"student32", 32000, 256, 96.0, 16.0, 3072, 504, 4096, 0.0, 0.0};
  } else if (key == "passt44") {
    c = {"passt44", 44100, 128, 18.0, 7.0, 794, 309, 1024, 0.0, 0.0};
  } else {
    throw validation_error("unknown feature preset: " + std::string(name));
  }
  c.validate();
  return c;
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Sparse row view over the filterbank for fast mel projection.
struct SparseFilterbank {
  int n_mels = 0;
  std::vector<int> first_bin;
  std::vector<std::vector<double>> weights;
};

SparseFilterbank sparsify(const Mat& fb) {
  SparseFilterbank s;
  s.n_mels = fb.rows;
  s.first_bin.resize(static_cast<size_t>(fb.rows));
  s.weights.resize(static_cast<size_t>(fb.rows));
  for (int m = 0; m < fb.rows; ++m) {
    int lo = 0, hi = fb.cols;
    while (lo < fb.cols && fb.at(m, lo) == 0.0) ++lo;
    while (hi > lo && fb.at(m, hi - 1) == 0.0) --hi;
    s.first_bin[static_cast<size_t>(m)] = lo;
    auto& w = s.weights[static_cast<size_t>(m)];
    w.assign(fb.row(m) + lo, fb.row(m) + hi);
  }
  return s;
}

// Reflect index into [0, n) without repeating the edge sample.
int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

}  // namespace

Mat mel_filterbank(const FeatureConfig& config, double fmax_override) {
  config.validate();
  const double nyquist = config.sample_rate / 2.0;
  double fmax = config.effective_fmax();
  if (fmax_override > 0.0) {
    if (fmax_override > nyquist) {
      throw validation_error("fmax_override above Nyquist");
    }
    fmax = fmax_override;
  }
  const double fmin = config.fmin;
  const int n_bins = config.n_bins();

  Mat fb(config.n_mels, n_bins);
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  const double mel_step = (mel_hi - mel_lo) / (config.n_mels + 1);
  const double bin_hz = static_cast<double>(config.sample_rate) / config.n_fft;

  for (int m = 0; m < config.n_mels; ++m) {
    const double left = mel_to_hz(mel_lo + m * mel_step);
    const double center = mel_to_hz(mel_lo + (m + 1) * mel_step);
    const double right = mel_to_hz(mel_lo + (m + 2) * mel_step);
    bool any = false;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > left && f < right) {
        w = f <= center ? (f - left) / (center - left)
                        : (right - f) / (right - center);
      }
      if (w > 0.0) {
        fb.at(m, k) = w;
        any = true;
      }
    }
    if (!any) {
      // Narrow triangle between two bins: keep the row usable by assigning
      // the bin nearest the center frequency.
      int k = static_cast<int>(std::lrint(center / bin_hz));
      k = std::clamp(k, 0, n_bins - 1);
      fb.at(m, k) = 1.0;
    }
  }
  return fb;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (clip.sample_rate <= 0 || target_rate <= 0) {
    throw validation_error("resample: rates must be positive");
  }
  if (clip.sample_rate == target_rate) return clip;

  const int n_in = static_cast<int>(clip.samples.size());
  const int64_t n_out = std::llround(static_cast<double>(n_in) * target_rate /
                                     clip.sample_rate);
  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  // Anti-aliasing: scale the sinc cutoff by the ratio when downsampling.
  const double cutoff = std::min(1.0, ratio) * 0.97;
  const int zeros = 24;
  const double half_width = zeros / cutoff;

  AudioClip out;
  out.meta = clip.meta;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<size_t>(n_out));

  for (int64_t t = 0; t < n_out; ++t) {
    const double src = static_cast<double>(t) / ratio;
    const int j0 = static_cast<int>(std::ceil(src - half_width));
    const int j1 = static_cast<int>(std::floor(src + half_width));
    double acc = 0.0;
    for (int j = std::max(0, j0); j <= std::min(n_in - 1, j1); ++j) {
      const double x = src - j;
      const double sx = cutoff * x;
      const double sinc =
          sx == 0.0 ? 1.0 : std::sin(M_PI * sx) / (M_PI * sx);
      const double hann = 0.5 + 0.5 * std::cos(M_PI * x / half_width);
      acc += clip.samples[static_cast<size_t>(j)] * cutoff * sinc * hann;
    }
    out.samples[static_cast<size_t>(t)] = static_cast<float>(acc);
  }
  return out;
}

namespace {

// Filterbanks are pure functions of (config, fmax); memoized read-only.
const SparseFilterbank& cached_filterbank(const FeatureConfig& config,
                                          double fmax_override) {
  static std::map<std::string, SparseFilterbank> cache;
  static std::mutex mu;
  const std::string key = config.name + "/" + std::to_string(config.sample_rate) +
                          "/" + std::to_string(config.n_mels) + "/" +
                          std::to_string(config.n_fft) + "/" +
                          std::to_string(config.fmin) + "/" +
                          std::to_string(config.effective_fmax()) + "/" +
                          std::to_string(fmax_override);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, sparsify(mel_filterbank(config, fmax_override))).first;
  }
  return it->second;
}

}  // namespace

SpectrogramBatch logmel(const AudioClip& clip, const FeatureConfig& config,
                        double fmax_override) {
  config.validate();
  if (clip.sample_rate != config.sample_rate) {
    throw validation_error("logmel: clip rate " + std::to_string(clip.sample_rate) +
                           " != config rate " + std::to_string(config.sample_rate));
  }
  if (clip.samples.empty()) throw validation_error("logmel: empty waveform");

  const int n = static_cast<int>(clip.samples.size());
  const int n_frames = config.frames_for(n);
  const int n_fft = config.n_fft;
  const int n_bins = config.n_bins();
  const auto& fb = cached_filterbank(config, fmax_override);

  // Periodic Hann window, zero-padded symmetrically to n_fft.
  std::vector<double> window(static_cast<size_t>(n_fft), 0.0);
  const int off = (n_fft - config.win_length) / 2;
  for (int j = 0; j < config.win_length; ++j) {
    window[static_cast<size_t>(off + j)] =
        0.5 - 0.5 * std::cos(2.0 * M_PI * j / config.win_length);
  }

  SpectrogramBatch out;
  out.config_name = config.name;
  out.values = Tensor(1, 1, config.n_mels, n_frames);
  const int label = scene_index(clip.meta.scene_label);
  out.labels.assign(1, label);

  std::vector<std::complex<double>> frame(static_cast<size_t>(n_fft));
  std::vector<double> power(static_cast<size_t>(n_bins));
  float* dst = out.values.ptr(0, 0);

  for (int t = 0; t < n_frames; ++t) {
    const int center = t * config.hop_length;
    for (int j = 0; j < n_fft; ++j) {
      const int idx = reflect_index(center - n_fft / 2 + j, n);
      frame[static_cast<size_t>(j)] =
          static_cast<double>(clip.samples[static_cast<size_t>(idx)]) *
          window[static_cast<size_t>(j)];
    }
    fft_inplace(frame);
    for (int k = 0; k < n_bins; ++k) power[static_cast<size_t>(k)] = std::norm(frame[static_cast<size_t>(k)]);

    for (int m = 0; m < config.n_mels; ++m) {
      const auto& w = fb.weights[static_cast<size_t>(m)];
      const int lo = fb.first_bin[static_cast<size_t>(m)];
      double acc = 0.0;
      for (size_t i = 0; i < w.size(); ++i) acc += w[i] * power[static_cast<size_t>(lo) + i];
      dst[static_cast<size_t>(m) * n_frames + t] =
          static_cast<float>(std::log(acc + kLogEps));
    }
  }
  return out;
}

SpectrogramBatch logmel_batch(const std::vector<AudioClip>& clips,
                              const FeatureConfig& config,
                              double fmax_override) {
  if (clips.empty()) throw validation_error("logmel_batch: empty batch");
  SpectrogramBatch first = logmel(clips[0], config, fmax_override);
  const int mels = first.values.h, frames = first.values.w;

  SpectrogramBatch out;
  out.config_name = config.name;
  out.values = Tensor(static_cast<int>(clips.size()), 1, mels, frames);
  out.labels.resize(clips.size());
  std::memcpy(out.values.ptr(0, 0), first.values.ptr(0, 0),
              sizeof(float) * static_cast<size_t>(mels) * frames);
  out.labels[0] = first.labels[0];
  for (size_t i = 1; i < clips.size(); ++i) {
    SpectrogramBatch one = logmel(clips[i], config, fmax_override);
    if (one.values.h != mels || one.values.w != frames) {
      throw validation_error("logmel_batch: inconsistent shapes in batch");
    }
    std::memcpy(out.values.ptr(static_cast<int>(i), 0), one.values.ptr(0, 0),
                sizeof(float) * static_cast<size_t>(mels) * frames);
    out.labels[i] = one.labels[0];
  }
  return out;
}

void write_feature_cache(const std::string& dir, const FeatureConfig& config,
                         const std::string& clip_id, const Tensor& values) {
  const fs::path sub = fs::path(dir) / config.name;
  fs::create_directories(sub);
  const fs::path meta = sub / "config.json";
  if (!fs::exists(meta)) {
    json j{{"name", config.name},
           {"sample_rate", config.sample_rate},
           {"n_mels", config.n_mels},
           {"window_ms", config.window_ms},
           {"hop_ms", config.hop_ms},
           {"win_length", config.win_length},
           {"hop_length", config.hop_length},
           {"n_fft", config.n_fft},
           {"fmin", config.fmin},
           {"fmax", config.fmax},
           {"shape", {values.h, values.w}}};
    std::ofstream f(meta);
    f << j.dump(2) << '\n';
  }
  std::ofstream f(sub / (clip_id + ".f32"), std::ios::binary);
  if (!f) throw validation_error("cannot write feature cache for " + clip_id);
  f.write(reinterpret_cast<const char*>(values.v.data()),
          static_cast<std::streamsize>(values.v.size() * sizeof(float)));
}

Tensor read_feature_cache(const std::string& dir, const FeatureConfig& config,
                          const std::string& clip_id) {
  const fs::path sub = fs::path(dir) / config.name;
  std::ifstream mf(sub / "config.json");
  if (!mf) throw validation_error("feature cache missing config.json in " + sub.string());
  json j = json::parse(mf);
  const int mels = j.at("shape")[0].get<int>();
  const int frames = j.at("shape")[1].get<int>();
  if (j.at("name").get<std::string>() != config.name) {
    throw validation_error("feature cache config mismatch for " + clip_id);
  }
  Tensor t(1, 1, mels, frames);
  std::ifstream f(sub / (clip_id + ".f32"), std::ios::binary);
  if (!f) throw validation_error("feature cache entry missing: " + clip_id);
  f.read(reinterpret_cast<char*>(t.v.data()),
         static_cast<std::streamsize>(t.v.size() * sizeof(float)));
  if (static_cast<size_t>(f.gcount()) != t.v.size() * sizeof(float)) {
    throw validation_error("feature cache entry truncated: " + clip_id);
  }
  return t;
}

}  // namespace asckit
