#pragma once

#include <string>
#include <vector>

#include "asckit/common.hpp"
#include "asckit/corpus.hpp"
#include "asckit/tensor.hpp"

namespace asckit {

// One of the three extraction presets. The millisecond values are the
// nominal configuration; the sample-domain constants (win/hop/n_fft) are
// frozen so the 1 s frame counts are exact contracts:
//   bcbl44    44.1 kHz, 256 mels, win 3308 (75 ms), hop 500  -> 89 frames
//   student32 32 kHz,   256 mels, win 3072 (96 ms), hop 504  -> 64 frames
//   passt44   44.1 kHz, 128 mels, win  794 (18 ms), hop 309  -> 143 frames
struct FeatureConfig {
  std::string name;
  int sample_rate = 0;
  int n_mels = 0;
  double window_ms = 0.0;
  double hop_ms = 0.0;
  int win_length = 0;   // round(window_ms * sample_rate / 1000)
  int hop_length = 0;   // frozen so that 1 s lands on the frame contract
  int n_fft = 0;        // next power of two >= win_length
  double fmin = 0.0;
  double fmax = 0.0;    // 0 -> Nyquist

  double effective_fmax() const {
    return fmax > 0.0 ? fmax : sample_rate / 2.0;
  }
  int n_bins() const { return n_fft / 2 + 1; }

  // Frame count for a waveform of n samples (centered frames).
  int frames_for(int n_samples) const { return n_samples / hop_length + 1; }

  void validate() const;
};

// Preset lookup by name (case-insensitive): bcbl44 / student32 / passt44.
FeatureConfig feature_preset(std::string_view name);

// Log-mel spectrograms of a batch of clips, shape [B, 1, n_mels, n_frames].
struct SpectrogramBatch {
  Tensor values;
  std::string config_name;
  std::vector<int> labels;  // scene class indices, parallel to the batch dim
};

// Triangular mel filterbank, rows [n_mels] x cols [n_fft/2+1] (HTK mel scale,
// unnormalized). Every row is guaranteed at least one nonzero entry.
// fmax_override (optional, Hz) replaces the config fmax; it must not exceed
// Nyquist.
Mat mel_filterbank(const FeatureConfig& config, double fmax_override = 0.0);

// Band-limited resampling (windowed-sinc with anti-aliasing when
// downsampling). Duration is preserved to within one sample.
AudioClip resample(const AudioClip& clip, int target_rate);

// Log-mel extraction of one clip: values are log(mel_power + kLogEps).
// The clip's rate must equal config.sample_rate.
inline constexpr double kLogEps = 1e-5;
SpectrogramBatch logmel(const AudioClip& clip, const FeatureConfig& config,
                        double fmax_override = 0.0);

// Batch extraction in clip order.
SpectrogramBatch logmel_batch(const std::vector<AudioClip>& clips,
                              const FeatureConfig& config,
                              double fmax_override = 0.0);

// On-disk spectrogram cache: <dir>/<config.name>/<clip_id>.f32 holds raw
// little-endian float32 values, and <dir>/<config.name>/config.json carries
// the full FeatureConfig plus the shape.
void write_feature_cache(const std::string& dir, const FeatureConfig& config,
                         const std::string& clip_id, const Tensor& values);
Tensor read_feature_cache(const std::string& dir, const FeatureConfig& config,
                          const std::string& clip_id);

}  // namespace asckit
