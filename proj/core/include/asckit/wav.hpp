#pragma once

#include <string>
#include <vector>

namespace asckit {

struct WavData {
  int sample_rate = 0;
  std::vector<float> samples;  // mono, [-1, 1]
};

// Reads a RIFF/WAVE file. Handles 16-bit PCM and 32-bit float; multi-channel
// input is averaged down to mono.
WavData read_wav(const std::string& path);

// Writes mono 16-bit PCM. Samples are clamped to [-1, 1].
void write_wav(const std::string& path, const std::vector<float>& samples,
               int sample_rate);

}  // namespace asckit
