#include "asckit/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "asckit/common.hpp"

namespace asckit {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ofstream& f, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}
void wr_u16(std::ofstream& f, uint16_t v) {
  uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw validation_error("cannot open WAV file: " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0) {
    throw validation_error("not a RIFF/WAVE file: " + path);
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  size_t data_off = 0, data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const char* id = reinterpret_cast<const char*>(raw.data() + pos);
    const uint32_t len = rd_u32(raw.data() + pos + 4);
    const size_t body = pos + 8;
    if (std::memcmp(id, "fmt ", 4) == 0 && body + 16 <= raw.size()) {
      format = rd_u16(raw.data() + body);
      channels = rd_u16(raw.data() + body + 2);
      sample_rate = rd_u32(raw.data() + body + 4);
      bits = rd_u16(raw.data() + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = std::min<size_t>(len, raw.size() - body);
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (sample_rate == 0 || channels == 0 || data_off == 0) {
    throw validation_error("WAV missing fmt/data chunk: " + path);
  }

  WavData out;
  out.sample_rate = static_cast<int>(sample_rate);
  const uint8_t* d = raw.data() + data_off;

  if (format == 1 && bits == 16) {
    const size_t frames = data_len / (2 * channels);
    out.samples.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
      double acc = 0.0;
      for (int ch = 0; ch < channels; ++ch) {
        const int16_t s =
            static_cast<int16_t>(rd_u16(d + (i * channels + ch) * 2));
        acc += static_cast<double>(s) / 32768.0;
      }
      out.samples[i] = static_cast<float>(acc / channels);
    }
  } else if (format == 3 && bits == 32) {
    const size_t frames = data_len / (4 * channels);
    out.samples.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
      double acc = 0.0;
      for (int ch = 0; ch < channels; ++ch) {
        uint32_t u = rd_u32(d + (i * channels + ch) * 4);
        float s;
        std::memcpy(&s, &u, 4);
        acc += s;
      }
      out.samples[i] = static_cast<float>(acc / channels);
    }
  } else {
    throw validation_error("unsupported WAV encoding (want PCM16 or float32): " +
                           path);
  }
  return out;
}

void write_wav(const std::string& path, const std::vector<float>& samples,
               int sample_rate) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw validation_error("cannot write WAV file: " + path);
  const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
  f.write("RIFF", 4);
  wr_u32(f, 36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, 1);  // PCM
  wr_u16(f, 1);  // mono
  wr_u32(f, static_cast<uint32_t>(sample_rate));
  wr_u32(f, static_cast<uint32_t>(sample_rate) * 2);
  wr_u16(f, 2);
  wr_u16(f, 16);
  f.write("data", 4);
  wr_u32(f, data_len);
  for (float s : samples) {
    const double clamped = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const int32_t q = static_cast<int32_t>(std::lrint(clamped * 32767.0));
    wr_u16(f, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
}

}  // namespace asckit
