#pragma once

#include <string>
#include <vector>

#include "asckit/common.hpp"
#include "asckit/rng.hpp"

namespace asckit {

struct ClipMeta {
  std::string clip_id;      // filename stem, unique within a manifest
  std::string filename;     // as written in the manifest (relative path)
  std::string scene_label;  // one of the 10-class vocabulary
  std::string city_id;
  std::string device_id;
};

struct AudioClip {
  ClipMeta meta;
  std::vector<float> samples;
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

struct TrainSplit {
  int fraction = 100;  // one of {5,10,25,50,100}
  std::vector<std::string> clip_ids;
};

inline const int kSplitFractions[] = {5, 10, 25, 50, 100};
bool is_valid_fraction(int fraction);

// Tab-separated manifest with a header row naming at least `filename` and
// `scene_label`; `identifier` and `source_label` are picked up when present.
// Rejects unknown labels and duplicate clip ids.
std::vector<ClipMeta> load_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ClipMeta>& metas);

// Deterministic stratified split: per-class counts are round(fraction * n/100)
// and splits nest across fractions for the same seed. Output order follows the
// manifest.
TrainSplit make_split(const std::vector<ClipMeta>& manifest, int fraction,
                      uint64_t seed);

// Split file: either one relative audio path per line, or a CSV with a
// `filename` column. Entries are matched against the manifest by clip id.
TrainSplit load_split(const std::string& path,
                      const std::vector<ClipMeta>& manifest, int fraction);
void write_split(const std::string& path, const TrainSplit& split,
                 const std::vector<ClipMeta>& manifest);

// Class-separable synthetic corpus: each class gets 1 s clips built from a
// class-indexed tone band plus seeded noise, so a per-band energy classifier
// can already tell the classes apart. Deterministic for a fixed seed.
std::vector<AudioClip> synth_corpus(int n_per_class, int sample_rate,
                                    uint64_t seed);

// Tone frequency assigned to a class by synth_corpus (useful for oracles).
double synth_class_tone_hz(int class_index);

// Decodes one manifest entry: reads the WAV under audio_root, downmixes to
// mono in [-1,1], zero-pads short clips at the tail and center-crops long
// ones so the result is exactly 1 s.
AudioClip load_clip(const std::string& audio_root, const ClipMeta& meta);

// Materializes clips as 16-bit PCM WAVs under root (creating audio/) and
// writes a manifest; returns the manifest path.
std::string materialize_corpus(const std::string& root,
                               const std::vector<AudioClip>& clips);

}  // namespace asckit
