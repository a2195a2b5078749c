#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"

#include "asckit/corpus.hpp"
#include "asckit/features.hpp"
#include "asckit/wav.hpp"

namespace fs = std::filesystem;
using namespace asckit;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("asckit_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<ClipMeta> balanced_manifest(int per_class) {
  std::vector<ClipMeta> out;
  for (int i = 0; i < per_class; ++i) {
    for (int k = 0; k < kNumClasses; ++k) {
      ClipMeta m;
      m.scene_label = std::string(scene_labels()[static_cast<size_t>(k)]);
      m.clip_id = m.scene_label + "-" + std::to_string(i);
      m.filename = "audio/" + m.clip_id + ".wav";
      m.city_id = "city" + std::to_string(i % 3);
      m.device_id = "a";
      out.push_back(m);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("manifest: single row parses to one ClipMeta") {
  const auto dir = temp_dir("manifest1");
  {
    std::ofstream f(dir / "meta.tsv");
    f << "filename\tscene_label\n";
    f << "audio/a.wav\tpark\n";
  }
  const auto metas = load_manifest((dir / "meta.tsv").string());
  REQUIRE(metas.size() == 1);
  CHECK(metas[0].clip_id == "a");
  CHECK(metas[0].scene_label == "park");
}

TEST_CASE("manifest: unknown label rejected") {
  const auto dir = temp_dir("manifest2");
  {
    std::ofstream f(dir / "meta.tsv");
    f << "filename\tscene_label\n";
    f << "audio/a.wav\tgarden\n";
  }
  CHECK_THROWS_AS(load_manifest((dir / "meta.tsv").string()), validation_error);
}

TEST_CASE("manifest: duplicate ids and missing columns rejected") {
  const auto dir = temp_dir("manifest3");
  {
    std::ofstream f(dir / "dup.tsv");
    f << "filename\tscene_label\n";
    f << "audio/a.wav\tpark\n";
    f << "other/a.wav\tbus\n";
  }
  CHECK_THROWS_AS(load_manifest((dir / "dup.tsv").string()), validation_error);
  {
    std::ofstream f(dir / "nocol.tsv");
    f << "filename\tlabel\naudio/a.wav\tpark\n";
  }
  CHECK_THROWS_AS(load_manifest((dir / "nocol.tsv").string()), validation_error);
  CHECK_THROWS_AS(load_manifest((dir / "missing.tsv").string()), validation_error);
}

TEST_CASE("manifest: ten-class fixture round-trips") {
  const auto dir = temp_dir("manifest4");
  const auto metas = balanced_manifest(1);
  REQUIRE(metas.size() == 10);
  write_manifest((dir / "meta.tsv").string(), metas);
  const auto back = load_manifest((dir / "meta.tsv").string());
  REQUIRE(back.size() == metas.size());
  std::set<std::string> labels;
  for (size_t i = 0; i < metas.size(); ++i) {
    CHECK(back[i].clip_id == metas[i].clip_id);
    CHECK(back[i].scene_label == metas[i].scene_label);
    CHECK(back[i].city_id == metas[i].city_id);
    CHECK(back[i].device_id == metas[i].device_id);
    labels.insert(back[i].scene_label);
  }
  CHECK(labels.size() == 10);
}

TEST_CASE("make_split: fraction 100 returns manifest order") {
  const auto manifest = balanced_manifest(3);
  const auto split = make_split(manifest, 100, 7);
  REQUIRE(split.clip_ids.size() == manifest.size());
  for (size_t i = 0; i < manifest.size(); ++i) {
    CHECK(split.clip_ids[i] == manifest[i].clip_id);
  }
}

TEST_CASE("make_split: exact stratification on balanced manifest") {
  const auto manifest = balanced_manifest(10);  // 100 clips, 10 per class
  const auto split = make_split(manifest, 50, 3);
  CHECK(split.clip_ids.size() == 50);
  std::map<std::string, int> per_class;
  std::map<std::string, std::string> label_of;
  for (const auto& m : manifest) label_of[m.clip_id] = m.scene_label;
  for (const auto& id : split.clip_ids) per_class[label_of[id]]++;
  for (const auto& [label, count] : per_class) {
    CAPTURE(label);
    CHECK(count == 5);
  }
}

TEST_CASE("make_split: nesting and stratification over random fixtures") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    // Unbalanced manifest: class k gets 3..40 clips.
    std::vector<ClipMeta> manifest;
    std::vector<int> sizes;
    for (int k = 0; k < kNumClasses; ++k) {
      const int n = 3 + rng.uniform_int(38);
      sizes.push_back(n);
      for (int i = 0; i < n; ++i) {
        ClipMeta m;
        m.scene_label = std::string(scene_labels()[static_cast<size_t>(k)]);
        m.clip_id = m.scene_label + "_" + std::to_string(i);
        m.filename = "audio/" + m.clip_id + ".wav";
        manifest.push_back(m);
      }
    }
    const uint64_t seed = rng.next_u64();
    std::map<int, std::set<std::string>> splits;
    for (int f : kSplitFractions) {
      const auto s = make_split(manifest, f, seed);
      splits[f] = {s.clip_ids.begin(), s.clip_ids.end()};

      std::map<std::string, int> per_class;
      std::map<std::string, std::string> label_of;
      for (const auto& m : manifest) label_of[m.clip_id] = m.scene_label;
      for (const auto& id : s.clip_ids) per_class[label_of[id]]++;
      for (int k = 0; k < kNumClasses; ++k) {
        const double exact = sizes[static_cast<size_t>(k)] * f / 100.0;
        const int got = per_class[std::string(scene_labels()[static_cast<size_t>(k)])];
        CHECK(std::abs(got - exact) <= 1.0);
      }
    }
    for (size_t a = 0; a + 1 < std::size(kSplitFractions); ++a) {
      const auto& lo = splits[kSplitFractions[a]];
      const auto& hi = splits[kSplitFractions[a + 1]];
      for (const auto& id : lo) {
        CAPTURE(kSplitFractions[a]);
        CHECK(hi.count(id) == 1);
      }
    }
  }
}

TEST_CASE("make_split: invalid fraction and empty class rejected") {
  const auto manifest = balanced_manifest(2);
  CHECK_THROWS_AS(make_split(manifest, 30, 1), validation_error);
  std::vector<ClipMeta> partial(manifest.begin(), manifest.begin() + 9);
  CHECK_THROWS_AS(make_split(partial, 50, 1), validation_error);
}

TEST_CASE("split files: plain list and csv variants") {
  const auto dir = temp_dir("splitfiles");
  const auto manifest = balanced_manifest(2);
  const auto split = make_split(manifest, 50, 11);
  write_split((dir / "split50.txt").string(), split, manifest);
  const auto back = load_split((dir / "split50.txt").string(), manifest, 50);
  CHECK(back.clip_ids == split.clip_ids);

  {
    std::ofstream f(dir / "split.csv");
    f << "index,filename\n";
    f << "0," << manifest[0].filename << "\n";
    f << "1," << manifest[3].filename << "\n";
  }
  const auto csv = load_split((dir / "split.csv").string(), manifest, 5);
  REQUIRE(csv.clip_ids.size() == 2);
  CHECK(csv.clip_ids[0] == manifest[0].clip_id);
  CHECK(csv.clip_ids[1] == manifest[3].clip_id);

  {
    std::ofstream f(dir / "bad.txt");
    f << "audio/not_in_manifest.wav\n";
  }
  CHECK_THROWS_AS(load_split((dir / "bad.txt").string(), manifest, 5), validation_error);
}

TEST_CASE("synth_corpus: cardinality and determinism") {
  const auto one = synth_corpus(1, 16000, 42);
  REQUIRE(one.size() == 10);
  std::set<std::string> labels;
  for (const auto& c : one) {
    labels.insert(c.meta.scene_label);
    CHECK(c.samples.size() == 16000);
  }
  CHECK(labels.size() == 10);

  const auto a = synth_corpus(3, 22050, 7);
  const auto b = synth_corpus(3, 22050, 7);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].meta.clip_id == b[i].meta.clip_id);
    CHECK(a[i].samples == b[i].samples);  // bit-identical
  }
  const auto c = synth_corpus(3, 22050, 8);
  CHECK(a[0].samples != c[0].samples);
}

TEST_CASE("synth_corpus: band-energy classifier separates the classes") {
  const auto clips = synth_corpus(5, 44100, 123);
  const FeatureConfig fc = feature_preset("bcbl44");

  // Closed-form per-band energy classifier: mean log-mel energy around each
  // class tone, argmax over classes.
  const double mel_hi = 2595.0 * std::log10(1.0 + (fc.sample_rate / 2.0) / 700.0);
  const double step = mel_hi / (fc.n_mels + 1);
  auto band_of = [&](double hz) {
    const double mel = 2595.0 * std::log10(1.0 + hz / 700.0);
    int m = static_cast<int>(std::lround(mel / step)) - 1;
    return std::clamp(m, 0, fc.n_mels - 1);
  };

  int hits = 0;
  for (const auto& clip : clips) {
    const auto spec = logmel(clip, fc);
    const float* v = spec.values.ptr(0, 0);
    const int frames = spec.values.w;
    int best_class = -1;
    double best_energy = -1e300;
    for (int k = 0; k < kNumClasses; ++k) {
      const int center = band_of(synth_class_tone_hz(k));
      double acc = 0.0;
      for (int m = std::max(0, center - 2); m <= std::min(fc.n_mels - 1, center + 2); ++m) {
        for (int t = 0; t < frames; ++t) acc += v[static_cast<size_t>(m) * frames + t];
      }
      if (acc > best_energy) {
        best_energy = acc;
        best_class = k;
      }
    }
    if (best_class == scene_index(clip.meta.scene_label)) ++hits;
  }
  const double acc = static_cast<double>(hits) / static_cast<double>(clips.size());
  CHECK(acc > 0.9);
}

TEST_CASE("materialize + load_clip: 1 s contract and wav round trip") {
  const auto dir = temp_dir("materialize");
  const auto clips = synth_corpus(1, 8000, 5);
  const std::string manifest_path = materialize_corpus(dir.string(), clips);
  const auto manifest = load_manifest(manifest_path);
  REQUIRE(manifest.size() == 10);
  for (const auto& m : manifest) {
    const AudioClip clip = load_clip(dir.string(), m);
    CHECK(clip.samples.size() == 8000);
    CHECK(clip.sample_rate == 8000);
    for (float s : clip.samples) CHECK(std::isfinite(s));
  }
}

TEST_CASE("load_clip: short clips padded, long clips center-cropped") {
  const auto dir = temp_dir("padcrop");
  fs::create_directories(dir / "audio");
  std::vector<float> short_wave(1000, 0.5f);
  write_wav((dir / "audio" / "short.wav").string(), short_wave, 8000);
  std::vector<float> long_wave(20000, 0.25f);
  write_wav((dir / "audio" / "long.wav").string(), long_wave, 8000);

  ClipMeta m;
  m.filename = "audio/short.wav";
  m.clip_id = "short";
  m.scene_label = "park";
  const auto padded = load_clip(dir.string(), m);
  CHECK(padded.samples.size() == 8000);
  CHECK(padded.samples[999] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(padded.samples[1000] == 0.0f);

  m.filename = "audio/long.wav";
  m.clip_id = "long";
  const auto cropped = load_clip(dir.string(), m);
  CHECK(cropped.samples.size() == 8000);
}
