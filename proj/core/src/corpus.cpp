#include "asckit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "asckit/wav.hpp"

namespace fs = std::filesystem;

namespace asckit {

const std::array<std::string_view, kNumClasses>& scene_labels() {
  static const std::array<std::string_view, kNumClasses> labels = {
      "airport",        "bus",           "metro",
      "metro_station",  "park",          "public_square",
      "shopping_mall",  "street_pedestrian", "street_traffic",
      "tram"};
  return labels;
}

int scene_index(std::string_view label) {
  const auto& ls = scene_labels();
  for (int i = 0; i < kNumClasses; ++i) {
    if (ls[static_cast<size_t>(i)] == label) return i;
  }
  return -1;
}

bool is_valid_fraction(int fraction) {
  for (int f : kSplitFractions) {
    if (f == fraction) return true;
  }
  return false;
}

namespace {

std::string stem_of(const std::string& filename) {
  return fs::path(filename).stem().string();
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

std::vector<ClipMeta> load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw validation_error("manifest not found: " + path);

  std::string line;
  if (!std::getline(f, line)) throw validation_error("manifest is empty: " + path);
  const auto header = split_fields(line, '\t');
  const int c_file = find_column(header, "filename");
  const int c_label = find_column(header, "scene_label");
  if (c_file < 0 || c_label < 0) {
    throw validation_error(
        "manifest must have 'filename' and 'scene_label' columns: " + path);
  }
  const int c_city = find_column(header, "identifier");
  const int c_dev = find_column(header, "source_label");

  std::vector<ClipMeta> out;
  std::set<std::string> seen;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    if (static_cast<int>(fields.size()) <= std::max(c_file, c_label)) {
      throw validation_error("manifest row " + std::to_string(line_no) +
                             " has too few columns");
    }
    ClipMeta m;
    m.filename = fields[static_cast<size_t>(c_file)];
    m.clip_id = stem_of(m.filename);
    m.scene_label = fields[static_cast<size_t>(c_label)];
    if (scene_index(m.scene_label) < 0) {
      throw validation_error("unknown scene label '" + m.scene_label +
                             "' at manifest row " + std::to_string(line_no));
    }
    if (!seen.insert(m.clip_id).second) {
      throw validation_error("duplicate clip_id '" + m.clip_id +
                             "' at manifest row " + std::to_string(line_no));
    }
    if (c_city >= 0 && c_city < static_cast<int>(fields.size()))
      m.city_id = fields[static_cast<size_t>(c_city)];
    if (c_dev >= 0 && c_dev < static_cast<int>(fields.size()))
      m.device_id = fields[static_cast<size_t>(c_dev)];
    out.push_back(std::move(m));
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<ClipMeta>& metas) {
  std::ofstream f(path);
  if (!f) throw validation_error("cannot write manifest: " + path);
  f << "filename\tscene_label\tidentifier\tsource_label\n";
  for (const auto& m : metas) {
    f << m.filename << '\t' << m.scene_label << '\t' << m.city_id << '\t'
      << m.device_id << '\n';
  }
}

TrainSplit make_split(const std::vector<ClipMeta>& manifest, int fraction,
                      uint64_t seed) {
  if (!is_valid_fraction(fraction)) {
    throw validation_error("invalid split fraction " + std::to_string(fraction) +
                           " (want 5/10/25/50/100)");
  }
  // Manifest indices per class, in manifest order.
  std::vector<std::vector<int>> per_class(kNumClasses);
  for (size_t i = 0; i < manifest.size(); ++i) {
    per_class[static_cast<size_t>(scene_index(manifest[i].scene_label))]
        .push_back(static_cast<int>(i));
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (per_class[static_cast<size_t>(k)].empty()) {
      throw validation_error(std::string("class with zero clips: ") +
                             std::string(scene_labels()[static_cast<size_t>(k)]));
    }
  }

  // One seeded shuffle per class; taking a prefix of it makes the 5/10/25/50
  // selections nested for the same seed. Emission follows manifest order.
  Rng root(seed);
  std::vector<char> selected(manifest.size(), 0);
  for (int k = 0; k < kNumClasses; ++k) {
    auto ids = per_class[static_cast<size_t>(k)];
    Rng stream = root.fork(static_cast<uint64_t>(k));
    stream.shuffle(ids);
    const double exact = static_cast<double>(ids.size()) * fraction / 100.0;
    const size_t count = std::min(ids.size(), static_cast<size_t>(std::llround(exact)));
    for (size_t i = 0; i < count; ++i) selected[static_cast<size_t>(ids[i])] = 1;
  }

  TrainSplit split;
  split.fraction = fraction;
  for (size_t i = 0; i < manifest.size(); ++i) {
    if (selected[i]) split.clip_ids.push_back(manifest[i].clip_id);
  }
  return split;
}

TrainSplit load_split(const std::string& path,
                      const std::vector<ClipMeta>& manifest, int fraction) {
  std::ifstream f(path);
  if (!f) throw validation_error("split file not found: " + path);

  std::map<std::string, int> by_id;
  for (size_t i = 0; i < manifest.size(); ++i) by_id[manifest[i].clip_id] = static_cast<int>(i);

  TrainSplit split;
  split.fraction = fraction;
  std::string line;
  bool first = true;
  int filename_col = 0;
  bool csv = false;
  while (std::getline(f, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      // CSV variant: a header row containing a `filename` column.
      if (line.find(',') != std::string::npos) {
        const auto header = split_fields(line, ',');
        const int c = find_column(header, "filename");
        if (c >= 0) {
          csv = true;
          filename_col = c;
          continue;
        }
      }
    }
    std::string name = line;
    if (csv) {
      const auto fields = split_fields(line, ',');
      if (filename_col >= static_cast<int>(fields.size())) continue;
      name = fields[static_cast<size_t>(filename_col)];
    }
    const std::string id = stem_of(name);
    if (!by_id.count(id)) {
      throw validation_error("split entry not in manifest: " + name);
    }
    split.clip_ids.push_back(id);
  }
  return split;
}

void write_split(const std::string& path, const TrainSplit& split,
                 const std::vector<ClipMeta>& manifest) {
  std::map<std::string, std::string> file_by_id;
  for (const auto& m : manifest) file_by_id[m.clip_id] = m.filename;
  std::ofstream f(path);
  if (!f) throw validation_error("cannot write split file: " + path);
  for (const auto& id : split.clip_ids) {
    auto it = file_by_id.find(id);
    if (it == file_by_id.end()) throw validation_error("split id not in manifest: " + id);
    f << it->second << '\n';
  }
}

double synth_class_tone_hz(int class_index) {
  // Bands stay below 4 kHz so they survive resampling to any rate >= 8 kHz.
  return 350.0 + 330.0 * class_index;
}

std::vector<AudioClip> synth_corpus(int n_per_class, int sample_rate,
                                    uint64_t seed) {
  if (n_per_class < 1) throw validation_error("n_per_class must be >= 1");
  if (sample_rate <= 0) throw validation_error("sample_rate must be positive");

  Rng root(seed);
  std::vector<AudioClip> out;
  out.reserve(static_cast<size_t>(n_per_class) * kNumClasses);
  const int n = sample_rate;  // exactly 1 s

  for (int k = 0; k < kNumClasses; ++k) {
    const double f0 = synth_class_tone_hz(k);
    for (int i = 0; i < n_per_class; ++i) {
      Rng rng = root.fork(static_cast<uint64_t>(k) * 100003ull +
                          static_cast<uint64_t>(i));
      const double amp = 0.30 * (1.0 + 0.2 * (rng.uniform() - 0.5));
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      const double phase2 = rng.uniform(0.0, 2.0 * M_PI);
      const double detune = 1.0 + 0.01 * (rng.uniform() - 0.5);

      AudioClip clip;
      clip.sample_rate = sample_rate;
      clip.samples.resize(static_cast<size_t>(n));
      for (int t = 0; t < n; ++t) {
        const double tt = static_cast<double>(t) / sample_rate;
        double s = amp * std::sin(2.0 * M_PI * f0 * detune * tt + phase);
        s += 0.35 * amp * std::sin(2.0 * M_PI * 2.0 * f0 * detune * tt + phase2);
        s += 0.01 * rng.normal();
        clip.samples[static_cast<size_t>(t)] = static_cast<float>(s);
      }
      const std::string label(scene_labels()[static_cast<size_t>(k)]);
      clip.meta.scene_label = label;
      clip.meta.clip_id = "synth_" + label + "_" + std::to_string(i);
      clip.meta.filename = "audio/" + clip.meta.clip_id + ".wav";
      clip.meta.city_id = "synth";
      clip.meta.device_id = "a";
      out.push_back(std::move(clip));
    }
  }
  return out;
}

AudioClip load_clip(const std::string& audio_root, const ClipMeta& meta) {
  const fs::path p = fs::path(audio_root) / meta.filename;
  WavData wav = read_wav(p.string());

  AudioClip clip;
  clip.meta = meta;
  clip.sample_rate = wav.sample_rate;
  const size_t want = static_cast<size_t>(wav.sample_rate);  // 1 s
  auto& s = wav.samples;
  if (s.size() < want) {
    s.resize(want, 0.0f);  // tail zero-pad
  } else if (s.size() > want) {
    const size_t off = (s.size() - want) / 2;  // center crop
    s = std::vector<float>(s.begin() + static_cast<long>(off),
                           s.begin() + static_cast<long>(off + want));
  }
  clip.samples = std::move(s);
  return clip;
}

std::string materialize_corpus(const std::string& root,
                               const std::vector<AudioClip>& clips) {
  fs::create_directories(fs::path(root) / "audio");
  std::vector<ClipMeta> metas;
  metas.reserve(clips.size());
  for (const auto& clip : clips) {
    write_wav((fs::path(root) / clip.meta.filename).string(), clip.samples,
              clip.sample_rate);
    metas.push_back(clip.meta);
  }
  const std::string manifest = (fs::path(root) / "meta.tsv").string();
  write_manifest(manifest, metas);
  return manifest;
}

}  // namespace asckit
