#include "asckit/run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace asckit {

namespace {

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw validation_error("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

json RunConfig::to_json() const {
  json j = train.to_json();
  j["paths"] = json{{"manifest", manifest},
                    {"audio_root", audio_root},
                    {"split_file", split_file},
                    {"dir_bank", dir_bank},
                    {"teacher_logits", teacher_logits},
                    {"test_manifest", test_manifest},
                    {"output_dir", output_dir}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  json train_part = j;
  train_part.erase("paths");
  RunConfig cfg;
  cfg.train = TrainConfig::from_json(train_part);
  if (!j.contains("paths")) throw validation_error("run config: missing 'paths' section");
  const auto& p = j.at("paths");
  reject_unknown(p,
                 {"manifest", "audio_root", "split_file", "dir_bank",
                  "teacher_logits", "test_manifest", "output_dir"},
                 "run config paths");
  cfg.manifest = p.value("manifest", "");
  cfg.audio_root = p.value("audio_root", "");
  cfg.split_file = p.value("split_file", "");
  cfg.dir_bank = p.value("dir_bank", "");
  cfg.teacher_logits = p.value("teacher_logits", "");
  cfg.test_manifest = p.value("test_manifest", "");
  cfg.output_dir = p.value("output_dir", cfg.output_dir);
  if (cfg.manifest.empty()) throw validation_error("run config: paths.manifest is required");
  if (cfg.audio_root.empty()) {
    cfg.audio_root = fs::path(cfg.manifest).parent_path().string();
    if (cfg.audio_root.empty()) cfg.audio_root = ".";
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw validation_error("run config not found: " + path);
  try {
    return from_json(json::parse(f));
  } catch (const json::exception& e) {
    throw validation_error("run config JSON error in " + path + ": " + e.what());
  }
}

void RunConfig::validate_paths() const {
  if (!fs::exists(manifest)) throw validation_error("manifest not found: " + manifest);
  if (!fs::is_directory(audio_root)) {
    throw validation_error("audio root is not a directory: " + audio_root);
  }
  if (!split_file.empty() && !fs::exists(split_file)) {
    throw validation_error("split file not found: " + split_file);
  }
  if (!dir_bank.empty() && !fs::is_directory(dir_bank)) {
    throw validation_error("DIR bank is not a directory: " + dir_bank);
  }
  if (!test_manifest.empty() && !fs::exists(test_manifest)) {
    throw validation_error("test manifest not found: " + test_manifest);
  }
  if (train.system != System::nbcbl) {
    if (teacher_logits.empty()) {
      throw validation_error("system '" + system_name(train.system) +
                             "' requires paths.teacher_logits");
    }
    if (!fs::exists(teacher_logits)) {
      throw validation_error("teacher logit store not found: " + teacher_logits);
    }
  }
}

std::string RunConfig::resolved_output_dir() const {
  const char* root = std::getenv("ASCKIT_OUTPUT_ROOT");
  fs::path out(output_dir);
  if (root != nullptr && *root != '\0' && out.is_relative()) {
    return (fs::path(root) / out).string();
  }
  return out.string();
}

EvalReport run_train(const RunConfig& cfg) {
  cfg.train.validate();
  cfg.validate_paths();

  const auto manifest = load_manifest(cfg.manifest);
  std::vector<AudioClip> corpus;
  corpus.reserve(manifest.size());
  for (const auto& m : manifest) corpus.push_back(load_clip(cfg.audio_root, m));

  TrainSplit split;
  if (!cfg.split_file.empty()) {
    split = load_split(cfg.split_file, manifest, cfg.train.split_fraction);
  } else {
    split = make_split(manifest, cfg.train.split_fraction, cfg.train.seed);
  }

  TeacherLogitStore store;
  TeacherLogitStore* store_ptr = nullptr;
  if (cfg.train.system != System::nbcbl) {
    store = TeacherLogitStore::load(cfg.teacher_logits);
    store_ptr = &store;
  }

  std::vector<std::vector<float>> bank;
  const std::vector<std::vector<float>>* bank_ptr = nullptr;
  if (!cfg.dir_bank.empty()) {
    const FeatureConfig fc = feature_preset(cfg.train.feature_preset);
    bank = load_dir_bank(cfg.dir_bank, fc.sample_rate);
    if (!bank.empty()) bank_ptr = &bank;
  }

  const NetSpec spec = build_preset(cfg.train.net_preset);
  TrainOutput result = train(cfg.train, spec, corpus, split, store_ptr, bank_ptr);

  const fs::path out_dir = cfg.resolved_output_dir();
  fs::create_directories(out_dir);
  {
    std::ofstream f(out_dir / "train_log.csv", std::ios::binary);
    if (!f) throw validation_error("cannot write train log in " + out_dir.string());
    f << result.log_csv;
  }
  save_checkpoint((out_dir / "checkpoint").string(), result.model, cfg.train);

  // Final evaluation: the test manifest when given, the training split itself
  // otherwise (documented desk-scale behavior).
  const FeatureConfig fc = feature_preset(cfg.train.feature_preset);
  std::vector<AudioClip> test_clips;
  if (!cfg.test_manifest.empty()) {
    const auto test_manifest = load_manifest(cfg.test_manifest);
    const std::string root = fs::path(cfg.test_manifest).parent_path().string();
    for (const auto& m : test_manifest) {
      test_clips.push_back(load_clip(root.empty() ? "." : root, m));
    }
  } else {
    std::map<std::string, const AudioClip*> by_id;
    for (const auto& c : corpus) by_id[c.meta.clip_id] = &c;
    for (const auto& id : split.clip_ids) test_clips.push_back(*by_id.at(id));
  }
  const Tensor test_features = extract_features(test_clips, fc);
  std::vector<int> test_labels;
  for (const auto& c : test_clips) test_labels.push_back(scene_index(c.meta.scene_label));

  EvalReport report = evaluate(result.model, test_features, test_labels,
                               cfg.train.batch_size);
  report.system = system_name(cfg.train.system);
  report.split_fraction = cfg.train.split_fraction;
  report.save((out_dir / "eval_report.json").string());
  return report;
}

}  // namespace asckit
