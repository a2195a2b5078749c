#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"

#include "asckit/augment.hpp"
#include "asckit/corpus.hpp"
#include "asckit/eval_report.hpp"
#include "asckit/features.hpp"
#include "asckit/logit_store.hpp"
#include "asckit/netspec.hpp"
#include "asckit/run_config.hpp"
#include "asckit/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::string out_path(const std::string& p) {
  const char* root = std::getenv("ASCKIT_OUTPUT_ROOT");
  fs::path path(p);
  if (root != nullptr && *root != '\0' && path.is_relative()) {
    return (fs::path(root) / path).string();
  }
  return p;
}

int cmd_synth_corpus(const std::string& out_dir, int n_per_class, int rate,
                     uint64_t seed) {
  const auto clips = asckit::synth_corpus(n_per_class, rate, seed);
  const std::string manifest = asckit::materialize_corpus(out_path(out_dir), clips);
  std::printf("wrote %zu clips, manifest %s\n", clips.size(), manifest.c_str());
  return kExitOk;
}

int cmd_make_splits(const std::string& manifest_path, const std::string& out_dir,
                    std::vector<int> fractions, uint64_t seed) {
  const auto manifest = asckit::load_manifest(manifest_path);
  if (fractions.empty()) fractions = {5, 10, 25, 50, 100};
  fs::create_directories(out_path(out_dir));
  for (int f : fractions) {
    const auto split = asckit::make_split(manifest, f, seed);
    const std::string path =
        (fs::path(out_path(out_dir)) / ("split" + std::to_string(f) + ".txt")).string();
    asckit::write_split(path, split, manifest);
    std::printf("split %3d%%: %zu clips -> %s\n", f, split.clip_ids.size(), path.c_str());
  }
  return kExitOk;
}

int cmd_extract_features(const std::string& manifest_path,
                         const std::string& audio_root, const std::string& preset,
                         const std::string& cache_dir, double fmax_shift_lo,
                         double fmax_shift_hi, uint64_t seed) {
  const auto manifest = asckit::load_manifest(manifest_path);
  const asckit::FeatureConfig fc = asckit::feature_preset(preset);
  double fmax_override = 0.0;
  if (fmax_shift_lo > 0.0) {
    asckit::Rng rng(seed);
    fmax_override = asckit::pitch_shift_fmax(fc, rng, fmax_shift_lo, fmax_shift_hi);
    std::printf("pitch-shifted fmax: %.1f Hz\n", fmax_override);
  }
  for (const auto& meta : manifest) {
    asckit::AudioClip clip = asckit::load_clip(audio_root, meta);
    if (clip.sample_rate != fc.sample_rate) clip = asckit::resample(clip, fc.sample_rate);
    const auto spec = asckit::logmel(clip, fc, fmax_override);
    asckit::write_feature_cache(out_path(cache_dir), fc, meta.clip_id, spec.values);
  }
  std::printf("cached %zu spectrograms under %s/%s\n", manifest.size(),
              out_path(cache_dir).c_str(), fc.name.c_str());
  return kExitOk;
}

int cmd_complexity(const std::string& preset, const std::string& spec_file,
                   const std::string& json_out) {
  asckit::NetSpec spec;
  if (!spec_file.empty()) {
    spec = asckit::NetSpec::load(spec_file);
  } else {
    spec = asckit::build_preset(preset.empty() ? "bcbl32" : preset);
  }
  const auto report = asckit::complexity(spec);
  const auto check = asckit::check_constraints(report);

  std::printf("network           %s\n", spec.name.c_str());
  std::printf("input shape       %d x %d\n", spec.in_mels, spec.in_frames);
  std::printf("parameters        %lld\n", static_cast<long long>(report.parameter_count));
  std::printf("MACs              %lld (%.2f M)\n", static_cast<long long>(report.macs),
              static_cast<double>(report.macs) / 1e6);
  std::printf("memory (fp16)     %lld bytes (limit %lld)\n",
              static_cast<long long>(report.memory_bytes),
              static_cast<long long>(asckit::kMemoryLimitBytes));
  std::printf("constraints       %s", check.pass ? "pass" : "FAIL");
  for (const auto& v : check.violations) std::printf(" [%s]", v.c_str());
  std::printf("\n");

  if (!json_out.empty()) {
    json j = report.to_json();
    j["pass"] = check.pass;
    j["violations"] = check.violations;
    j["name"] = spec.name;
    std::ofstream f(out_path(json_out));
    f << j.dump(2) << '\n';
  }
  return check.pass ? kExitOk : kExitValidation;
}

int cmd_train(const std::string& config_path, const std::string& system,
              int split, int epochs, int64_t seed, const std::string& output_dir) {
  asckit::RunConfig cfg = asckit::RunConfig::load(config_path);
  if (!system.empty()) cfg.train.system = asckit::system_from_name(system);
  if (split > 0) cfg.train.split_fraction = split;
  if (epochs >= 0) cfg.train.epochs = epochs;
  if (seed >= 0) cfg.train.seed = static_cast<uint64_t>(seed);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  cfg.train.validate();

  const asckit::EvalReport report = asckit::run_train(cfg);
  std::printf("system %s, split %d%%: macro accuracy %.4f\n",
              asckit::system_name(cfg.train.system).c_str(),
              cfg.train.split_fraction, report.macro_accuracy);
  std::printf("artifacts in %s\n", cfg.resolved_output_dir().c_str());
  return kExitOk;
}

int cmd_precompute_logits(const std::string& checkpoint,
                          const std::string& manifest_path,
                          const std::string& audio_root,
                          const std::string& split_file,
                          const std::string& teacher_id,
                          const std::string& store_path) {
  auto ck = asckit::load_checkpoint(checkpoint);
  const auto manifest = asckit::load_manifest(manifest_path);

  std::vector<std::string> clip_ids;
  if (!split_file.empty()) {
    clip_ids = asckit::load_split(split_file, manifest, ck.config.split_fraction).clip_ids;
  } else {
    for (const auto& m : manifest) clip_ids.push_back(m.clip_id);
  }

  std::vector<asckit::AudioClip> corpus;
  for (const auto& m : manifest) corpus.push_back(asckit::load_clip(audio_root, m));

  asckit::TeacherLogitStore store;
  if (fs::exists(store_path)) store = asckit::TeacherLogitStore::load(store_path);
  const asckit::FeatureConfig fc = asckit::feature_preset(ck.config.feature_preset);
  asckit::precompute_logits(ck.model, corpus, clip_ids, fc, teacher_id, store);
  store.save(out_path(store_path));
  std::printf("stored %zu logit rows for teacher '%s' in %s\n", clip_ids.size(),
              teacher_id.c_str(), out_path(store_path).c_str());
  return kExitOk;
}

int cmd_ensemble_logits(const std::string& store_path, const std::string& out) {
  auto store = asckit::TeacherLogitStore::load(store_path);
  const auto& ens = store.ensemble();
  const std::string dst = out.empty() ? store_path : out;
  store.save(out_path(dst));
  std::printf("ensembled %zu teachers over %zu clips -> %s\n",
              store.teacher_ids().size(), ens.size(), out_path(dst).c_str());
  return kExitOk;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& manifest_path,
                 const std::string& audio_root, const std::string& report_out) {
  auto ck = asckit::load_checkpoint(checkpoint);
  const auto manifest = asckit::load_manifest(manifest_path);
  std::vector<asckit::AudioClip> clips;
  std::vector<int> labels;
  for (const auto& m : manifest) {
    clips.push_back(asckit::load_clip(audio_root, m));
    labels.push_back(asckit::scene_index(m.scene_label));
  }
  const asckit::FeatureConfig fc = asckit::feature_preset(ck.config.feature_preset);
  const asckit::Tensor features = asckit::extract_features(clips, fc);
  asckit::EvalReport report = asckit::evaluate(ck.model, features, labels);
  report.system = asckit::system_name(ck.config.system);
  report.split_fraction = ck.config.split_fraction;
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("macro accuracy: %.4f\n", report.macro_accuracy);
  if (!report_out.empty()) report.save(out_path(report_out));
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& report_paths,
               const std::string& out_dir) {
  if (report_paths.empty()) throw asckit::validation_error("report: no input reports");
  std::vector<asckit::EvalReport> reports;
  for (const auto& p : report_paths) reports.push_back(asckit::EvalReport::load(p));

  fs::create_directories(out_path(out_dir));
  const fs::path dir = out_path(out_dir);
  {
    std::ofstream f(dir / "macro_accuracy.csv", std::ios::binary);
    f << asckit::macro_table_csv(reports);
  }
  {
    std::ofstream f(dir / "class_accuracy.csv", std::ios::binary);
    f << asckit::class_accuracy_csv(reports);
  }
  {
    std::ofstream f(dir / "class_accuracy.svg", std::ios::binary);
    f << asckit::class_accuracy_svg(reports);
  }
  std::printf("%s\n", asckit::macro_table_csv(reports).c_str());
  std::printf("wrote macro_accuracy.csv, class_accuracy.csv, class_accuracy.svg in %s\n",
              dir.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asckit: low-complexity acoustic scene classification toolkit"};
  app.require_subcommand(1);

  // synth-corpus
  auto* sc = app.add_subcommand("synth-corpus", "Generate the synthetic desk-scale corpus");
  std::string sc_out = "synth_corpus";
  int sc_n = 20, sc_rate = 44100;
  uint64_t sc_seed = 0;
  sc->add_option("--out", sc_out, "Output directory");
  sc->add_option("--n-per-class", sc_n, "Clips per class")->check(CLI::PositiveNumber);
  sc->add_option("--sample-rate", sc_rate, "Sample rate (Hz)")->check(CLI::PositiveNumber);
  sc->add_option("--seed", sc_seed, "RNG seed");

  // make-splits
  auto* ms = app.add_subcommand("make-splits", "Write nested stratified split files");
  std::string ms_manifest, ms_out = "splits";
  std::vector<int> ms_fractions;
  uint64_t ms_seed = 0;
  ms->add_option("--manifest", ms_manifest, "Manifest TSV")->required();
  ms->add_option("--out", ms_out, "Output directory");
  ms->add_option("--fractions", ms_fractions, "Fractions (default 5 10 25 50 100)");
  ms->add_option("--seed", ms_seed, "RNG seed");

  // extract-features
  auto* ef = app.add_subcommand("extract-features", "Cache log-mel spectrograms");
  std::string ef_manifest, ef_root = "", ef_preset = "bcbl44", ef_cache = "feature_cache";
  double ef_lo = 0.0, ef_hi = 1.0;
  uint64_t ef_seed = 0;
  ef->add_option("--manifest", ef_manifest, "Manifest TSV")->required();
  ef->add_option("--audio-root", ef_root, "Audio root (default: manifest dir)");
  ef->add_option("--preset", ef_preset, "Feature preset: bcbl44|student32|passt44");
  ef->add_option("--out", ef_cache, "Cache directory");
  ef->add_option("--fmax-shift-lo", ef_lo, "Pitch-shift range lower fraction (0 disables)");
  ef->add_option("--fmax-shift-hi", ef_hi, "Pitch-shift range upper fraction");
  ef->add_option("--seed", ef_seed, "RNG seed for the fmax draw");

  // complexity
  auto* cx = app.add_subcommand("complexity", "Parameter/MAC/memory report with budget verdict");
  std::string cx_preset, cx_spec, cx_json;
  cx->add_option("--preset", cx_preset, "Preset: bcbl24|bcbl32");
  cx->add_option("--spec", cx_spec, "NetSpec JSON file");
  cx->add_option("--json", cx_json, "Also write the report as JSON");

  // train
  auto* tr = app.add_subcommand("train", "Train one of the three systems");
  std::string tr_config, tr_system, tr_out;
  int tr_split = 0, tr_epochs = -1;
  int64_t tr_seed = -1;
  tr->add_option("--config", tr_config, "Run config JSON")->required();
  tr->add_option("--system", tr_system, "Override: nbcbl|kd_ensemble|tfs");
  tr->add_option("--split", tr_split, "Override split fraction");
  tr->add_option("--epochs", tr_epochs, "Override epoch count");
  tr->add_option("--seed", tr_seed, "Override seed");
  tr->add_option("--output-dir", tr_out, "Override output directory");

  // precompute-logits
  auto* pl = app.add_subcommand("precompute-logits", "Store eval-mode logits of a checkpoint");
  std::string pl_ckpt, pl_manifest, pl_root = ".", pl_split, pl_teacher = "teacher", pl_store;
  pl->add_option("--checkpoint", pl_ckpt, "Checkpoint directory")->required();
  pl->add_option("--manifest", pl_manifest, "Manifest TSV")->required();
  pl->add_option("--audio-root", pl_root, "Audio root");
  pl->add_option("--split-file", pl_split, "Restrict to a split file");
  pl->add_option("--teacher-id", pl_teacher, "Teacher id to store under");
  pl->add_option("--store", pl_store, "Logit store CSV (appended if present)")->required();

  // ensemble-logits
  auto* el = app.add_subcommand("ensemble-logits", "Average all teachers into __ensemble__");
  std::string el_store, el_out;
  el->add_option("--store", el_store, "Logit store CSV")->required();
  el->add_option("--out", el_out, "Output path (default: in place)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a labeled corpus");
  std::string ev_ckpt, ev_manifest, ev_root = ".", ev_report;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint directory")->required();
  ev->add_option("--manifest", ev_manifest, "Manifest TSV")->required();
  ev->add_option("--audio-root", ev_root, "Audio root");
  ev->add_option("--report", ev_report, "Write EvalReport JSON here");

  // report
  auto* rp = app.add_subcommand("report", "Comparison tables and class-wise accuracy charts");
  std::vector<std::string> rp_inputs;
  std::string rp_out = "report";
  rp->add_option("--reports", rp_inputs, "EvalReport JSON files")->required();
  rp->add_option("--out", rp_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc->parsed()) return cmd_synth_corpus(sc_out, sc_n, sc_rate, sc_seed);
    if (ms->parsed()) return cmd_make_splits(ms_manifest, ms_out, ms_fractions, ms_seed);
    if (ef->parsed()) {
      if (ef_root.empty()) ef_root = fs::path(ef_manifest).parent_path().string();
      if (ef_root.empty()) ef_root = ".";
      return cmd_extract_features(ef_manifest, ef_root, ef_preset, ef_cache,
                                  ef_lo, ef_hi, ef_seed);
    }
    if (cx->parsed()) return cmd_complexity(cx_preset, cx_spec, cx_json);
    if (tr->parsed()) return cmd_train(tr_config, tr_system, tr_split, tr_epochs,
                                       tr_seed, tr_out);
    if (pl->parsed()) return cmd_precompute_logits(pl_ckpt, pl_manifest, pl_root,
                                                   pl_split, pl_teacher, pl_store);
    if (el->parsed()) return cmd_ensemble_logits(el_store, el_out);
    if (ev->parsed()) return cmd_evaluate(ev_ckpt, ev_manifest, ev_root, ev_report);
    if (rp->parsed()) return cmd_report(rp_inputs, rp_out);
  } catch (const asckit::validation_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
