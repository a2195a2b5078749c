#include "asckit/trainer.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace asckit {

std::string system_name(System s) {
  switch (s) {
    case System::nbcbl: return "nbcbl";
    case System::kd_ensemble: return "kd_ensemble";
    case System::tfs: return "tfs";
  }
  return "nbcbl";
}

System system_from_name(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (key == "nbcbl") return System::nbcbl;
  if (key == "kd_ensemble" || key == "kd") return System::kd_ensemble;
  if (key == "tfs") return System::tfs;
  throw validation_error("unknown system: " + std::string(name));
}

std::string TrainConfig::effective_teacher_id() const {
  if (!teacher_id.empty()) return teacher_id;
  if (system == System::kd_ensemble) return TeacherLogitStore::kEnsembleId;
  return "kd_student";
}

void TrainConfig::validate() const {
  if (!is_valid_fraction(split_fraction)) {
    throw validation_error("train: invalid split fraction");
  }
  if (epochs < 0) throw validation_error("train: epochs must be >= 0");
  if (batch_size < 2) throw validation_error("train: batch_size must be >= 2");
  if (peak_lr <= 0.0) throw validation_error("train: peak_lr must be > 0");
  if (warmup_steps < 0) throw validation_error("train: warmup_steps must be >= 0");
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw validation_error("train: val_fraction must be in [0, 1)");
  }
  kd.validate();
  focus.validate();
}

double lr_schedule(int64_t step, int64_t total_steps, const TrainConfig& cfg) {
  if (step < 0) throw validation_error("lr_schedule: step must be >= 0");
  const int64_t warmup = cfg.warmup_steps;
  if (warmup > 0 && step <= warmup) {
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (total_steps <= warmup) return cfg.peak_lr;
  const double progress = static_cast<double>(step - warmup) /
                          static_cast<double>(total_steps - warmup);
  const double clamped = std::clamp(progress, 0.0, 1.0);
  return cfg.floor_lr + (cfg.peak_lr - cfg.floor_lr) * 0.5 *
                            (1.0 + std::cos(M_PI * clamped));
}

Tensor extract_features(const std::vector<AudioClip>& clips,
                        const FeatureConfig& config) {
  if (clips.empty()) throw validation_error("extract_features: no clips");
  std::vector<Tensor> rows(clips.size());
  nn::parallel_for(static_cast<int>(clips.size()), [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const AudioClip& c = clips[static_cast<size_t>(i)];
      if (c.sample_rate != config.sample_rate) {
        rows[static_cast<size_t>(i)] =
            logmel(resample(c, config.sample_rate), config).values;
      } else {
        rows[static_cast<size_t>(i)] = logmel(c, config).values;
      }
    }
  });
  const int mels = rows[0].h, frames = rows[0].w;
  Tensor out(static_cast<int>(clips.size()), 1, mels, frames);
  for (size_t i = 0; i < rows.size(); ++i) {
    std::memcpy(out.ptr(static_cast<int>(i), 0), rows[i].ptr(0, 0),
                sizeof(float) * static_cast<size_t>(mels) * frames);
  }
  return out;
}

Mat model_logits(nn::Model& model, const Tensor& features, int batch_size) {
  Mat out(features.n, model.spec().classes);
  const int plane = features.plane();
  for (int start = 0; start < features.n; start += batch_size) {
    const int b = std::min(batch_size, features.n - start);
    Tensor chunk(b, 1, features.h, features.w);
    std::memcpy(chunk.v.data(), features.v.data() + static_cast<size_t>(start) * plane,
                sizeof(float) * static_cast<size_t>(b) * plane);
    const Mat logits = model.forward(chunk, /*training=*/false);
    for (int i = 0; i < b; ++i) {
      for (int c = 0; c < out.cols; ++c) out.at(start + i, c) = logits.at(i, c);
    }
  }
  return out;
}

namespace {

int argmax_row(const Mat& m, int r) {
  int best = 0;
  for (int c = 1; c < m.cols; ++c) {
    if (m.at(r, c) > m.at(r, best)) best = c;
  }
  return best;
}

double accuracy_of(nn::Model& model, const Tensor& features,
                   const std::vector<int>& labels, int batch_size) {
  const Mat logits = model_logits(model, features, batch_size);
  int64_t hit = 0;
  for (int i = 0; i < logits.rows; ++i) {
    if (argmax_row(logits, i) == labels[static_cast<size_t>(i)]) ++hit;
  }
  return static_cast<double>(hit) / logits.rows;
}

std::string fmt_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

TrainOutput train(const TrainConfig& cfg, const NetSpec& spec,
                  const std::vector<AudioClip>& corpus, const TrainSplit& split,
                  TeacherLogitStore* store,
                  const std::vector<std::vector<float>>* dir_bank) {
  cfg.validate();
  spec.validate();
  const FeatureConfig fc = feature_preset(cfg.feature_preset);
  const bool needs_teacher = cfg.system != System::nbcbl;

  // Resolve split clips against the corpus.
  std::map<std::string, int> by_id;
  for (size_t i = 0; i < corpus.size(); ++i) by_id[corpus[i].meta.clip_id] = static_cast<int>(i);
  std::vector<const AudioClip*> clips;
  for (const auto& id : split.clip_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw validation_error("train: split clip not in corpus: " + id);
    clips.push_back(&corpus[static_cast<size_t>(it->second)]);
  }
  if (clips.empty()) throw validation_error("train: empty split");

  // Teacher logits must cover the split before any compute happens.
  std::string teacher;
  if (needs_teacher) {
    if (store == nullptr) {
      throw validation_error("train: system '" + system_name(cfg.system) +
                             "' requires a teacher logit store");
    }
    teacher = cfg.effective_teacher_id();
    if (teacher == TeacherLogitStore::kEnsembleId) store->ensemble();
    store->require_coverage(teacher, split.clip_ids);
  }

  Rng master(cfg.seed);
  const Rng augment_master(cfg.augment.rng_seed);

  // Resample once; keep waveforms only when DIR augmentation can trigger.
  const bool use_dir = dir_bank != nullptr && !dir_bank->empty() &&
                       cfg.augment.p_dir > 0.0;
  std::vector<AudioClip> waves;
  waves.reserve(clips.size());
  for (const AudioClip* c : clips) {
    waves.push_back(c->sample_rate == fc.sample_rate ? *c
                                                     : resample(*c, fc.sample_rate));
  }
  Tensor base_features = extract_features(waves, fc);
  cfg.augment.validate(base_features.h);

  // Validation holdout for model selection (seeded, per class).
  std::vector<int> train_idx, val_idx;
  {
    Rng hold = master.fork(2);
    std::vector<std::vector<int>> per_class(kNumClasses);
    for (size_t i = 0; i < waves.size(); ++i) {
      const int k = scene_index(waves[i].meta.scene_label);
      if (k < 0) throw validation_error("train: clip without a scene label: " + waves[i].meta.clip_id);
      per_class[static_cast<size_t>(k)].push_back(static_cast<int>(i));
    }
    for (auto& ids : per_class) {
      hold.shuffle(ids);
      const int n_val = static_cast<int>(std::floor(cfg.val_fraction * static_cast<double>(ids.size())));
      for (size_t j = 0; j < ids.size(); ++j) {
        (static_cast<int>(j) < n_val ? val_idx : train_idx).push_back(ids[j]);
      }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
  }

  std::vector<int> labels(waves.size());
  for (size_t i = 0; i < waves.size(); ++i) {
    labels[i] = scene_index(waves[i].meta.scene_label);
  }

  // Pre-fetch teacher logits per clip (row order = waves order).
  Mat teacher_rows;
  if (needs_teacher) {
    teacher_rows = Mat(static_cast<int>(waves.size()), kNumClasses);
    for (size_t i = 0; i < waves.size(); ++i) {
      const auto v = store->lookup(teacher, waves[i].meta.clip_id);
      for (int c = 0; c < kNumClasses; ++c) teacher_rows.at(static_cast<int>(i), c) = v[static_cast<size_t>(c)];
    }
  }

  TrainOutput out{nn::Model(spec), "", 0.0, 0};
  nn::Model& net = out.model;
  {
    Rng init = master.fork(1);
    net.init(init);
  }
  auto params = net.parameters();
  nn::AdamW opt;
  opt.weight_decay = cfg.weight_decay;

  const int n_train = static_cast<int>(train_idx.size());
  const int steps_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t total_steps = static_cast<int64_t>(cfg.epochs) * steps_per_epoch;

  std::ostringstream log;
  log << "epoch,step,lr,loss_ce,loss_kl,loss_cls,loss_att,loss_ent,loss_total,"
         "train_acc,val_acc\n";

  // Best-epoch selection: validation accuracy, tracked via a temp checkpoint.
  double best_metric = -1.0;
  static std::atomic<uint64_t> run_counter{0};
  const fs::path tmp_ckpt = fs::temp_directory_path() /
      ("asckit_best_" + std::to_string(::getpid()) + "_" +
       std::to_string(++run_counter) + ".bin");

  Tensor train_features(n_train, 1, base_features.h, base_features.w);
  const int plane = base_features.plane();
  auto gather_train_features = [&]() {
    for (int i = 0; i < n_train; ++i) {
      std::memcpy(train_features.v.data() + static_cast<size_t>(i) * plane,
                  base_features.v.data() + static_cast<size_t>(train_idx[static_cast<size_t>(i)]) * plane,
                  sizeof(float) * static_cast<size_t>(plane));
    }
  };
  gather_train_features();
  std::vector<int> train_labels(static_cast<size_t>(n_train));
  for (int i = 0; i < n_train; ++i) train_labels[static_cast<size_t>(i)] = labels[static_cast<size_t>(train_idx[static_cast<size_t>(i)])];

  Tensor val_features;
  std::vector<int> val_labels;
  if (!val_idx.empty()) {
    val_features = Tensor(static_cast<int>(val_idx.size()), 1, base_features.h, base_features.w);
    for (size_t i = 0; i < val_idx.size(); ++i) {
      std::memcpy(val_features.v.data() + i * static_cast<size_t>(plane),
                  base_features.v.data() + static_cast<size_t>(val_idx[i]) * plane,
                  sizeof(float) * static_cast<size_t>(plane));
      val_labels.push_back(labels[static_cast<size_t>(val_idx[i])]);
    }
  }

  int64_t global_step = 0;
  double last_train_acc = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = train_idx;
    master.fork(100 + static_cast<uint64_t>(epoch)).shuffle(order);

    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int b = std::min(cfg.batch_size, n_train - start);
      if (b < 2) break;  // mixup/FMS need pairs; drop the 1-clip remainder
      // Augmentation draws come from their own seed when one is set, so the
      // same augmentation stream can be replayed across training seeds.
      const Rng& aug_root = cfg.augment.rng_seed != 0 ? augment_master : master;
      Rng step_rng = aug_root.fork(1000000ull + static_cast<uint64_t>(epoch) * 10000ull +
                                   static_cast<uint64_t>(start / cfg.batch_size));

      Tensor x(b, 1, base_features.h, base_features.w);
      Mat y(b, kNumClasses);
      Mat z_t;
      if (needs_teacher) z_t = Mat(b, kNumClasses);

      const bool dir_hit = use_dir && step_rng.uniform() < cfg.augment.p_dir;
      for (int i = 0; i < b; ++i) {
        const int idx = order[static_cast<size_t>(start + i)];
        if (dir_hit) {
          AudioClip aug = dir_convolve(waves[static_cast<size_t>(idx)], *dir_bank, true, step_rng);
          const SpectrogramBatch sb = logmel(aug, fc);
          std::memcpy(x.ptr(i, 0), sb.values.ptr(0, 0), sizeof(float) * static_cast<size_t>(plane));
        } else {
          std::memcpy(x.ptr(i, 0),
                      base_features.v.data() + static_cast<size_t>(idx) * plane,
                      sizeof(float) * static_cast<size_t>(plane));
        }
        y.at(i, labels[static_cast<size_t>(idx)]) = 1.0;
        if (needs_teacher) {
          for (int c = 0; c < kNumClasses; ++c) z_t.at(i, c) = teacher_rows.at(idx, c);
        }
      }

      SpectrogramBatch batch{std::move(x), fc.name, {}};
      const bool fms_hit = step_rng.uniform() < cfg.augment.p_fms;
      freq_mixstyle(batch, cfg.augment.fms_alpha, fms_hit, step_rng);

      if (cfg.augment.mixup_alpha > 0.0) {
        const MixupPlan plan = draw_mixup_plan(b, cfg.augment.mixup_alpha, step_rng);
        apply_mixup(batch.values, y, plan);
        // Teacher targets follow the same mixing as the inputs and labels.
        if (needs_teacher) apply_mixup_rows(z_t, plan);
      }

      freq_mask(batch, cfg.augment.freq_mask_max, step_rng);

      const Mat z_s = net.forward(batch.values, /*training=*/true);
      Mat grad;
      double ce = 0.0, kl = 0.0, cls = 0.0, att = 0.0, ent = 0.0, total = 0.0;
      if (cfg.system == System::tfs) {
        const FocusBreakdown fb = focus_loss_grad(z_s, z_t, y, cfg.focus, grad);
        cls = fb.cls; att = fb.attention; ent = fb.entropy; total = fb.total;
      } else {
        KdParams kp = cfg.kd;
        const Mat* zt_ptr = &z_t;
        if (cfg.system == System::nbcbl) {
          kp.lambda = 0.0;  // plain soft-target cross-entropy
          zt_ptr = &z_s;
        }
        const KdBreakdown kb = kd_loss_grad(z_s, *zt_ptr, y, kp, grad);
        ce = kb.cross_entropy; kl = kb.kl; total = kb.total;
      }
      if (!std::isfinite(total)) {
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + " step " +
                                 std::to_string(global_step));
      }

      net.zero_grad();
      net.backward(grad);
      ++global_step;
      const double lr = lr_schedule(global_step, total_steps, cfg);
      opt.step(params, lr);

      // Last processed batch of the epoch (a trailing 1-clip batch is dropped).
      const bool epoch_last = n_train - (start + b) < 2;
      log << epoch << ',' << global_step << ',' << fmt_g(lr) << ','
          << fmt_g(ce) << ',' << fmt_g(kl) << ',' << fmt_g(cls) << ','
          << fmt_g(att) << ',' << fmt_g(ent) << ',' << fmt_g(total) << ',';
      if (epoch_last) {
        last_train_acc = accuracy_of(net, train_features, train_labels, cfg.batch_size);
        log << fmt_g(last_train_acc) << ',';
        if (!val_idx.empty()) {
          const double val_acc = accuracy_of(net, val_features, val_labels, cfg.batch_size);
          log << fmt_g(val_acc);
          if (val_acc > best_metric) {
            best_metric = val_acc;
            net.save(tmp_ckpt.string());
          }
        }
      } else {
        log << ',';
      }
      log << '\n';
    }

    out.epochs_run = epoch + 1;
    if (cfg.early_stop_train_acc > 0.0 && last_train_acc >= cfg.early_stop_train_acc) {
      break;
    }
  }

  // Model selection: restore the best-validation epoch when a holdout exists
  // and the run was not cut short by the early-stop target.
  if (!val_idx.empty() && best_metric >= 0.0 && cfg.early_stop_train_acc <= 0.0) {
    net.load(tmp_ckpt.string());
  }
  std::error_code ec;
  fs::remove(tmp_ckpt, ec);

  out.final_train_acc = cfg.epochs > 0 ? last_train_acc : 0.0;
  out.log_csv = log.str();
  return out;
}

EvalReport evaluate(nn::Model& model, const Tensor& features,
                    const std::vector<int>& labels, int batch_size) {
  if (features.n == 0) throw validation_error("evaluate: empty test set");
  if (static_cast<size_t>(features.n) != labels.size()) {
    throw validation_error("evaluate: feature/label count mismatch");
  }
  const Mat logits = model_logits(model, features, batch_size);
  std::vector<int> preds(labels.size());
  for (int i = 0; i < logits.rows; ++i) preds[static_cast<size_t>(i)] = argmax_row(logits, i);
  return tally_report(labels, preds);
}

void precompute_logits(nn::Model& model, const std::vector<AudioClip>& corpus,
                       const std::vector<std::string>& clip_ids,
                       const FeatureConfig& config, const std::string& teacher_id,
                       TeacherLogitStore& store, int batch_size) {
  std::map<std::string, const AudioClip*> by_id;
  for (const auto& c : corpus) by_id[c.meta.clip_id] = &c;
  std::vector<AudioClip> clips;
  for (const auto& id : clip_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw validation_error("precompute_logits: unknown clip " + id);
    clips.push_back(*it->second);
  }
  const Tensor features = extract_features(clips, config);
  const Mat logits = model_logits(model, features, batch_size);
  for (size_t i = 0; i < clip_ids.size(); ++i) {
    std::array<float, kNumClasses> row{};
    for (int c = 0; c < kNumClasses; ++c) {
      row[static_cast<size_t>(c)] = static_cast<float>(logits.at(static_cast<int>(i), c));
    }
    store.add(teacher_id, clip_ids[i], row);
  }
}

void save_checkpoint(const std::string& dir, nn::Model& model,
                     const TrainConfig& cfg) {
  fs::create_directories(dir);
  model.save((fs::path(dir) / "params.bin").string());
  model.spec().save((fs::path(dir) / "netspec.json").string());
  std::ofstream f(fs::path(dir) / "train_config.json");
  if (!f) throw validation_error("cannot write train config in " + dir);
  f << cfg.to_json().dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& dir) {
  const NetSpec spec = NetSpec::load((fs::path(dir) / "netspec.json").string());
  std::ifstream f(fs::path(dir) / "train_config.json");
  if (!f) throw validation_error("checkpoint missing train_config.json: " + dir);
  TrainConfig cfg;
  try {
    cfg = TrainConfig::from_json(json::parse(f));
  } catch (const json::exception& e) {
    throw validation_error(std::string("train config JSON error: ") + e.what());
  }
  Checkpoint ck{nn::Model(spec), cfg};
  ck.model.load((fs::path(dir) / "params.bin").string());
  return ck;
}

// ---------------------------------------------------------------------------
// TrainConfig JSON
// ---------------------------------------------------------------------------

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

json TrainConfig::to_json() const {
  return json{
      {"system", system_name(system)},
      {"net_preset", net_preset},
      {"feature_preset", feature_preset},
      {"split_fraction", split_fraction},
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"peak_lr", peak_lr},
      {"warmup_steps", warmup_steps},
      {"floor_lr", floor_lr},
      {"weight_decay", weight_decay},
      {"val_fraction", val_fraction},
      {"early_stop_train_acc", early_stop_train_acc},
      {"seed", seed},
      {"teacher_id", teacher_id},
      {"augment",
       {{"p_fms", augment.p_fms},
        {"fms_alpha", augment.fms_alpha},
        {"p_dir", augment.p_dir},
        {"mixup_alpha", augment.mixup_alpha},
        {"freq_mask_max", augment.freq_mask_max},
        {"rng_seed", augment.rng_seed}}},
      {"kd",
       {{"lambda", kd.lambda},
        {"temperature", kd.temperature},
        {"kl_swapped", kd.kl_swapped}}},
      {"focus", {{"alpha", focus.alpha}, {"beta", focus.beta}}}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"system", "net_preset", "feature_preset", "split_fraction",
                  "epochs", "batch_size", "peak_lr", "warmup_steps", "floor_lr",
                  "weight_decay", "val_fraction", "early_stop_train_acc", "seed",
                  "teacher_id", "augment", "kd", "focus"},
                 "train config");
  TrainConfig c;
  if (j.contains("system")) c.system = system_from_name(j.at("system").get<std::string>());
  c.net_preset = j.value("net_preset", c.net_preset);
  c.feature_preset = j.value("feature_preset", c.feature_preset);
  c.split_fraction = j.value("split_fraction", c.split_fraction);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.peak_lr = j.value("peak_lr", c.peak_lr);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.floor_lr = j.value("floor_lr", c.floor_lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  c.early_stop_train_acc = j.value("early_stop_train_acc", c.early_stop_train_acc);
  c.seed = j.value("seed", c.seed);
  c.teacher_id = j.value("teacher_id", c.teacher_id);
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    reject_unknown(a, {"p_fms", "fms_alpha", "p_dir", "mixup_alpha", "freq_mask_max", "rng_seed"},
                   "augment config");
    c.augment.p_fms = a.value("p_fms", c.augment.p_fms);
    c.augment.fms_alpha = a.value("fms_alpha", c.augment.fms_alpha);
    c.augment.p_dir = a.value("p_dir", c.augment.p_dir);
    c.augment.mixup_alpha = a.value("mixup_alpha", c.augment.mixup_alpha);
    c.augment.freq_mask_max = a.value("freq_mask_max", c.augment.freq_mask_max);
    c.augment.rng_seed = a.value("rng_seed", c.augment.rng_seed);
  }
  if (j.contains("kd")) {
    const auto& k = j.at("kd");
    reject_unknown(k, {"lambda", "temperature", "kl_swapped"}, "kd config");
    c.kd.lambda = k.value("lambda", c.kd.lambda);
    c.kd.temperature = k.value("temperature", c.kd.temperature);
    c.kd.kl_swapped = k.value("kl_swapped", c.kd.kl_swapped);
  }
  if (j.contains("focus")) {
    const auto& fj = j.at("focus");
    reject_unknown(fj, {"alpha", "beta"}, "focus config");
    c.focus.alpha = fj.value("alpha", c.focus.alpha);
    c.focus.beta = fj.value("beta", c.focus.beta);
  }
  c.validate();
  return c;
}

}  // namespace asckit
