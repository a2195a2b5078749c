#pragma once

#include <optional>
#include <string>
#include <vector>

#include "asckit/augment.hpp"
#include "asckit/common.hpp"
#include "asckit/corpus.hpp"
#include "asckit/eval_report.hpp"
#include "asckit/features.hpp"
#include "asckit/logit_store.hpp"
#include "asckit/losses.hpp"
#include "asckit/netspec.hpp"
#include "asckit/nn.hpp"

#include "json.hpp"

namespace asckit {

enum class System { nbcbl, kd_ensemble, tfs };

std::string system_name(System s);
System system_from_name(std::string_view name);

struct TrainConfig {
  System system = System::nbcbl;
  std::string net_preset = "bcbl24";
  std::string feature_preset = "bcbl44";
  AugmentConfig augment;
  int split_fraction = 100;
  int epochs = 30;
  int batch_size = 32;
  double peak_lr = 3e-3;
  int warmup_steps = 100;        // linear ramp length in optimizer steps
  double floor_lr = 0.0;         // cosine decay target
  double weight_decay = 1e-3;
  double val_fraction = 0.1;     // held out of the split for model selection
  double early_stop_train_acc = 0.0;  // stop once reached; 0 disables
  uint64_t seed = 0;
  KdParams kd;
  FocusParams focus;
  // Teacher id consulted in the logit store; KD defaults to the ensemble,
  // TFS to the system-2 student's precomputed logits.
  std::string teacher_id;

  std::string effective_teacher_id() const;
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Linear warmup 0 -> peak over warmup_steps, then cosine decay to floor at
// total_steps. `step` is the 1-based optimizer step index.
double lr_schedule(int64_t step, int64_t total_steps, const TrainConfig& cfg);

struct TrainOutput {
  nn::Model model;
  std::string log_csv;        // one row per optimizer step (+ header)
  double final_train_acc = 0.0;
  int epochs_run = 0;
};

// Extracts unaugmented features for the given clips (resampling to the
// config rate when needed), in clip order: [N, 1, n_mels, n_frames].
Tensor extract_features(const std::vector<AudioClip>& clips,
                        const FeatureConfig& config);

// Runs one of the three systems over the split. KD/TFS require `store` to
// cover every split clip under the configured teacher id. Deterministic for
// a fixed config and seed.
TrainOutput train(const TrainConfig& cfg, const NetSpec& spec,
                  const std::vector<AudioClip>& corpus, const TrainSplit& split,
                  TeacherLogitStore* store,
                  const std::vector<std::vector<float>>* dir_bank = nullptr);

// Eval-mode forward over unaugmented features; one logit row per clip.
Mat model_logits(nn::Model& model, const Tensor& features, int batch_size = 64);

// Eval-mode predictions -> confusion/macro report.
EvalReport evaluate(nn::Model& model, const Tensor& features,
                    const std::vector<int>& labels, int batch_size = 64);

// Eval-mode forward pass on unaugmented features of the given clips; stores
// one float32 10-vector per clip under teacher_id.
void precompute_logits(nn::Model& model, const std::vector<AudioClip>& corpus,
                       const std::vector<std::string>& clip_ids,
                       const FeatureConfig& config, const std::string& teacher_id,
                       TeacherLogitStore& store, int batch_size = 64);

// Checkpoint directory: params.bin + netspec.json + train_config.json.
void save_checkpoint(const std::string& dir, nn::Model& model,
                     const TrainConfig& cfg);
struct Checkpoint {
  nn::Model model;
  TrainConfig config;
};
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace asckit
