#pragma once

#include <optional>
#include <string>

#include "asckit/common.hpp"
#include "asckit/trainer.hpp"

#include "json.hpp"

namespace asckit {

// Aggregate experiment document for the `train` command: training knobs plus
// every path the run touches. Validation is fail-fast: unknown keys are
// rejected and all referenced paths must resolve before any compute starts.
// The ASCKIT_OUTPUT_ROOT environment variable re-roots relative output dirs.
struct RunConfig {
  TrainConfig train;
  std::string manifest;             // required
  std::string audio_root;           // defaults to the manifest's directory
  std::string split_file;           // optional; internal make_split otherwise
  std::string dir_bank;             // optional DIR WAV directory
  std::string teacher_logits;       // required for kd_ensemble / tfs
  std::string test_manifest;        // optional; evaluates on the split itself otherwise
  std::string output_dir = "out";

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);

  // Path/precondition checks (throws validation_error).
  void validate_paths() const;

  // output_dir after applying ASCKIT_OUTPUT_ROOT to relative paths.
  std::string resolved_output_dir() const;
};

// Runs the full train command: corpus load, split resolution, training,
// evaluation, artifact emission (train_log.csv, checkpoint/, eval_report.json).
// Returns the final eval report.
EvalReport run_train(const RunConfig& cfg);

}  // namespace asckit
