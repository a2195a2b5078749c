#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "asckit/common.hpp"

#include "json.hpp"

namespace asckit {

enum class BlockKind { standard, downsample, transition };

// One inverted-residual block: 1x1 expansion conv (BN+ReLU), 3x3 depthwise
// conv with the block stride (BN+ReLU), 1x1 projection conv (BN). Standard
// blocks carry an identity residual; downsampling and transition blocks do
// not. Expanded channels = make_divisible(in * expansion_rate, 8).
struct BlockSpec {
  BlockKind kind = BlockKind::standard;
  int in_channels = 0;
  int out_channels = 0;
  int stride_f = 1;  // frequency axis (H)
  int stride_t = 1;  // time axis (W)
};

struct StageSpec {
  std::vector<int> channels;                    // per block
  std::vector<std::pair<int, int>> strides;     // per block (freq, time)
};

// Declarative network description: stem (two 3x3/stride-2 convs to N/4 then
// N channels), three stages of blocks, and a 1x1 head conv to `classes`
// followed by global average pooling.
struct NetSpec {
  std::string name = "custom";
  int base_channels = 32;
  double expansion_rate = 2.1;
  int in_mels = 256;
  int in_frames = 64;
  int classes = kNumClasses;
  std::vector<StageSpec> stages;

  // Flattened, validated block list with kinds derived from the channel and
  // stride layout (Standard: in==out, stride 1x1, residual; Downsampling:
  // in==out, stride != 1x1; Transition: in != out).
  std::vector<BlockSpec> blocks() const;

  int stem_mid_channels() const { return base_channels / 4; }
  int head_in_channels() const;

  void validate() const;

  nlohmann::json to_json() const;
  static NetSpec from_json(const nlohmann::json& j);
  static NetSpec load(const std::string& path);
  void save(const std::string& path) const;
};

// Architecture presets. Channel lists are pinned to the published tables
// ([24,40,80] / [32,56,104]); strides are the frozen calibration constants
// that land the complexity report on the published parameter/MAC figures at
// the preset input shapes (256x89 and 256x64).
NetSpec build_preset(std::string_view name);  // "bcbl24" | "bcbl32"

// Rounds to the nearest multiple of divisor, never dropping below 90% of the
// raw value.
int make_divisible(double v, int divisor = 8);

// Per-stage channels base * multiplier^k, make-divisible by `divisor`.
std::vector<int> scale_channels(int base, double multiplier, int n_stages = 3,
                                int divisor = 8);

struct ComplexityReport {
  int64_t parameter_count = 0;
  int64_t macs = 0;          // multiply-accumulates for one forward pass
  int64_t memory_bytes = 0;  // parameter_count * 2 (16-bit weights)

  nlohmann::json to_json() const;
};

// Exact accounting: parameters over conv weights (bias-free) plus 2 per BN
// channel; MACs over convolutions as k_h*k_w*(in/groups)*out*out_h*out_w.
ComplexityReport complexity(const NetSpec& spec);

// Single-convolution costs, exposed for unit-level accounting.
int64_t conv_params(int kh, int kw, int in_ch, int out_ch, int groups);
int64_t conv_macs(int kh, int kw, int in_ch, int out_ch, int groups,
                  int out_h, int out_w);

// Output spatial size of a stride-s "same"-padded conv: ceil(n/s).
int conv_out_dim(int n, int stride);

struct ConstraintCheck {
  bool pass = false;
  std::vector<std::string> violations;  // subset of {"memory", "macs"}
};

inline constexpr int64_t kMemoryLimitBytes = 128000;    // 128 kB challenge budget
inline constexpr int64_t kMacLimit = 30'000'000;

// Inclusive limits: a report exactly at the budget passes.
ConstraintCheck check_constraints(const ComplexityReport& report);

}  // namespace asckit
