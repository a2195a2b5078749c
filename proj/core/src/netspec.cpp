#include "asckit/netspec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

using nlohmann::json;

namespace asckit {

int make_divisible(double v, int divisor) {
  int out = std::max(divisor, static_cast<int>(v + divisor / 2.0) / divisor * divisor);
  if (out < 0.9 * v) out += divisor;
  return out;
}

std::vector<int> scale_channels(int base, double multiplier, int n_stages,
                                int divisor) {
  if (base < 4) throw validation_error("scale_channels: base must be >= 4");
  if (multiplier <= 0.0) throw validation_error("scale_channels: multiplier must be > 0");
  std::vector<int> out;
  out.reserve(static_cast<size_t>(n_stages));
  double v = base;
  for (int k = 0; k < n_stages; ++k) {
    out.push_back(make_divisible(v, divisor));
    v *= multiplier;
  }
  return out;
}

int conv_out_dim(int n, int stride) { return (n - 1) / stride + 1; }

int64_t conv_params(int kh, int kw, int in_ch, int out_ch, int groups) {
  return static_cast<int64_t>(kh) * kw * (in_ch / groups) * out_ch;
}

int64_t conv_macs(int kh, int kw, int in_ch, int out_ch, int groups, int out_h,
                  int out_w) {
  return conv_params(kh, kw, in_ch, out_ch, groups) *
         static_cast<int64_t>(out_h) * out_w;
}

int NetSpec::head_in_channels() const {
  if (stages.empty() || stages.back().channels.empty()) {
    throw validation_error("netspec: no stages defined");
  }
  return stages.back().channels.back();
}

std::vector<BlockSpec> NetSpec::blocks() const {
  std::vector<BlockSpec> out;
  int in_ch = base_channels;
  for (const auto& stage : stages) {
    if (stage.channels.size() != stage.strides.size()) {
      throw validation_error("netspec: per-stage channels/strides length mismatch");
    }
    for (size_t b = 0; b < stage.channels.size(); ++b) {
      BlockSpec blk;
      blk.in_channels = in_ch;
      blk.out_channels = stage.channels[b];
      blk.stride_f = stage.strides[b].first;
      blk.stride_t = stage.strides[b].second;
      if (blk.in_channels != blk.out_channels) {
        blk.kind = BlockKind::transition;
      } else if (blk.stride_f == 1 && blk.stride_t == 1) {
        blk.kind = BlockKind::standard;
      } else {
        blk.kind = BlockKind::downsample;
      }
      in_ch = blk.out_channels;
      out.push_back(blk);
    }
  }
  return out;
}

void NetSpec::validate() const {
  if (base_channels < 4 || base_channels % 4 != 0) {
    throw validation_error("netspec: base_channels must be a positive multiple of 4");
  }
  if (expansion_rate <= 0.0) throw validation_error("netspec: expansion_rate must be > 0");
  if (in_mels <= 0 || in_frames <= 0) throw validation_error("netspec: input shape must be positive");
  if (classes <= 0) throw validation_error("netspec: classes must be positive");
  if (stages.empty()) throw validation_error("netspec: needs at least one stage");

  int f = conv_out_dim(conv_out_dim(in_mels, 2), 2);
  int t = conv_out_dim(conv_out_dim(in_frames, 2), 2);
  for (const auto& blk : blocks()) {
    if (blk.out_channels <= 0) throw validation_error("netspec: channels must be positive");
    if (blk.stride_f < 1 || blk.stride_t < 1) throw validation_error("netspec: strides must be >= 1");
    // Residual legality: only equal-shape blocks may carry the identity.
    if (blk.kind == BlockKind::standard &&
        (blk.in_channels != blk.out_channels || blk.stride_f != 1 || blk.stride_t != 1)) {
      throw validation_error("netspec: standard block must keep channels and stride 1x1");
    }
    if (blk.kind == BlockKind::downsample && blk.in_channels != blk.out_channels) {
      throw validation_error("netspec: downsampling block must keep channels");
    }
    if (blk.kind == BlockKind::transition && blk.in_channels == blk.out_channels) {
      throw validation_error("netspec: transition block must change channels");
    }
    f = conv_out_dim(f, blk.stride_f);
    t = conv_out_dim(t, blk.stride_t);
    if (f < 1 || t < 1) throw validation_error("netspec: spatial dimension underflow");
  }
}

NetSpec build_preset(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });

  NetSpec spec;
  spec.expansion_rate = 2.1;
  if (key == "bcbl24") {
    spec.name = "bcbl24";
    spec.base_channels = 24;
    spec.in_mels = 256;
    spec.in_frames = 89;
    spec.stages = {
        {{24, 24, 24}, {{1, 1}, {2, 1}, {1, 1}}},
        {{40, 40}, {{1, 1}, {1, 1}}},
        {{80}, {{2, 2}}},
    };
  } else if (key == "bcbl32") {
    spec.name = "bcbl32";
    spec.base_channels = 32;
    spec.in_mels = 256;
    spec.in_frames = 64;
    spec.stages = {
        {{32, 32, 32}, {{1, 1}, {2, 1}, {1, 1}}},
        {{56, 56}, {{1, 1}, {1, 1}}},
        {{104}, {{2, 2}}},
    };
  } else {
    throw validation_error("unknown net preset: " + std::string(name));
  }
  spec.validate();
  return spec;
}

ComplexityReport complexity(const NetSpec& spec) {
  spec.validate();
  ComplexityReport r;
  const int n4 = spec.stem_mid_channels();

  int f = conv_out_dim(spec.in_mels, 2);
  int t = conv_out_dim(spec.in_frames, 2);
  r.parameter_count += conv_params(3, 3, 1, n4, 1) + 2 * n4;
  r.macs += conv_macs(3, 3, 1, n4, 1, f, t);

  f = conv_out_dim(f, 2);
  t = conv_out_dim(t, 2);
  r.parameter_count += conv_params(3, 3, n4, spec.base_channels, 1) + 2 * spec.base_channels;
  r.macs += conv_macs(3, 3, n4, spec.base_channels, 1, f, t);

  for (const auto& blk : spec.blocks()) {
    const int hidden = make_divisible(blk.in_channels * spec.expansion_rate, 8);
    // 1x1 expansion at the input resolution.
    r.parameter_count += conv_params(1, 1, blk.in_channels, hidden, 1) + 2 * hidden;
    r.macs += conv_macs(1, 1, blk.in_channels, hidden, 1, f, t);
    // 3x3 depthwise carries the block stride.
    f = conv_out_dim(f, blk.stride_f);
    t = conv_out_dim(t, blk.stride_t);
    r.parameter_count += conv_params(3, 3, hidden, hidden, hidden) + 2 * hidden;
    r.macs += conv_macs(3, 3, hidden, hidden, hidden, f, t);
    // 1x1 projection.
    r.parameter_count += conv_params(1, 1, hidden, blk.out_channels, 1) + 2 * blk.out_channels;
    r.macs += conv_macs(1, 1, hidden, blk.out_channels, 1, f, t);
  }

  r.parameter_count += conv_params(1, 1, spec.head_in_channels(), spec.classes, 1) + 2 * spec.classes;
  r.macs += conv_macs(1, 1, spec.head_in_channels(), spec.classes, 1, f, t);

  r.memory_bytes = r.parameter_count * 2;
  return r;
}

ConstraintCheck check_constraints(const ComplexityReport& report) {
  ConstraintCheck c;
  if (report.memory_bytes > kMemoryLimitBytes) c.violations.push_back("memory");
  if (report.macs > kMacLimit) c.violations.push_back("macs");
  c.pass = c.violations.empty();
  return c;
}

json ComplexityReport::to_json() const {
  return json{{"parameter_count", parameter_count},
              {"macs", macs},
              {"memory_bytes", memory_bytes}};
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw validation_error("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

json NetSpec::to_json() const {
  json stages_j = json::array();
  for (const auto& s : stages) {
    json strides_j = json::array();
    for (const auto& st : s.strides) strides_j.push_back({st.first, st.second});
    stages_j.push_back({{"channels", s.channels}, {"strides", strides_j}});
  }
  return json{{"name", name},
              {"base_channels", base_channels},
              {"expansion_rate", expansion_rate},
              {"input_shape", {in_mels, in_frames}},
              {"classes", classes},
              {"stages", stages_j}};
}

NetSpec NetSpec::from_json(const json& j) {
  reject_unknown_keys(j, {"name", "base_channels", "expansion_rate",
                          "input_shape", "classes", "stages"},
                      "netspec");
  NetSpec spec;
  spec.name = j.value("name", "custom");
  spec.base_channels = j.at("base_channels").get<int>();
  spec.expansion_rate = j.at("expansion_rate").get<double>();
  spec.in_mels = j.at("input_shape").at(0).get<int>();
  spec.in_frames = j.at("input_shape").at(1).get<int>();
  spec.classes = j.value("classes", kNumClasses);
  for (const auto& sj : j.at("stages")) {
    reject_unknown_keys(sj, {"channels", "strides"}, "netspec stage");
    StageSpec s;
    s.channels = sj.at("channels").get<std::vector<int>>();
    for (const auto& st : sj.at("strides")) {
      s.strides.emplace_back(st.at(0).get<int>(), st.at(1).get<int>());
    }
    spec.stages.push_back(std::move(s));
  }
  spec.validate();
  return spec;
}

NetSpec NetSpec::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw validation_error("cannot open netspec file: " + path);
  try {
    return from_json(json::parse(f));
  } catch (const json::exception& e) {
    throw validation_error("netspec JSON error in " + path + ": " + e.what());
  }
}

void NetSpec::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw validation_error("cannot write netspec file: " + path);
  f << to_json().dump(2) << '\n';
}

}  // namespace asckit
