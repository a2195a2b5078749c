#pragma once

#include <functional>
#include <string>
#include <vector>

#include "asckit/common.hpp"
#include "asckit/netspec.hpp"
#include "asckit/rng.hpp"
#include "asckit/tensor.hpp"

namespace asckit::nn {

// Runs fn(begin, end) over [0, n) on a few threads with contiguous ranges.
// Ranges are data-disjoint in every call site, so results are deterministic.
void parallel_for(int n, const std::function<void(int, int)>& fn);

struct ParamRef {
  std::string name;
  std::vector<float>* value = nullptr;
  std::vector<float>* grad = nullptr;
  bool decay = false;  // weight decay applies to conv weights only
};

// "Same"-padded convolution (kernel 1 or 3, pad k/2), optional groups,
// bias-free. Caches its input for the backward pass.
struct Conv2d {
  int in_c = 0, out_c = 0, k = 1, stride_h = 1, stride_w = 1, groups = 1;
  Tensor w;   // [out_c, in_c/groups, k, k]
  Tensor gw;
  Tensor x_cache;

  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int sh, int sw,
         int groups_count = 1);

  void init(Rng& rng);
  Tensor forward(const Tensor& x, bool training);
  Tensor backward(const Tensor& gy);  // accumulates gw, returns gx
  void collect(std::vector<ParamRef>& out, const std::string& prefix);
};

struct BatchNorm2d {
  int c = 0;
  double eps = 1e-5;
  double momentum = 0.1;
  std::vector<float> gamma, beta, g_gamma, g_beta;
  std::vector<float> run_mean, run_var;

  Tensor xhat_cache;
  std::vector<double> invstd_cache;

  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels);

  Tensor forward(const Tensor& x, bool training);
  Tensor backward(const Tensor& gy);
  void collect(std::vector<ParamRef>& out, const std::string& prefix);
};

struct ReLU {
  Tensor y_cache;
  Tensor forward(const Tensor& x, bool training);
  Tensor backward(const Tensor& gy) const;
};

// Inverted-residual CPM block: 1x1 expansion + BN + ReLU, 3x3 depthwise
// (block stride) + BN + ReLU, 1x1 projection + BN, identity residual on
// Standard blocks.
struct CpmBlock {
  bool residual = false;
  Conv2d expand, depthwise, project;
  BatchNorm2d bn1, bn2, bn3;
  ReLU relu1, relu2;

  CpmBlock() = default;
  CpmBlock(const BlockSpec& blk, double expansion_rate);

  Tensor forward(const Tensor& x, bool training);
  Tensor backward(const Tensor& gy);
  void collect(std::vector<ParamRef>& out, const std::string& prefix);
};

// The full network: stem (two 3x3 stride-2 convs), CPM block stages, 1x1
// head conv + BN, global average pooling to [batch, classes] logits.
class Model {
 public:
  Model() = default;
  explicit Model(const NetSpec& spec);

  void init(Rng& rng);

  // Logits [batch, classes]. training=true caches activations for backward
  // and uses batch statistics in BN layers.
  Mat forward(const Tensor& x, bool training);

  // dlogits: dLoss/dlogits, [batch, classes]. Accumulates parameter grads.
  void backward(const Mat& dlogits);

  std::vector<ParamRef> parameters();
  void zero_grad();

  int64_t parameter_count();

  const NetSpec& spec() const { return spec_; }

  // Checkpoint blob: a small JSON index plus raw float32 values, covering
  // parameters and BN running statistics.
  void save(const std::string& path);
  void load(const std::string& path);

 private:
  std::vector<ParamRef> state_refs();  // parameters + running stats

  NetSpec spec_;
  Conv2d stem1_conv_, stem2_conv_;
  BatchNorm2d stem1_bn_, stem2_bn_;
  ReLU stem1_relu_, stem2_relu_;
  std::vector<CpmBlock> blocks_;
  Conv2d head_conv_;
  BatchNorm2d head_bn_;
  Tensor gap_in_cache_;
  int batch_cache_ = 0;
};

// Spec-level entry point.
inline Model instantiate(const NetSpec& spec) { return Model(spec); }

// Decoupled weight decay Adam. Moment buffers are keyed by parameter order.
class AdamW {
 public:
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double weight_decay = 1e-3;

  void step(std::vector<ParamRef>& params, double lr);
  void reset() { m_.clear(); v_.clear(); t_ = 0; }

 private:
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace asckit::nn
