#include "asckit/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "json.hpp"

using nlohmann::json;

namespace asckit::nn {

void parallel_for(int n, const std::function<void(int, int)>& fn) {
  static const int hw = std::max(1u, std::thread::hardware_concurrency());
  const int threads = std::min({hw, 8, n});
  if (threads <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int sh, int sw,
               int groups_count)
    : in_c(in_channels), out_c(out_channels), k(kernel), stride_h(sh),
      stride_w(sw), groups(groups_count) {
  if (in_c % groups != 0 || out_c % groups != 0) {
    throw validation_error("conv2d: channels not divisible by groups");
  }
  w = Tensor(out_c, in_c / groups, k, k);
  gw = Tensor(out_c, in_c / groups, k, k);
}

void Conv2d::init(Rng& rng) {
  const double fan_in = static_cast<double>(k) * k * (in_c / groups);
  const double std_dev = std::sqrt(2.0 / fan_in);
  for (auto& v : w.v) v = static_cast<float>(std_dev * rng.normal());
  gw.zero();
}

namespace {

// Pointwise (1x1, stride 1, ungrouped) kernels, register-blocked over four
// output rows: y[oc][p] = sum_ic w[oc][ic] * x[ic][p].
void pointwise_forward(const Tensor& x, const Tensor& w, Tensor& y, int n) {
  const int plane = x.plane();
  const int in_c = x.c, out_c = y.c;
  constexpr int kChunk = 256;
  float acc[4][kChunk];
  for (int p0 = 0; p0 < plane; p0 += kChunk) {
    const int len = std::min(kChunk, plane - p0);
    for (int oc0 = 0; oc0 < out_c; oc0 += 4) {
      const int nb = std::min(4, out_c - oc0);
      for (int b = 0; b < nb; ++b) std::fill(acc[b], acc[b] + len, 0.0f);
      for (int ic = 0; ic < in_c; ++ic) {
        const float* in_row = x.ptr(n, ic) + p0;
        for (int b = 0; b < nb; ++b) {
          const float wv = w.v[static_cast<size_t>(oc0 + b) * in_c + ic];
          float* a = acc[b];
          for (int j = 0; j < len; ++j) a[j] += wv * in_row[j];
        }
      }
      for (int b = 0; b < nb; ++b) {
        std::memcpy(y.ptr(n, oc0 + b) + p0, acc[b], sizeof(float) * static_cast<size_t>(len));
      }
    }
  }
}

// gx[ic][p] = sum_oc w[oc][ic] * gy[oc][p]
void pointwise_backward_input(const Tensor& gy, const Tensor& w, Tensor& gx, int n) {
  const int plane = gx.plane();
  const int in_c = gx.c, out_c = gy.c;
  constexpr int kChunk = 256;
  float acc[4][kChunk];
  for (int p0 = 0; p0 < plane; p0 += kChunk) {
    const int len = std::min(kChunk, plane - p0);
    for (int ic0 = 0; ic0 < in_c; ic0 += 4) {
      const int nb = std::min(4, in_c - ic0);
      for (int b = 0; b < nb; ++b) std::fill(acc[b], acc[b] + len, 0.0f);
      for (int oc = 0; oc < out_c; ++oc) {
        const float* gy_row = gy.ptr(n, oc) + p0;
        const float* w_row = w.v.data() + static_cast<size_t>(oc) * in_c + ic0;
        for (int b = 0; b < nb; ++b) {
          const float wv = w_row[b];
          float* a = acc[b];
          for (int j = 0; j < len; ++j) a[j] += wv * gy_row[j];
        }
      }
      for (int b = 0; b < nb; ++b) {
        std::memcpy(gx.ptr(n, ic0 + b) + p0, acc[b], sizeof(float) * static_cast<size_t>(len));
      }
    }
  }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, bool training) {
  const int pad = k / 2;
  const int oh = (x.h + 2 * pad - k) / stride_h + 1;
  const int ow = (x.w + 2 * pad - k) / stride_w + 1;
  Tensor y(x.n, out_c, oh, ow);
  if (training) x_cache = x;

  const int icg = in_c / groups;
  const int ocg = out_c / groups;

  if (k == 1 && stride_h == 1 && stride_w == 1 && groups == 1) {
    parallel_for(x.n, [&](int n_lo, int n_hi) {
      for (int n = n_lo; n < n_hi; ++n) pointwise_forward(x, w, y, n);
    });
    return y;
  }

  parallel_for(x.n, [&](int n_lo, int n_hi) {
    for (int n = n_lo; n < n_hi; ++n) {
      for (int oc = 0; oc < out_c; ++oc) {
        const int g = oc / ocg;
        float* out_plane = y.ptr(n, oc);
        for (int ici = 0; ici < icg; ++ici) {
          const int ic = g * icg + ici;
          const float* in_plane = x.ptr(n, ic);
          const float* wk = w.ptr(oc, ici);
          for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
              const float wv = wk[kh * k + kw];
              const int dh = kh - pad, dw = kw - pad;
              // Output rows whose input row lands inside [0, x.h).
              int oh_lo = 0;
              while (oh_lo < oh && oh_lo * stride_h + dh < 0) ++oh_lo;
              int oh_hi = oh;
              while (oh_hi > oh_lo && (oh_hi - 1) * stride_h + dh >= x.h) --oh_hi;
              int ow_lo = 0;
              while (ow_lo < ow && ow_lo * stride_w + dw < 0) ++ow_lo;
              int ow_hi = ow;
              while (ow_hi > ow_lo && (ow_hi - 1) * stride_w + dw >= x.w) --ow_hi;
              for (int ohi = oh_lo; ohi < oh_hi; ++ohi) {
                const float* in_row = in_plane + (ohi * stride_h + dh) * x.w + dw;
                float* out_row = out_plane + ohi * ow;
                if (stride_w == 1) {
                  for (int owi = ow_lo; owi < ow_hi; ++owi) {
                    out_row[owi] += wv * in_row[owi];
                  }
                } else {
                  for (int owi = ow_lo; owi < ow_hi; ++owi) {
                    out_row[owi] += wv * in_row[owi * stride_w];
                  }
                }
              }
            }
          }
        }
      }
    }
  });
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  const Tensor& x = x_cache;
  if (x.n != gy.n) throw validation_error("conv2d backward without forward");
  const int pad = k / 2;
  const int oh = gy.h, ow = gy.w;
  const int icg = in_c / groups;
  const int ocg = out_c / groups;

  // dL/dW, parallel over output channels (each oc owns its gradient slice).
  parallel_for(out_c, [&](int oc_lo, int oc_hi) {
    for (int oc = oc_lo; oc < oc_hi; ++oc) {
      const int g = oc / ocg;
      for (int ici = 0; ici < icg; ++ici) {
        const int ic = g * icg + ici;
        float* gwk = gw.ptr(oc, ici);
        for (int kh = 0; kh < k; ++kh) {
          for (int kw = 0; kw < k; ++kw) {
            const int dh = kh - pad, dw = kw - pad;
            double acc = 0.0;
            for (int n = 0; n < x.n; ++n) {
              const float* gy_plane = gy.ptr(n, oc);
              const float* in_plane = x.ptr(n, ic);
              int oh_lo = 0;
              while (oh_lo < oh && oh_lo * stride_h + dh < 0) ++oh_lo;
              int oh_hi = oh;
              while (oh_hi > oh_lo && (oh_hi - 1) * stride_h + dh >= x.h) --oh_hi;
              int ow_lo = 0;
              while (ow_lo < ow && ow_lo * stride_w + dw < 0) ++ow_lo;
              int ow_hi = ow;
              while (ow_hi > ow_lo && (ow_hi - 1) * stride_w + dw >= x.w) --ow_hi;
              for (int ohi = oh_lo; ohi < oh_hi; ++ohi) {
                const float* in_row = in_plane + (ohi * stride_h + dh) * x.w + dw;
                const float* gy_row = gy_plane + ohi * ow;
                double row_acc = 0.0;
                if (stride_w == 1) {
                  for (int owi = ow_lo; owi < ow_hi; ++owi) {
                    row_acc += static_cast<double>(gy_row[owi]) * in_row[owi];
                  }
                } else {
                  for (int owi = ow_lo; owi < ow_hi; ++owi) {
                    row_acc += static_cast<double>(gy_row[owi]) * in_row[owi * stride_w];
                  }
                }
                acc += row_acc;
              }
            }
            gwk[kh * k + kw] += static_cast<float>(acc);
          }
        }
      }
    }
  });

  // dL/dX, parallel over batch items.
  Tensor gx(x.n, x.c, x.h, x.w);
  if (k == 1 && stride_h == 1 && stride_w == 1 && groups == 1) {
    parallel_for(x.n, [&](int n_lo, int n_hi) {
      for (int n = n_lo; n < n_hi; ++n) pointwise_backward_input(gy, w, gx, n);
    });
    return gx;
  }
  parallel_for(x.n, [&](int n_lo, int n_hi) {
    for (int n = n_lo; n < n_hi; ++n) {
      for (int oc = 0; oc < out_c; ++oc) {
        const int g = oc / ocg;
        const float* gy_plane = gy.ptr(n, oc);
        for (int ici = 0; ici < icg; ++ici) {
          const int ic = g * icg + ici;
          float* gx_plane = gx.ptr(n, ic);
          const float* wk = w.ptr(oc, ici);
          for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
              const float wv = wk[kh * k + kw];
              const int dh = kh - pad, dw = kw - pad;
              int oh_lo = 0;
              while (oh_lo < oh && oh_lo * stride_h + dh < 0) ++oh_lo;
              int oh_hi = oh;
              while (oh_hi > oh_lo && (oh_hi - 1) * stride_h + dh >= x.h) --oh_hi;
              int ow_lo = 0;
              while (ow_lo < ow && ow_lo * stride_w + dw < 0) ++ow_lo;
              int ow_hi = ow;
              while (ow_hi > ow_lo && (ow_hi - 1) * stride_w + dw >= x.w) --ow_hi;
              for (int ohi = oh_lo; ohi < oh_hi; ++ohi) {
                float* gx_row = gx_plane + (ohi * stride_h + dh) * x.w + dw;
                const float* gy_row = gy_plane + ohi * ow;
                if (stride_w == 1) {
                  for (int owi = ow_lo; owi < ow_hi; ++owi) {
                    gx_row[owi] += wv * gy_row[owi];
                  }
                } else {
                  for (int owi = ow_lo; owi < ow_hi; ++owi) {
                    gx_row[owi * stride_w] += wv * gy_row[owi];
                  }
                }
              }
            }
          }
        }
      }
    }
  });
  return gx;
}

void Conv2d::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + ".w", &w.v, &gw.v, true});
}

// ---------------------------------------------------------------------------
// BatchNorm2d
// ---------------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(int channels) : c(channels) {
  gamma.assign(static_cast<size_t>(c), 1.0f);
  beta.assign(static_cast<size_t>(c), 0.0f);
  g_gamma.assign(static_cast<size_t>(c), 0.0f);
  g_beta.assign(static_cast<size_t>(c), 0.0f);
  run_mean.assign(static_cast<size_t>(c), 0.0f);
  run_var.assign(static_cast<size_t>(c), 1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  Tensor y(x.n, x.c, x.h, x.w);
  const int plane = x.plane();
  const int64_t m = static_cast<int64_t>(x.n) * plane;

  if (training) {
    xhat_cache = Tensor(x.n, x.c, x.h, x.w);
    invstd_cache.assign(static_cast<size_t>(c), 0.0);
  }

  parallel_for(c, [&](int c_lo, int c_hi) {
    for (int ch = c_lo; ch < c_hi; ++ch) {
      double mean, invstd;
      if (training) {
        double s = 0.0, s2 = 0.0;
        for (int n = 0; n < x.n; ++n) {
          const float* p = x.ptr(n, ch);
          for (int i = 0; i < plane; ++i) {
            s += p[i];
            s2 += static_cast<double>(p[i]) * p[i];
          }
        }
        mean = s / static_cast<double>(m);
        const double var = std::max(0.0, s2 / static_cast<double>(m) - mean * mean);
        invstd = 1.0 / std::sqrt(var + eps);
        invstd_cache[static_cast<size_t>(ch)] = invstd;
        const double unbiased = m > 1 ? var * static_cast<double>(m) / (m - 1) : var;
        run_mean[static_cast<size_t>(ch)] = static_cast<float>(
            (1.0 - momentum) * run_mean[static_cast<size_t>(ch)] + momentum * mean);
        run_var[static_cast<size_t>(ch)] = static_cast<float>(
            (1.0 - momentum) * run_var[static_cast<size_t>(ch)] + momentum * unbiased);
      } else {
        mean = run_mean[static_cast<size_t>(ch)];
        invstd = 1.0 / std::sqrt(static_cast<double>(run_var[static_cast<size_t>(ch)]) + eps);
      }
      const float g = gamma[static_cast<size_t>(ch)];
      const float b = beta[static_cast<size_t>(ch)];
      const float mean_f = static_cast<float>(mean);
      const float invstd_f = static_cast<float>(invstd);
      for (int n = 0; n < x.n; ++n) {
        const float* p = x.ptr(n, ch);
        float* q = y.ptr(n, ch);
        float* xh = training ? xhat_cache.ptr(n, ch) : nullptr;
        for (int i = 0; i < plane; ++i) {
          const float xhat = (p[i] - mean_f) * invstd_f;
          if (xh) xh[i] = xhat;
          q[i] = g * xhat + b;
        }
      }
    }
  });
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& gy) {
  const Tensor& xhat = xhat_cache;
  if (!gy.same_shape(xhat)) throw validation_error("batchnorm backward without forward");
  Tensor gx(gy.n, gy.c, gy.h, gy.w);
  const int plane = gy.plane();
  const double m = static_cast<double>(gy.n) * plane;

  parallel_for(c, [&](int c_lo, int c_hi) {
    for (int ch = c_lo; ch < c_hi; ++ch) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (int n = 0; n < gy.n; ++n) {
        const float* g = gy.ptr(n, ch);
        const float* xh = xhat.ptr(n, ch);
        for (int i = 0; i < plane; ++i) {
          sum_gy += g[i];
          sum_gy_xhat += static_cast<double>(g[i]) * xh[i];
        }
      }
      g_beta[static_cast<size_t>(ch)] += static_cast<float>(sum_gy);
      g_gamma[static_cast<size_t>(ch)] += static_cast<float>(sum_gy_xhat);

      const double scale = gamma[static_cast<size_t>(ch)] * invstd_cache[static_cast<size_t>(ch)];
      const double mean_gy = sum_gy / m;
      const double mean_gy_xhat = sum_gy_xhat / m;
      for (int n = 0; n < gy.n; ++n) {
        const float* g = gy.ptr(n, ch);
        const float* xh = xhat.ptr(n, ch);
        float* out = gx.ptr(n, ch);
        for (int i = 0; i < plane; ++i) {
          out[i] = static_cast<float>(scale * (g[i] - mean_gy - xh[i] * mean_gy_xhat));
        }
      }
    }
  });
  return gx;
}

void BatchNorm2d::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + ".gamma", &gamma, &g_gamma, false});
  out.push_back({prefix + ".beta", &beta, &g_beta, false});
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& x, bool training) {
  Tensor y(x.n, x.c, x.h, x.w);
  for (size_t i = 0; i < x.v.size(); ++i) y.v[i] = x.v[i] > 0.0f ? x.v[i] : 0.0f;
  if (training) y_cache = y;
  return y;
}

Tensor ReLU::backward(const Tensor& gy) const {
  Tensor gx(gy.n, gy.c, gy.h, gy.w);
  for (size_t i = 0; i < gy.v.size(); ++i) {
    gx.v[i] = y_cache.v[i] > 0.0f ? gy.v[i] : 0.0f;
  }
  return gx;
}

// ---------------------------------------------------------------------------
// CpmBlock
// ---------------------------------------------------------------------------

CpmBlock::CpmBlock(const BlockSpec& blk, double expansion_rate) {
  const int hidden = make_divisible(blk.in_channels * expansion_rate, 8);
  residual = blk.kind == BlockKind::standard;
  expand = Conv2d(blk.in_channels, hidden, 1, 1, 1);
  bn1 = BatchNorm2d(hidden);
  depthwise = Conv2d(hidden, hidden, 3, blk.stride_f, blk.stride_t, hidden);
  bn2 = BatchNorm2d(hidden);
  project = Conv2d(hidden, blk.out_channels, 1, 1, 1);
  bn3 = BatchNorm2d(blk.out_channels);
}

Tensor CpmBlock::forward(const Tensor& x, bool training) {
  Tensor t = relu1.forward(bn1.forward(expand.forward(x, training), training), training);
  t = relu2.forward(bn2.forward(depthwise.forward(t, training), training), training);
  t = bn3.forward(project.forward(t, training), training);
  if (residual) {
    for (size_t i = 0; i < t.v.size(); ++i) t.v[i] += x.v[i];
  }
  return t;
}

Tensor CpmBlock::backward(const Tensor& gy) {
  Tensor g = project.backward(bn3.backward(gy));
  g = depthwise.backward(bn2.backward(relu2.backward(g)));
  g = expand.backward(bn1.backward(relu1.backward(g)));
  if (residual) {
    for (size_t i = 0; i < g.v.size(); ++i) g.v[i] += gy.v[i];
  }
  return g;
}

void CpmBlock::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  expand.collect(out, prefix + ".expand");
  bn1.collect(out, prefix + ".bn1");
  depthwise.collect(out, prefix + ".depthwise");
  bn2.collect(out, prefix + ".bn2");
  project.collect(out, prefix + ".project");
  bn3.collect(out, prefix + ".bn3");
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

Model::Model(const NetSpec& spec) : spec_(spec) {
  spec_.validate();
  const int n4 = spec_.stem_mid_channels();
  stem1_conv_ = Conv2d(1, n4, 3, 2, 2);
  stem1_bn_ = BatchNorm2d(n4);
  stem2_conv_ = Conv2d(n4, spec_.base_channels, 3, 2, 2);
  stem2_bn_ = BatchNorm2d(spec_.base_channels);
  for (const auto& blk : spec_.blocks()) {
    blocks_.emplace_back(blk, spec_.expansion_rate);
  }
  head_conv_ = Conv2d(spec_.head_in_channels(), spec_.classes, 1, 1, 1);
  head_bn_ = BatchNorm2d(spec_.classes);
}

void Model::init(Rng& rng) {
  stem1_conv_.init(rng);
  stem2_conv_.init(rng);
  for (auto& b : blocks_) {
    b.expand.init(rng);
    b.depthwise.init(rng);
    b.project.init(rng);
  }
  head_conv_.init(rng);
}

Mat Model::forward(const Tensor& x, bool training) {
  batch_cache_ = x.n;
  Tensor t = stem1_relu_.forward(stem1_bn_.forward(stem1_conv_.forward(x, training), training), training);
  t = stem2_relu_.forward(stem2_bn_.forward(stem2_conv_.forward(t, training), training), training);
  for (auto& b : blocks_) t = b.forward(t, training);
  t = head_bn_.forward(head_conv_.forward(t, training), training);
  if (training) gap_in_cache_ = t;

  // Global average pool to [batch, classes].
  Mat logits(t.n, t.c);
  const int plane = t.plane();
  for (int n = 0; n < t.n; ++n) {
    for (int ch = 0; ch < t.c; ++ch) {
      const float* p = t.ptr(n, ch);
      double acc = 0.0;
      for (int i = 0; i < plane; ++i) acc += p[i];
      logits.at(n, ch) = acc / plane;
    }
  }
  for (double v : logits.a) {
    if (!std::isfinite(v)) throw std::runtime_error("model forward produced non-finite logits");
  }
  return logits;
}

void Model::backward(const Mat& dlogits) {
  if (dlogits.rows != batch_cache_) {
    throw validation_error("model backward: batch size mismatch");
  }
  const Tensor& gap_in = gap_in_cache_;
  Tensor g(gap_in.n, gap_in.c, gap_in.h, gap_in.w);
  const int plane = gap_in.plane();
  for (int n = 0; n < g.n; ++n) {
    for (int ch = 0; ch < g.c; ++ch) {
      const float gv = static_cast<float>(dlogits.at(n, ch) / plane);
      float* p = g.ptr(n, ch);
      std::fill(p, p + plane, gv);
    }
  }
  g = head_conv_.backward(head_bn_.backward(g));
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    g = it->backward(g);
  }
  g = stem2_conv_.backward(stem2_bn_.backward(stem2_relu_.backward(g)));
  g = stem1_conv_.backward(stem1_bn_.backward(stem1_relu_.backward(g)));
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> out;
  stem1_conv_.collect(out, "stem1.conv");
  stem1_bn_.collect(out, "stem1.bn");
  stem2_conv_.collect(out, "stem2.conv");
  stem2_bn_.collect(out, "stem2.bn");
  for (size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].collect(out, "block" + std::to_string(i));
  }
  head_conv_.collect(out, "head.conv");
  head_bn_.collect(out, "head.bn");
  return out;
}

void Model::zero_grad() {
  for (auto& p : parameters()) {
    std::fill(p.grad->begin(), p.grad->end(), 0.0f);
  }
}

int64_t Model::parameter_count() {
  int64_t n = 0;
  for (auto& p : parameters()) n += static_cast<int64_t>(p.value->size());
  return n;
}

std::vector<ParamRef> Model::state_refs() {
  std::vector<ParamRef> out = parameters();
  auto add_bn_stats = [&out](BatchNorm2d& bn, const std::string& prefix) {
    out.push_back({prefix + ".run_mean", &bn.run_mean, nullptr, false});
    out.push_back({prefix + ".run_var", &bn.run_var, nullptr, false});
  };
  add_bn_stats(stem1_bn_, "stem1.bn");
  add_bn_stats(stem2_bn_, "stem2.bn");
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    add_bn_stats(blocks_[i].bn1, p + ".bn1");
    add_bn_stats(blocks_[i].bn2, p + ".bn2");
    add_bn_stats(blocks_[i].bn3, p + ".bn3");
  }
  add_bn_stats(head_bn_, "head.bn");
  return out;
}

void Model::save(const std::string& path) {
  auto refs = state_refs();
  json index = json::array();
  for (const auto& r : refs) {
    index.push_back({{"name", r.name}, {"size", r.value->size()}});
  }
  const std::string header = json{{"format", "asckit-params-v1"},
                                  {"tensors", index}}.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw validation_error("cannot write checkpoint: " + path);
  const uint64_t hlen = header.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& r : refs) {
    f.write(reinterpret_cast<const char*>(r.value->data()),
            static_cast<std::streamsize>(r.value->size() * sizeof(float)));
  }
}

void Model::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw validation_error("cannot open checkpoint: " + path);
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string header(hlen, '\0');
  f.read(header.data(), static_cast<std::streamsize>(hlen));
  json j = json::parse(header);
  if (j.value("format", "") != "asckit-params-v1") {
    throw validation_error("unrecognized checkpoint format: " + path);
  }
  auto refs = state_refs();
  const auto& tensors = j.at("tensors");
  if (tensors.size() != refs.size()) {
    throw validation_error("checkpoint tensor count mismatch (wrong netspec?)");
  }
  for (size_t i = 0; i < refs.size(); ++i) {
    if (tensors[i].at("name").get<std::string>() != refs[i].name ||
        tensors[i].at("size").get<size_t>() != refs[i].value->size()) {
      throw validation_error("checkpoint tensor mismatch at " + refs[i].name);
    }
    f.read(reinterpret_cast<char*>(refs[i].value->data()),
           static_cast<std::streamsize>(refs[i].value->size() * sizeof(float)));
  }
  if (!f) throw validation_error("checkpoint truncated: " + path);
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

void AdamW::step(std::vector<ParamRef>& params, double lr) {
  if (m_.size() != params.size()) {
    m_.assign(params.size(), {});
    v_.assign(params.size(), {});
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].value->size(), 0.0);
      v_[i].assign(params[i].value->size(), 0.0);
    }
    t_ = 0;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& w = *params[i].value;
    auto& g = *params[i].grad;
    auto& m = m_[i];
    auto& v = v_[i];
    const double wd = params[i].decay ? weight_decay : 0.0;
    for (size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
      v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      double wj = w[j];
      wj -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * wj);
      w[j] = static_cast<float>(wj);
    }
  }
}

}  // namespace asckit::nn
