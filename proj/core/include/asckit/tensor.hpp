#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace asckit {

// Dense float32 NCHW tensor. For spectrograms the layout is
// [batch, 1, n_mels, n_frames]; inside the network H=frequency, W=time.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0f) {}

  int64_t numel() const { return static_cast<int64_t>(n) * c * h * w; }
  int plane() const { return h * w; }

  float* ptr(int in, int ic) {
    return v.data() + (static_cast<size_t>(in) * c + ic) * plane();
  }
  const float* ptr(int in, int ic) const {
    return v.data() + (static_cast<size_t>(in) * c + ic) * plane();
  }

  float& at(int in, int ic, int ih, int iw) {
    return v[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
  }
  float at(int in, int ic, int ih, int iw) const {
    return v[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
  }

  void zero() { std::fill(v.begin(), v.end(), 0.0f); }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

}  // namespace asckit
