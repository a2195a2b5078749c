#pragma once

#include "asckit/common.hpp"

namespace asckit {

// Distillation loss parameters. lambda and temperature are configuration
// knobs (no published values exist for them); the defaults here are ordinary
// starting points, not reference settings. kl_swapped flips the printed
// argument order KL(teacher || student) to KL(student || teacher).
struct KdParams {
  double lambda = 0.5;       // in [0, 1]
  double temperature = 2.0;  // > 0
  bool kl_swapped = false;

  void validate() const {
    if (lambda < 0.0 || lambda > 1.0) throw validation_error("kd: lambda must be in [0,1]");
    if (temperature <= 0.0) throw validation_error("kd: temperature must be > 0");
  }
};

struct FocusParams {
  double alpha = 1.0;  // attention weight, in [0, 1]
  double beta = 1.0;   // entropy weight, in [0, 1]

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0) {
      throw validation_error("focus: alpha and beta must be in [0,1]");
    }
  }
};

struct KdBreakdown {
  double cross_entropy = 0.0;  // H(softmax(z_s), y), batch mean
  double kl = 0.0;             // T^2 * KL term, batch mean
  double total = 0.0;
};

struct FocusBreakdown {
  double cls = 0.0;        // H(y, yhat)
  double attention = 0.0;  // H(l, softmax(z_s))
  double entropy = 0.0;    // -sum softmax(z_s) log softmax(z_s)
  double total = 0.0;      // cls + alpha*attention - beta*entropy
};

// Row-wise softmax with max subtraction (double precision throughout).
Mat softmax_rows(const Mat& z, double temperature = 1.0);

// Plain soft-target cross-entropy, batch mean. Identical reduction to the
// losses below, so kd_loss(lambda=0) reproduces it bit for bit.
double cross_entropy(const Mat& z, const Mat& y);

// (1-lambda) * H(softmax(z_s), y) + lambda * T^2 * KL(softmax(z_t/T) || softmax(z_s/T)).
KdBreakdown kd_loss(const Mat& z_s, const Mat& z_t, const Mat& y, const KdParams& p);

// Same value plus dLoss/dz_s (teacher logits are constants).
KdBreakdown kd_loss_grad(const Mat& z_s, const Mat& z_t, const Mat& y,
                         const KdParams& p, Mat& grad);

// d = softmax(z_s) - softmax(z_t); yhat = softmax(z_s + d). Rows sum to 1.
Mat focus_modified_prediction(const Mat& z_s, const Mat& z_t);

// Multi-warm label: l' = 1[z_t > 0]; l'' = min(1, l' + y); l = l'' / row-sum.
Mat multi_warm_label(const Mat& z_t, const Mat& y);

FocusBreakdown focus_loss(const Mat& z_s, const Mat& z_t, const Mat& y,
                          const FocusParams& p);
FocusBreakdown focus_loss_grad(const Mat& z_s, const Mat& z_t, const Mat& y,
                               const FocusParams& p, Mat& grad);

}  // namespace asckit
