#include "asckit/losses.hpp"

#include <cmath>

namespace asckit {

namespace {

void check_pair(const Mat& z_s, const Mat& z_t, const Mat& y) {
  if (z_s.rows != z_t.rows || z_s.cols != z_t.cols || z_s.rows != y.rows ||
      z_s.cols != y.cols || z_s.rows == 0) {
    throw validation_error("loss: shape mismatch between logits and targets");
  }
  for (double v : z_s.a) {
    if (!std::isfinite(v)) throw validation_error("loss: non-finite student logits");
  }
  for (double v : z_t.a) {
    if (!std::isfinite(v)) throw validation_error("loss: non-finite teacher logits");
  }
  for (int r = 0; r < y.rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < y.cols; ++c) {
      if (y.at(r, c) < -1e-12) throw validation_error("loss: negative target mass");
      sum += y.at(r, c);
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw validation_error("loss: target row does not sum to 1");
    }
  }
}

// Row log-softmax with max subtraction; fills probs and log-probs.
void row_softmax(const double* z, int n, double temperature, double* p,
                 double* logp) {
  double mx = z[0] / temperature;
  for (int i = 1; i < n; ++i) mx = std::max(mx, z[i] / temperature);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(z[i] / temperature - mx);
  const double lse = mx + std::log(sum);
  for (int i = 0; i < n; ++i) {
    const double lp = z[i] / temperature - lse;
    if (logp) logp[i] = lp;
    if (p) p[i] = std::exp(lp);
  }
}

}  // namespace

Mat softmax_rows(const Mat& z, double temperature) {
  Mat p(z.rows, z.cols);
  for (int r = 0; r < z.rows; ++r) {
    row_softmax(z.row(r), z.cols, temperature, p.row(r), nullptr);
  }
  return p;
}

double cross_entropy(const Mat& z, const Mat& y) {
  double acc = 0.0;
  std::vector<double> logp(static_cast<size_t>(z.cols));
  for (int r = 0; r < z.rows; ++r) {
    row_softmax(z.row(r), z.cols, 1.0, nullptr, logp.data());
    double row = 0.0;
    for (int c = 0; c < z.cols; ++c) row -= y.at(r, c) * logp[static_cast<size_t>(c)];
    acc += row;
  }
  return acc / z.rows;
}

KdBreakdown kd_loss(const Mat& z_s, const Mat& z_t, const Mat& y,
                    const KdParams& p) {
  Mat unused;
  return kd_loss_grad(z_s, z_t, y, p, unused);
}

KdBreakdown kd_loss_grad(const Mat& z_s, const Mat& z_t, const Mat& y,
                         const KdParams& p, Mat& grad) {
  p.validate();
  check_pair(z_s, z_t, y);
  const int B = z_s.rows, C = z_s.cols;
  const double T = p.temperature;

  grad = Mat(B, C);
  std::vector<double> s(static_cast<size_t>(C)), logs(static_cast<size_t>(C));
  std::vector<double> st(static_cast<size_t>(C)), logst(static_cast<size_t>(C));
  std::vector<double> tt(static_cast<size_t>(C)), logtt(static_cast<size_t>(C));

  double ce_acc = 0.0, kl_acc = 0.0;
  for (int r = 0; r < B; ++r) {
    row_softmax(z_s.row(r), C, 1.0, s.data(), logs.data());
    row_softmax(z_s.row(r), C, T, st.data(), logst.data());
    row_softmax(z_t.row(r), C, T, tt.data(), logtt.data());

    double ce_row = 0.0;
    for (int c = 0; c < C; ++c) ce_row -= y.at(r, c) * logs[static_cast<size_t>(c)];
    ce_acc += ce_row;

    double kl_row = 0.0;
    if (!p.kl_swapped) {
      // KL(teacher || student) at temperature T.
      for (int c = 0; c < C; ++c) {
        if (tt[static_cast<size_t>(c)] > 0.0) {
          kl_row += tt[static_cast<size_t>(c)] *
                    (logtt[static_cast<size_t>(c)] - logst[static_cast<size_t>(c)]);
        }
      }
    } else {
      for (int c = 0; c < C; ++c) {
        if (st[static_cast<size_t>(c)] > 0.0) {
          kl_row += st[static_cast<size_t>(c)] *
                    (logst[static_cast<size_t>(c)] - logtt[static_cast<size_t>(c)]);
        }
      }
    }
    kl_acc += T * T * kl_row;

    for (int c = 0; c < C; ++c) {
      const double g_ce = s[static_cast<size_t>(c)] - y.at(r, c);
      double g_kl;
      if (!p.kl_swapped) {
        g_kl = T * (st[static_cast<size_t>(c)] - tt[static_cast<size_t>(c)]);
      } else {
        g_kl = T * st[static_cast<size_t>(c)] *
               (logst[static_cast<size_t>(c)] - logtt[static_cast<size_t>(c)] - kl_row);
      }
      grad.at(r, c) = ((1.0 - p.lambda) * g_ce + p.lambda * g_kl) / B;
    }
  }

  KdBreakdown out;
  out.cross_entropy = ce_acc / B;
  out.kl = kl_acc / B;
  out.total = (1.0 - p.lambda) * out.cross_entropy + p.lambda * out.kl;
  return out;
}

Mat focus_modified_prediction(const Mat& z_s, const Mat& z_t) {
  if (z_s.rows != z_t.rows || z_s.cols != z_t.cols || z_s.rows == 0) {
    throw validation_error("focus: logit shape mismatch");
  }
  for (double v : z_s.a) {
    if (!std::isfinite(v)) throw validation_error("focus: non-finite student logits");
  }
  for (double v : z_t.a) {
    if (!std::isfinite(v)) throw validation_error("focus: non-finite teacher logits");
  }
  const int B = z_s.rows, C = z_s.cols;
  Mat yhat(B, C);
  std::vector<double> s(static_cast<size_t>(C)), t(static_cast<size_t>(C));
  std::vector<double> u(static_cast<size_t>(C));
  for (int r = 0; r < B; ++r) {
    row_softmax(z_s.row(r), C, 1.0, s.data(), nullptr);
    row_softmax(z_t.row(r), C, 1.0, t.data(), nullptr);
    for (int c = 0; c < C; ++c) {
      u[static_cast<size_t>(c)] =
          z_s.at(r, c) + s[static_cast<size_t>(c)] - t[static_cast<size_t>(c)];
    }
    row_softmax(u.data(), C, 1.0, yhat.row(r), nullptr);
  }
  return yhat;
}

Mat multi_warm_label(const Mat& z_t, const Mat& y) {
  if (z_t.rows != y.rows || z_t.cols != y.cols) {
    throw validation_error("multi_warm_label: shape mismatch");
  }
  const int B = z_t.rows, C = z_t.cols;
  Mat l(B, C);
  for (int r = 0; r < B; ++r) {
    double sum = 0.0;
    for (int c = 0; c < C; ++c) {
      const double mask = z_t.at(r, c) > 0.0 ? 1.0 : 0.0;
      const double v = std::min(1.0, mask + y.at(r, c));
      l.at(r, c) = v;
      sum += v;
    }
    for (int c = 0; c < C; ++c) l.at(r, c) /= sum;
  }
  return l;
}

FocusBreakdown focus_loss(const Mat& z_s, const Mat& z_t, const Mat& y,
                          const FocusParams& p) {
  Mat unused;
  return focus_loss_grad(z_s, z_t, y, p, unused);
}

FocusBreakdown focus_loss_grad(const Mat& z_s, const Mat& z_t, const Mat& y,
                               const FocusParams& p, Mat& grad) {
  p.validate();
  check_pair(z_s, z_t, y);
  const int B = z_s.rows, C = z_s.cols;
  grad = Mat(B, C);

  const Mat l = multi_warm_label(z_t, y);
  std::vector<double> s(static_cast<size_t>(C)), logs(static_cast<size_t>(C));
  std::vector<double> t(static_cast<size_t>(C));
  std::vector<double> u(static_cast<size_t>(C));
  std::vector<double> yh(static_cast<size_t>(C)), logyh(static_cast<size_t>(C));

  double cls_acc = 0.0, att_acc = 0.0, ent_acc = 0.0;
  for (int r = 0; r < B; ++r) {
    row_softmax(z_s.row(r), C, 1.0, s.data(), logs.data());
    row_softmax(z_t.row(r), C, 1.0, t.data(), nullptr);
    for (int c = 0; c < C; ++c) {
      u[static_cast<size_t>(c)] =
          z_s.at(r, c) + s[static_cast<size_t>(c)] - t[static_cast<size_t>(c)];
    }
    row_softmax(u.data(), C, 1.0, yh.data(), logyh.data());

    double cls_row = 0.0, att_row = 0.0, ent_row = 0.0, q = 0.0;
    for (int c = 0; c < C; ++c) {
      cls_row -= y.at(r, c) * logyh[static_cast<size_t>(c)];
      att_row -= l.at(r, c) * logs[static_cast<size_t>(c)];
      ent_row -= s[static_cast<size_t>(c)] * logs[static_cast<size_t>(c)];
      q += s[static_cast<size_t>(c)] * logs[static_cast<size_t>(c)];
    }
    cls_acc += cls_row;
    att_acc += att_row;
    ent_acc += ent_row;

    // dL_cls/dz = J^T (yhat - y) with J = I + diag(s) - s s^T.
    double dot = 0.0;
    for (int c = 0; c < C; ++c) {
      dot += (yh[static_cast<size_t>(c)] - y.at(r, c)) * s[static_cast<size_t>(c)];
    }
    for (int c = 0; c < C; ++c) {
      const double gy = yh[static_cast<size_t>(c)] - y.at(r, c);
      const double g_cls = gy * (1.0 + s[static_cast<size_t>(c)]) -
                           s[static_cast<size_t>(c)] * dot;
      const double g_att = s[static_cast<size_t>(c)] - l.at(r, c);
      const double g_ent =
          s[static_cast<size_t>(c)] * (q - logs[static_cast<size_t>(c)]);
      grad.at(r, c) = (g_cls + p.alpha * g_att - p.beta * g_ent) / B;
    }
  }

  FocusBreakdown out;
  out.cls = cls_acc / B;
  out.attention = att_acc / B;
  out.entropy = ent_acc / B;
  out.total = out.cls + p.alpha * out.attention - p.beta * out.entropy;
  return out;
}

}  // namespace asckit
