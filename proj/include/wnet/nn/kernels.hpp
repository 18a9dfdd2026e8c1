#pragma once

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <vector>

#include "wnet/tensor.hpp"

namespace wnet::nn {

struct ConvGeom {
  int in_ch = 0, out_ch = 0;
  int kh = 1, kw = 1;
  int stride = 1, pad = 0;
};

inline int conv_out_size(int in, int k, int stride, int pad) {
  const int out = (in + 2 * pad - k) / stride + 1;
  if (out <= 0) throw ShapeError("convolution output size would be empty");
  return out;
}

template <class S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MapRM = Eigen::Map<RowMat<S>>;
template <class S>
using CMapRM = Eigen::Map<const RowMat<S>>;

namespace detail {

/// Lowers one sample of a (possibly multi-source, channel-concatenated)
/// input into a K x P patch matrix, K = in_ch*kh*kw, P = Ho*Wo.
template <class S>
void im2col(const std::vector<const Tensor<S>*>& sources, int n, const ConvGeom& g, int H, int W,
            int Ho, int Wo, S* col) {
  const size_t P = static_cast<size_t>(Ho) * Wo;
  int c_global = 0;
  for (const Tensor<S>* src : sources) {
    const int C = src->dim(1);
    for (int c = 0; c < C; ++c, ++c_global) {
      for (int ky = 0; ky < g.kh; ++ky)
        for (int kx = 0; kx < g.kw; ++kx) {
          S* dst = col + (static_cast<size_t>(c_global) * g.kh + ky) * g.kw * P +
                   static_cast<size_t>(kx) * P;
          for (int yo = 0; yo < Ho; ++yo) {
            const int yi = yo * g.stride - g.pad + ky;
            S* row = dst + static_cast<size_t>(yo) * Wo;
            if (yi < 0 || yi >= H) {
              std::memset(row, 0, sizeof(S) * static_cast<size_t>(Wo));
              continue;
            }
            const S* in = &src->at(n, c, yi, 0);
            if (g.stride == 1) {
              // xi = xo - pad + kx: zero prefix, contiguous copy, zero suffix.
              const int x_lo = std::max(0, g.pad - kx);
              const int x_hi = std::min(Wo, W + g.pad - kx);
              for (int xo = 0; xo < x_lo; ++xo) row[xo] = S(0);
              if (x_hi > x_lo)
                std::memcpy(row + x_lo, in + (x_lo - g.pad + kx),
                            sizeof(S) * static_cast<size_t>(x_hi - x_lo));
              for (int xo = std::max(x_lo, x_hi); xo < Wo; ++xo) row[xo] = S(0);
            } else {
              for (int xo = 0; xo < Wo; ++xo) {
                const int xi = xo * g.stride - g.pad + kx;
                row[xo] = (xi >= 0 && xi < W) ? in[xi] : S(0);
              }
            }
          }
        }
    }
  }
}

/// Scatter-add of a K x P gradient matrix back onto the (multi-source) input.
template <class S>
void col2im_add(const S* col, int n, const ConvGeom& g, int H, int W, int Ho, int Wo,
                std::vector<Tensor<S>*>& dsources) {
  const size_t P = static_cast<size_t>(Ho) * Wo;
  int c_global = 0;
  for (Tensor<S>* dst_t : dsources) {
    const int C = dst_t ? dst_t->dim(1) : 0;
    if (!dst_t) continue;
    for (int c = 0; c < C; ++c, ++c_global) {
      for (int ky = 0; ky < g.kh; ++ky)
        for (int kx = 0; kx < g.kw; ++kx) {
          const S* src = col + (static_cast<size_t>(c_global) * g.kh + ky) * g.kw * P +
                         static_cast<size_t>(kx) * P;
          for (int yo = 0; yo < Ho; ++yo) {
            const int yi = yo * g.stride - g.pad + ky;
            if (yi < 0 || yi >= H) continue;
            S* out = &dst_t->at(n, c, yi, 0);
            const S* row = src + static_cast<size_t>(yo) * Wo;
            if (g.stride == 1) {
              const int x_lo = std::max(0, g.pad - kx);
              const int x_hi = std::min(Wo, W + g.pad - kx);
              const int base = kx - g.pad;
              for (int xo = x_lo; xo < x_hi; ++xo) out[xo + base] += row[xo];
            } else {
              for (int xo = 0; xo < Wo; ++xo) {
                const int xi = xo * g.stride - g.pad + kx;
                if (xi >= 0 && xi < W) out[xi] += row[xo];
              }
            }
          }
        }
    }
  }
}

template <class S>
int total_channels(const std::vector<const Tensor<S>*>& sources) {
  int c = 0;
  for (const auto* s : sources) c += s->dim(1);
  return c;
}

}  // namespace detail

/// y[n] = W * im2col(x[n]) + b. Sources are concatenated along channels.
template <class S>
void conv2d_forward(const std::vector<const Tensor<S>*>& sources, const Tensor<S>& weight,
                    const Tensor<S>& bias, const ConvGeom& g, Tensor<S>& out,
                    std::vector<S>& col_scratch) {
  const Tensor<S>& x0 = *sources.front();
  const int N = x0.dim(0), H = x0.dim(2), W = x0.dim(3);
  if (detail::total_channels(sources) != g.in_ch)
    throw ShapeError("conv2d: input channel mismatch");
  const int Ho = conv_out_size(H, g.kh, g.stride, g.pad);
  const int Wo = conv_out_size(W, g.kw, g.stride, g.pad);
  const size_t K = static_cast<size_t>(g.in_ch) * g.kh * g.kw;
  const size_t P = static_cast<size_t>(Ho) * Wo;

  out.ensure_shape({N, g.out_ch, Ho, Wo});
  col_scratch.resize(K * P);

  CMapRM<S> Wm(weight.data(), g.out_ch, static_cast<Eigen::Index>(K));
  for (int n = 0; n < N; ++n) {
    detail::im2col(sources, n, g, H, W, Ho, Wo, col_scratch.data());
    CMapRM<S> Cm(col_scratch.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    MapRM<S> Ym(&out.at(n, 0, 0, 0), g.out_ch, static_cast<Eigen::Index>(P));
    Ym.noalias() = Wm * Cm;
    for (int oc = 0; oc < g.out_ch; ++oc) Ym.row(oc).array() += bias[static_cast<size_t>(oc)];
  }
}

/// Accumulates gradients: dsources[i] += ..., dweight += ..., dbias += ...
/// Null entries in dsources / null dweight skip that gradient.
template <class S>
void conv2d_backward(const std::vector<const Tensor<S>*>& sources, const Tensor<S>& weight,
                     const ConvGeom& g, const Tensor<S>& dout,
                     std::vector<Tensor<S>*>& dsources, Tensor<S>* dweight, Tensor<S>* dbias,
                     std::vector<S>& col_scratch, std::vector<S>& dcol_scratch) {
  const Tensor<S>& x0 = *sources.front();
  const int N = x0.dim(0), H = x0.dim(2), W = x0.dim(3);
  const int Ho = dout.dim(2), Wo = dout.dim(3);
  const size_t K = static_cast<size_t>(g.in_ch) * g.kh * g.kw;
  const size_t P = static_cast<size_t>(Ho) * Wo;

  const bool need_dx = [&] {
    for (auto* p : dsources)
      if (p) return true;
    return false;
  }();

  col_scratch.resize(K * P);
  if (need_dx) dcol_scratch.resize(K * P);

  CMapRM<S> Wm(weight.data(), g.out_ch, static_cast<Eigen::Index>(K));
  for (int n = 0; n < N; ++n) {
    CMapRM<S> dYm(&dout.at(n, 0, 0, 0), g.out_ch, static_cast<Eigen::Index>(P));
    if (dweight) {
      detail::im2col(sources, n, g, H, W, Ho, Wo, col_scratch.data());
      CMapRM<S> Cm(col_scratch.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
      MapRM<S> dWm(dweight->data(), g.out_ch, static_cast<Eigen::Index>(K));
      dWm.noalias() += dYm * Cm.transpose();
    }
    if (dbias) {
      for (int oc = 0; oc < g.out_ch; ++oc)
        (*dbias)[static_cast<size_t>(oc)] += dYm.row(oc).sum();
    }
    if (need_dx) {
      MapRM<S> dCm(dcol_scratch.data(), static_cast<Eigen::Index>(K),
                   static_cast<Eigen::Index>(P));
      dCm.noalias() = Wm.transpose() * dYm;
      detail::col2im_add(dcol_scratch.data(), n, g, H, W, Ho, Wo, dsources);
    }
  }
}

// ---------------------------------------------------------------------------
// Batch norm (statistics over N*H*W per channel)
// ---------------------------------------------------------------------------

template <class S>
void batchnorm_forward_train(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                             Tensor<S>& run_mean, Tensor<S>& run_var, double momentum, double eps,
                             Tensor<S>& out, Tensor<S>& save_mean, Tensor<S>& save_invstd) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const double M = static_cast<double>(N) * H * W;
  out.ensure_shape(x.shape());
  save_mean.ensure_shape({C});
  save_invstd.ensure_shape({C});
  const size_t HW = static_cast<size_t>(H) * W;
  for (int c = 0; c < C; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int n = 0; n < N; ++n) {
      const S* p = &x.at(n, c, 0, 0);
      for (size_t i = 0; i < HW; ++i) {
        sum += static_cast<double>(p[i]);
        sq += static_cast<double>(p[i]) * static_cast<double>(p[i]);
      }
    }
    const double mean = sum / M;
    const double var = std::max(0.0, sq / M - mean * mean);
    const double invstd = 1.0 / std::sqrt(var + eps);
    save_mean[static_cast<size_t>(c)] = static_cast<S>(mean);
    save_invstd[static_cast<size_t>(c)] = static_cast<S>(invstd);
    const double unbiased = M > 1.0 ? var * M / (M - 1.0) : var;
    run_mean[static_cast<size_t>(c)] =
        static_cast<S>((1.0 - momentum) * run_mean[static_cast<size_t>(c)] + momentum * mean);
    run_var[static_cast<size_t>(c)] =
        static_cast<S>((1.0 - momentum) * run_var[static_cast<size_t>(c)] + momentum * unbiased);

    const S g = gamma[static_cast<size_t>(c)], b = beta[static_cast<size_t>(c)];
    const S mu = static_cast<S>(mean), is = static_cast<S>(invstd);
    for (int n = 0; n < N; ++n) {
      const S* p = &x.at(n, c, 0, 0);
      S* q = &out.at(n, c, 0, 0);
      for (size_t i = 0; i < HW; ++i) q[i] = g * (p[i] - mu) * is + b;
    }
  }
}

template <class S>
void batchnorm_forward_eval(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                            const Tensor<S>& run_mean, const Tensor<S>& run_var, double eps,
                            Tensor<S>& out) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  out.ensure_shape(x.shape());
  const size_t HW = static_cast<size_t>(H) * W;
  for (int c = 0; c < C; ++c) {
    const S mu = run_mean[static_cast<size_t>(c)];
    const S is = static_cast<S>(1.0 / std::sqrt(static_cast<double>(run_var[static_cast<size_t>(c)]) + eps));
    const S g = gamma[static_cast<size_t>(c)], b = beta[static_cast<size_t>(c)];
    for (int n = 0; n < N; ++n) {
      const S* p = &x.at(n, c, 0, 0);
      S* q = &out.at(n, c, 0, 0);
      for (size_t i = 0; i < HW; ++i) q[i] = g * (p[i] - mu) * is + b;
    }
  }
}

template <class S>
void batchnorm_backward_train(const Tensor<S>& x, const Tensor<S>& gamma,
                              const Tensor<S>& save_mean, const Tensor<S>& save_invstd,
                              const Tensor<S>& dout, Tensor<S>& dx, Tensor<S>* dgamma,
                              Tensor<S>* dbeta) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const double M = static_cast<double>(N) * H * W;
  const size_t HW = static_cast<size_t>(H) * W;
  for (int c = 0; c < C; ++c) {
    const double mu = static_cast<double>(save_mean[static_cast<size_t>(c)]);
    const double is = static_cast<double>(save_invstd[static_cast<size_t>(c)]);
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < N; ++n) {
      const S* px = &x.at(n, c, 0, 0);
      const S* pd = &dout.at(n, c, 0, 0);
      for (size_t i = 0; i < HW; ++i) {
        const double xhat = (static_cast<double>(px[i]) - mu) * is;
        sum_dy += static_cast<double>(pd[i]);
        sum_dy_xhat += static_cast<double>(pd[i]) * xhat;
      }
    }
    if (dgamma) (*dgamma)[static_cast<size_t>(c)] += static_cast<S>(sum_dy_xhat);
    if (dbeta) (*dbeta)[static_cast<size_t>(c)] += static_cast<S>(sum_dy);

    const double g = static_cast<double>(gamma[static_cast<size_t>(c)]);
    const double k = g * is / M;
    for (int n = 0; n < N; ++n) {
      const S* px = &x.at(n, c, 0, 0);
      const S* pd = &dout.at(n, c, 0, 0);
      S* pq = &dx.at(n, c, 0, 0);
      for (size_t i = 0; i < HW; ++i) {
        const double xhat = (static_cast<double>(px[i]) - mu) * is;
        pq[i] += static_cast<S>(k * (M * static_cast<double>(pd[i]) - sum_dy - xhat * sum_dy_xhat));
      }
    }
  }
}

/// Eval-mode backward: the statistics are constants.
template <class S>
void batchnorm_backward_eval(const Tensor<S>& gamma, const Tensor<S>& run_var, double eps,
                             const Tensor<S>& dout, Tensor<S>& dx) {
  const int N = dout.dim(0), C = dout.dim(1), H = dout.dim(2), W = dout.dim(3);
  const size_t HW = static_cast<size_t>(H) * W;
  for (int c = 0; c < C; ++c) {
    const S k = static_cast<S>(
        static_cast<double>(gamma[static_cast<size_t>(c)]) /
        std::sqrt(static_cast<double>(run_var[static_cast<size_t>(c)]) + eps));
    for (int n = 0; n < N; ++n) {
      const S* pd = &dout.at(n, c, 0, 0);
      S* pq = &dx.at(n, c, 0, 0);
      for (size_t i = 0; i < HW; ++i) pq[i] += k * pd[i];
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise / head building blocks
// ---------------------------------------------------------------------------

template <class S>
void relu_forward(const Tensor<S>& x, Tensor<S>& out) {
  out.ensure_shape(x.shape());
  for (size_t i = 0; i < x.numel(); ++i) out[i] = x[i] > S(0) ? x[i] : S(0);
}

template <class S>
void relu_backward(const Tensor<S>& out, const Tensor<S>& dout, Tensor<S>& dx) {
  for (size_t i = 0; i < out.numel(); ++i)
    if (out[i] > S(0)) dx[i] += dout[i];
}

template <class S>
void add_forward(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& out) {
  a.require_shape(b, "add");
  out.ensure_shape(a.shape());
  for (size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
}

/// y = x W^T + b with x:[N,Fin], W:[Fout,Fin].
template <class S>
void linear_forward(const Tensor<S>& x, const Tensor<S>& weight, const Tensor<S>& bias,
                    Tensor<S>& out) {
  const int N = x.dim(0), Fin = x.dim(1), Fout = weight.dim(0);
  out.ensure_shape({N, Fout});
  CMapRM<S> Xm(x.data(), N, Fin);
  CMapRM<S> Wm(weight.data(), Fout, Fin);
  MapRM<S> Ym(out.data(), N, Fout);
  Ym.noalias() = Xm * Wm.transpose();
  for (int n = 0; n < N; ++n) Ym.row(n) += CMapRM<S>(bias.data(), 1, Fout);
}

template <class S>
void linear_backward(const Tensor<S>& x, const Tensor<S>& weight, const Tensor<S>& dout,
                     Tensor<S>& dx, Tensor<S>* dweight, Tensor<S>* dbias) {
  const int N = x.dim(0), Fin = x.dim(1), Fout = weight.dim(0);
  CMapRM<S> Xm(x.data(), N, Fin);
  CMapRM<S> Wm(weight.data(), Fout, Fin);
  CMapRM<S> dYm(dout.data(), N, Fout);
  MapRM<S>(dx.data(), N, Fin).noalias() += dYm * Wm;
  if (dweight) MapRM<S>(dweight->data(), Fout, Fin).noalias() += dYm.transpose() * Xm;
  if (dbias)
    for (int f = 0; f < Fout; ++f) (*dbias)[static_cast<size_t>(f)] += dYm.col(f).sum();
}

template <class S>
void global_avg_pool_forward(const Tensor<S>& x, Tensor<S>& out) {
  const int N = x.dim(0), C = x.dim(1);
  const size_t HW = static_cast<size_t>(x.dim(2)) * x.dim(3);
  out.ensure_shape({N, C});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      const S* p = &x.at(n, c, 0, 0);
      for (size_t i = 0; i < HW; ++i) acc += static_cast<double>(p[i]);
      out[static_cast<size_t>(n) * C + c] = static_cast<S>(acc / static_cast<double>(HW));
    }
}

template <class S>
void global_avg_pool_backward(const std::vector<int>& x_shape, const Tensor<S>& dout,
                              Tensor<S>& dx) {
  const int N = x_shape[0], C = x_shape[1];
  const size_t HW = static_cast<size_t>(x_shape[2]) * x_shape[3];
  const S inv = static_cast<S>(1.0 / static_cast<double>(HW));
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const S g = dout[static_cast<size_t>(n) * C + c] * inv;
      S* p = &dx.at(n, c, 0, 0);
      for (size_t i = 0; i < HW; ++i) p[i] += g;
    }
}

/// Per-sample cross entropy from logits. Returns the loss and writes
/// dlogits = softmax - onehot (unscaled; the caller applies weights).
template <class S>
double softmax_cross_entropy(const S* logits, int num_classes, int label, S* dlogits) {
  double maxv = static_cast<double>(logits[0]);
  for (int k = 1; k < num_classes; ++k) maxv = std::max(maxv, static_cast<double>(logits[k]));
  double sum = 0.0;
  for (int k = 0; k < num_classes; ++k) sum += std::exp(static_cast<double>(logits[k]) - maxv);
  const double logz = maxv + std::log(sum);
  if (dlogits) {
    for (int k = 0; k < num_classes; ++k) {
      const double p = std::exp(static_cast<double>(logits[k]) - logz);
      dlogits[k] = static_cast<S>(p - (k == label ? 1.0 : 0.0));
    }
  }
  return logz - static_cast<double>(logits[label]);
}

}  // namespace wnet::nn
