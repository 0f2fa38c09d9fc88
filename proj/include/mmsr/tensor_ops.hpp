// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. conv2d lowers to im2col + GEMM; everything
// else is plain loops. All reductions run in a fixed order so results are
// reproducible run to run.

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstring>
#include <vector>

#include "mmsr/tensor.hpp"

namespace mmsr {

namespace detail {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VecCol = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct ConvDims {
  int64_t n, cin, h, w;
  int64_t cout, kh, kw;
  int64_t hout, wout;
  int pad, stride;
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int pad,
                   int stride) {
  if (x.ndim() != 4) throw ShapeError("conv2d: input must be [N,C,H,W], got " + shape_str(x.shape()));
  if (w.ndim() != 4) throw ShapeError("conv2d: weight must be [Cout,Cin,kH,kW]");
  if (b.ndim() != 1 || b.dim(0) != w.dim(0))
    throw ShapeError("conv2d: bias must be [Cout]");
  if (x.dim(1) != w.dim(1))
    throw ShapeError("conv2d: input channels " + std::to_string(x.dim(1)) +
                     " do not match weight channels " + std::to_string(w.dim(1)));
  if (pad < 0 || stride < 1) throw UsageError("conv2d: require pad >= 0 and stride >= 1");
  ConvDims d;
  d.n = x.dim(0);
  d.cin = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.cout = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.pad = pad;
  d.stride = stride;
  if (d.h + 2 * pad < d.kh || d.w + 2 * pad < d.kw)
    throw ShapeError("conv2d: kernel larger than padded input");
  d.hout = (d.h + 2 * pad - d.kh) / stride + 1;
  d.wout = (d.w + 2 * pad - d.kw) / stride + 1;
  return d;
}

// Unfolds one sample into a [Cin*kH*kW, Hout*Wout] matrix.
template <typename T>
void im2col(const T* src, const ConvDims& d, T* cols) {
  const int64_t hw = d.hout * d.wout;
  for (int64_t ci = 0; ci < d.cin; ++ci) {
    const T* plane = src + ci * d.h * d.w;
    for (int64_t i = 0; i < d.kh; ++i) {
      for (int64_t j = 0; j < d.kw; ++j) {
        T* row = cols + ((ci * d.kh + i) * d.kw + j) * hw;
        if (d.stride == 1) {
          for (int64_t ho = 0; ho < d.hout; ++ho) {
            T* dst = row + ho * d.wout;
            const int64_t hsrc = ho + i - d.pad;
            if (hsrc < 0 || hsrc >= d.h) {
              std::fill(dst, dst + d.wout, T(0));
              continue;
            }
            // source column range for wo in [0,Wout): wsrc = wo + j - pad
            const int64_t off = j - d.pad;
            const int64_t lo = std::max<int64_t>(0, -off);          // first valid wo
            const int64_t hi = std::min<int64_t>(d.wout, d.w - off);  // one past last
            if (lo > 0) std::fill(dst, dst + lo, T(0));
            if (hi > lo)
              std::memcpy(dst + lo, plane + hsrc * d.w + lo + off,
                          static_cast<size_t>(hi - lo) * sizeof(T));
            if (hi < d.wout) std::fill(dst + std::max<int64_t>(hi, lo), dst + d.wout, T(0));
          }
        } else {
          for (int64_t ho = 0; ho < d.hout; ++ho) {
            T* dst = row + ho * d.wout;
            const int64_t hsrc = ho * d.stride + i - d.pad;
            for (int64_t wo = 0; wo < d.wout; ++wo) {
              const int64_t wsrc = wo * d.stride + j - d.pad;
              dst[wo] = (hsrc >= 0 && hsrc < d.h && wsrc >= 0 && wsrc < d.w)
                            ? plane[hsrc * d.w + wsrc]
                            : T(0);
            }
          }
        }
      }
    }
  }
}

// Scatter-adds a [Cin*kH*kW, Hout*Wout] gradient matrix back onto one sample.
template <typename T>
void col2im_add(const T* cols, const ConvDims& d, T* dst) {
  const int64_t hw = d.hout * d.wout;
  for (int64_t ci = 0; ci < d.cin; ++ci) {
    T* plane = dst + ci * d.h * d.w;
    for (int64_t i = 0; i < d.kh; ++i) {
      for (int64_t j = 0; j < d.kw; ++j) {
        const T* row = cols + ((ci * d.kh + i) * d.kw + j) * hw;
        for (int64_t ho = 0; ho < d.hout; ++ho) {
          const int64_t hsrc = ho * d.stride + i - d.pad;
          if (hsrc < 0 || hsrc >= d.h) continue;
          const T* src = row + ho * d.wout;
          for (int64_t wo = 0; wo < d.wout; ++wo) {
            const int64_t wsrc = wo * d.stride + j - d.pad;
            if (wsrc >= 0 && wsrc < d.w) plane[hsrc * d.w + wsrc] += src[wo];
          }
        }
      }
    }
  }
}

// pixel_shuffle data movement; `inverse` swaps source and destination roles,
// `accumulate` turns the copy into +=, which is what the backward pass needs.
template <typename T>
void shuffle_pixels(const T* src, T* dst, int64_t n, int64_t c_out, int64_t h, int64_t w, int r,
                    bool inverse, bool accumulate) {
  const int64_t r2 = int64_t(r) * r;
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t c = 0; c < c_out; ++c) {
      for (int64_t y = 0; y < h; ++y) {
        for (int64_t i = 0; i < r; ++i) {
          for (int64_t x = 0; x < w; ++x) {
            for (int64_t j = 0; j < r; ++j) {
              const int64_t lo = ((ni * c_out * r2 + c * r2 + i * r + j) * h + y) * w + x;
              const int64_t hi = ((ni * c_out + c) * (h * r) + (y * r + i)) * (w * r) + (x * r + j);
              const int64_t from = inverse ? hi : lo;
              const int64_t to = inverse ? lo : hi;
              if (accumulate)
                dst[to] += src[from];
              else
                dst[to] = src[from];
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

// 2-D convolution, zero padding. out[n,co] = bias[co] + sum_ci x[n,ci] * w[co,ci].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int pad,
                 int stride = 1) {
  using detail::MatRM;
  const detail::ConvDims d = detail::conv_dims(x, w, b, pad, stride);
  const int64_t hw = d.hout * d.wout;
  const int64_t k = d.cin * d.kh * d.kw;

  Tensor<T> out = Tensor<T>::zeros({d.n, d.cout, d.hout, d.wout});
  std::vector<T> cols(static_cast<size_t>(k * hw));
  Eigen::Map<const MatRM<T>> wm(w.data().data(), d.cout, k);
  Eigen::Map<const detail::VecCol<T>> bv(b.data().data(), d.cout);
  for (int64_t ni = 0; ni < d.n; ++ni) {
    detail::im2col(x.data().data() + ni * d.cin * d.h * d.w, d, cols.data());
    Eigen::Map<const MatRM<T>> cm(cols.data(), k, hw);
    Eigen::Map<MatRM<T>> om(out.data().data() + ni * d.cout * hw, d.cout, hw);
    om.noalias() = wm * cm;
    om.colwise() += bv;
  }
  if (!out.all_finite()) throw NumericError("conv2d: non-finite output");

  attach_node<T>(out, "conv2d", {x, w, b},
                 [x, w, b, d, hw, k](TensorImpl<T>& o) mutable {
                   const bool need_x = x.needs_grad();
                   const bool need_w = w.needs_grad();
                   const bool need_b = b.needs_grad();
                   std::vector<T> cols;
                   if (need_w || need_x) cols.resize(static_cast<size_t>(k * hw));
                   std::vector<T> dcols;
                   if (need_x) dcols.resize(static_cast<size_t>(k * hw));
                   Eigen::Map<const MatRM<T>> wm(w.data().data(), d.cout, k);
                   for (int64_t ni = 0; ni < d.n; ++ni) {
                     Eigen::Map<const MatRM<T>> go(o.grad.data() + ni * d.cout * hw, d.cout, hw);
                     if (need_w || need_x)
                       detail::im2col(x.data().data() + ni * d.cin * d.h * d.w, d, cols.data());
                     if (need_w) {
                       Eigen::Map<const MatRM<T>> cm(cols.data(), k, hw);
                       Eigen::Map<MatRM<T>> dw(w.grad().data(), d.cout, k);
                       dw.noalias() += go * cm.transpose();
                     }
                     if (need_b) {
                       Eigen::Map<detail::VecCol<T>> db(b.grad().data(), d.cout);
                       db.noalias() += go.rowwise().sum();
                     }
                     if (need_x) {
                       Eigen::Map<MatRM<T>> dc(dcols.data(), k, hw);
                       dc.noalias() = wm.transpose() * go;
                       detail::col2im_add(dcols.data(), d,
                                          x.grad().data() + ni * d.cin * d.h * d.w);
                     }
                   }
                 });
  return out;
}

// Elementwise max(0, x); gradient is 0 at x == 0.
template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  auto xs = x.data();
  auto os = out.data();
  for (int64_t i = 0; i < x.numel(); ++i) os[i] = xs[i] > T(0) ? xs[i] : T(0);
  attach_node<T>(out, "relu", {x}, [x](TensorImpl<T>& o) mutable {
    auto xs = x.data();
    auto gx = x.grad();
    for (size_t i = 0; i < o.grad.size(); ++i)
      if (xs[i] > T(0)) gx[i] += o.grad[i];
  });
  return out;
}

// [N, C*r^2, H, W] -> [N, C, r*H, r*W] sub-pixel rearrangement.
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  if (x.ndim() != 4) throw ShapeError("pixel_shuffle: input must be [N,C,H,W]");
  const int64_t r2 = int64_t(r) * r;
  if (r < 1 || x.dim(1) % r2 != 0)
    throw ShapeError("pixel_shuffle: channels " + std::to_string(x.dim(1)) +
                     " not divisible by r^2 = " + std::to_string(r2));
  const int64_t c_out = x.dim(1) / r2, h = x.dim(2), w = x.dim(3);
  Tensor<T> out = Tensor<T>::zeros({x.dim(0), c_out, h * r, w * r});
  detail::shuffle_pixels(x.data().data(), out.data().data(), x.dim(0), c_out, h, w, r,
                         /*inverse=*/false, /*accumulate=*/false);
  attach_node<T>(out, "pixel_shuffle", {x}, [x, c_out, h, w, r](TensorImpl<T>& o) mutable {
    detail::shuffle_pixels(o.grad.data(), x.grad().data(), x.shape()[0], c_out, h, w, r,
                           /*inverse=*/true, /*accumulate=*/true);
  });
  return out;
}

// Exact inverse of pixel_shuffle.
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r) {
  if (x.ndim() != 4) throw ShapeError("pixel_unshuffle: input must be [N,C,H,W]");
  if (r < 1 || x.dim(2) % r != 0 || x.dim(3) % r != 0)
    throw ShapeError("pixel_unshuffle: spatial dims not divisible by r");
  const int64_t c = x.dim(1), h = x.dim(2) / r, w = x.dim(3) / r;
  Tensor<T> out = Tensor<T>::zeros({x.dim(0), c * r * r, h, w});
  detail::shuffle_pixels(x.data().data(), out.data().data(), x.dim(0), c, h, w, r,
                         /*inverse=*/true, /*accumulate=*/false);
  attach_node<T>(out, "pixel_unshuffle", {x}, [x, c, h, w, r](TensorImpl<T>& o) mutable {
    detail::shuffle_pixels(o.grad.data(), x.grad().data(), x.shape()[0], c, h, w, r,
                           /*inverse=*/false, /*accumulate=*/true);
  });
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  auto as = a.data(), bs = b.data();
  auto os = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) os[i] = as[i] + bs[i];
  attach_node<T>(out, "add", {a, b}, [a, b](TensorImpl<T>& o) mutable {
    if (a.needs_grad()) {
      auto ga = a.grad();
      for (size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
    }
    if (b.needs_grad()) {
      auto gb = b.grad();
      for (size_t i = 0; i < o.grad.size(); ++i) gb[i] += o.grad[i];
    }
  });
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  auto xs = x.data();
  auto os = out.data();
  for (int64_t i = 0; i < x.numel(); ++i) os[i] = xs[i] * s;
  attach_node<T>(out, "scale", {x}, [x, s](TensorImpl<T>& o) mutable {
    auto gx = x.grad();
    for (size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * s;
  });
  return out;
}

// Concatenate along the channel axis of NCHW tensors.
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw UsageError("concat_channels: empty input list");
  const int64_t n = xs[0].dim(0), h = xs[0].dim(2), w = xs[0].dim(3);
  int64_t c_total = 0;
  for (const auto& x : xs) {
    if (x.ndim() != 4 || x.dim(0) != n || x.dim(2) != h || x.dim(3) != w)
      throw ShapeError("concat_channels: inputs must agree on N,H,W");
    c_total += x.dim(1);
  }
  Tensor<T> out = Tensor<T>::zeros({n, c_total, h, w});
  const int64_t plane = h * w;
  for (int64_t ni = 0; ni < n; ++ni) {
    int64_t c_off = 0;
    for (const auto& x : xs) {
      const int64_t c = x.dim(1);
      std::memcpy(out.data().data() + (ni * c_total + c_off) * plane,
                  x.data().data() + ni * c * plane, static_cast<size_t>(c * plane) * sizeof(T));
      c_off += c;
    }
  }
  attach_node<T>(out, "concat_channels", xs, [xs, n, c_total, plane](TensorImpl<T>& o) mutable {
    for (int64_t ni = 0; ni < n; ++ni) {
      int64_t c_off = 0;
      for (const auto& x : xs) {
        const int64_t c = x.shape()[1];
        if (x.needs_grad()) {
          auto gx = x.grad();
          const T* src = o.grad.data() + (ni * c_total + c_off) * plane;
          T* dst = gx.data() + ni * c * plane;
          for (int64_t i = 0; i < c * plane; ++i) dst[i] += src[i];
        }
        c_off += c;
      }
    }
  });
  return out;
}

// Elementwise mean of N same-shape tensors: (x1 + ... + xN) / N, summed in
// input order.
template <typename T>
Tensor<T> mean_stack(const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw UsageError("mean_stack: empty input list");
  for (const auto& x : xs)
    if (x.shape() != xs[0].shape()) throw ShapeError("mean_stack: shape mismatch");
  const T inv_n = T(1) / T(xs.size());
  Tensor<T> out = Tensor<T>::zeros(xs[0].shape());
  auto os = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) {
    T acc = T(0);
    for (const auto& x : xs) acc += x.data()[i];
    os[i] = acc / T(xs.size());
  }
  attach_node<T>(out, "mean_stack", xs, [xs, inv_n](TensorImpl<T>& o) mutable {
    for (const auto& x : xs) {
      if (!x.needs_grad()) continue;
      auto gx = x.grad();
      for (size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * inv_n;
    }
  });
  return out;
}

// Mean absolute error; subgradient sign(pred - target) / count, 0 at equality.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape())
    throw ShapeError("l1_loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
                     shape_str(target.shape()));
  auto ps = pred.data();
  auto ts = target.data();
  double acc = 0.0;
  for (int64_t i = 0; i < pred.numel(); ++i)
    acc += std::abs(static_cast<double>(ps[i]) - static_cast<double>(ts[i]));
  const T value = static_cast<T>(acc / static_cast<double>(pred.numel()));
  if (!std::isfinite(static_cast<double>(value))) throw NumericError("l1_loss: non-finite loss");
  Tensor<T> out = Tensor<T>::from_data({1}, {value});
  attach_node<T>(out, "l1_loss", {pred, target}, [pred, target](TensorImpl<T>& o) mutable {
    const T g = o.grad[0] / T(pred.numel());
    auto ps = pred.data();
    auto ts = target.data();
    if (pred.needs_grad()) {
      auto gp = pred.grad();
      for (int64_t i = 0; i < pred.numel(); ++i) {
        if (ps[i] > ts[i])
          gp[i] += g;
        else if (ps[i] < ts[i])
          gp[i] -= g;
      }
    }
    if (target.needs_grad()) {
      auto gt = target.grad();
      for (int64_t i = 0; i < pred.numel(); ++i) {
        if (ps[i] > ts[i])
          gt[i] -= g;
        else if (ps[i] < ts[i])
          gt[i] += g;
      }
    }
  });
  return out;
}

// Scalar sum_i a[i] * b[i]; used by tests to project a tensor to a scalar.
template <typename T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("dot: shape mismatch");
  auto as = a.data(), bs = b.data();
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i)
    acc += static_cast<double>(as[i]) * static_cast<double>(bs[i]);
  Tensor<T> out = Tensor<T>::from_data({1}, {static_cast<T>(acc)});
  attach_node<T>(out, "dot", {a, b}, [a, b](TensorImpl<T>& o) mutable {
    const T g = o.grad[0];
    if (a.needs_grad()) {
      auto ga = a.grad();
      auto bs = b.data();
      for (int64_t i = 0; i < a.numel(); ++i) ga[i] += g * bs[i];
    }
    if (b.needs_grad()) {
      auto gb = b.grad();
      auto as = a.data();
      for (int64_t i = 0; i < a.numel(); ++i) gb[i] += g * as[i];
    }
  });
  return out;
}

// Values clamped to [0,1], detached; evaluation/export path only.
template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
  Tensor<T> out = x.clone();
  for (T& v : out.data()) v = std::min(T(1), std::max(T(0), v));
  return out;
}

}  // namespace mmsr
