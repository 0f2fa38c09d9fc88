// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmsr/degradation.hpp"

#include <algorithm>
#include <cmath>

#include "mmsr/rng.hpp"

namespace mmsr {
namespace detail {

namespace {

// Keys cubic convolution kernel, a = -0.5.
double keys_cubic(double x) {
  x = std::abs(x);
  if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
  if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
  return 0.0;
}

}  // namespace

std::vector<ResizeTap> resize_taps(int in_len, int out_len) {
  const double scale = static_cast<double>(out_len) / static_cast<double>(in_len);
  const bool antialias = scale < 1.0;
  const double kernel_width = antialias ? 4.0 / scale : 4.0;
  const int n_taps = static_cast<int>(std::ceil(kernel_width)) + 2;

  std::vector<ResizeTap> taps(static_cast<size_t>(out_len));
  for (int i = 0; i < out_len; ++i) {
    const double u = (i + 0.5) / scale - 0.5;  // source-space center
    const int left = static_cast<int>(std::floor(u - kernel_width / 2.0));
    std::vector<double> w(static_cast<size_t>(n_taps));
    double sum = 0.0;
    for (int t = 0; t < n_taps; ++t) {
      const double x = u - (left + t);
      w[static_cast<size_t>(t)] = antialias ? scale * keys_cubic(scale * x) : keys_cubic(x);
      sum += w[static_cast<size_t>(t)];
    }
    for (double& v : w) v /= sum;

    // Fold out-of-range taps onto the clamped edge sample.
    ResizeTap tap;
    const int lo_clamped = std::clamp(left, 0, in_len - 1);
    const int hi_clamped = std::clamp(left + n_taps - 1, 0, in_len - 1);
    tap.lo = lo_clamped;
    tap.weights.assign(static_cast<size_t>(hi_clamped - lo_clamped + 1), 0.0);
    for (int t = 0; t < n_taps; ++t) {
      const int j = std::clamp(left + t, 0, in_len - 1);
      tap.weights[static_cast<size_t>(j - lo_clamped)] += w[static_cast<size_t>(t)];
    }
    taps[static_cast<size_t>(i)] = std::move(tap);
  }
  return taps;
}

}  // namespace detail

namespace {

// Resize the last axis of a [C, H, W] buffer using precomputed taps.
void resize_rows(const std::vector<double>& src, int c, int h, int w_in,
                 const std::vector<detail::ResizeTap>& taps, std::vector<double>& dst) {
  const int w_out = static_cast<int>(taps.size());
  dst.assign(static_cast<size_t>(c) * h * w_out, 0.0);
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < h; ++y) {
      const double* row = src.data() + (static_cast<size_t>(ci) * h + y) * w_in;
      double* out = dst.data() + (static_cast<size_t>(ci) * h + y) * w_out;
      for (int x = 0; x < w_out; ++x) {
        const auto& t = taps[static_cast<size_t>(x)];
        double acc = 0.0;
        for (size_t k = 0; k < t.weights.size(); ++k) acc += t.weights[k] * row[t.lo + k];
        out[x] = acc;
      }
    }
  }
}

// Resize the middle (height) axis of a [C, H, W] buffer.
void resize_cols(const std::vector<double>& src, int c, int h_in, int w,
                 const std::vector<detail::ResizeTap>& taps, std::vector<double>& dst) {
  const int h_out = static_cast<int>(taps.size());
  dst.assign(static_cast<size_t>(c) * h_out * w, 0.0);
  for (int ci = 0; ci < c; ++ci) {
    const double* plane = src.data() + static_cast<size_t>(ci) * h_in * w;
    double* out_plane = dst.data() + static_cast<size_t>(ci) * h_out * w;
    for (int y = 0; y < h_out; ++y) {
      const auto& t = taps[static_cast<size_t>(y)];
      double* out = out_plane + static_cast<size_t>(y) * w;
      for (size_t k = 0; k < t.weights.size(); ++k) {
        const double wk = t.weights[k];
        const double* row = plane + static_cast<size_t>(t.lo + k) * w;
        for (int x = 0; x < w; ++x) out[x] += wk * row[x];
      }
    }
  }
}

}  // namespace

Image bicubic_resize(const Image& img, int out_h, int out_w) {
  if (img.ndim() != 3) throw ShapeError("bicubic_resize: image must be [C,H,W]");
  if (out_h < 1 || out_w < 1) throw UsageError("bicubic_resize: output dims must be >= 1");
  const int c = static_cast<int>(img.dim(0));
  const int h = static_cast<int>(img.dim(1));
  const int w = static_cast<int>(img.dim(2));

  std::vector<double> buf(img.data().begin(), img.data().end());
  std::vector<double> tmp;
  resize_rows(buf, c, h, w, detail::resize_taps(w, out_w), tmp);
  std::vector<double> out;
  resize_cols(tmp, c, h, out_w, detail::resize_taps(h, out_h), out);

  Image res = Image::zeros({c, out_h, out_w});
  auto rs = res.data();
  for (size_t i = 0; i < out.size(); ++i) rs[i] = static_cast<float>(out[i]);
  return res;
}

Image add_awgn(const Image& img, const DegradationSpec& spec) {
  const double sigma = spec.sigma01();
  Rng rng(mix_seed(spec.seed, 0xA6));
  Image out = Image::zeros(img.shape());
  auto src = img.data();
  auto dst = out.data();
  for (int64_t i = 0; i < img.numel(); ++i) {
    const double v = static_cast<double>(src[i]) + sigma * rng.gaussian();
    dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

Image degrade(const Image& hr, const DegradationSpec& spec) {
  if (hr.ndim() != 3) throw ShapeError("degrade: image must be [C,H,W]");
  if (hr.dim(1) % spec.scale != 0 || hr.dim(2) % spec.scale != 0)
    throw DataError("degrade: HR dims " + shape_str(hr.shape()) + " not divisible by scale " +
                    std::to_string(spec.scale));
  return add_awgn(
      bicubic_resize(hr, static_cast<int>(hr.dim(1)) / spec.scale,
                     static_cast<int>(hr.dim(2)) / spec.scale),
      spec);
}

}  // namespace mmsr
