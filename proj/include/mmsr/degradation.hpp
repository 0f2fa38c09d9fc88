// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// HR -> LR degradation: antialiased bicubic downscale followed by additive
// white Gaussian noise at a dB level measured against 8-bit full scale
// (40 dB -> sigma = 2.55 on the 0..255 scale = 0.01 in [0,1] units).

#pragma once

#include <cstdint>
#include <vector>

#include "mmsr/tensor.hpp"

namespace mmsr {

using Image = Tensor<float>;  // [3, H, W], values in [0,1]

struct DegradationSpec {
  int scale = 4;
  double noise_psnr_db = 40.0;
  uint64_t seed = 0;

  // Noise sigma in [0,1] units: 255 * 10^(-db/20) on the 8-bit scale.
  double sigma01() const { return std::pow(10.0, -noise_psnr_db / 20.0); }
};

namespace detail {

// Per-output-pixel filter taps for a separable resize. Indices are already
// clamped into range; weights sum to 1.
struct ResizeTap {
  int lo = 0;                   // first source index
  std::vector<double> weights;  // lo, lo+1, ...
};

std::vector<ResizeTap> resize_taps(int in_len, int out_len);

}  // namespace detail

// Separable Keys cubic (a = -0.5) resize with edge clamp; the kernel support
// widens by the scale factor when downscaling (antialiasing).
Image bicubic_resize(const Image& img, int out_h, int out_w);

// Adds i.i.d. N(0, sigma01^2) noise, then clamps to [0,1]. Deterministic for
// a fixed spec.seed.
Image add_awgn(const Image& img, const DegradationSpec& spec);

// add_awgn(bicubic_resize(hr, H/scale, W/scale), spec); HR dims must divide.
Image degrade(const Image& hr, const DegradationSpec& spec);

}  // namespace mmsr
