// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// PSNR / SSIM and the per-test-set mean/variance reporting. PSNR is computed
// on RGB with a border crop (default: the SR scale factor); identical images
// report +infinity, which aggregation excludes and flags.

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mmsr/degradation.hpp"

namespace mmsr {

inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

// 10*log10(1/MSE) over the RGB samples remaining after cropping border_crop
// pixels from each side.
double psnr(const Image& a, const Image& b, int border_crop);

// Single-scale SSIM: 11x11 Gaussian window, sigma 1.5, C1 = 0.01^2,
// C2 = 0.03^2 in [0,1] units; per channel over valid window positions, then
// averaged.
double ssim(const Image& a, const Image& b);

struct PerImageMetric {
  std::string id;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct MetricsReport {
  std::vector<PerImageMetric> per_image;
  double mean_psnr = 0.0;
  double var_psnr = 0.0;  // population variance
  double mean_ssim = 0.0;
  int n_infinite = 0;  // identical-image entries excluded from psnr stats
};

// Mean and population variance of the finite PSNR entries; mean SSIM over
// all entries. Permutation invariant.
MetricsReport aggregate(std::vector<PerImageMetric> per_image);

// Paper-style "32.09 (5.53)" rendering.
std::string format_mean_var(double mean, double var, int decimals = 3);

// One row per image plus a summary row; '#' header lines carry the metric
// protocol and manifest hash so the numbers are never ambiguous.
void write_report_csv(const std::string& path, const MetricsReport& report,
                      const std::vector<std::string>& header_lines);

}  // namespace mmsr
