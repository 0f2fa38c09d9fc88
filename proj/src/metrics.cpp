// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace mmsr {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_window() {
  std::vector<double> w(kSsimWindow);
  const int half = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double x = i - half;
    w[static_cast<size_t>(i)] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[static_cast<size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Valid-mode separable filtering of an h x w plane: output (h-10) x (w-10).
void filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& win,
                  std::vector<double>& tmp, std::vector<double>& dst) {
  const int wo = w - kSsimWindow + 1;
  const int ho = h - kSsimWindow + 1;
  tmp.assign(static_cast<size_t>(h) * wo, 0.0);
  for (int y = 0; y < h; ++y) {
    const double* row = src.data() + static_cast<size_t>(y) * w;
    double* out = tmp.data() + static_cast<size_t>(y) * wo;
    for (int x = 0; x < wo; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += win[static_cast<size_t>(k)] * row[x + k];
      out[x] = acc;
    }
  }
  dst.assign(static_cast<size_t>(ho) * wo, 0.0);
  for (int y = 0; y < ho; ++y) {
    double* out = dst.data() + static_cast<size_t>(y) * wo;
    for (int k = 0; k < kSsimWindow; ++k) {
      const double wk = win[static_cast<size_t>(k)];
      const double* row = tmp.data() + static_cast<size_t>(y + k) * wo;
      for (int x = 0; x < wo; ++x) out[x] += wk * row[x];
    }
  }
}

}  // namespace

double psnr(const Image& a, const Image& b, int border_crop) {
  if (a.shape() != b.shape()) throw ShapeError("psnr: shape mismatch");
  const int c = static_cast<int>(a.dim(0));
  const int h = static_cast<int>(a.dim(1));
  const int w = static_cast<int>(a.dim(2));
  if (border_crop < 0 || 2 * border_crop >= h || 2 * border_crop >= w)
    throw UsageError("psnr: border crop leaves no pixels");

  double se = 0.0;
  int64_t n = 0;
  auto as = a.data();
  auto bs = b.data();
  for (int ci = 0; ci < c; ++ci) {
    for (int y = border_crop; y < h - border_crop; ++y) {
      const size_t base = (static_cast<size_t>(ci) * h + y) * w;
      for (int x = border_crop; x < w - border_crop; ++x) {
        const double d = static_cast<double>(as[base + x]) - static_cast<double>(bs[base + x]);
        se += d * d;
        ++n;
      }
    }
  }
  const double mse = se / static_cast<double>(n);
  if (mse == 0.0) return kPsnrInfinite;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  if (a.shape() != b.shape()) throw ShapeError("ssim: shape mismatch");
  const int c = static_cast<int>(a.dim(0));
  const int h = static_cast<int>(a.dim(1));
  const int w = static_cast<int>(a.dim(2));
  if (h < kSsimWindow || w < kSsimWindow)
    throw DataError("ssim: image smaller than the 11x11 window");

  static const std::vector<double> win = gaussian_window();
  const size_t plane = static_cast<size_t>(h) * w;
  std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
  std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;

  double total = 0.0;
  for (int ci = 0; ci < c; ++ci) {
    auto as = a.data().subspan(static_cast<size_t>(ci) * plane, plane);
    auto bs = b.data().subspan(static_cast<size_t>(ci) * plane, plane);
    for (size_t i = 0; i < plane; ++i) {
      const double va = as[i], vb = bs[i];
      pa[i] = va;
      pb[i] = vb;
      paa[i] = va * va;
      pbb[i] = vb * vb;
      pab[i] = va * vb;
    }
    filter_valid(pa, h, w, win, tmp, mu_a);
    filter_valid(pb, h, w, win, tmp, mu_b);
    filter_valid(paa, h, w, win, tmp, m_aa);
    filter_valid(pbb, h, w, win, tmp, m_bb);
    filter_valid(pab, h, w, win, tmp, m_ab);

    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = m_aa[i] - ma * ma;
      const double vb = m_bb[i] - mb * mb;
      const double cov = m_ab[i] - ma * mb;
      acc += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
             ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / static_cast<double>(c);
}

MetricsReport aggregate(std::vector<PerImageMetric> per_image) {
  if (per_image.empty()) throw DataError("aggregate: no per-image entries");
  MetricsReport rep;
  rep.per_image = std::move(per_image);

  // Sorted accumulation keeps the result permutation invariant.
  std::vector<double> finite;
  std::vector<double> ssims;
  for (const auto& e : rep.per_image) {
    if (std::isfinite(e.psnr_db))
      finite.push_back(e.psnr_db);
    else
      ++rep.n_infinite;
    ssims.push_back(e.ssim);
  }
  if (finite.empty()) throw DataError("aggregate: no finite PSNR entries");
  std::sort(finite.begin(), finite.end());
  std::sort(ssims.begin(), ssims.end());

  double sum = 0.0;
  for (double v : finite) sum += v;
  rep.mean_psnr = sum / static_cast<double>(finite.size());
  double sq = 0.0;
  for (double v : finite) sq += (v - rep.mean_psnr) * (v - rep.mean_psnr);
  rep.var_psnr = sq / static_cast<double>(finite.size());

  double ssum = 0.0;
  for (double v : ssims) ssum += v;
  rep.mean_ssim = ssum / static_cast<double>(ssims.size());
  return rep;
}

std::string format_mean_var(double mean, double var, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f (%.*f)", decimals, mean, decimals, var);
  return buf;
}

void write_report_csv(const std::string& path, const MetricsReport& report,
                      const std::vector<std::string>& header_lines) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("write_report_csv: cannot open " + path);
  for (const auto& line : header_lines) os << "# " << line << "\n";
  os << "id,psnr_db,ssim\n";
  char buf[128];
  for (const auto& e : report.per_image) {
    if (std::isfinite(e.psnr_db))
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", e.id.c_str(), e.psnr_db, e.ssim);
    else
      std::snprintf(buf, sizeof(buf), "%s,inf,%.6f\n", e.id.c_str(), e.ssim);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "summary,%.6f,%.6f\n", report.mean_psnr, report.mean_ssim);
  os << buf;
  std::snprintf(buf, sizeof(buf), "summary_var_psnr,%.6f,\n", report.var_psnr);
  os << buf;
  if (report.n_infinite > 0) os << "summary_infinite_psnr," << report.n_infinite << ",\n";
}

}  // namespace mmsr
