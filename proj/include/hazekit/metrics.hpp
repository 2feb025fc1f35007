#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "image.hpp"

namespace hazekit {

inline constexpr double kPsnrCap = 99.0;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// 10 log10(1 / MSE) over all pixels and channels, capped at kPsnrCap.
inline double psnr(const RgbImage& a, const RgbImage& b) {
  require_same_shape(a.r(), b.r(), "psnr");
  double se = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < a.pixel_count(); ++i) {
      const double d = static_cast<double>(a.channel(c)[i]) - static_cast<double>(b.channel(c)[i]);
      se += d * d;
    }
  }
  const double mse = se / (3.0 * static_cast<double>(a.pixel_count()));
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

struct SsimResult {
  double mean;
  ImagePlane map;  // one value per valid window center: (w - 10) x (h - 10)
};

namespace detail {

inline std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double x = i - kSsimWindow / 2;
    k[static_cast<std::size_t>(i)] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian filtering, "valid" mode.
inline std::vector<double> gaussian_valid(const std::vector<double>& src, int w, int h) {
  static const auto taps = gaussian_taps();
  const int ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * src[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace detail

/**
 * @brief Windowed SSIM, 11x11 Gaussian (sigma 1.5), unit dynamic range.
 *
 * Only window centers whose window lies fully inside the image are scored.
 */
inline SsimResult ssim(const ImagePlane& a, const ImagePlane& b) {
  require_same_shape(a, b, "ssim");
  const int w = a.width(), h = a.height();
  if (w < kSsimWindow || h < kSsimWindow) {
    throw ConfigError("ssim: image " + std::to_string(w) + "x" + std::to_string(h) + " smaller than the " +
                      std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) + " window");
  }
  const std::size_t n = a.size();
  std::vector<double> va(n), vb(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    va[i] = a[i];
    vb[i] = b[i];
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto mu_a = detail::gaussian_valid(va, w, h);
  const auto mu_b = detail::gaussian_valid(vb, w, h);
  const auto e_aa = detail::gaussian_valid(aa, w, h);
  const auto e_bb = detail::gaussian_valid(bb, w, h);
  const auto e_ab = detail::gaussian_valid(ab, w, h);

  std::vector<float> map(mu_a.size());
  double total = 0.0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + kSsimC1) * (2.0 * cov + kSsimC2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kSsimC1) * (var_a + var_b + kSsimC2);
    const double s = num / den;
    total += s;
    map[i] = static_cast<float>(s);
  }
  return {total / static_cast<double>(map.size()),
          ImagePlane(w - kSsimWindow + 1, h - kSsimWindow + 1, std::move(map))};
}

/// SSIM of two color images, computed on luminance.
inline double ssim_rgb(const RgbImage& a, const RgbImage& b) { return ssim(luminance(a), luminance(b)).mean; }

struct DepthMetrics {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double rel = 0.0;
  double sq_rel = 0.0;
  double rms = 0.0;
  double log10 = 0.0;
};

namespace detail {

inline std::vector<std::uint8_t> shared_mask(const DepthMap& a, const DepthMap& b, const char* what) {
  require_same_shape(a.values(), b.values(), what);
  auto m = a.mask();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (m[i] && b.valid(i)) ? 1 : 0;
  return m;
}

}  // namespace detail

/// Standard monocular-depth error metrics over pixels valid in both maps, in meters.
inline DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  const auto mask = detail::shared_mask(pred, gt, "depth_metrics");
  std::size_t n = 0;
  double d1 = 0, d2 = 0, d3 = 0, rel = 0, sq_rel = 0, sq = 0, lg = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double p = pred[i], g = gt[i];
    if (!(p > 0.0)) throw DomainError("depth_metrics: nonpositive prediction at pixel " + std::to_string(i));
    if (!(g > 0.0)) throw DomainError("depth_metrics: nonpositive ground truth at pixel " + std::to_string(i));
    const double ratio = std::max(p / g, g / p);
    d1 += ratio < 1.25 ? 1 : 0;
    d2 += ratio < 1.25 * 1.25 ? 1 : 0;
    d3 += ratio < 1.25 * 1.25 * 1.25 ? 1 : 0;
    const double diff = p - g;
    rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    sq += diff * diff;
    lg += std::abs(std::log10(p) - std::log10(g));
    ++n;
  }
  if (n == 0) throw DomainError("depth_metrics: no pixel is valid in both maps");
  const double inv = 1.0 / static_cast<double>(n);
  return {d1 * inv, d2 * inv, d3 * inv, rel * inv, sq_rel * inv, std::sqrt(sq * inv), lg * inv};
}

struct BandError {
  double band_upper_m;
  double mean_abs_error_m;  // 0 when the band is empty
  std::size_t pixel_count;
  bool empty() const { return pixel_count == 0; }
};

using BandErrorProfile = std::vector<BandError>;

/**
 * @brief Mean |pred - gt| per ground-truth distance band (d - width, d].
 *
 * Bands run from 0 up to max_depth; pixels farther than the last band are ignored.
 */
inline BandErrorProfile band_abs_error(const DepthMap& pred, const DepthMap& gt, double max_depth,
                                       double band_width = 2.0) {
  if (!(band_width > 0.0)) throw ConfigError("band_abs_error: band_width must be > 0");
  if (!(max_depth > 0.0)) throw ConfigError("band_abs_error: max_depth must be > 0");
  const auto mask = detail::shared_mask(pred, gt, "band_abs_error");
  const auto bands = static_cast<std::size_t>(std::ceil(max_depth / band_width - 1e-9));
  std::vector<double> sums(bands, 0.0);
  std::vector<std::size_t> counts(bands, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double g = gt[i];
    if (!(g > 0.0)) continue;
    const double pos = std::ceil(g / band_width) - 1.0;
    if (pos >= static_cast<double>(bands)) continue;
    const auto k = static_cast<std::size_t>(std::max(pos, 0.0));
    sums[k] += std::abs(static_cast<double>(pred[i]) - g);
    ++counts[k];
  }
  BandErrorProfile out;
  out.reserve(bands);
  for (std::size_t k = 0; k < bands; ++k) {
    out.push_back({band_width * static_cast<double>(k + 1),
                   counts[k] ? sums[k] / static_cast<double>(counts[k]) : 0.0, counts[k]});
  }
  return out;
}

}  // namespace hazekit
