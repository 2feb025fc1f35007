#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "filters.hpp"
#include "scattering.hpp"

namespace hazekit {

// Defaults are the usual dark-channel constants: 15x15 patch, omega 0.95,
// brightest 0.1% for the airlight, guided refinement r = 20, eps = 1e-3.
struct DcpConfig {
  FilterRadius patch_radius{7};
  float omega = 0.95f;
  double top_fraction = 0.001;
  FilterRadius guided_radius{20};
  double guided_eps = 1e-3;
  float t_floor = kDefaultTransmissionFloor;

  void validate() const {
    if (!(omega > 0.0f && omega <= 1.0f)) throw ConfigError("DcpConfig: omega must be in (0,1]");
    if (!(top_fraction > 0.0 && top_fraction < 1.0)) throw ConfigError("DcpConfig: top_fraction must be in (0,1)");
    if (!(guided_eps > 0.0)) throw ConfigError("DcpConfig: guided_eps must be > 0");
    require_unit_floor(t_floor, "DcpConfig");
  }
};

namespace detail {

inline ImagePlane channel_min(const RgbImage& img) {
  std::vector<float> m(img.pixel_count());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::min({img.r()[i], img.g()[i], img.b()[i]});
  return ImagePlane(img.width(), img.height(), std::move(m));
}

}  // namespace detail

/// min over channels, then spatial min over the patch.
inline ImagePlane dark_channel(const RgbImage& img, FilterRadius r) {
  require_window_fits(img.width(), img.height(), r, "dark_channel");
  return min_filter_fast(detail::channel_min(img), r);
}

/**
 * @brief Mean color of the ceil(top_fraction * N) pixels with the largest dark-channel value.
 *
 * Ties are broken by row-major index so the selection is deterministic.
 */
inline AtmosphericLight estimate_atmospheric_light(const RgbImage& img, const ImagePlane& dark, double top_fraction) {
  if (!(top_fraction > 0.0 && top_fraction < 1.0)) {
    throw ConfigError("estimate_atmospheric_light: top_fraction must be in (0,1), got " + std::to_string(top_fraction));
  }
  require_same_shape(img.r(), dark, "estimate_atmospheric_light");
  const std::size_t n = dark.size();
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(n))), 1, n);

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto brighter = [&](std::size_t a, std::size_t b) {
    return dark[a] != dark[b] ? dark[a] > dark[b] : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(), brighter);

  double sum[3] = {0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < count; ++k) {
    for (int c = 0; c < 3; ++c) sum[c] += img.channel(c)[idx[k]];
  }
  const double inv = 1.0 / static_cast<double>(count);
  return AtmosphericLight(static_cast<float>(sum[0] * inv), static_cast<float>(sum[1] * inv),
                          static_cast<float>(sum[2] * inv));
}

/// 1 - omega * dark_channel(I / A), before refinement. May be negative.
inline ImagePlane dcp_raw_transmission(const RgbImage& img, const AtmosphericLight& light, FilterRadius patch,
                                       float omega) {
  for (int c = 0; c < 3; ++c) {
    if (!(light[c] > 0.0f)) {
      throw DomainError("dcp_transmission: atmospheric light channel " + std::to_string(c) + " is zero");
    }
  }
  require_window_fits(img.width(), img.height(), patch, "dcp_transmission");
  std::vector<float> m(img.pixel_count());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = std::min({img.r()[i] / light[0], img.g()[i] / light[1], img.b()[i] / light[2]});
  }
  ImagePlane dark = min_filter_fast(ImagePlane(img.width(), img.height(), std::move(m)), patch);
  std::vector<float> t(dark.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1.0f - omega * dark[i];
  return ImagePlane(img.width(), img.height(), std::move(t));
}

inline TransmissionMap clamp_transmission(const ImagePlane& t, float t_floor) {
  std::vector<float> v(t.values().begin(), t.values().end());
  for (float& x : v) x = std::clamp(x, t_floor, 1.0f);
  return TransmissionMap(ImagePlane(t.width(), t.height(), std::move(v)));
}

/// Raw dark-channel transmission, guided-filtered on the hazy luminance, clamped to [t_floor, 1].
inline TransmissionMap dcp_transmission(const RgbImage& img, const AtmosphericLight& light, const DcpConfig& cfg) {
  cfg.validate();
  ImagePlane raw = dcp_raw_transmission(img, light, cfg.patch_radius, cfg.omega);
  ImagePlane refined = guided_filter(luminance(img), raw, cfg.guided_radius, cfg.guided_eps);
  return clamp_transmission(refined, cfg.t_floor);
}

struct DcpResult {
  RgbImage dehazed;
  TransmissionMap transmission;
  AtmosphericLight light;
};

inline DcpResult dcp_dehaze(const RgbImage& img, const DcpConfig& cfg = {}) {
  cfg.validate();
  ImagePlane dark = dark_channel(img, cfg.patch_radius);
  AtmosphericLight light = estimate_atmospheric_light(img, dark, cfg.top_fraction);
  TransmissionMap t = dcp_transmission(img, light, cfg);
  RgbImage out = dehaze_with(img, t, light, cfg.t_floor);
  return {std::move(out), std::move(t), light};
}

}  // namespace hazekit
