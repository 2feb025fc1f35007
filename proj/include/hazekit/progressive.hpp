#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcp.hpp"
#include "filters.hpp"
#include "scattering.hpp"

namespace hazekit {

inline constexpr double kDefaultBeta = 1.0;
inline constexpr float kMinStageDepth = 1e-3f;

struct CascadeConfig {
  int stages = 2;
  std::optional<double> beta;  // nullopt: regress against external depth, else kDefaultBeta
  FilterRadius depth_smooth_radius{8};
  double depth_smooth_eps = 1e-3;
  DcpConfig dcp;
  float t_floor = kDefaultTransmissionFloor;
  // Raise each stage transmission to transmission_lower_bound so the dehazed
  // image needs no clipping. Off reproduces the plain smoothing stage.
  bool project_feasible = true;

  void validate() const {
    if (stages < 1) throw ConfigError("CascadeConfig: stages must be >= 1, got " + std::to_string(stages));
    if (beta && !(*beta > 0.0)) throw ConfigError("CascadeConfig: beta must be > 0");
    if (!(depth_smooth_eps > 0.0)) throw ConfigError("CascadeConfig: depth_smooth_eps must be > 0");
    require_unit_floor(t_floor, "CascadeConfig");
    dcp.validate();
  }
};

/// Output of one cascade stage: refined transmission t_k, the depth it feeds forward, and its residual.
struct StageEstimate {
  int stage_index;
  DepthMap depth;
  TransmissionMap transmission;
  double residual;
};

enum class BetaSource { config, regression, fallback };

inline const char* to_string(BetaSource s) {
  switch (s) {
    case BetaSource::config: return "config";
    case BetaSource::regression: return "regression";
    case BetaSource::fallback: return "default";
  }
  return "unknown";
}

struct DehazeResult {
  RgbImage dehazed;
  AtmosphericLight atmospheric_light;
  ScatteringCoefficient beta;
  BetaSource beta_source;
  DepthMap initial_depth;
  double initial_residual;  // residual of exp(-beta d0) before any refinement
  std::vector<StageEstimate> stages;
};

/**
 * @brief Least-squares fit of -ln t = beta d through the origin.
 *
 * Uses pixels where depth is valid and > 0 and 0 < t < 1.
 */
inline ScatteringCoefficient estimate_beta(const TransmissionMap& t, const DepthMap& depth_prior) {
  require_same_shape(t.values(), depth_prior.values(), "estimate_beta");
  double num = 0.0, den = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!depth_prior.valid(i)) continue;
    const double d = depth_prior[i];
    const double ti = t[i];
    if (!(d > 0.0) || !(ti > 0.0 && ti < 1.0)) continue;
    num += d * -std::log(ti);
    den += d * d;
    ++used;
  }
  if (used == 0 || !(num > 0.0)) {
    throw EstimationError("estimate_beta: no pixels with valid depth > 0 and 0 < t < 1");
  }
  return ScatteringCoefficient(num / den);
}

namespace detail {

// Fills masked-out depth pixels by repeated normalized box averaging of the valid ones.
inline ImagePlane fill_invalid(const DepthMap& depth, FilterRadius radius) {
  if (depth.all_valid()) return depth.values();
  if (depth.valid_count() == 0) throw DomainError("fill_invalid: depth map has no valid pixels");
  const int w = depth.width(), h = depth.height();
  const int r = std::min(radius.value(), (std::min(w, h) - 1) / 2);
  const std::size_t n = depth.size();
  std::vector<double> value(n), weight(n);
  auto mask = depth.mask();
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = mask[i] ? 1.0 : 0.0;
    value[i] = mask[i] ? depth[i] : 0.0;
  }
  if (r < 1) {
    // degenerate 1- or 2-pixel-wide raster: fall back to the mean of valid pixels
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += value[i];
    const double m = s / static_cast<double>(depth.valid_count());
    for (std::size_t i = 0; i < n; ++i) if (!mask[i]) value[i] = m;
    return to_plane(w, h, value);
  }
  bool missing = true;
  while (missing) {
    std::vector<double> vw(n);
    for (std::size_t i = 0; i < n; ++i) vw[i] = value[i] * weight[i];
    auto sum_v = box_mean(vw, w, h, r);
    auto sum_w = box_mean(weight, w, h, r);
    missing = false;
    std::vector<double> next_w = weight;
    for (std::size_t i = 0; i < n; ++i) {
      if (weight[i] > 0.0) continue;
      if (sum_w[i] > 0.0) {
        value[i] = sum_v[i] / sum_w[i];
        next_w[i] = 1.0;
      } else {
        missing = true;
      }
    }
    weight = std::move(next_w);
  }
  return to_plane(w, h, value);
}

inline ImagePlane pointwise_max(const ImagePlane& a, const ImagePlane& b) {
  std::vector<float> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(a[i], b[i]);
  return ImagePlane(a.width(), a.height(), std::move(v));
}

inline ImagePlane clamp_plane(const ImagePlane& p, float lo, float hi) {
  std::vector<float> v(p.values().begin(), p.values().end());
  for (float& x : v) x = std::clamp(x, lo, hi);
  return ImagePlane(p.width(), p.height(), std::move(v));
}

inline double residual_of(const RgbImage& hazy, const TransmissionMap& t, const AtmosphericLight& light,
                          float t_floor) {
  return reconstruction_residual(dehaze_with(hazy, t, light, t_floor), t, light, hazy);
}

}  // namespace detail

/**
 * @brief One depth -> transmission -> depth pass.
 *
 * t_k = clamp(max(guided(lum, exp(-beta d_k)), t_lb), t_floor, 1), where t_lb
 * is transmission_lower_bound of the hazy image; the forwarded depth is the
 * guided-smoothed -ln(t_k)/beta. Residual is the recomposition error of the
 * image dehazed with t_k.
 */
inline StageEstimate refine_stage(const RgbImage& hazy, const DepthMap& depth, const AtmosphericLight& light,
                                  ScatteringCoefficient beta, const CascadeConfig& cfg, int stage_index = 1) {
  cfg.validate();
  require_same_shape(hazy.r(), depth.values(), "refine_stage");
  const ImagePlane lum = luminance(hazy);

  DepthMap dense(detail::fill_invalid(depth, cfg.depth_smooth_radius));
  const TransmissionMap t_raw = transmission_from_depth(dense, beta);
  const ImagePlane guided = guided_filter(lum, t_raw.values(), cfg.dcp.guided_radius, cfg.dcp.guided_eps);
  const TransmissionMap t_k = clamp_transmission(
      cfg.project_feasible ? detail::pointwise_max(guided, transmission_lower_bound(hazy, light)) : guided,
      cfg.t_floor);

  const float max_depth = static_cast<float>(-std::log(static_cast<double>(cfg.t_floor)) / beta.value());
  const DepthMap d_raw = depth_from_transmission(t_k, beta, cfg.t_floor);
  DepthMap d_next(detail::clamp_plane(
      guided_filter(lum, d_raw.values(), cfg.depth_smooth_radius, cfg.depth_smooth_eps), kMinStageDepth,
      std::max(max_depth, kMinStageDepth)));

  const double residual = detail::residual_of(hazy, t_k, light, cfg.t_floor);
  return StageEstimate{stage_index, std::move(d_next), t_k, residual};
}

/**
 * @brief Initial depth d0 for the cascade.
 *
 * Returns `external` unchanged when given; otherwise -ln(t_dcp)/beta with the
 * dark-channel transmission of the hazy image.
 */
inline DepthMap initial_depth(const RgbImage& hazy, const CascadeConfig& cfg, const std::optional<DepthMap>& external,
                              const AtmosphericLight& light, ScatteringCoefficient beta) {
  if (external) {
    require_same_shape(hazy.r(), external->values(), "initial_depth");
    return *external;
  }
  return depth_from_transmission(dcp_transmission(hazy, light, cfg.dcp), beta, cfg.t_floor);
}

inline DepthMap initial_depth(const RgbImage& hazy, const CascadeConfig& cfg,
                              const std::optional<DepthMap>& external = std::nullopt) {
  cfg.validate();
  if (external) return initial_depth(hazy, cfg, external, AtmosphericLight(1.0f), ScatteringCoefficient(kDefaultBeta));
  const AtmosphericLight light =
      estimate_atmospheric_light(hazy, dark_channel(hazy, cfg.dcp.patch_radius), cfg.dcp.top_fraction);
  return initial_depth(hazy, cfg, external, light, ScatteringCoefficient(cfg.beta.value_or(kDefaultBeta)));
}

/**
 * @brief Classical progressive depth/transmission cascade.
 *
 * A from the dark channel; beta from the config, else regressed against the
 * external depth, else kDefaultBeta; then `cfg.stages` refine_stage passes.
 * The final image is dehazed with the last stage's transmission.
 */
inline DehazeResult pdld_classical(const RgbImage& hazy, const CascadeConfig& cfg = {},
                                   const std::optional<DepthMap>& external_depth = std::nullopt) {
  cfg.validate();
  if (external_depth) require_same_shape(hazy.r(), external_depth->values(), "pdld_classical");

  const AtmosphericLight light =
      estimate_atmospheric_light(hazy, dark_channel(hazy, cfg.dcp.patch_radius), cfg.dcp.top_fraction);

  ScatteringCoefficient beta(kDefaultBeta);
  BetaSource source = BetaSource::fallback;
  if (cfg.beta) {
    beta = ScatteringCoefficient(*cfg.beta);
    source = BetaSource::config;
  } else if (external_depth) {
    try {
      beta = estimate_beta(dcp_transmission(hazy, light, cfg.dcp), *external_depth);
      source = BetaSource::regression;
    } catch (const EstimationError&) {
      source = BetaSource::fallback;
    }
  }

  DepthMap d0 = initial_depth(hazy, cfg, external_depth, light, beta);
  const TransmissionMap t0 = clamp_transmission(
      transmission_from_depth(DepthMap(detail::fill_invalid(d0, cfg.depth_smooth_radius)), beta).values(),
      cfg.t_floor);
  const double r0 = detail::residual_of(hazy, t0, light, cfg.t_floor);

  std::vector<StageEstimate> stages;
  stages.reserve(static_cast<std::size_t>(cfg.stages));
  const DepthMap* current = &d0;
  for (int k = 1; k <= cfg.stages; ++k) {
    stages.push_back(refine_stage(hazy, *current, light, beta, cfg, k));
    current = &stages.back().depth;
  }
  RgbImage dehazed = dehaze_with(hazy, stages.back().transmission, light, cfg.t_floor);
  return DehazeResult{std::move(dehazed), light, beta, source, std::move(d0), r0, std::move(stages)};
}

}  // namespace hazekit
