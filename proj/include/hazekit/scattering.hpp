#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "image.hpp"

namespace hazekit {

inline constexpr float kDefaultTransmissionFloor = 0.05f;

/// Global airlight color. Stored per channel; the scalar constructor gives the homogeneous case.
class AtmosphericLight {
 public:
  explicit AtmosphericLight(float value) : AtmosphericLight(value, value, value) {}
  AtmosphericLight(float r, float g, float b) : rgb_{r, g, b} {
    for (float c : rgb_) {
      if (!(c >= 0.0f && c <= 1.0f)) {
        throw DomainError("AtmosphericLight: component " + std::to_string(c) + " outside [0,1]");
      }
    }
  }

  float operator[](int c) const { return rgb_[static_cast<std::size_t>(c)]; }
  const std::array<float, 3>& rgb() const { return rgb_; }
  bool homogeneous() const { return rgb_[0] == rgb_[1] && rgb_[1] == rgb_[2]; }

  friend bool operator==(const AtmosphericLight&, const AtmosphericLight&) = default;

 private:
  std::array<float, 3> rgb_;
};

/// Per-meter attenuation beta > 0.
class ScatteringCoefficient {
 public:
  explicit ScatteringCoefficient(double beta) : beta_(beta) {
    if (!(beta_ > 0.0) || !std::isfinite(beta_)) {
      throw DomainError("ScatteringCoefficient: beta must be finite and > 0, got " + std::to_string(beta_));
    }
  }
  double value() const { return beta_; }

  friend bool operator==(const ScatteringCoefficient&, const ScatteringCoefficient&) = default;

 private:
  double beta_;
};

inline void require_unit_floor(float t_floor, const char* what) {
  if (!(t_floor > 0.0f && t_floor <= 1.0f)) {
    throw ConfigError(std::string(what) + ": t_floor must be in (0,1], got " + std::to_string(t_floor));
  }
}

/**
 * @brief t(x) = exp(-beta * d(x)).
 *
 * Masked-out depth pixels map through their stored value like any other.
 * The result is kept strictly positive even when exp underflows in float.
 */
inline TransmissionMap transmission_from_depth(const DepthMap& depth, ScatteringCoefficient beta) {
  std::vector<float> t(depth.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = std::exp(-beta.value() * static_cast<double>(depth[i]));
    t[i] = std::max(static_cast<float>(v), std::numeric_limits<float>::min());
  }
  return TransmissionMap(ImagePlane(depth.width(), depth.height(), std::move(t)));
}

/// d(x) = -ln(max(t(x), t_floor)) / beta. Always finite and >= 0.
inline DepthMap depth_from_transmission(const TransmissionMap& t, ScatteringCoefficient beta,
                                        float t_floor = kDefaultTransmissionFloor) {
  require_unit_floor(t_floor, "depth_from_transmission");
  std::vector<float> d(t.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double tt = std::max(t[i], t_floor);
    d[i] = static_cast<float>(-std::log(tt) / beta.value());
    if (d[i] < 0.0f) d[i] = 0.0f;  // -log(1) can round to -0
  }
  return DepthMap(ImagePlane(t.width(), t.height(), std::move(d)));
}

/// I = J t + A (1 - t), per channel. A convex combination, so no clamping is needed.
inline RgbImage hazify(const RgbImage& clear, const TransmissionMap& t, const AtmosphericLight& light) {
  require_same_shape(clear.r(), t.values(), "hazify");
  std::vector<ImagePlane> out;
  for (int c = 0; c < 3; ++c) {
    const ImagePlane& j = clear.channel(c);
    const double a = light[c];
    std::vector<float> v(j.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double ti = t[i];
      v[i] = static_cast<float>(static_cast<double>(j[i]) * ti + a * (1.0 - ti));
    }
    out.emplace_back(j.width(), j.height(), std::move(v));
  }
  return RgbImage(std::move(out[0]), std::move(out[1]), std::move(out[2]));
}

namespace detail {

// Unclamped inversion J = (I - A) / max(t, floor) + A, one vector per channel.
inline std::array<std::vector<float>, 3> invert_scattering(const RgbImage& hazy, const TransmissionMap& t,
                                                          const AtmosphericLight& light, float t_floor) {
  std::array<std::vector<float>, 3> out;
  for (int c = 0; c < 3; ++c) {
    const ImagePlane& in = hazy.channel(c);
    const double a = light[c];
    auto& v = out[static_cast<std::size_t>(c)];
    v.resize(in.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double ti = std::max(t[i], t_floor);
      v[i] = static_cast<float>((static_cast<double>(in[i]) - a) / ti + a);
    }
  }
  return out;
}

}  // namespace detail

/// Inverts the scattering model with a transmission floor, then clamps to [0,1].
inline RgbImage dehaze_with(const RgbImage& hazy, const TransmissionMap& t, const AtmosphericLight& light,
                            float t_floor = kDefaultTransmissionFloor) {
  require_unit_floor(t_floor, "dehaze_with");
  require_same_shape(hazy.r(), t.values(), "dehaze_with");
  auto raw = detail::invert_scattering(hazy, t, light, t_floor);
  return clamp_unit(hazy.width(), hazy.height(), raw[0], raw[1], raw[2]);
}

/**
 * @brief Smallest t per pixel for which inverting the scattering model keeps J in [0,1].
 *
 * J_c >= 0 needs t >= 1 - I_c / A_c; J_c <= 1 needs t >= (I_c - A_c) / (1 - A_c)
 * when A_c < 1. Channels with A_c = 0 impose nothing.
 */
inline ImagePlane transmission_lower_bound(const RgbImage& hazy, const AtmosphericLight& light) {
  std::vector<float> out(hazy.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double bound = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double a = light[c];
      const double v = hazy.channel(c)[i];
      if (a > 0.0) bound = std::max(bound, 1.0 - v / a);
      if (a < 1.0) bound = std::max(bound, (v - a) / (1.0 - a));
    }
    out[i] = static_cast<float>(std::min(bound, 1.0));
  }
  return ImagePlane(hazy.width(), hazy.height(), std::move(out));
}

/**
 * @brief Mean |J t + A (1 - t) - I| over pixels and channels.
 *
 * Zero when (J, t, A) recomposes the hazy observation exactly.
 */
inline double reconstruction_residual(const RgbImage& dehazed, const TransmissionMap& t,
                                      const AtmosphericLight& light, const RgbImage& hazy) {
  require_same_shape(dehazed.r(), t.values(), "reconstruction_residual");
  require_same_shape(dehazed.r(), hazy.r(), "reconstruction_residual");
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double a = light[c];
    const ImagePlane& j = dehazed.channel(c);
    const ImagePlane& in = hazy.channel(c);
    for (std::size_t i = 0; i < j.size(); ++i) {
      const double ti = t[i];
      sum += std::abs(static_cast<double>(j[i]) * ti + a * (1.0 - ti) - static_cast<double>(in[i]));
    }
  }
  return sum / (3.0 * static_cast<double>(dehazed.pixel_count()));
}

}  // namespace hazekit
