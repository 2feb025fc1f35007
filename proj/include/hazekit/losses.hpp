#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "scattering.hpp"

namespace hazekit {

struct LossWeights {
  double lambda = 0.1;

  void validate() const {
    if (!(lambda >= 0.0)) throw ConfigError("LossWeights: lambda must be >= 0");
  }
};

/// Scalar loss plus d(loss)/d(pred) per pixel.
struct LossValue {
  double value;
  ImagePlane gradient;
};

namespace detail {

inline std::vector<std::uint8_t> shared_mask(const InverseDepthMap& a, const InverseDepthMap& b, const char* what) {
  require_same_shape(a.values(), b.values(), what);
  auto m = a.mask();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (m[i] && b.valid(i)) ? 1 : 0;
  return m;
}

inline std::size_t count_valid(const std::vector<std::uint8_t>& m, const char* what) {
  const auto n = static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; }));
  if (n == 0) throw DomainError(std::string(what) + ": no valid pixels");
  return n;
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

/// Mean absolute inverse-depth error over shared valid pixels. Subgradient 0 at ties.
inline LossValue l_depth(const InverseDepthMap& pred, const InverseDepthMap& gt) {
  const auto mask = detail::shared_mask(pred, gt, "l_depth");
  const double n = static_cast<double>(detail::count_valid(mask, "l_depth"));
  double sum = 0.0;
  std::vector<float> grad(mask.size(), 0.0f);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double d = static_cast<double>(pred[i]) - static_cast<double>(gt[i]);
    sum += std::abs(d);
    grad[i] = static_cast<float>(detail::sign(d) / n);
  }
  return {sum / n, ImagePlane(pred.width(), pred.height(), std::move(grad))};
}

/**
 * @brief Gradient-matching loss: mean of |dx(pred - gt)| + |dy(pred - gt)|.
 *
 * Forward differences; a difference is taken only when both pixels are valid,
 * so the last column/row contributes 0.
 */
inline LossValue l_grad(const InverseDepthMap& pred, const InverseDepthMap& gt) {
  const auto mask = detail::shared_mask(pred, gt, "l_grad");
  const double n = static_cast<double>(detail::count_valid(mask, "l_grad"));
  const int w = pred.width(), h = pred.height();
  std::vector<double> diff(mask.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = static_cast<double>(pred[i]) - static_cast<double>(gt[i]);
  }
  double sum = 0.0;
  std::vector<double> grad(mask.size(), 0.0);
  auto term = [&](std::size_t from, std::size_t to) {
    if (!mask[from] || !mask[to]) return;
    const double g = diff[to] - diff[from];
    sum += std::abs(g);
    const double s = detail::sign(g);
    grad[to] += s;
    grad[from] -= s;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (x + 1 < w) term(i, i + 1);
      if (y + 1 < h) term(i, i + static_cast<std::size_t>(w));
    }
  }
  std::vector<float> out(grad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(grad[i] / n);
  return {sum / n, ImagePlane(w, h, std::move(out))};
}

/**
 * @brief (1 - SSIM) / 2 on inverse depth.
 *
 * Both maps are min-max rescaled with one shared range over their valid
 * pixels; masked-out pixels take the ground-truth value in both.
 */
inline double l_ssim_loss(const InverseDepthMap& pred, const InverseDepthMap& gt) {
  const auto mask = detail::shared_mask(pred, gt, "l_ssim_loss");
  detail::count_valid(mask, "l_ssim_loss");
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double a = pred[i], b = gt[i];
    if (first) {
      lo = std::min(a, b);
      hi = std::max(a, b);
      first = false;
    } else {
      lo = std::min({lo, a, b});
      hi = std::max({hi, a, b});
    }
  }
  const double range = hi - lo;
  auto rescale = [&](double v) { return range > 0.0 ? std::clamp((v - lo) / range, 0.0, 1.0) : 0.0; };
  std::vector<float> p(mask.size()), g(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    g[i] = static_cast<float>(mask[i] ? rescale(gt[i]) : 0.0);
    p[i] = mask[i] ? static_cast<float>(rescale(pred[i])) : g[i];
  }
  const double s = ssim(ImagePlane(pred.width(), pred.height(), std::move(p)),
                        ImagePlane(gt.width(), gt.height(), std::move(g)))
                       .mean;
  return std::max(0.0, (1.0 - s) / 2.0);
}

/// lambda * l_depth + l_grad + l_ssim_loss.
inline double l_combined(const InverseDepthMap& pred, const InverseDepthMap& gt, const LossWeights& w = {}) {
  w.validate();
  return w.lambda * l_depth(pred, gt).value + l_grad(pred, gt).value + l_ssim_loss(pred, gt);
}

/// Mean |t_est - t_ref|; the per-stage transmission term.
inline double transmission_loss(const TransmissionMap& estimate, const TransmissionMap& reference) {
  require_same_shape(estimate.values(), reference.values(), "transmission_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    sum += std::abs(static_cast<double>(estimate[i]) - static_cast<double>(reference[i]));
  }
  return sum / static_cast<double>(estimate.size());
}

/// Mean |A_est - A_ref| over the three channels.
inline double atmosphere_loss(const AtmosphericLight& estimate, const AtmosphericLight& reference) {
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) sum += std::abs(static_cast<double>(estimate[c]) - static_cast<double>(reference[c]));
  return sum / 3.0;
}

/// Per-term view of the whole objective. Terms that were not computed stay empty.
struct LossBreakdown {
  std::optional<double> l_depth;
  std::optional<double> l_grad;
  std::optional<double> l_ssim;
  std::optional<double> l_combined;
  std::optional<double> l_transmission;
  std::optional<double> l_atmosphere;
  std::optional<double> l_dhaze;
  double total = 0.0;
};

/// sum_k (L_d^k + L_t^k) + L_a + L_Dhaze.
inline LossBreakdown total_objective(std::span<const double> stage_depth_losses,
                                     std::span<const double> stage_transmission_losses, double l_a, double l_dhaze) {
  if (stage_depth_losses.size() != stage_transmission_losses.size()) {
    throw DimensionError("total_objective: " + std::to_string(stage_depth_losses.size()) + " depth terms vs " +
                         std::to_string(stage_transmission_losses.size()) + " transmission terms");
  }
  // summed in sorted order so the result does not depend on stage order
  auto ordered_sum = [](std::span<const double> terms) {
    std::vector<double> v(terms.begin(), terms.end());
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  };
  const double depth_sum = ordered_sum(stage_depth_losses);
  const double trans_sum = ordered_sum(stage_transmission_losses);
  LossBreakdown out;
  out.l_combined = depth_sum;
  out.l_transmission = trans_sum;
  out.l_atmosphere = l_a;
  out.l_dhaze = l_dhaze;
  out.total = depth_sum + trans_sum + l_a + l_dhaze;
  return out;
}

}  // namespace hazekit
