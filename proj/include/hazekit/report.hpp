#pragma once

#include <cstdio>
#include <optional>
#include <string>

#include <json.hpp>

#include "losses.hpp"
#include "metrics.hpp"
#include "progressive.hpp"

namespace hazekit {

// JSON field names and CSV column order are part of the tool's output contract.

inline void to_json(nlohmann::ordered_json& j, const DepthMetrics& m) {
  j = nlohmann::ordered_json{{"delta1", m.delta1}, {"delta2", m.delta2}, {"delta3", m.delta3}, {"rel", m.rel},
                             {"sq_rel", m.sq_rel}, {"rms", m.rms},       {"log10", m.log10}};
}

inline void to_json(nlohmann::ordered_json& j, const BandError& b) {
  j = nlohmann::ordered_json{{"band_upper_m", b.band_upper_m},
                             {"mean_abs_error_m", b.empty() ? nlohmann::ordered_json(nullptr)
                                                            : nlohmann::ordered_json(b.mean_abs_error_m)},
                             {"pixel_count", b.pixel_count},
                             {"empty", b.empty()}};
}

inline void to_json(nlohmann::ordered_json& j, const LossBreakdown& l) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json("n/a");
  };
  j = nlohmann::ordered_json{{"l_depth", opt(l.l_depth)},   {"l_grad", opt(l.l_grad)},
                             {"l_ssim", opt(l.l_ssim)},     {"l_combined", opt(l.l_combined)},
                             {"l_transmission", opt(l.l_transmission)}, {"l_atmosphere", opt(l.l_atmosphere)},
                             {"l_dhaze", opt(l.l_dhaze)},   {"total", l.total}};
}

inline constexpr const char* kMetricsCsvHeader = "psnr,ssim,delta1,delta2,delta3,rel,sq_rel,rms,log10";
inline constexpr const char* kBandsCsvHeader = "band_upper_m,mean_abs_error_m,pixel_count";

inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

/// One metrics row; depth columns are left empty when no depth pair was evaluated.
inline std::string metrics_csv_row(double psnr_db, double ssim_value, const std::optional<DepthMetrics>& depth) {
  std::string row = csv_number(psnr_db) + "," + csv_number(ssim_value);
  if (depth) {
    for (double v : {depth->delta1, depth->delta2, depth->delta3, depth->rel, depth->sq_rel, depth->rms, depth->log10}) {
      row += "," + csv_number(v);
    }
  } else {
    row += ",,,,,,,";
  }
  return row;
}

inline std::string band_csv_row(const BandError& b) {
  return csv_number(b.band_upper_m) + "," + (b.empty() ? std::string() : csv_number(b.mean_abs_error_m)) + "," +
         std::to_string(b.pixel_count);
}

}  // namespace hazekit
