#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace hazekit {

/**
 * @brief Dense single-channel float raster, row-major.
 *
 * Immutable once built. Every value is finite; units depend on what the
 * plane holds (intensity, meters, transmission, gradient, ...).
 */
class ImagePlane {
 public:
  ImagePlane(int width, int height, std::vector<float> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width_ < 1 || height_ < 1) {
      throw DimensionError("ImagePlane: width and height must be >= 1, got " +
                           std::to_string(width_) + "x" + std::to_string(height_));
    }
    if (data_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
      throw DimensionError("ImagePlane: data length " + std::to_string(data_.size()) +
                           " != " + std::to_string(width_) + "x" + std::to_string(height_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        throw DomainError("ImagePlane: non-finite value at pixel " + std::to_string(i));
      }
    }
  }

  static ImagePlane filled(int width, int height, float value) {
    return ImagePlane(width, height,
                      std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                             static_cast<std::size_t>(std::max(height, 0)),
                                         value));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  float operator[](std::size_t i) const { return data_[i]; }
  float operator()(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)];
  }
  std::span<const float> values() const { return data_; }

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

 private:
  int width_;
  int height_;
  std::vector<float> data_;
};

inline bool same_shape(const ImagePlane& a, const ImagePlane& b) {
  return a.width() == b.width() && a.height() == b.height();
}

inline void require_same_shape(const ImagePlane& a, const ImagePlane& b, const char* what) {
  if (!same_shape(a, b)) {
    throw DimensionError(std::string(what) + ": size mismatch " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
  }
}

/// Three same-sized planes with every value in [0,1].
class RgbImage {
 public:
  RgbImage(ImagePlane r, ImagePlane g, ImagePlane b)
      : planes_{std::move(r), std::move(g), std::move(b)} {
    require_same_shape(planes_[0], planes_[1], "RgbImage");
    require_same_shape(planes_[0], planes_[2], "RgbImage");
    for (const auto& p : planes_) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0f || p[i] > 1.0f) {
          throw DomainError("RgbImage: value " + std::to_string(p[i]) + " outside [0,1] at pixel " +
                            std::to_string(i));
        }
      }
    }
  }

  static RgbImage filled(int width, int height, float r, float g, float b) {
    return RgbImage(ImagePlane::filled(width, height, r), ImagePlane::filled(width, height, g),
                    ImagePlane::filled(width, height, b));
  }

  int width() const { return planes_[0].width(); }
  int height() const { return planes_[0].height(); }
  std::size_t pixel_count() const { return planes_[0].size(); }

  const ImagePlane& channel(int c) const { return planes_[static_cast<std::size_t>(c)]; }
  const ImagePlane& r() const { return planes_[0]; }
  const ImagePlane& g() const { return planes_[1]; }
  const ImagePlane& b() const { return planes_[2]; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::vector<ImagePlane> planes_;
};

struct MetersUnit {
  static constexpr const char* name = "DepthMap";
};
struct InverseMetersUnit {
  static constexpr const char* name = "InverseDepthMap";
};

/**
 * @brief Non-negative plane with an optional validity mask.
 *
 * Mask value 1 marks a pixel that carries ground truth; masked-out pixels are
 * excluded from every statistic. An empty mask means "all valid".
 */
template <typename Unit>
class MaskedMap {
 public:
  explicit MaskedMap(ImagePlane values, std::vector<std::uint8_t> mask = {})
      : values_(std::move(values)), mask_(std::move(mask)) {
    if (!mask_.empty() && mask_.size() != values_.size()) {
      throw DimensionError(std::string(Unit::name) + ": mask length " + std::to_string(mask_.size()) +
                           " != pixel count " + std::to_string(values_.size()));
    }
    if (!mask_.empty() && std::all_of(mask_.begin(), mask_.end(), [](auto m) { return m != 0; })) {
      mask_.clear();
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (valid(i) && values_[i] < 0.0f) {
        throw DomainError(std::string(Unit::name) + ": negative value at pixel " + std::to_string(i));
      }
    }
  }

  const ImagePlane& values() const { return values_; }
  int width() const { return values_.width(); }
  int height() const { return values_.height(); }
  std::size_t size() const { return values_.size(); }
  float operator[](std::size_t i) const { return values_[i]; }

  bool all_valid() const { return mask_.empty(); }
  bool valid(std::size_t i) const { return mask_.empty() || mask_[i] != 0; }
  std::size_t valid_count() const {
    if (mask_.empty()) return values_.size();
    return static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(), [](auto m) { return m != 0; }));
  }
  /// Expanded mask, one byte per pixel.
  std::vector<std::uint8_t> mask() const {
    return mask_.empty() ? std::vector<std::uint8_t>(values_.size(), 1) : mask_;
  }

  friend bool operator==(const MaskedMap&, const MaskedMap&) = default;

 private:
  ImagePlane values_;
  std::vector<std::uint8_t> mask_;
};

using DepthMap = MaskedMap<MetersUnit>;
using InverseDepthMap = MaskedMap<InverseMetersUnit>;

/// Per-pixel transmission in [0,1].
class TransmissionMap {
 public:
  explicit TransmissionMap(ImagePlane values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] < 0.0f || values_[i] > 1.0f) {
        throw DomainError("TransmissionMap: value " + std::to_string(values_[i]) +
                          " outside [0,1] at pixel " + std::to_string(i));
      }
    }
  }

  const ImagePlane& values() const { return values_; }
  int width() const { return values_.width(); }
  int height() const { return values_.height(); }
  std::size_t size() const { return values_.size(); }
  float operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const TransmissionMap&, const TransmissionMap&) = default;

 private:
  ImagePlane values_;
};

namespace detail {

template <typename To, typename From>
To reciprocal_impl(const From& in) {
  std::vector<float> out(in.size(), 0.0f);
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!in.valid(i)) continue;
    if (!(in[i] > 0.0f)) {
      throw DomainError("reciprocal: nonpositive value " + std::to_string(in[i]) + " at pixel " +
                        std::to_string(i));
    }
    out[i] = static_cast<float>(1.0 / static_cast<double>(in[i]));
  }
  return To(ImagePlane(in.width(), in.height(), std::move(out)),
            in.all_valid() ? std::vector<std::uint8_t>{} : in.mask());
}

}  // namespace detail

/// Per-pixel 1/d over valid pixels; the mask is carried over.
inline InverseDepthMap reciprocal(const DepthMap& depth) {
  return detail::reciprocal_impl<InverseDepthMap>(depth);
}

inline DepthMap reciprocal(const InverseDepthMap& inverse) {
  return detail::reciprocal_impl<DepthMap>(inverse);
}

/// Builds an RgbImage from unconstrained channel data, saturating into [0,1].
inline RgbImage clamp_unit(int width, int height, std::span<const float> r, std::span<const float> g,
                           std::span<const float> b) {
  auto clamp_channel = [&](std::span<const float> src) {
    std::vector<float> out(src.begin(), src.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (std::isnan(out[i])) throw DomainError("clamp_unit: NaN at pixel " + std::to_string(i));
      out[i] = std::clamp(out[i], 0.0f, 1.0f);
    }
    return ImagePlane(width, height, std::move(out));
  };
  return RgbImage(clamp_channel(r), clamp_channel(g), clamp_channel(b));
}

inline RgbImage clamp_unit(const ImagePlane& r, const ImagePlane& g, const ImagePlane& b) {
  require_same_shape(r, g, "clamp_unit");
  require_same_shape(r, b, "clamp_unit");
  return clamp_unit(r.width(), r.height(), r.values(), g.values(), b.values());
}

/// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B.
inline ImagePlane luminance(const RgbImage& img) {
  std::vector<float> out(img.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double y = 0.299 * img.r()[i] + 0.587 * img.g()[i] + 0.114 * img.b()[i];
    out[i] = static_cast<float>(std::clamp(y, 0.0, 1.0));
  }
  return ImagePlane(img.width(), img.height(), std::move(out));
}

}  // namespace hazekit
