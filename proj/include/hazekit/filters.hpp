#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "image.hpp"

namespace hazekit {

/// Half-width of a square window; the window is (2r+1) x (2r+1).
class FilterRadius {
 public:
  explicit FilterRadius(int r) : r_(r) {
    if (r_ < 1) throw ConfigError("FilterRadius: radius must be >= 1, got " + std::to_string(r_));
  }
  int value() const { return r_; }
  int window() const { return 2 * r_ + 1; }

  friend bool operator==(const FilterRadius&, const FilterRadius&) = default;

 private:
  int r_;
};

inline void require_window_fits(int width, int height, FilterRadius r, const char* what) {
  if (r.window() > std::min(width, height)) {
    throw ConfigError(std::string(what) + ": window " + std::to_string(r.window()) + " does not fit " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
}

inline void require_window_fits(const ImagePlane& p, FilterRadius r, const char* what) {
  require_window_fits(p.width(), p.height(), r, what);
}

/// Reference spatial minimum, replicate border. O(n r^2).
inline ImagePlane min_filter_naive(const ImagePlane& src, FilterRadius radius) {
  require_window_fits(src, radius, "min_filter_naive");
  const int w = src.width(), h = src.height(), r = radius.value();
  std::vector<float> out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float m = src(x, y);
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -r; dx <= r; ++dx) {
          m = std::min(m, src(std::clamp(x + dx, 0, w - 1), yy));
        }
      }
      out[static_cast<std::size_t>(y) * w + x] = m;
    }
  }
  return ImagePlane(w, h, std::move(out));
}

namespace detail {

/**
 * van Herk / Gil-Werman running minimum over one line with replicate padding.
 * `line` holds n samples; `pad`, `fwd`, `bwd` are scratch of length n + 2r.
 */
inline void running_min_line(std::span<float> line, int r, std::vector<float>& pad, std::vector<float>& fwd,
                             std::vector<float>& bwd) {
  const int n = static_cast<int>(line.size());
  const int w = 2 * r + 1;
  const int m = n + 2 * r;
  pad.resize(static_cast<std::size_t>(m));
  fwd.resize(pad.size());
  bwd.resize(pad.size());
  for (int i = 0; i < m; ++i) pad[i] = line[static_cast<std::size_t>(std::clamp(i - r, 0, n - 1))];

  for (int i = 0; i < m; ++i) fwd[i] = (i % w == 0) ? pad[i] : std::min(fwd[i - 1], pad[i]);
  for (int i = m - 1; i >= 0; --i) {
    bwd[i] = (i % w == w - 1 || i == m - 1) ? pad[i] : std::min(bwd[i + 1], pad[i]);
  }
  for (int j = 0; j < n; ++j) line[static_cast<std::size_t>(j)] = std::min(bwd[j], fwd[j + w - 1]);
}

}  // namespace detail

/// Separable O(n) spatial minimum; produces exactly the same floats as min_filter_naive.
inline ImagePlane min_filter_fast(const ImagePlane& src, FilterRadius radius) {
  require_window_fits(src, radius, "min_filter_fast");
  const int w = src.width(), h = src.height(), r = radius.value();
  std::vector<float> data(src.values().begin(), src.values().end());
  std::vector<float> pad, fwd, bwd;

  for (int y = 0; y < h; ++y) {
    detail::running_min_line(std::span<float>(data.data() + static_cast<std::size_t>(y) * w, w), r, pad, fwd,
                             bwd);
  }
  std::vector<float> column(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) column[y] = data[static_cast<std::size_t>(y) * w + x];
    detail::running_min_line(column, r, pad, fwd, bwd);
    for (int y = 0; y < h; ++y) data[static_cast<std::size_t>(y) * w + x] = column[y];
  }
  return ImagePlane(w, h, std::move(data));
}

namespace detail {

/**
 * Window mean with replicate border via a summed-area table over the padded
 * raster. Row prefix sums use Kahan compensation; everything is double.
 */
inline std::vector<double> box_mean(std::span<const double> src, int w, int h, int r) {
  const int pw = w + 2 * r, ph = h + 2 * r;
  const std::size_t stride = static_cast<std::size_t>(pw) + 1;
  std::vector<double> sat(stride * (static_cast<std::size_t>(ph) + 1), 0.0);

  for (int py = 0; py < ph; ++py) {
    const int y = std::clamp(py - r, 0, h - 1);
    const double* row = src.data() + static_cast<std::size_t>(y) * w;
    double run = 0.0, carry = 0.0;
    double* above = sat.data() + static_cast<std::size_t>(py) * stride;
    double* cur = above + stride;
    for (int px = 0; px < pw; ++px) {
      const double v = row[std::clamp(px - r, 0, w - 1)] - carry;
      const double t = run + v;
      carry = (t - run) - v;
      run = t;
      cur[px + 1] = above[px + 1] + run;
    }
  }

  const int win = 2 * r + 1;
  const double norm = 1.0 / (static_cast<double>(win) * win);
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const double* top = sat.data() + static_cast<std::size_t>(y) * stride;
    const double* bot = top + static_cast<std::size_t>(win) * stride;
    for (int x = 0; x < w; ++x) {
      out[static_cast<std::size_t>(y) * w + x] = (bot[x + win] - top[x + win] - bot[x] + top[x]) * norm;
    }
  }
  return out;
}

inline std::vector<double> to_double(const ImagePlane& p) {
  return std::vector<double>(p.values().begin(), p.values().end());
}

inline ImagePlane to_plane(int w, int h, const std::vector<double>& v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return ImagePlane(w, h, std::move(out));
}

}  // namespace detail

/// Mean over the (2r+1)^2 window, replicate border.
inline ImagePlane box_filter(const ImagePlane& src, FilterRadius radius) {
  require_window_fits(src, radius, "box_filter");
  auto in = detail::to_double(src);
  return detail::to_plane(src.width(), src.height(),
                          detail::box_mean(in, src.width(), src.height(), radius.value()));
}

/**
 * @brief Edge-preserving smoothing of `src` steered by `guide` (local linear model).
 *
 * Per window: a = cov(guide, src) / (var(guide) + eps), b = mean(src) - a mean(guide).
 * Output is box(a) * guide + box(b).
 */
inline ImagePlane guided_filter(const ImagePlane& guide, const ImagePlane& src, FilterRadius radius, double eps) {
  if (!(eps > 0.0)) throw ConfigError("guided_filter: eps must be > 0, got " + std::to_string(eps));
  require_same_shape(guide, src, "guided_filter");
  require_window_fits(src, radius, "guided_filter");
  const int w = src.width(), h = src.height(), r = radius.value();
  const std::size_t n = src.size();

  auto gi = detail::to_double(guide);
  auto pi = detail::to_double(src);
  std::vector<double> gp(n), gg(n);
  for (std::size_t i = 0; i < n; ++i) {
    gp[i] = gi[i] * pi[i];
    gg[i] = gi[i] * gi[i];
  }
  auto mean_g = detail::box_mean(gi, w, h, r);
  auto mean_p = detail::box_mean(pi, w, h, r);
  auto mean_gp = detail::box_mean(gp, w, h, r);
  auto mean_gg = detail::box_mean(gg, w, h, r);

  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double var = mean_gg[i] - mean_g[i] * mean_g[i];
    const double cov = mean_gp[i] - mean_g[i] * mean_p[i];
    a[i] = cov / (var + eps);
    b[i] = mean_p[i] - a[i] * mean_g[i];
  }
  auto mean_a = detail::box_mean(a, w, h, r);
  auto mean_b = detail::box_mean(b, w, h, r);

  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = mean_a[i] * gi[i] + mean_b[i];
  return detail::to_plane(w, h, q);
}

}  // namespace hazekit
