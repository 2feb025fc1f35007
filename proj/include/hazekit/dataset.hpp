#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "png_io.hpp"
#include "scattering.hpp"

namespace hazekit {

// ---------------------------------------------------------------------------
// Random numbers. SplitMix64 keeps every draw reproducible from (seed, index)
// on any platform, which the standard distributions do not guarantee.

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [0,1), 53 bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int integer(int lo, int hi) {
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

/// Rounds to 6 significant digits, the precision the manifest stores.
inline double round_sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::strtod(buf, nullptr);
}

// ---------------------------------------------------------------------------
// Haze parameters.

inline constexpr double kLightMin = 0.7;
inline constexpr double kLightMax = 1.0;
inline constexpr double kBetaMin = 0.5;
inline constexpr double kBetaMax = 1.5;
inline constexpr int kDrawsPerImage = 3;

struct HazeParams {
  float light;  // homogeneous airlight A
  double beta;
  std::uint64_t seed;

  AtmosphericLight atmospheric_light() const { return AtmosphericLight(light); }
  ScatteringCoefficient scattering() const { return ScatteringCoefficient(beta); }
};

struct HazeRanges {
  double light_min = kLightMin, light_max = kLightMax;
  double beta_min = kBetaMin, beta_max = kBetaMax;
};

/**
 * @brief Independent uniform draws of (A, beta); draw j uses seed mix_seed(seed, j).
 *
 * Values are rounded to 6 significant digits so a manifest row reproduces
 * them exactly.
 */
inline std::vector<HazeParams> sample_haze_params(std::uint64_t seed, int count = kDrawsPerImage,
                                                  const HazeRanges& ranges = {}) {
  if (count < 1) throw ConfigError("sample_haze_params: count must be >= 1, got " + std::to_string(count));
  std::vector<HazeParams> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    const std::uint64_t draw_seed = mix_seed(seed, static_cast<std::uint64_t>(j));
    SplitMix64 rng(draw_seed);
    const double a = std::clamp(round_sig6(rng.uniform(ranges.light_min, ranges.light_max)), ranges.light_min,
                                ranges.light_max);
    const double b = std::clamp(round_sig6(rng.uniform(ranges.beta_min, ranges.beta_max)), ranges.beta_min,
                                ranges.beta_max);
    out.push_back({static_cast<float>(a), b, draw_seed});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Procedural RGB-D scenes.

enum class PrimitiveKind { plane, box, ramp };

struct SceneSpec {
  int width = 128;
  int height = 128;
  double min_depth = 1.0;
  double max_depth = 10.0;
  int primitives = 6;
  std::vector<PrimitiveKind> kinds{PrimitiveKind::plane, PrimitiveKind::box, PrimitiveKind::ramp};
  int tile_period_min = 5;  // pixels between dark grout lines
  int tile_period_max = 9;
  double wave_freq_min = 0.02;  // cycles per pixel of the shading pattern
  double wave_freq_max = 0.12;
  std::uint64_t seed = 0;

  void validate() const {
    if (width < 1 || height < 1) throw ConfigError("SceneSpec: width and height must be >= 1");
    if (!(min_depth > 0.0 && min_depth < max_depth)) {
      throw ConfigError("SceneSpec: need 0 < min_depth < max_depth, got [" + std::to_string(min_depth) + ", " +
                        std::to_string(max_depth) + "]");
    }
    if (primitives < 0) throw ConfigError("SceneSpec: primitives must be >= 0");
    if (primitives > 0 && kinds.empty()) throw ConfigError("SceneSpec: no primitive kinds enabled");
    if (tile_period_min < 2 || tile_period_max < tile_period_min) {
      throw ConfigError("SceneSpec: tile periods must satisfy 2 <= min <= max");
    }
    if (!(wave_freq_min > 0.0 && wave_freq_max >= wave_freq_min)) {
      throw ConfigError("SceneSpec: wave frequencies must satisfy 0 < min <= max");
    }
  }
};

struct RgbdScene {
  RgbImage clear;
  DepthMap depth;
};

namespace detail {

struct Material {
  double base[3];
  int period;
  int off_x, off_y;
  double fx, fy, phase_x, phase_y;
};

// A saturated base color (one channel near zero) with grout lines and a wave
// shading, so every patch holds pixels whose darkest channel is ~0.
inline Material random_material(SplitMix64& rng, const SceneSpec& spec) {
  Material m{};
  for (double& c : m.base) c = rng.uniform(0.3, 1.0);
  m.base[rng.integer(0, 2)] = rng.uniform(0.0, 0.12);
  m.period = rng.integer(spec.tile_period_min, spec.tile_period_max);
  m.off_x = rng.integer(0, m.period - 1);
  m.off_y = rng.integer(0, m.period - 1);
  m.fx = rng.uniform(spec.wave_freq_min, spec.wave_freq_max);
  m.fy = rng.uniform(spec.wave_freq_min, spec.wave_freq_max);
  m.phase_x = rng.uniform(0.0, 2.0 * std::numbers::pi);
  m.phase_y = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return m;
}

inline void shade(const Material& m, int x, int y, double out[3]) {
  double f = 0.0;
  if ((x + m.off_x) % m.period != 0 && (y + m.off_y) % m.period != 0) {
    f = 0.65 + 0.35 * std::sin(2.0 * std::numbers::pi * m.fx * x + m.phase_x) *
                   std::sin(2.0 * std::numbers::pi * m.fy * y + m.phase_y);
  }
  for (int c = 0; c < 3; ++c) out[c] = std::clamp(m.base[c] * f, 0.0, 1.0);
}

}  // namespace detail

/**
 * @brief Deterministic textured scene with piecewise-smooth depth.
 *
 * The background is a receding plane spanning the whole depth range (far at
 * the top row). Primitives are z-buffered on top: planes (tilted in x and y),
 * boxes (constant depth) and ramps (depth linear in x).
 */
inline RgbdScene gen_scene(const SceneSpec& spec) {
  spec.validate();
  const int w = spec.width, h = spec.height;
  const double lo = spec.min_depth, hi = spec.max_depth;
  SplitMix64 rng(mix_seed(spec.seed, 0x5ce7e));

  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> depth(n);
  std::vector<int> owner(n, 0);
  std::vector<detail::Material> materials{detail::random_material(rng, spec)};

  const double tilt = rng.uniform(-0.15, 0.15) * (hi - lo);
  for (int y = 0; y < h; ++y) {
    const double v = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    for (int x = 0; x < w; ++x) {
      const double u = w > 1 ? static_cast<double>(x) / (w - 1) - 0.5 : 0.0;
      depth[static_cast<std::size_t>(y) * w + x] = hi - (hi - lo) * v + tilt * u * v;
    }
  }

  for (int p = 0; p < spec.primitives; ++p) {
    const PrimitiveKind kind = spec.kinds[static_cast<std::size_t>(rng.integer(0, static_cast<int>(spec.kinds.size()) - 1))];
    const int pw = std::max(1, static_cast<int>(rng.uniform(0.15, 0.45) * w));
    const int ph = std::max(1, static_cast<int>(rng.uniform(0.15, 0.45) * h));
    const int x0 = rng.integer(0, std::max(0, w - pw));
    const int y0 = rng.integer(0, std::max(0, h - ph));
    const double d0 = rng.uniform(lo, lo + 0.8 * (hi - lo));
    double gx = 0.0, gy = 0.0;
    switch (kind) {
      case PrimitiveKind::box:
        break;
      case PrimitiveKind::ramp:
        gx = rng.uniform(-0.5, 0.5) * (hi - lo) / std::max(1, pw);
        break;
      case PrimitiveKind::plane:
        gx = rng.uniform(-0.3, 0.3) * (hi - lo) / std::max(1, pw);
        gy = rng.uniform(-0.3, 0.3) * (hi - lo) / std::max(1, ph);
        break;
    }
    materials.push_back(detail::random_material(rng, spec));
    const int id = static_cast<int>(materials.size()) - 1;
    for (int y = y0; y < std::min(h, y0 + ph); ++y) {
      for (int x = x0; x < std::min(w, x0 + pw); ++x) {
        const double d = std::clamp(d0 + gx * (x - x0) + gy * (y - y0), lo, hi);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (d < depth[i]) {
          depth[i] = d;
          owner[i] = id;
        }
      }
    }
  }

  std::vector<float> rgb[3] = {std::vector<float>(n), std::vector<float>(n), std::vector<float>(n)};
  std::vector<float> dv(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double c[3];
      detail::shade(materials[static_cast<std::size_t>(owner[i])], x, y, c);
      for (int k = 0; k < 3; ++k) rgb[k][i] = static_cast<float>(c[k]);
      dv[i] = std::clamp(static_cast<float>(std::clamp(depth[i], lo, hi)), static_cast<float>(lo),
                         static_cast<float>(hi));
    }
  }
  return {RgbImage(ImagePlane(w, h, std::move(rgb[0])), ImagePlane(w, h, std::move(rgb[1])),
                   ImagePlane(w, h, std::move(rgb[2]))),
          DepthMap(ImagePlane(w, h, std::move(dv)))};
}

// ---------------------------------------------------------------------------
// File formats: 8-bit RGB PNG for color, 16-bit gray PNG in millimeters for
// depth (0 = no ground truth), 8-bit gray PNG for transmission.

inline std::uint16_t to_u8(float v) { return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

inline RgbImage quantize_rgb8(const RgbImage& img) {
  std::vector<float> out[3];
  for (int c = 0; c < 3; ++c) {
    out[c].resize(img.pixel_count());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) out[c][i] = to_u8(img.channel(c)[i]) / 255.0f;
  }
  return RgbImage(ImagePlane(img.width(), img.height(), std::move(out[0])),
                  ImagePlane(img.width(), img.height(), std::move(out[1])),
                  ImagePlane(img.width(), img.height(), std::move(out[2])));
}

inline std::uint16_t to_mm(float meters) {
  return static_cast<std::uint16_t>(std::clamp<long>(std::lround(static_cast<double>(meters) * 1000.0), 1, 65535));
}

inline DepthMap quantize_depth_mm(const DepthMap& depth) {
  std::vector<float> out(depth.size(), 0.0f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (depth.valid(i)) out[i] = to_mm(depth[i]) / 1000.0f;
  }
  return DepthMap(ImagePlane(depth.width(), depth.height(), std::move(out)),
                  depth.all_valid() ? std::vector<std::uint8_t>{} : depth.mask());
}

inline void save_rgb(const std::string& path, const RgbImage& img) {
  png::Raster r{img.width(), img.height(), 3, 8, std::vector<std::uint16_t>(img.pixel_count() * 3)};
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) r.samples[3 * i + static_cast<std::size_t>(c)] = to_u8(img.channel(c)[i]);
  }
  png::write(path, r);
}

inline RgbImage load_rgb(const std::string& path) {
  const png::Raster r = png::read(path);
  if (r.bit_depth != 8 || (r.channels != 3 && r.channels != 1)) {
    throw FormatError("'" + path + "': expected 8-bit RGB PNG, got " + std::to_string(r.bit_depth) + "-bit with " +
                      std::to_string(r.channels) + " channel(s)");
  }
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  std::vector<float> out[3] = {std::vector<float>(n), std::vector<float>(n), std::vector<float>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const std::size_t src = r.channels == 3 ? 3 * i + static_cast<std::size_t>(c) : i;
      out[c][i] = r.samples[src] / 255.0f;
    }
  }
  return RgbImage(ImagePlane(r.width, r.height, std::move(out[0])), ImagePlane(r.width, r.height, std::move(out[1])),
                  ImagePlane(r.width, r.height, std::move(out[2])));
}

inline void save_depth(const std::string& path, const DepthMap& depth) {
  png::Raster r{depth.width(), depth.height(), 1, 16, std::vector<std::uint16_t>(depth.size(), 0)};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.valid(i)) r.samples[i] = to_mm(depth[i]);
  }
  png::write(path, r);
}

/// 16-bit millimeters to meters; zero samples become masked out.
inline DepthMap load_depth(const std::string& path) {
  const png::Raster r = png::read(path);
  if (r.bit_depth != 16 || r.channels != 1) {
    throw FormatError("'" + path + "': expected 16-bit grayscale PNG depth in millimeters, got " +
                      std::to_string(r.bit_depth) + "-bit with " + std::to_string(r.channels) + " channel(s)");
  }
  std::vector<float> v(r.samples.size());
  std::vector<std::uint8_t> mask(r.samples.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = r.samples[i] / 1000.0f;
    mask[i] = r.samples[i] != 0 ? 1 : 0;
  }
  return DepthMap(ImagePlane(r.width, r.height, std::move(v)), std::move(mask));
}

inline void save_transmission(const std::string& path, const TransmissionMap& t) {
  png::Raster r{t.width(), t.height(), 1, 8, std::vector<std::uint16_t>(t.size())};
  for (std::size_t i = 0; i < t.size(); ++i) r.samples[i] = to_u8(t[i]);
  png::write(path, r);
}

inline RgbdScene load_rgbd(const std::string& clear_path, const std::string& depth_path) {
  RgbImage clear = load_rgb(clear_path);
  DepthMap depth = load_depth(depth_path);
  if (clear.width() != depth.width() || clear.height() != depth.height()) {
    throw FormatError("load_rgbd: '" + clear_path + "' is " + std::to_string(clear.width()) + "x" +
                      std::to_string(clear.height()) + " but '" + depth_path + "' is " +
                      std::to_string(depth.width()) + "x" + std::to_string(depth.height()));
  }
  return {std::move(clear), std::move(depth)};
}

// ---------------------------------------------------------------------------
// Manifest: CSV `clear,depth,hazy,A,beta,seed`, paths relative to the
// manifest's directory, floats with 6 significant digits.

struct ManifestEntry {
  std::string clear_path;
  std::string depth_path;
  std::string hazy_path;
  HazeParams params;
};

inline constexpr const char* kManifestHeader = "clear,depth,hazy,A,beta,seed";

inline std::string manifest_row(const ManifestEntry& e) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), ",%.6g,%.6g,%llu", static_cast<double>(e.params.light), e.params.beta,
                static_cast<unsigned long long>(e.params.seed));
  return e.clear_path + "," + e.depth_path + "," + e.hazy_path + buf;
}

inline void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kManifestHeader << '\n';
  for (const auto& e : entries) out << manifest_row(e) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw FormatError("'" + path + "': expected header '" + kManifestHeader + "'");
  }
  std::vector<ManifestEntry> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
    if (cols.size() != 6) {
      throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": expected 6 columns, got " +
                        std::to_string(cols.size()));
    }
    try {
      ManifestEntry e{cols[0], cols[1], cols[2],
                      {static_cast<float>(std::stod(cols[3])), std::stod(cols[4]), std::stoull(cols[5])}};
      out.push_back(std::move(e));
    } catch (const std::logic_error&) {
      throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": unparseable number");
    }
  }
  return out;
}

/**
 * @brief Re-hazifies an entry from its clear, depth and params and compares with the stored hazy file.
 *
 * Returns the max absolute per-channel difference (1/255 is the quantization step).
 */
inline double manifest_entry_deviation(const std::filesystem::path& root, const ManifestEntry& e) {
  const RgbdScene scene = load_rgbd((root / e.clear_path).string(), (root / e.depth_path).string());
  const RgbImage stored = load_rgb((root / e.hazy_path).string());
  const RgbImage redone = quantize_rgb8(
      hazify(scene.clear, transmission_from_depth(scene.depth, e.params.scattering()), e.params.atmospheric_light()));
  if (stored.width() != redone.width() || stored.height() != redone.height()) {
    throw FormatError("'" + e.hazy_path + "' does not match its clear image size");
  }
  double worst = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < stored.pixel_count(); ++i) {
      worst = std::max(worst, std::abs(static_cast<double>(stored.channel(c)[i]) - redone.channel(c)[i]));
    }
  }
  return worst;
}

namespace detail {

inline std::string indexed_name(const char* stem, std::size_t i, int j = -1) {
  char buf[64];
  if (j < 0) {
    std::snprintf(buf, sizeof(buf), "%s_%04zu.png", stem, i);
  } else {
    std::snprintf(buf, sizeof(buf), "%s_%04zu_%d.png", stem, i, j);
  }
  return buf;
}

// Runs fn(i) for i in [0, count) on `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/**
 * @brief Writes clear/depth/hazy PNGs for every (pair, draw) plus `manifest.csv` in out_dir.
 *
 * Pair i draws its params with seed mix_seed(seed, i). Hazy images are made
 * from the stored (quantized) clear and depth, so each manifest row
 * re-hazifies to its hazy file exactly. The manifest is ordered by input
 * regardless of `jobs`.
 */
inline std::vector<ManifestEntry> synthesize_dataset(const std::vector<RgbdScene>& pairs, int count_per_image,
                                                     std::uint64_t seed, const std::filesystem::path& out_dir,
                                                     int jobs = 1) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::vector<std::vector<ManifestEntry>> per_pair(pairs.size());
  detail::parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const RgbImage clear = quantize_rgb8(pairs[i].clear);
    const DepthMap depth = quantize_depth_mm(pairs[i].depth);
    const std::string clear_name = detail::indexed_name("clear", i);
    const std::string depth_name = detail::indexed_name("depth", i);
    save_rgb((out_dir / clear_name).string(), clear);
    save_depth((out_dir / depth_name).string(), depth);
    const auto params = sample_haze_params(mix_seed(seed, i), count_per_image);
    for (std::size_t j = 0; j < params.size(); ++j) {
      const RgbImage hazy =
          hazify(clear, transmission_from_depth(depth, params[j].scattering()), params[j].atmospheric_light());
      const std::string hazy_name = detail::indexed_name("hazy", i, static_cast<int>(j));
      save_rgb((out_dir / hazy_name).string(), hazy);
      per_pair[i].push_back({clear_name, depth_name, hazy_name, params[j]});
    }
  });

  std::vector<ManifestEntry> entries;
  for (auto& v : per_pair) {
    for (auto& e : v) entries.push_back(std::move(e));
  }
  write_manifest((out_dir / "manifest.csv").string(), entries);
  return entries;
}

// ---------------------------------------------------------------------------
// In-memory procedural evaluation suite.

struct SuiteSpec {
  int scenes = 20;
  std::uint64_t seed = 2024;
  SceneSpec scene;
  HazeRanges haze;
};

struct SuiteScene {
  RgbImage clear;
  DepthMap depth;
  TransmissionMap transmission;
  HazeParams params;
  RgbImage hazy;
};

/// Scene i uses scene seed mix_seed(seed, i) and one haze draw from mix_seed(seed, i + scenes).
inline std::vector<SuiteScene> procedural_suite(const SuiteSpec& spec = {}) {
  std::vector<SuiteScene> out;
  out.reserve(static_cast<std::size_t>(spec.scenes));
  for (int i = 0; i < spec.scenes; ++i) {
    SceneSpec s = spec.scene;
    s.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(i));
    RgbdScene scene = gen_scene(s);
    const HazeParams p =
        sample_haze_params(mix_seed(spec.seed, static_cast<std::uint64_t>(i + spec.scenes)), 1, spec.haze)[0];
    TransmissionMap t = transmission_from_depth(scene.depth, p.scattering());
    RgbImage hazy = hazify(scene.clear, t, p.atmospheric_light());
    out.push_back({std::move(scene.clear), std::move(scene.depth), std::move(t), p, std::move(hazy)});
  }
  return out;
}

}  // namespace hazekit
