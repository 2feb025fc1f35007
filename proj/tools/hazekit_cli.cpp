// hazekit command-line tool: hazify, dehaze, evaluate, gen-dataset.
// stdout carries JSON only; diagnostics go to stderr.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <hazekit/hazekit.hpp>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace hazekit;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitFormat = 2;

int default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// "out/h.png" + "_t" -> "out/h_t.png"
std::string sibling(const std::string& path, const std::string& suffix, const std::string& ext = ".png") {
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + ext)).string();
}

void emit(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

// floats go out at the 6 significant digits the manifest uses, not as widened doubles
double sig6(float v) { return round_sig6(static_cast<double>(v)); }

ordered_json light_json(const AtmosphericLight& a) { return ordered_json::array({sig6(a[0]), sig6(a[1]), sig6(a[2])}); }

// ---------------------------------------------------------------------------
// hazify

struct HazifyOptions {
  std::string clear, depth, out, emit_t;
  float light = 0.9f;
  double beta = 1.0;
  bool sample = false;
  std::uint64_t seed = 0;
  int count = kDrawsPerImage;
};

int run_hazify(const HazifyOptions& o) {
  const RgbdScene scene = load_rgbd(o.clear, o.depth);
  std::vector<HazeParams> params;
  if (o.sample) {
    params = sample_haze_params(o.seed, o.count);
  } else {
    params.push_back({o.light, o.beta, o.seed});
  }

  ordered_json outputs = ordered_json::array();
  for (std::size_t j = 0; j < params.size(); ++j) {
    const HazeParams& p = params[j];
    const TransmissionMap t = transmission_from_depth(scene.depth, p.scattering());
    const std::string suffix = o.sample ? "_" + std::to_string(j) : "";
    const std::string hazy_path = o.sample ? sibling(o.out, suffix) : o.out;
    save_rgb(hazy_path, hazify(scene.clear, t, p.atmospheric_light()));
    ordered_json entry{{"output", hazy_path}, {"A", sig6(p.light)}, {"beta", p.beta}};
    if (o.sample) entry["seed"] = p.seed;
    if (!o.emit_t.empty()) {
      const std::string t_path = o.sample ? sibling(o.emit_t, suffix) : o.emit_t;
      save_transmission(t_path, t);
      entry["transmission"] = t_path;
    }
    outputs.push_back(std::move(entry));
  }
  ordered_json report{{"command", "hazify"}, {"clear", o.clear}, {"depth", o.depth}, {"mode", o.sample ? "sample" : "fixed"}};
  if (o.sample) {
    report["seed"] = o.seed;
    report["count"] = o.count;
  }
  report["outputs"] = std::move(outputs);
  emit(report);
  return 0;
}

// ---------------------------------------------------------------------------
// dehaze

struct DehazeOptions {
  std::string hazy, out, method = "pdld", depth, manifest, out_dir;
  bool emit_all = false;
  bool with_depth = false;
  bool no_projection = false;
  int jobs = 0;
  int stages = 2;
  std::optional<double> beta;
  int patch_radius = 7;
  float omega = 0.95f;
  double top_fraction = 0.001;
  int guided_radius = 20;
  double guided_eps = 1e-3;
  float t_floor = kDefaultTransmissionFloor;
  int depth_smooth_radius = 8;
  double depth_smooth_eps = 1e-3;

  DcpConfig dcp() const {
    DcpConfig c{FilterRadius(patch_radius), omega, top_fraction, FilterRadius(guided_radius), guided_eps, t_floor};
    c.validate();
    return c;
  }
  CascadeConfig cascade() const {
    CascadeConfig c;
    c.stages = stages;
    c.beta = beta;
    c.depth_smooth_radius = FilterRadius(depth_smooth_radius);
    c.depth_smooth_eps = depth_smooth_eps;
    c.dcp = dcp();
    c.t_floor = t_floor;
    c.project_feasible = !no_projection;
    c.validate();
    return c;
  }
};

// Dehazes one image and writes its outputs; returns the JSON record.
ordered_json dehaze_one(const DehazeOptions& o, const std::string& hazy_path, const std::string& out_path,
                        const std::optional<std::string>& depth_path) {
  const RgbImage hazy = load_rgb(hazy_path);
  ordered_json rec{{"input", hazy_path}, {"output", out_path}, {"method", o.method}};

  if (o.method == "dcp") {
    const DcpResult r = dcp_dehaze(hazy, o.dcp());
    save_rgb(out_path, r.dehazed);
    const double residual = reconstruction_residual(r.dehazed, r.transmission, r.light, hazy);
    rec["A"] = light_json(r.light);
    rec["final_residual"] = residual;
    if (o.emit_all) {
      const std::string t_path = sibling(out_path, "_t");
      const std::string res_path = sibling(out_path, "_residuals", ".json");
      save_transmission(t_path, r.transmission);
      write_text(res_path, ordered_json{{"final_residual", residual}}.dump(2) + "\n");
      rec["transmission"] = t_path;
      rec["residuals"] = res_path;
    }
    return rec;
  }

  std::optional<DepthMap> external;
  if (depth_path) external = load_depth(*depth_path);
  const DehazeResult r = pdld_classical(hazy, o.cascade(), external);
  save_rgb(out_path, r.dehazed);

  ordered_json stages = ordered_json::array();
  for (const StageEstimate& s : r.stages) stages.push_back({{"stage", s.stage_index}, {"residual", s.residual}});
  const double final_residual = r.stages.back().residual;
  rec["A"] = light_json(r.atmospheric_light);
  rec["beta"] = r.beta.value();
  rec["beta_source"] = to_string(r.beta_source);
  rec["initial_residual"] = r.initial_residual;
  rec["stages"] = stages;
  rec["final_residual"] = final_residual;

  if (o.emit_all) {
    const std::string t_path = sibling(out_path, "_t");
    save_transmission(t_path, r.stages.back().transmission);
    ordered_json depth_files = ordered_json::array();
    for (const StageEstimate& s : r.stages) {
      const std::string d_path = sibling(out_path, "_depth_" + std::to_string(s.stage_index));
      save_depth(d_path, s.depth);
      depth_files.push_back(d_path);
    }
    const std::string res_path = sibling(out_path, "_residuals", ".json");
    write_text(res_path, ordered_json{{"initial_residual", r.initial_residual},
                                      {"stages", stages},
                                      {"final_residual", final_residual}}
                                 .dump(2) +
                             "\n");
    rec["transmission"] = t_path;
    rec["depth_maps"] = depth_files;
    rec["residuals"] = res_path;
  }
  return rec;
}

int run_dehaze(const DehazeOptions& o) {
  if (o.manifest.empty()) {
    if (o.hazy.empty() || o.out.empty()) throw ConfigError("dehaze: need a hazy input and -o, or --manifest with --out-dir");
    ordered_json rec = dehaze_one(o, o.hazy, o.out, o.depth.empty() ? std::nullopt : std::optional(o.depth));
    ordered_json report{{"command", "dehaze"}};
    report.update(rec);
    emit(report);
    return 0;
  }

  if (o.out_dir.empty()) throw ConfigError("dehaze: --manifest needs --out-dir");
  const std::vector<ManifestEntry> entries = read_manifest(o.manifest);
  const fs::path root = fs::path(o.manifest).parent_path();
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw IoError("cannot create '" + o.out_dir + "': " + ec.message());

  std::vector<ordered_json> records(entries.size());
  std::vector<std::string> errors(entries.size());
  detail::parallel_for(entries.size(), o.jobs > 0 ? o.jobs : default_jobs(), [&](std::size_t i) {
    const ManifestEntry& e = entries[i];
    const std::string in = (root / e.hazy_path).string();
    const std::string out = (fs::path(o.out_dir) / fs::path(e.hazy_path).filename()).string();
    try {
      records[i] = dehaze_one(o, in, out, o.with_depth ? std::optional((root / e.depth_path).string()) : std::nullopt);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
      records[i] = ordered_json{{"input", in}, {"error", ex.what()}};
    }
  });

  std::size_t failed = 0;
  ordered_json list = ordered_json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!errors[i].empty()) {
      ++failed;
      std::cerr << "hazekit dehaze: entry " << i << " skipped: " << errors[i] << '\n';
    }
    list.push_back(std::move(records[i]));
  }
  emit(ordered_json{{"command", "dehaze"},
                    {"manifest", o.manifest},
                    {"processed", entries.size() - failed},
                    {"failed", failed},
                    {"entries", std::move(list)}});
  return failed == 0 ? 0 : kExitFailure;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  std::string pred, ref, depth_pred, depth_gt, format = "json", out;
  bool bands = false;
  double band_width = 2.0;
  double max_depth = 30.0;
};

int run_evaluate(const EvaluateOptions& o) {
  if (o.depth_pred.empty() != o.depth_gt.empty()) throw ConfigError("evaluate: --depth-pred and --depth-gt go together");
  if (o.bands && o.depth_pred.empty()) throw ConfigError("evaluate: --bands needs --depth-pred and --depth-gt");
  if (o.format == "csv" && o.out.empty()) throw ConfigError("evaluate: --format csv needs -o");

  const RgbImage pred = load_rgb(o.pred);
  const RgbImage ref = load_rgb(o.ref);
  const double p = psnr(pred, ref);
  const double s = ssim_rgb(pred, ref);

  std::optional<DepthMetrics> depth;
  BandErrorProfile profile;
  if (!o.depth_pred.empty()) {
    const DepthMap dp = load_depth(o.depth_pred);
    const DepthMap dg = load_depth(o.depth_gt);
    depth = depth_metrics(dp, dg);
    if (o.bands) profile = band_abs_error(dp, dg, o.max_depth, o.band_width);
  }

  ordered_json report{{"command", "evaluate"}, {"pred", o.pred}, {"ref", o.ref}, {"psnr", p}, {"ssim", s}};
  if (depth) report["depth"] = *depth;
  if (o.bands) report["bands"] = profile;

  if (o.format == "csv") {
    write_text(o.out, std::string(kMetricsCsvHeader) + "\n" + metrics_csv_row(p, s, depth) + "\n");
    ordered_json summary{{"command", "evaluate"}, {"format", "csv"}, {"report", o.out}};
    if (o.bands) {
      std::string text = std::string(kBandsCsvHeader) + "\n";
      for (const BandError& b : profile) text += band_csv_row(b) + "\n";
      const std::string bands_path = sibling(o.out, "_bands", ".csv");
      write_text(bands_path, text);
      summary["bands"] = bands_path;
      summary["band_rows"] = profile.size();
    }
    emit(summary);
    return 0;
  }
  if (!o.out.empty()) write_text(o.out, report.dump(2) + "\n");
  emit(report);
  return 0;
}

// ---------------------------------------------------------------------------
// gen-dataset

struct GenOptions {
  std::string spec, out_dir;
  bool verify = false;
  int jobs = 0;
};

struct DatasetSpec {
  int scenes = 5;
  int draws = kDrawsPerImage;
  std::uint64_t seed = 0;
  SceneSpec scene;
};

// `key = value` lines; '#' starts a comment.
DatasetSpec parse_dataset_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file '" + path + "'");
  DatasetSpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = line.substr(0, line.find('#'));
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "'" + path + "' line " + std::to_string(lineno);
    if (eq == std::string::npos) throw FormatError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      std::size_t used = 0;
      auto as_int = [&] {
        int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      };
      auto as_double = [&] {
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      };
      if (key == "scenes") spec.scenes = as_int();
      else if (key == "draws") spec.draws = as_int();
      else if (key == "seed") {
        spec.seed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      }
      else if (key == "width") spec.scene.width = as_int();
      else if (key == "height") spec.scene.height = as_int();
      else if (key == "min_depth") spec.scene.min_depth = as_double();
      else if (key == "max_depth") spec.scene.max_depth = as_double();
      else if (key == "primitives") spec.scene.primitives = as_int();
      else if (key == "tile_period_min") spec.scene.tile_period_min = as_int();
      else if (key == "tile_period_max") spec.scene.tile_period_max = as_int();
      else if (key == "wave_freq_min") spec.scene.wave_freq_min = as_double();
      else if (key == "wave_freq_max") spec.scene.wave_freq_max = as_double();
      else throw FormatError(where + ": unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw FormatError(where + ": bad value '" + value + "' for '" + key + "'");
    }
  }
  if (spec.scenes < 1) throw FormatError("'" + path + "': scenes must be >= 1");
  if (spec.draws < 1) throw FormatError("'" + path + "': draws must be >= 1");
  try {
    spec.scene.validate();
  } catch (const ConfigError& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
  return spec;
}

int run_gen_dataset(const GenOptions& o) {
  const DatasetSpec spec = parse_dataset_spec(o.spec);
  const int jobs = o.jobs > 0 ? o.jobs : default_jobs();

  std::vector<RgbdScene> scenes(static_cast<std::size_t>(spec.scenes),
                                RgbdScene{RgbImage::filled(1, 1, 0.0f, 0.0f, 0.0f), DepthMap(ImagePlane::filled(1, 1, 1.0f))});
  detail::parallel_for(scenes.size(), jobs, [&](std::size_t i) {
    SceneSpec s = spec.scene;
    s.seed = mix_seed(~spec.seed, i);
    scenes[i] = gen_scene(s);
  });
  const auto entries = synthesize_dataset(scenes, spec.draws, spec.seed, o.out_dir, jobs);

  ordered_json summary{{"command", "gen-dataset"},
                       {"spec", o.spec},
                       {"out_dir", o.out_dir},
                       {"manifest", (fs::path(o.out_dir) / "manifest.csv").string()},
                       {"scenes", spec.scenes},
                       {"draws", spec.draws},
                       {"rows", entries.size()}};
  int status = 0;
  if (o.verify) {
    std::vector<double> dev(entries.size());
    detail::parallel_for(entries.size(), jobs,
                         [&](std::size_t i) { dev[i] = manifest_entry_deviation(o.out_dir, entries[i]); });
    const double tolerance = 1.0 / 255.0;  // one 8-bit code
    std::size_t bad = 0;
    for (std::size_t i = 0; i < dev.size(); ++i) {
      if (!(dev[i] <= tolerance)) {
        ++bad;
        std::cerr << "hazekit gen-dataset: row " << i + 1 << " (" << entries[i].hazy_path
                  << ") fails re-hazify check, deviation " << dev[i] << '\n';
      }
    }
    summary["verified"] = bad == 0;
    summary["max_deviation"] = dev.empty() ? 0.0 : *std::max_element(dev.begin(), dev.end());
    summary["failed_rows"] = bad;
    if (bad) status = kExitFailure;
  }
  emit(summary);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hazekit: haze synthesis, dehazing and evaluation"};
  app.require_subcommand(1);

  HazifyOptions hz;
  auto* hazify_cmd = app.add_subcommand("hazify", "Apply the scattering model to a clear image and its depth");
  hazify_cmd->add_option("--clear", hz.clear, "Clear 8-bit RGB PNG")->required();
  hazify_cmd->add_option("--depth", hz.depth, "Depth, 16-bit PNG in millimeters")->required();
  hazify_cmd->add_option("--A", hz.light, "Atmospheric light in [0,1]")->capture_default_str();
  hazify_cmd->add_option("--beta", hz.beta, "Scattering coefficient > 0")->capture_default_str();
  hazify_cmd->add_option("-o,--output", hz.out, "Hazy PNG; with --sample, <stem>_<j>.png")->required();
  hazify_cmd->add_option("--emit-t", hz.emit_t, "Also write the transmission as 8-bit PNG");
  auto* sample_flag = hazify_cmd->add_flag("--sample", hz.sample, "Draw A in [0.7,1] and beta in [0.5,1.5] instead");
  hazify_cmd->add_option("--seed", hz.seed, "Seed for --sample")->capture_default_str();
  hazify_cmd->add_option("--count", hz.count, "Draws for --sample")->capture_default_str()->needs(sample_flag);

  DehazeOptions dh;
  auto* dehaze_cmd = app.add_subcommand("dehaze", "Remove haze from an image or a manifest of images");
  dehaze_cmd->add_option("hazy", dh.hazy, "Hazy 8-bit RGB PNG");
  dehaze_cmd->add_option("-o,--output", dh.out, "Dehazed PNG");
  dehaze_cmd->add_option("--method", dh.method, "dcp or pdld")
      ->check(CLI::IsMember({"dcp", "pdld"}))
      ->capture_default_str();
  dehaze_cmd->add_option("--depth", dh.depth, "External initial depth (16-bit mm PNG) for pdld");
  dehaze_cmd->add_flag("--emit-all", dh.emit_all, "Also write transmission, stage depths and residuals JSON");
  dehaze_cmd->add_option("--manifest", dh.manifest, "Batch mode: manifest CSV");
  dehaze_cmd->add_option("--out-dir", dh.out_dir, "Batch mode: output directory");
  dehaze_cmd->add_flag("--with-depth", dh.with_depth, "Batch mode: use each row's depth as initial depth");
  dehaze_cmd->add_option("--jobs", dh.jobs, "Batch workers (default: logical cores)");
  dehaze_cmd->add_option("--stages", dh.stages, "Cascade stages")->capture_default_str();
  dehaze_cmd->add_option("--beta", dh.beta, "Fixed beta (default: regress on --depth, else 1.0)");
  dehaze_cmd->add_option("--patch-radius", dh.patch_radius, "Dark channel patch radius")->capture_default_str();
  dehaze_cmd->add_option("--omega", dh.omega, "Haze retention omega")->capture_default_str();
  dehaze_cmd->add_option("--top-fraction", dh.top_fraction, "Brightest dark-channel fraction for A")
      ->capture_default_str();
  dehaze_cmd->add_option("--guided-radius", dh.guided_radius, "Guided filter radius")->capture_default_str();
  dehaze_cmd->add_option("--guided-eps", dh.guided_eps, "Guided filter epsilon")->capture_default_str();
  dehaze_cmd->add_option("--t-floor", dh.t_floor, "Transmission floor")->capture_default_str();
  dehaze_cmd->add_option("--depth-smooth-radius", dh.depth_smooth_radius, "Stage depth smoothing radius")
      ->capture_default_str();
  dehaze_cmd->add_option("--depth-smooth-eps", dh.depth_smooth_eps, "Stage depth smoothing epsilon")
      ->capture_default_str();
  dehaze_cmd->add_flag("--no-projection", dh.no_projection, "Skip raising t to the feasible lower bound");

  EvaluateOptions ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "PSNR/SSIM and depth metrics against a reference");
  eval_cmd->add_option("--pred", ev.pred, "Predicted 8-bit RGB PNG")->required();
  eval_cmd->add_option("--ref", ev.ref, "Reference 8-bit RGB PNG")->required();
  eval_cmd->add_option("--depth-pred", ev.depth_pred, "Predicted depth, 16-bit mm PNG");
  eval_cmd->add_option("--depth-gt", ev.depth_gt, "Ground-truth depth, 16-bit mm PNG (0 = missing)");
  eval_cmd->add_flag("--bands", ev.bands, "Per-distance-band mean abs depth error");
  eval_cmd->add_option("--band-width", ev.band_width, "Band width in meters")->capture_default_str();
  eval_cmd->add_option("--max-depth", ev.max_depth, "Farthest band edge in meters")->capture_default_str();
  eval_cmd->add_option("--format", ev.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  eval_cmd->add_option("-o,--output", ev.out, "Report path (csv: metrics file, bands go to <stem>_bands.csv)");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-dataset", "Synthesize procedural RGB-D scenes, hazy variants and a manifest");
  gen_cmd->add_option("spec", gen.spec,
                      "key = value file: scenes, draws, seed, width, height, min_depth, max_depth, primitives, "
                      "tile_period_min, tile_period_max, wave_freq_min, wave_freq_max")
      ->required();
  gen_cmd->add_option("-o,--out-dir", gen.out_dir, "Output directory")->required();
  gen_cmd->add_flag("--verify", gen.verify, "Re-hazify every manifest row and compare with the stored file");
  gen_cmd->add_option("--jobs", gen.jobs, "Workers (default: logical cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "hazekit: " << e.what() << '\n';
    return kExitFormat;
  }

  try {
    if (*hazify_cmd) return run_hazify(hz);
    if (*dehaze_cmd) return run_dehaze(dh);
    if (*eval_cmd) return run_evaluate(ev);
    if (*gen_cmd) return run_gen_dataset(gen);
  } catch (const FormatError& e) {
    std::cerr << "hazekit: format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const ConfigError& e) {
    std::cerr << "hazekit: " << e.what() << '\n';
    return kExitFormat;
  } catch (const DomainError& e) {
    std::cerr << "hazekit: " << e.what() << '\n';
    return kExitFormat;
  } catch (const DimensionError& e) {
    std::cerr << "hazekit: " << e.what() << '\n';
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "hazekit: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
