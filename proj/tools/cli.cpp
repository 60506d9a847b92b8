#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "normint/error.hpp"
#include "normint/eval.hpp"
#include "normint/io.hpp"
#include "normint/pipeline.hpp"
#include "normint/synth.hpp"

namespace normint::cli {

namespace {

namespace fs = std::filesystem;

/// Raised for malformed flag values that CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::optional<double> parse_theta(const std::string& text) {
  if (text == "none" || text == "None") return std::nullopt;
  double deg = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, deg);
  if (ec != std::errc{} || ptr != end || !std::isfinite(deg) || deg < 0.0) {
    throw UsageError("--theta-c expects a non-negative angle in degrees or 'none', got '" +
                     text + "'");
  }
  return deg * std::numbers::pi / 180.0;
}

std::optional<std::size_t> parse_merge_freq(const std::string& text) {
  if (text == "off" || text == "none") return std::nullopt;
  std::size_t n = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, n);
  if (ec != std::errc{} || ptr != end || n == 0) {
    throw UsageError("--merge-freq expects a positive integer or 'off', got '" + text + "'");
  }
  return n;
}

std::size_t default_workers() {
  if (const char* env = std::getenv("NORMINT_WORKERS")) {
    std::size_t n = 0;
    const std::string s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc{} && ptr == s.data() + s.size() && n > 0) return n;
  }
  return 4;
}

/// Flags shared by integrate and decompose.
struct InputArgs {
  std::string normals;
  std::string mask;
  bool flip = false;
  std::string theta = "3.5";
  int connectivity = 8;

  void add_to(CLI::App& app) {
    app.add_option("--normals", normals, "Normal map (.pfm or 16-bit .png)")
        ->required();
    app.add_option("--mask", mask, "Mask PNG; nonzero pixels are valid");
    app.add_flag("--flip-normals", flip, "Negate input normals (for z-toward-camera data)");
    app.add_option("--theta-c", theta, "Component angle threshold in degrees, or 'none'")
        ->capture_default_str();
    app.add_option("--connectivity", connectivity, "Pixel neighborhood")
        ->check(CLI::IsMember({4, 8}))
        ->capture_default_str();
  }

  NormalMap load() const {
    NormalMap nmap = io::read_normals(normals, mask);
    return flip ? nmap.flipped() : nmap;
  }
};

struct IntegrateArgs {
  InputArgs input;
  std::string intrinsics;
  std::string output;
  std::string diagnostics;
  std::string reweighting = "soft";
  std::string model = "milano";
  std::string method = "components";
  std::string merge_freq = "off";
  double k = 2.0;
  double low = 1e-5;
  double high = 1e-3;
  double delta_e_max = 1e-3;
  std::size_t max_iters = 150;
  std::size_t alignment_iters = 2;
  std::size_t workers = default_workers();
  std::optional<double> gauge_depth;
  std::uint64_t seed = 0;
};

struct DecomposeArgs {
  InputArgs input;
  std::string output;
  std::string color;
};

struct SynthArgs {
  std::string scene;
  int resolution = 128;
  std::string output_dir;
  double noise_deg = 0.0;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string mask;
};

ReweightingMode parse_reweighting(const std::string& s) {
  if (s == "off") return ReweightingMode::Off;
  if (s == "hard") return ReweightingMode::Hard;
  return ReweightingMode::Soft;
}

int run_integrate(const IntegrateArgs& a) {
  PipelineConfig config;
  config.theta_c = parse_theta(a.input.theta);
  config.connectivity = a.input.connectivity == 4 ? Connectivity::Four : Connectivity::Eight;
  config.model = a.model == "bini" ? ContinuityModel::Bini : ContinuityModel::Milano;
  config.weights.k = a.k;
  config.weights.low = a.low;
  config.weights.high = a.high;
  config.weights.mode = parse_reweighting(a.reweighting);
  config.solve.delta_e_max = a.delta_e_max;
  config.solve.max_outer_iterations = a.max_iters;
  config.solve.alignment_iters = a.alignment_iters;
  config.solve.freq_merging = parse_merge_freq(a.merge_freq);
  config.solve.worker_count = a.workers;
  config.gauge_depth = a.gauge_depth;
  try {
    config.weights.validate();
    config.solve.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (config.model == ContinuityModel::Bini && config.connectivity == Connectivity::Eight) {
    throw UsageError("--continuity-model bini requires --connectivity 4");
  }

  const CameraIntrinsics intr = io::read_intrinsics(a.intrinsics);
  const NormalMap nmap = a.input.load();
  const PipelineResult result = a.method == "pixel" ? run_pixel_level(nmap, intr, config)
                                                    : run_pipeline(nmap, intr, config);

  io::write_pfm(a.output, io::image_from_depth(depth_from_logdepth(result.logdepth)));
  if (!a.diagnostics.empty()) io::write_diagnostics(a.diagnostics, result.iterations);
  for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';

  nlohmann::ordered_json summary;
  summary["initial_components"] = result.initial_partition.component_count();
  summary["final_components"] = result.final_partition.component_count();
  summary["iterations"] = result.iterations.size();
  summary["converged"] = result.converged;
  std::cout << summary.dump() << '\n';
  return kExitOk;
}

int run_decompose(const DecomposeArgs& a) {
  const auto theta = parse_theta(a.input.theta);
  const NormalMap nmap = a.input.load();
  const auto conn = a.input.connectivity == 4 ? Connectivity::Four : Connectivity::Eight;
  const PixelGraph graph = build_pixel_graph(nmap, conn);
  const Partition partition = form_components(graph, nmap, theta);
  const auto labels = io::label_image(graph, partition);
  io::write_labels_raw(a.output, graph.width(), graph.height(), labels);
  if (!a.color.empty()) io::write_labels_png(a.color, graph.width(), graph.height(), labels);

  nlohmann::ordered_json summary;
  summary["component_count"] = partition.component_count();
  summary["valid_pixels"] = graph.vertex_count();
  std::cout << summary.dump() << '\n';
  return kExitOk;
}

int run_synth(const SynthArgs& a) {
  const auto kind = parse_scene_kind(a.scene);
  if (!kind) throw UsageError("unknown scene '" + a.scene + "'");
  if (a.resolution < 2) throw UsageError("--resolution must be at least 2");
  if (!(a.noise_deg >= 0.0)) throw UsageError("--noise-deg must be non-negative");

  const SceneSpec spec = SceneSpec::defaults(*kind, a.resolution);
  SceneRender scene = render_scene(spec);
  const NormalMap normals =
      a.noise_deg > 0.0 ? perturb_normals(scene.normals, a.noise_deg * std::numbers::pi / 180.0, a.seed)
                        : scene.normals;

  const fs::path dir(a.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create directory " + dir.string() + ": " + ec.message());
  io::write_pfm(dir / "normals.pfm", io::image_from_normals(normals));
  io::write_pfm(dir / "depth.pfm", io::image_from_depth(scene.depth));
  io::write_mask_png(dir / "mask.png", spec.resolution, spec.resolution, normals.mask());
  io::write_mask_png(dir / "region.png", spec.resolution, spec.resolution, scene.region);
  io::write_intrinsics(dir / "intrinsics.json", scene.intrinsics);
  return kExitOk;
}

int run_eval(const EvalArgs& a) {
  const DepthMap pred = io::depth_from_image(io::read_pfm(a.pred));
  const DepthMap gt = io::depth_from_image(io::read_pfm(a.gt));
  std::vector<std::uint8_t> mask;
  if (!a.mask.empty()) {
    int w = 0;
    int h = 0;
    mask = io::read_mask_png(a.mask, w, h);
    if (w != gt.width() || h != gt.height()) {
      throw Error(ErrorCode::InvalidArgument, "mask size does not match " + a.gt);
    }
  }
  const EvalReport report = evaluate(pred, gt, mask);
  nlohmann::ordered_json j;
  j["made"] = report.made;
  j["relative_error"] = report.relative_error;
  j["aligned_scale"] = report.aligned_scale;
  j["valid_pixel_count"] = report.valid_pixel_count;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Depth from surface normals via component-wise integration", "normint"};
  app.require_subcommand(1);

  IntegrateArgs ia;
  auto* integrate = app.add_subcommand("integrate", "Integrate a normal map into a depth map");
  ia.input.add_to(*integrate);
  integrate->add_option("--intrinsics", ia.intrinsics, "Camera intrinsics JSON (fx, fy, cx, cy)")
      ->required();
  integrate->add_option("--output", ia.output, "Output depth PFM")->required();
  integrate->add_option("--diagnostics", ia.diagnostics, "Per-iteration JSONL log");
  integrate->add_option("--reweighting", ia.reweighting, "Outlier reweighting of inter edges")
      ->check(CLI::IsMember({"off", "soft", "hard"}))
      ->capture_default_str();
  integrate->add_option("--k", ia.k, "Bilateral sigmoid sharpness")->capture_default_str();
  integrate->add_option("--outlier-low", ia.low, "Residual below which edges are trusted")
      ->capture_default_str();
  integrate->add_option("--outlier-high", ia.high, "Residual above which edges are rejected")
      ->capture_default_str();
  integrate->add_option("--delta-e-max", ia.delta_e_max, "Relative energy change for convergence")
      ->capture_default_str();
  integrate->add_option("--max-iters", ia.max_iters, "Maximum outer iterations")
      ->capture_default_str();
  integrate->add_option("--alignment-iters", ia.alignment_iters,
                        "Leading iterations with uniform weights")
      ->capture_default_str();
  integrate->add_option("--merge-freq", ia.merge_freq, "Merge every n iterations, or 'off'")
      ->capture_default_str();
  integrate->add_option("--continuity-model", ia.model, "Per-edge log-depth coefficient")
      ->check(CLI::IsMember({"milano", "bini"}))
      ->capture_default_str();
  integrate->add_option("--method", ia.method, "Component pipeline or pixel-level baseline")
      ->check(CLI::IsMember({"components", "pixel"}))
      ->capture_default_str();
  integrate->add_option("--workers", ia.workers, "Parallel fill workers (env NORMINT_WORKERS)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  integrate->add_option("--gauge-depth", ia.gauge_depth, "Median depth of the output")
      ->check(CLI::PositiveNumber);
  integrate->add_option("--seed", ia.seed, "Recorded for reproducibility; the solver is deterministic");

  DecomposeArgs da;
  auto* decompose = app.add_subcommand("decompose", "Write the initial component labels");
  da.input.add_to(*decompose);
  decompose->add_option("--output", da.output, "Raw label file (u32 LE)")->required();
  decompose->add_option("--color", da.color, "Optional RGB visualization PNG");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Render an analytic test scene");
  synth->add_option("--scene", sa.scene,
                    "fronto_plane | slanted_plane | sphere_patch | sphere_on_plane | step_planes | "
                    "sine_relief")
      ->required();
  synth->add_option("--resolution", sa.resolution, "Square image size")->capture_default_str();
  synth->add_option("--output-dir", sa.output_dir, "Directory for the scene files")->required();
  synth->add_option("--noise-deg", sa.noise_deg, "Normal perturbation sigma in degrees")
      ->capture_default_str();
  synth->add_option("--seed", sa.seed, "Noise seed")->capture_default_str();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Compare a depth map against ground truth");
  eval->add_option("--pred", ea.pred, "Predicted depth PFM")->required();
  eval->add_option("--gt", ea.gt, "Ground-truth depth PFM")->required();
  eval->add_option("--mask", ea.mask, "Optional evaluation mask PNG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsageError;
  }

  try {
    if (*integrate) return run_integrate(ia);
    if (*decompose) return run_decompose(da);
    if (*synth) return run_synth(sa);
    return run_eval(ea);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataError;
  }
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  argv.reserve(args.size() + 1);
  for (const std::string& s : args) argv.push_back(const_cast<char*>(s.c_str()));
  argv.push_back(nullptr);
  return cli_main(static_cast<int>(args.size()), argv.data());
}

}  // namespace normint::cli
