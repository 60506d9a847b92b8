#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "normint/pipeline.hpp"
#include "normint/solver.hpp"
#include "normint/synth.hpp"

using namespace normint;

namespace {

constexpr double kDeg = M_PI / 180.0;

EdgeSystem random_grid_system(std::uint32_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rhs(-0.01, 0.01), w(0.5, 2.0);
  EdgeSystem sys;
  sys.unknowns = static_cast<std::size_t>(side) * side;
  for (std::uint32_t v = 0; v < side; ++v) {
    for (std::uint32_t u = 0; u < side; ++u) {
      const std::uint32_t i = v * side + u;
      if (u + 1 < side) {
        sys.rows.push_back({i + 1, i, rhs(rng), w(rng)});
        sys.rows.push_back({i, i + 1, rhs(rng), w(rng)});
      }
      if (v + 1 < side) {
        sys.rows.push_back({i + side, i, rhs(rng), w(rng)});
        sys.rows.push_back({i, i + side, rhs(rng), w(rng)});
      }
    }
  }
  return sys;
}

void BM_CgGrid(benchmark::State& state) {
  const EdgeSystem sys = random_grid_system(static_cast<std::uint32_t>(state.range(0)), 1);
  std::size_t iters = 0;
  for (auto _ : state) {
    const CgResult r = cg_normal_equations(sys);
    iters = r.iterations;
    benchmark::DoNotOptimize(r.x.data());
  }
  state.counters["cg_iterations"] = static_cast<double>(iters);
  state.counters["unknowns"] = static_cast<double>(sys.unknowns);
}
BENCHMARK(BM_CgGrid)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FillComponents(benchmark::State& state) {
  const SceneRender s = render_scene(SceneSpec::defaults(SceneKind::SphereOnPlane, 256));
  const PixelGraph g = build_pixel_graph(s.normals, Connectivity::Eight);
  const auto coeffs = EdgeCoefficients::compute(g, s.normals, s.intrinsics, ContinuityModel::Milano);
  const Partition p = form_components(g, s.normals, 3.5 * kDeg);
  SolveSettings settings;
  settings.worker_count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const FillResult f = fill_components(p, g, coeffs, settings, 2.0);
    benchmark::DoNotOptimize(f.logdepth.data());
  }
  state.counters["components"] = static_cast<double>(p.component_count());
}
BENCHMARK(BM_FillComponents)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Pipeline(benchmark::State& state, SceneKind kind, bool pixel_level) {
  const SceneRender s = render_scene(SceneSpec::defaults(kind, static_cast<int>(state.range(0))));
  PipelineConfig cfg;
  cfg.theta_c = 3.5 * kDeg;
  std::size_t iterations = 0;
  for (auto _ : state) {
    const PipelineResult r = pixel_level ? run_pixel_level(s.normals, s.intrinsics, cfg)
                                         : run_pipeline(s.normals, s.intrinsics, cfg);
    iterations = r.iterations.size();
    benchmark::DoNotOptimize(r.logdepth.values().data());
  }
  state.counters["outer_iterations"] = static_cast<double>(iterations);
}
BENCHMARK_CAPTURE(BM_Pipeline, sphere_patch_components, SceneKind::SpherePatch, false)
    ->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Pipeline, sphere_on_plane_components, SceneKind::SphereOnPlane, false)
    ->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Pipeline, sphere_on_plane_pixel_level, SceneKind::SphereOnPlane, true)
    ->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ComponentFormation(benchmark::State& state) {
  const SceneRender s = render_scene(SceneSpec::defaults(SceneKind::SineRelief, static_cast<int>(state.range(0))));
  const PixelGraph g = build_pixel_graph(s.normals, Connectivity::Eight);
  for (auto _ : state) {
    const Partition p = form_components(g, s.normals, 3.5 * kDeg);
    benchmark::DoNotOptimize(p.component_count());
  }
}
BENCHMARK(BM_ComponentFormation)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
