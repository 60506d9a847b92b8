#include "normint/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "normint/error.hpp"
#include "normint/eval.hpp"

namespace normint {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Energy floor below which a relative change is meaningless.
constexpr double kEnergyEpsilon = 1e-300;

// Residuals this small are round-off; solving for them only adds noise.
constexpr double kRoundoffResidual = 1e-13;

bool discontinuity_phase(std::size_t t, const SolveSettings& settings) {
  return t >= settings.alignment_iters;
}

LogDepthMap to_map(const PixelGraph& graph, std::span<const double> per_vertex) {
  LogDepthMap out(graph.width(), graph.height());
  for (VertexId v = 0; v < graph.vertex_count(); ++v) {
    const Pixel p = graph.pixel(v);
    out.at(p.u, p.v) = per_vertex[v];
    out.mask()[out.index(p.u, p.v)] = 1;
  }
  return out;
}

// Tracks the relative-energy stopping rule. The test only runs between two
// consecutive discontinuity-aware energies: the alignment phase reaches its
// fixed point after one solve, and the first reweighted energy is measured
// under different weights than its predecessor.
class ConvergenceTest {
 public:
  explicit ConvergenceTest(const SolveSettings& settings) : settings_(settings) {}

  bool update(std::size_t solved_t, double energy) {
    const bool active = solved_t >= settings_.alignment_iters + 1;
    bool done = false;
    if (active) {
      done = previous_ <= kEnergyEpsilon ||
             std::abs(energy - previous_) / previous_ < settings_.delta_e_max;
    }
    previous_ = energy;
    return done || solved_t + 1 >= settings_.max_outer_iterations;
  }

 private:
  const SolveSettings& settings_;
  double previous_ = kEnergyEpsilon;
};

}  // namespace

void SolveSettings::validate() const {
  if (!(cg.tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "CG tolerance must be positive");
  }
  if (max_outer_iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "maximum iteration count must be at least 1");
  }
  if (!(delta_e_max > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "relative energy threshold must be positive");
  }
  if (freq_merging && *freq_merging < 1) {
    throw Error(ErrorCode::InvalidArgument, "merge frequency must be at least 1");
  }
  if (worker_count < 1) {
    throw Error(ErrorCode::InvalidArgument, "worker count must be at least 1");
  }
}

EdgeSystem assemble_intra(std::span<const VertexId> component,
                          std::span<const std::uint32_t> intra_edges,
                          std::span<const std::uint32_t> local_index,
                          const EdgeCoefficients& coeffs, std::span<const double> logdepth,
                          double k) {
  EdgeSystem sys;
  sys.unknowns = component.size();
  sys.rows.reserve(2 * intra_edges.size());
  for (std::uint32_t e : intra_edges) {
    for (int d = 0; d < 2; ++d) {
      const DirectedCoefficient& c = coeffs.at(e, d);
      sys.rows.push_back({local_index[c.target], local_index[c.source], c.omega,
                          coeffs.bilateral_weight(e, d, logdepth, k)});
    }
  }
  return sys;
}

EdgeSystem assemble_inter(const QuotientGraph& quotient, const EdgeCoefficients& coeffs,
                          std::span<const double> logdepth) {
  EdgeSystem sys;
  sys.unknowns = quotient.node_count;
  sys.rows.reserve(2 * quotient.inter_edges.size());
  for (const InterEdge& ie : quotient.inter_edges) {
    const DirectedCoefficient& to_a = coeffs.at(ie.edge, 0);
    const DirectedCoefficient& to_b = coeffs.at(ie.edge, 1);
    sys.rows.push_back({ie.comp_a, ie.comp_b, -coeffs.residual(ie.edge, 0, logdepth),
                        to_a.valid ? 1.0 : 0.0});
    sys.rows.push_back({ie.comp_b, ie.comp_a, -coeffs.residual(ie.edge, 1, logdepth),
                        to_b.valid ? 1.0 : 0.0});
  }
  return sys;
}

std::vector<double> inter_weights(const QuotientGraph& quotient, const EdgeCoefficients& coeffs,
                                  std::span<const double> logdepth, const WeightParams& params) {
  std::vector<double> w;
  w.reserve(2 * quotient.inter_edges.size());
  for (const InterEdge& ie : quotient.inter_edges) {
    for (int d = 0; d < 2; ++d) {
      w.push_back(coeffs.bilateral_weight(ie.edge, d, logdepth, params.k) *
                  outlier_weight(coeffs.residual(ie.edge, d, logdepth), params));
    }
  }
  return w;
}

FillResult fill_components(const Partition& partition, const PixelGraph& graph,
                           const EdgeCoefficients& coeffs, const SolveSettings& settings,
                           double k) {
  const std::size_t n = graph.vertex_count();
  const std::size_t count = partition.component_count();

  std::vector<std::vector<std::uint32_t>> intra(count);
  const auto& edges = graph.edges();
  for (std::uint32_t e = 0; e < edges.size(); ++e) {
    const ComponentId c = partition.label(edges[e].a);
    if (c == partition.label(edges[e].b)) intra[c].push_back(e);
  }
  std::vector<std::uint32_t> local_index(n);
  for (ComponentId c = 0; c < count; ++c) {
    const auto members = partition.component(c);
    for (std::uint32_t i = 0; i < members.size(); ++i) local_index[members[i]] = i;
  }

  FillResult result;
  result.logdepth.assign(n, 0.0);
  std::vector<std::size_t> iterations(count, 0);
  std::vector<std::uint8_t> converged(count, 1);

  auto solve_pass = [&](std::span<const double> weights_at, std::span<double> out) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t c = next.fetch_add(1); c < count; c = next.fetch_add(1)) {
        const auto members = partition.component(static_cast<ComponentId>(c));
        if (members.size() < 2 || intra[c].empty()) continue;
        const EdgeSystem sys =
            assemble_intra(members, intra[c], local_index, coeffs, weights_at, k);
        const CgResult cg = cg_normal_equations(sys, settings.cg);
        iterations[c] = std::max(iterations[c], cg.iterations);
        if (!cg.converged) converged[c] = 0;
        for (std::size_t i = 0; i < members.size(); ++i) out[members[i]] = cg.x[i];
      }
    };
    const std::size_t threads = std::min<std::size_t>(settings.worker_count, count);
    if (threads <= 1) {
      worker();
      return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  };

  const std::vector<double> zeros(n, 0.0);
  solve_pass(zeros, result.logdepth);
  if (settings.reweighted_refill) {
    const std::vector<double> first = result.logdepth;
    solve_pass(first, result.logdepth);
  }

  for (std::size_t c = 0; c < count; ++c) {
    result.max_cg_iterations = std::max(result.max_cg_iterations, iterations[c]);
    if (!converged[c]) ++result.unconverged_components;
  }
  return result;
}

ScaleStep relative_scale_step(const QuotientGraph& quotient, const EdgeCoefficients& coeffs,
                              std::span<const double> logdepth, std::size_t t,
                              const SolveSettings& settings, const WeightParams& params) {
  ScaleStep step;
  step.scales.assign(quotient.node_count, 0.0);
  EdgeSystem sys = assemble_inter(quotient, coeffs, logdepth);
  if (sys.rows.empty()) return step;

  if (discontinuity_phase(t, settings)) {
    const std::vector<double> w = inter_weights(quotient, coeffs, logdepth, params);
    for (std::size_t i = 0; i < sys.rows.size(); ++i) sys.rows[i].weight = w[i];
  }
  step.weights.reserve(sys.rows.size());
  double max_rhs = 0.0;
  for (const ConstraintRow& r : sys.rows) {
    step.weights.push_back(r.weight);
    if (r.weight > 0.0) max_rhs = std::max(max_rhs, std::abs(r.rhs));
  }
  if (max_rhs > kRoundoffResidual) {
    CgResult cg = cg_normal_equations(sys, settings.cg);
    step.scales = std::move(cg.x);
    step.cg_iterations = cg.iterations;
    step.cg_converged = cg.converged;
  }
  step.energy = sys.energy(step.scales);
  return step;
}

void apply_scales(std::span<double> logdepth, const Partition& partition,
                  std::span<const double> scales) {
  if (scales.size() != partition.component_count()) {
    throw Error(ErrorCode::InvalidArgument, "scale vector does not match the partition");
  }
  for (VertexId v = 0; v < logdepth.size(); ++v) logdepth[v] += scales[partition.label(v)];
}

LogDepthMap apply_scales(const LogDepthMap& zmap, const PixelGraph& graph,
                         const Partition& partition, std::span<const double> scales) {
  if (scales.size() != partition.component_count()) {
    throw Error(ErrorCode::InvalidArgument, "scale vector does not match the partition");
  }
  LogDepthMap out = zmap;
  for (VertexId v = 0; v < graph.vertex_count(); ++v) {
    const Pixel p = graph.pixel(v);
    out.at(p.u, p.v) += scales[partition.label(v)];
  }
  return out;
}

std::vector<double> inter_edge_residuals(const QuotientGraph& quotient,
                                         const EdgeCoefficients& coeffs,
                                         std::span<const double> logdepth) {
  std::vector<double> out;
  out.reserve(quotient.inter_edges.size());
  for (const InterEdge& ie : quotient.inter_edges) {
    double sum = 0.0;
    int n = 0;
    for (int d = 0; d < 2; ++d) {
      if (!coeffs.at(ie.edge, d).valid) continue;
      sum += std::abs(coeffs.residual(ie.edge, d, logdepth));
      ++n;
    }
    out.push_back(n ? sum / n : std::numeric_limits<double>::infinity());
  }
  return out;
}

EdgeSystem assemble_pixel_level(const PixelGraph& graph, const EdgeCoefficients& coeffs) {
  EdgeSystem sys;
  sys.unknowns = graph.vertex_count();
  sys.rows.reserve(2 * graph.edges().size());
  for (std::uint32_t e = 0; e < graph.edges().size(); ++e) {
    for (int d = 0; d < 2; ++d) {
      const DirectedCoefficient& c = coeffs.at(e, d);
      sys.rows.push_back({c.target, c.source, c.omega, c.valid ? 1.0 : 0.0});
    }
  }
  return sys;
}

void fix_gauge(LogDepthMap& zmap, double reference) {
  if (!(reference > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gauge reference depth must be positive");
  }
  std::vector<double> valid;
  auto values = zmap.values();
  auto mask = zmap.mask();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) valid.push_back(values[i]);
  }
  if (valid.empty()) return;
  const double shift = std::log(reference) - median(valid);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) values[i] += shift;
  }
}

namespace {

void validate_config(const CameraIntrinsics& intr, const PipelineConfig& config) {
  intr.validate();
  config.weights.validate();
  config.solve.validate();
  if (config.theta_c && !(*config.theta_c > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "theta_c must be positive");
  }
}

}  // namespace

PipelineResult run_pipeline(const NormalMap& nmap, const CameraIntrinsics& intr,
                            const PipelineConfig& config, MergeObserver* observer) {
  validate_config(intr, config);
  const SolveSettings& settings = config.solve;
  const auto start = Clock::now();
  PipelineResult result;

  const PixelGraph graph = build_pixel_graph(nmap, config.connectivity);
  result.timings.graph_ms = elapsed_ms(start);

  Partition partition = form_components(graph, nmap, config.theta_c);
  result.initial_partition = partition;
  result.timings.components_ms = elapsed_ms(start);

  const EdgeCoefficients coeffs = EdgeCoefficients::compute(graph, nmap, intr, config.model);
  result.timings.coefficients_ms = elapsed_ms(start);

  FillResult fill = fill_components(partition, graph, coeffs, settings, config.weights.k);
  result.timings.fill_ms = elapsed_ms(start);
  if (fill.unconverged_components) {
    result.warnings.push_back("fill: " + std::to_string(fill.unconverged_components) +
                              " component solve(s) hit the CG iteration limit");
  }
  std::vector<double> z = std::move(fill.logdepth);
  result.filled_logdepth = to_map(graph, z);

  QuotientGraph quotient = build_quotient(graph, partition);
  ConvergenceTest convergence(settings);
  for (std::size_t t = 0;; ++t) {
    const ScaleStep step =
        relative_scale_step(quotient, coeffs, z, t, settings, config.weights);
    if (!step.cg_converged) {
      result.warnings.push_back("iteration " + std::to_string(t) +
                                ": relative-scale CG hit the iteration limit");
    }
    apply_scales(z, partition, step.scales);

    IterationRecord rec;
    rec.t = t + 1;
    rec.energy = step.energy;
    rec.cg_iterations = step.cg_iterations;

    const bool can_merge = settings.freq_merging && rec.t % *settings.freq_merging == 0 &&
                           !quotient.inter_edges.empty();
    if (can_merge) {
      if (observer) observer->before_merge(rec.t, z);
      const std::vector<double> residuals = inter_edge_residuals(quotient, coeffs, z);
      Partition merged = merge_components(quotient, partition, residuals);
      rec.merge_performed = merged.component_count() < partition.component_count();
      partition = std::move(merged);
      quotient = build_quotient(graph, partition);
      if (observer) observer->after_merge(rec.t, z);

      // Energy of the new system at zero scales, weighted as in this iteration.
      EdgeSystem sys = assemble_inter(quotient, coeffs, z);
      if (discontinuity_phase(t, settings)) {
        const std::vector<double> w = inter_weights(quotient, coeffs, z, config.weights);
        for (std::size_t i = 0; i < sys.rows.size(); ++i) sys.rows[i].weight = w[i];
      }
      rec.energy = sys.energy(std::vector<double>(sys.unknowns, 0.0));
    }
    rec.component_count = partition.component_count();
    rec.wall_ms = elapsed_ms(start);
    result.iterations.push_back(rec);

    const bool done = convergence.update(t, rec.energy);
    if (quotient.inter_edges.empty() || done) {
      result.converged = quotient.inter_edges.empty() || t + 1 < settings.max_outer_iterations;
      break;
    }
  }

  result.final_partition = std::move(partition);
  result.logdepth = to_map(graph, z);
  fix_gauge(result.logdepth, config.gauge_depth.value_or(1.0));
  result.timings.total_ms = elapsed_ms(start);
  return result;
}

PipelineResult run_pixel_level(const NormalMap& nmap, const CameraIntrinsics& intr,
                               const PipelineConfig& config) {
  validate_config(intr, config);
  const SolveSettings& settings = config.solve;
  const auto start = Clock::now();
  PipelineResult result;

  const PixelGraph graph = build_pixel_graph(nmap, config.connectivity);
  result.timings.graph_ms = elapsed_ms(start);
  result.initial_partition = form_components(graph, nmap, std::nullopt);
  result.timings.components_ms = elapsed_ms(start);
  const EdgeCoefficients coeffs = EdgeCoefficients::compute(graph, nmap, intr, config.model);
  result.timings.coefficients_ms = elapsed_ms(start);
  result.timings.fill_ms = result.timings.coefficients_ms;

  const auto& edges = graph.edges();
  std::vector<double> z(graph.vertex_count(), 0.0);
  result.filled_logdepth = to_map(graph, z);

  EdgeSystem sys = assemble_pixel_level(graph, coeffs);

  ConvergenceTest convergence(settings);
  for (std::size_t t = 0;; ++t) {
    if (discontinuity_phase(t, settings)) {
      for (std::uint32_t e = 0; e < edges.size(); ++e) {
        for (int d = 0; d < 2; ++d) {
          sys.rows[2 * e + d].weight =
              coeffs.bilateral_weight(e, d, z, config.weights.k) *
              outlier_weight(coeffs.residual(e, d, z), config.weights);
        }
      }
    }
    const CgResult cg = cg_normal_equations(sys, settings.cg);
    if (!cg.converged) {
      result.warnings.push_back("iteration " + std::to_string(t) +
                                ": log-depth CG hit the iteration limit");
    }
    z = cg.x;

    IterationRecord rec;
    rec.t = t + 1;
    rec.energy = sys.energy(z);
    rec.cg_iterations = cg.iterations;
    rec.component_count = graph.vertex_count();
    rec.wall_ms = elapsed_ms(start);
    result.iterations.push_back(rec);

    if (convergence.update(t, rec.energy)) {
      result.converged = t + 1 < settings.max_outer_iterations;
      break;
    }
  }

  result.final_partition = result.initial_partition;
  result.logdepth = to_map(graph, z);
  fix_gauge(result.logdepth, config.gauge_depth.value_or(1.0));
  result.timings.total_ms = elapsed_ms(start);
  return result;
}

}  // namespace normint
