#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "normint/continuity.hpp"
#include "normint/geometry.hpp"
#include "normint/graph.hpp"
#include "normint/solver.hpp"

namespace normint {

struct SolveSettings {
  CgSettings cg;
  double delta_e_max = 1e-3;
  std::size_t max_outer_iterations = 150;  // T
  std::size_t alignment_iters = 2;
  std::optional<std::size_t> freq_merging;
  std::size_t worker_count = 4;
  bool reweighted_refill = false;

  /// Throws Error(InvalidArgument) on out-of-range values.
  void validate() const;
};

/// Per-component log-scale offsets, one per component of a partition.
using ScaleVector = std::vector<double>;

/// Intra-component system over `component` (local column = position in the
/// list). `local_index` maps every vertex of the component to its column.
/// Weights are gamma^2 * w_bini at `logdepth` (per vertex).
EdgeSystem assemble_intra(std::span<const VertexId> component,
                          std::span<const std::uint32_t> intra_edges,
                          std::span<const std::uint32_t> local_index,
                          const EdgeCoefficients& coeffs, std::span<const double> logdepth,
                          double k);

/// Inter-component system for the relative scales: one row per direction of
/// every quotient edge with rhs omega - (z_target - z_source) and unit
/// weight, or weight 0 for degenerate directions. Rows are in quotient-edge
/// order, direction 0 then 1.
EdgeSystem assemble_inter(const QuotientGraph& quotient, const EdgeCoefficients& coeffs,
                          std::span<const double> logdepth);

/// Row weights for the discontinuity-aware phase: gamma^2 * w_bini at the
/// current log-depths times the outlier weight of the current residual.
std::vector<double> inter_weights(const QuotientGraph& quotient, const EdgeCoefficients& coeffs,
                                  std::span<const double> logdepth, const WeightParams& params);

struct FillResult {
  std::vector<double> logdepth;  // per vertex
  std::size_t max_cg_iterations = 0;
  std::size_t unconverged_components = 0;
};

/// Solves every component's intra system independently (in parallel, up to
/// settings.worker_count threads) with weights evaluated at zero log-depth.
FillResult fill_components(const Partition& partition, const PixelGraph& graph,
                           const EdgeCoefficients& coeffs, const SolveSettings& settings,
                           double k);

struct ScaleStep {
  ScaleVector scales;
  double energy = 0.0;
  std::vector<double> weights;  // per inter row, as used in the solve
  std::size_t cg_iterations = 0;
  bool cg_converged = true;
};

/// One relative-scale iteration t: uniform weights while t < alignment_iters,
/// discontinuity-aware weights afterwards.
ScaleStep relative_scale_step(const QuotientGraph& quotient, const EdgeCoefficients& coeffs,
                              std::span<const double> logdepth, std::size_t t,
                              const SolveSettings& settings, const WeightParams& params);

/// z[v] += scales[label(v)].
void apply_scales(std::span<double> logdepth, const Partition& partition,
                  std::span<const double> scales);
LogDepthMap apply_scales(const LogDepthMap& zmap, const PixelGraph& graph,
                         const Partition& partition, std::span<const double> scales);

/// Mean over both directions of |z_target - z_source - omega| per quotient edge.
std::vector<double> inter_edge_residuals(const QuotientGraph& quotient,
                                         const EdgeCoefficients& coeffs,
                                         std::span<const double> logdepth);

struct PipelineConfig {
  std::optional<double> theta_c;  // radians; empty: one component per pixel
  Connectivity connectivity = Connectivity::Eight;
  ContinuityModel model = ContinuityModel::Milano;
  WeightParams weights;
  SolveSettings solve;
  std::optional<double> gauge_depth;  // median output depth; default 1
};

struct IterationRecord {
  std::size_t t = 0;
  double energy = 0.0;
  std::size_t component_count = 0;
  bool merge_performed = false;
  double wall_ms = 0.0;
  std::size_t cg_iterations = 0;
};

struct StageTimings {
  double graph_ms = 0.0;
  double components_ms = 0.0;
  double coefficients_ms = 0.0;
  double fill_ms = 0.0;
  double total_ms = 0.0;
};

struct PipelineResult {
  LogDepthMap logdepth;         // gauge-fixed output
  LogDepthMap filled_logdepth;  // per-component fill, before relative scales
  Partition initial_partition;
  Partition final_partition;
  std::vector<IterationRecord> iterations;
  StageTimings timings;
  std::vector<std::string> warnings;
  bool converged = false;
};

/// Called with the per-vertex log-depths right before and right after each
/// merge; lets callers observe that merging is a pure relabeling.
struct MergeObserver {
  virtual ~MergeObserver() = default;
  virtual void before_merge(std::size_t t, std::span<const double> logdepth) = 0;
  virtual void after_merge(std::size_t t, std::span<const double> logdepth) = 0;
};

/// Full component-based integration. Throws Error(EmptyMask) if no pixel is
/// valid.
PipelineResult run_pipeline(const NormalMap& nmap, const CameraIntrinsics& intr,
                            const PipelineConfig& config, MergeObserver* observer = nullptr);

/// Absolute log-depth system over every pixel edge with uniform weights
/// (zero on degenerate directions).
EdgeSystem assemble_pixel_level(const PixelGraph& graph, const EdgeCoefficients& coeffs);

/// Pixel-level log-depth integration on the same graph, weights and stopping
/// rule; the baseline the component formulation reduces to without a
/// threshold.
PipelineResult run_pixel_level(const NormalMap& nmap, const CameraIntrinsics& intr,
                               const PipelineConfig& config);

/// Shifts valid log-depths so the median depth equals `reference`.
void fix_gauge(LogDepthMap& zmap, double reference = 1.0);

}  // namespace normint
