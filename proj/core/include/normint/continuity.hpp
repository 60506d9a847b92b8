#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "normint/geometry.hpp"
#include "normint/graph.hpp"

namespace normint {

enum class ContinuityModel { Milano, Bini };
enum class ReweightingMode { Off, Soft, Hard };

inline constexpr double kDenominatorEpsilon = 1e-8;
inline constexpr double kLogEpsilon = 1e-12;

struct WeightParams {
  double k = 2.0;      // bilateral sigmoid sharpness
  double low = 1e-5;   // inlier residual threshold L
  double high = 1e-3;  // outlier residual threshold U
  ReweightingMode mode = ReweightingMode::Soft;

  /// Throws Error(InvalidArgument) unless k > 0 and 0 < low < high.
  void validate() const;
};

/// Log-depth coefficient of the constraint z_a - z_b = omega for neighbors on
/// the pixel grid (axis-aligned only), linearized at pixel a. Empty when the
/// denominator is degenerate or the step is not axis-aligned.
std::optional<double> omega_bini(const Vec3& n_a, Pixel a, Pixel b,
                                 const CameraIntrinsics& intr) noexcept;

/// Log-depth coefficient from intersecting the tangent planes at a and b
/// along the ray tau_m. Empty on degenerate inner products.
std::optional<double> omega_milano(const Vec3& n_a, const Vec3& n_b, const Vec3& tau_a,
                                   const Vec3& tau_b, const Vec3& tau_m) noexcept;

/// f * |n_a . tau_a / |tau_a||.
double gamma_factor(const Vec3& n_a, const Vec3& tau_a, double focal) noexcept;

/// 1 / (1 + exp(-k x)), evaluated without overflow.
double sigmoid(double x, double k) noexcept;

/// Bilateral semi-smoothness weight; 0.5 when the opposite neighbor is absent.
double bini_weight(double z_a, double z_b, std::optional<double> z_opposite, double gamma,
                   double k) noexcept;

inline double total_edge_weight(double gamma, double w_bini) noexcept {
  return gamma * gamma * w_bini;
}

/// Residual-dependent down-weighting of inter-component constraints.
double outlier_weight(double residual, const WeightParams& params) noexcept;

inline double edge_residual(double z_a, double z_b, double omega) noexcept {
  return z_a - z_b - omega;
}

/// One direction of a constraint z_target - z_source = omega.
struct DirectedCoefficient {
  VertexId target = 0;
  VertexId source = 0;
  std::int32_t opposite = kNoVertex;  // reflection of source through target
  double omega = 0.0;
  double gamma = 0.0;
  bool valid = false;
};

/// Per pixel-edge pair of directed coefficients. For edge (a, b) slot 0 is
/// the constraint b->a (target a) and slot 1 is a->b (target b).
class EdgeCoefficients {
 public:
  /// Throws Error(InvalidArgument) for the Bini model under 8-connectivity.
  static EdgeCoefficients compute(const PixelGraph& graph, const NormalMap& nmap,
                                  const CameraIntrinsics& intr, ContinuityModel model);

  std::size_t edge_count() const noexcept { return coeffs_.size(); }
  const DirectedCoefficient& at(std::uint32_t edge, int direction) const noexcept {
    return coeffs_[edge][direction];
  }

  /// gamma^2 * w_bini for one direction at the given log-depths; 0 if the
  /// direction is degenerate.
  double bilateral_weight(std::uint32_t edge, int direction, std::span<const double> logdepth,
                          double k) const noexcept;

  /// z_target - z_source - omega for one direction.
  double residual(std::uint32_t edge, int direction,
                  std::span<const double> logdepth) const noexcept {
    const auto& c = coeffs_[edge][direction];
    return edge_residual(logdepth[c.target], logdepth[c.source], c.omega);
  }

 private:
  std::vector<std::array<DirectedCoefficient, 2>> coeffs_;
};

}  // namespace normint
