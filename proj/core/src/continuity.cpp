#include "normint/continuity.hpp"

#include <cmath>
#include <cstdlib>

#include "normint/error.hpp"

namespace normint {

void WeightParams::validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw Error(ErrorCode::InvalidArgument, "sigmoid sharpness k must be positive");
  }
  if (!(low > 0.0) || !(low < high) || !std::isfinite(high)) {
    throw Error(ErrorCode::InvalidArgument, "outlier thresholds must satisfy 0 < L < U");
  }
}

std::optional<double> omega_bini(const Vec3& n_a, Pixel a, Pixel b,
                                 const CameraIntrinsics& intr) noexcept {
  const int du = b.u - a.u;
  const int dv = b.v - a.v;
  double delta;
  double focal;
  if (std::abs(du) == 1 && dv == 0) {
    delta = du * n_a.x();
    focal = intr.fx;
  } else if (du == 0 && std::abs(dv) == 1) {
    delta = dv * n_a.y();
    focal = intr.fy;
  } else {
    return std::nullopt;
  }
  const double den = n_a.x() * (a.u - intr.cx) + n_a.y() * (a.v - intr.cy) + n_a.z() * focal;
  if (!(std::abs(den) >= kDenominatorEpsilon)) return std::nullopt;
  return delta / den;
}

std::optional<double> omega_milano(const Vec3& n_a, const Vec3& n_b, const Vec3& tau_a,
                                   const Vec3& tau_b, const Vec3& tau_m) noexcept {
  const double am = n_a.dot(tau_m);
  const double bb = n_b.dot(tau_b);
  const double aa = n_a.dot(tau_a);
  const double bm = n_b.dot(tau_m);
  for (double p : {am, bb, aa, bm}) {
    if (!(std::abs(p) >= kDenominatorEpsilon)) return std::nullopt;
  }
  const double ratio = (am * bb) / (aa * bm);
  if (!(ratio > kLogEpsilon) || !std::isfinite(ratio)) return std::nullopt;
  return std::log(ratio);
}

double gamma_factor(const Vec3& n_a, const Vec3& tau_a, double focal) noexcept {
  return focal * std::abs(n_a.dot(tau_a)) / tau_a.norm();
}

double sigmoid(double x, double k) noexcept {
  const double t = k * x;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double bini_weight(double z_a, double z_b, std::optional<double> z_opposite, double gamma,
                   double k) noexcept {
  if (!z_opposite) return 0.5;
  const double far = *z_opposite - z_a;
  const double near = z_b - z_a;
  return sigmoid(gamma * gamma * (far * far - near * near), k);
}

double outlier_weight(double residual, const WeightParams& params) noexcept {
  switch (params.mode) {
    case ReweightingMode::Off:
      return 1.0;
    case ReweightingMode::Hard:
      return std::abs(residual) >= params.high ? 0.0 : 1.0;
    case ReweightingMode::Soft:
      break;
  }
  const double lo = std::log10(params.low);
  const double hi = std::log10(params.high);
  const double mag = std::max(std::abs(residual), 1e-300);
  return sigmoid(4.0 / (lo - hi) * (2.0 * std::log10(mag) - (lo + hi)), 1.0);
}

EdgeCoefficients EdgeCoefficients::compute(const PixelGraph& graph, const NormalMap& nmap,
                                           const CameraIntrinsics& intr,
                                           ContinuityModel model) {
  if (model == ContinuityModel::Bini && graph.connectivity() != Connectivity::Four) {
    throw Error(ErrorCode::InvalidArgument,
                "the bini continuity model defines no diagonal coefficient; use 4-connectivity");
  }
  const double focal = intr.mean_focal();
  EdgeCoefficients out;
  const auto& edges = graph.edges();
  out.coeffs_.resize(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const VertexId a = edges[i].a;
    const VertexId b = edges[i].b;
    const Pixel pa = graph.pixel(a);
    const Pixel pb = graph.pixel(b);
    const Vec3& n_a = nmap.normal(pa.u, pa.v);
    const Vec3& n_b = nmap.normal(pb.u, pb.v);
    const Vec3 tau_a = ray_at(intr, pa.u, pa.v);
    const Vec3 tau_b = ray_at(intr, pb.u, pb.v);

    std::optional<double> to_a;
    std::optional<double> to_b;
    if (model == ContinuityModel::Milano) {
      const Vec3 tau_m = subpixel_ray(intr, pa, pb);
      to_a = omega_milano(n_a, n_b, tau_a, tau_b, tau_m);
      to_b = omega_milano(n_b, n_a, tau_b, tau_a, tau_m);
    } else {
      to_a = omega_bini(n_a, pa, pb, intr);
      to_b = omega_bini(n_b, pb, pa, intr);
    }

    auto& slot = out.coeffs_[i];
    slot[0] = {a, b, graph.opposite(a, b), to_a.value_or(0.0), gamma_factor(n_a, tau_a, focal),
               to_a.has_value()};
    slot[1] = {b, a, graph.opposite(b, a), to_b.value_or(0.0), gamma_factor(n_b, tau_b, focal),
               to_b.has_value()};
  }
  return out;
}

double EdgeCoefficients::bilateral_weight(std::uint32_t edge, int direction,
                                          std::span<const double> logdepth,
                                          double k) const noexcept {
  const auto& c = coeffs_[edge][direction];
  if (!c.valid) return 0.0;
  std::optional<double> z_opp;
  if (c.opposite != kNoVertex) z_opp = logdepth[static_cast<std::size_t>(c.opposite)];
  return total_edge_weight(c.gamma,
                           bini_weight(logdepth[c.target], logdepth[c.source], z_opp, c.gamma, k));
}

}  // namespace normint
