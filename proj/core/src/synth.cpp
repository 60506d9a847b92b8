#include "normint/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "normint/error.hpp"

namespace normint {

std::optional<SceneKind> parse_scene_kind(std::string_view name) noexcept {
  if (name == "fronto_plane") return SceneKind::FrontoPlane;
  if (name == "slanted_plane") return SceneKind::SlantedPlane;
  if (name == "sphere_patch") return SceneKind::SpherePatch;
  if (name == "sphere_on_plane") return SceneKind::SphereOnPlane;
  if (name == "step_planes") return SceneKind::StepPlanes;
  if (name == "sine_relief") return SceneKind::SineRelief;
  return std::nullopt;
}

std::string_view to_string(SceneKind kind) noexcept {
  switch (kind) {
    case SceneKind::FrontoPlane: return "fronto_plane";
    case SceneKind::SlantedPlane: return "slanted_plane";
    case SceneKind::SpherePatch: return "sphere_patch";
    case SceneKind::SphereOnPlane: return "sphere_on_plane";
    case SceneKind::StepPlanes: return "step_planes";
    case SceneKind::SineRelief: return "sine_relief";
  }
  return "unknown";
}

SceneSpec SceneSpec::defaults(SceneKind kind, int resolution) {
  SceneSpec s;
  s.kind = kind;
  s.resolution = resolution;
  switch (kind) {
    case SceneKind::SpherePatch:
      // Large sphere filling the whole field of view.
      s.sphere_center_x = 0.0;
      s.sphere_center_z = 4.0;
      s.sphere_radius = 3.0;
      break;
    case SceneKind::SphereOnPlane:
      // Cap of a sphere sunk 0.3 behind the plane, shifted right: the
      // junction with the plane is visible on the left and the rim occludes
      // the plane on the right.
      s.plane_depth = 4.0;
      s.sphere_center_x = 0.8;
      s.sphere_center_z = 4.3;
      s.sphere_radius = 1.0;
      break;
    case SceneKind::StepPlanes:
      s.near_depth = 1.0;
      s.plane_depth = 2.0;
      break;
    default:
      break;
  }
  return s;
}

CameraIntrinsics SceneSpec::intrinsics() const noexcept {
  const double f = resolution;
  const double c = 0.5 * (resolution - 1);
  return {f, f, c, c};
}

namespace {

struct Hit {
  double depth;
  Vec3 normal;
  std::uint8_t region;
};

// Nearest intersection of the ray z * tau with a sphere, as perspective depth.
std::optional<double> sphere_hit(const Vec3& tau, const Vec3& center, double radius) {
  const double a = tau.squaredNorm();
  const double b = tau.dot(center);
  const double c = center.squaredNorm() - radius * radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double z = (b - std::sqrt(disc)) / a;
  if (!(z > 0.0)) return std::nullopt;
  return z;
}

void check_spec(const SceneSpec& spec) {
  auto fail = [](const char* what) { throw Error(ErrorCode::DegenerateSpec, what); };
  if (spec.resolution < 2) fail("resolution must be at least 2");
  switch (spec.kind) {
    case SceneKind::FrontoPlane:
    case SceneKind::SlantedPlane:
    case SceneKind::SineRelief:
      if (!(spec.depth > 0.0)) fail("plane depth must be positive");
      break;
    case SceneKind::SpherePatch:
      if (!(spec.sphere_radius > 0.0)) fail("sphere radius must be positive");
      if (!(spec.sphere_center_z - spec.sphere_radius > 0.0)) {
        fail("sphere must lie entirely in front of the camera");
      }
      break;
    case SceneKind::SphereOnPlane:
      if (!(spec.sphere_radius > 0.0) || !(spec.plane_depth > 0.0)) {
        fail("sphere radius and plane depth must be positive");
      }
      if (spec.sphere_center_z < spec.plane_depth) fail("sphere center must not be in front of the plane");
      if (!(spec.sphere_center_z - spec.sphere_radius < spec.plane_depth)) {
        fail("sphere does not protrude from the plane");
      }
      if (!(spec.sphere_center_z - spec.sphere_radius > 0.0)) fail("sphere reaches behind the camera");
      break;
    case SceneKind::StepPlanes:
      if (!(spec.near_depth > 0.0) || !(spec.plane_depth > 0.0)) fail("plane depths must be positive");
      break;
  }
}

std::optional<Hit> trace(const SceneSpec& spec, const Vec3& tau, int u) {
  switch (spec.kind) {
    case SceneKind::FrontoPlane:
      return Hit{spec.depth, Vec3(0, 0, -1), 0};
    case SceneKind::SlantedPlane: {
      const double den = 1.0 - spec.slope_x * tau.x() - spec.slope_y * tau.y();
      if (!(den > 0.0)) return std::nullopt;
      return Hit{spec.depth / den, Vec3(spec.slope_x, spec.slope_y, -1.0).normalized(), 0};
    }
    case SceneKind::SpherePatch: {
      const Vec3 center(spec.sphere_center_x, 0.0, spec.sphere_center_z);
      const auto z = sphere_hit(tau, center, spec.sphere_radius);
      if (!z) return std::nullopt;
      return Hit{*z, (*z * tau - center) / spec.sphere_radius, 1};
    }
    case SceneKind::SphereOnPlane: {
      const Vec3 center(spec.sphere_center_x, 0.0, spec.sphere_center_z);
      const auto z = sphere_hit(tau, center, spec.sphere_radius);
      if (z && *z <= spec.plane_depth) {
        return Hit{*z, (*z * tau - center) / spec.sphere_radius, 1};
      }
      return Hit{spec.plane_depth, Vec3(0, 0, -1), 0};
    }
    case SceneKind::StepPlanes: {
      const bool near = 2 * u < spec.resolution;
      return Hit{near ? spec.near_depth : spec.plane_depth, Vec3(0, 0, -1),
                 static_cast<std::uint8_t>(near ? 1 : 0)};
    }
    case SceneKind::SineRelief: {
      const double w = 2.0 * std::numbers::pi / spec.wavelength;
      double z = spec.depth;
      for (int it = 0; it < 50; ++it) {
        const double h = z - spec.depth - spec.amplitude * std::sin(w * z * tau.x());
        const double dh = 1.0 - spec.amplitude * w * tau.x() * std::cos(w * z * tau.x());
        const double step = h / dh;
        z -= step;
        if (std::abs(step) < 1e-15 * z) break;
      }
      const double slope = spec.amplitude * w * std::cos(w * z * tau.x());
      return Hit{z, Vec3(slope, 0.0, -1.0).normalized(), 0};
    }
  }
  return std::nullopt;
}

}  // namespace

SceneRender render_scene(const SceneSpec& spec) {
  check_spec(spec);
  const int n = spec.resolution;
  SceneRender out;
  out.intrinsics = spec.intrinsics();
  const std::size_t count = static_cast<std::size_t>(n) * n;
  std::vector<Vec3> normals(count, Vec3::Zero());
  std::vector<std::uint8_t> mask(count, 0);
  out.depth = DepthMap(n, n);
  out.region.assign(count, 0);
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const Vec3 tau = ray_at(out.intrinsics, u, v);
      const auto hit = trace(spec, tau, u);
      if (!hit || !(hit->depth > 0.0) || !(hit->normal.dot(tau) < 0.0)) continue;
      const std::size_t i = static_cast<std::size_t>(v) * n + u;
      normals[i] = hit->normal.normalized();
      mask[i] = 1;
      out.depth.at(u, v) = hit->depth;
      out.depth.mask()[i] = 1;
      out.region[i] = hit->region;
    }
  }
  out.normals = NormalMap(n, n, std::move(normals), std::move(mask));
  return out;
}

NormalMap perturb_normals(const NormalMap& nmap, double angle_sigma, std::uint64_t seed) {
  if (!(angle_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise level must be non-negative");
  }
  std::vector<Vec3> normals(nmap.normals().begin(), nmap.normals().end());
  std::vector<std::uint8_t> mask(nmap.mask().begin(), nmap.mask().end());
  if (angle_sigma == 0.0) return NormalMap(nmap.width(), nmap.height(), normals, mask);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (!mask[i]) continue;
    const Vec3 n = normals[i];
    Vec3 axis;
    do {
      const Vec3 r(gauss(rng), gauss(rng), gauss(rng));
      axis = r - r.dot(n) * n;
    } while (axis.squaredNorm() < 1e-12);
    axis.normalize();
    const double angle = std::abs(angle_sigma * gauss(rng));
    normals[i] = (n * std::cos(angle) + axis.cross(n) * std::sin(angle)).normalized();
  }
  return NormalMap(nmap.width(), nmap.height(), std::move(normals), std::move(mask));
}

}  // namespace normint
