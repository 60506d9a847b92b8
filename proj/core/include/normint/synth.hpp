#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "normint/geometry.hpp"

namespace normint {

enum class SceneKind { FrontoPlane, SlantedPlane, SpherePatch, SphereOnPlane, StepPlanes, SineRelief };

std::optional<SceneKind> parse_scene_kind(std::string_view name) noexcept;
std::string_view to_string(SceneKind kind) noexcept;

/// Analytic scene seen by a pinhole camera with fx = fy = resolution and the
/// principal point at the image center. Lengths are in scene units.
struct SceneSpec {
  SceneKind kind = SceneKind::FrontoPlane;
  int resolution = 64;

  double depth = 2.0;  // fronto/slanted plane depth at the optical axis

  double slope_x = 0.3;  // slanted plane: z = depth + slope_x X + slope_y Y
  double slope_y = 0.2;

  double sphere_center_x = 0.0;  // sphere_patch / sphere_on_plane
  double sphere_center_z = 4.0;
  double sphere_radius = 3.0;

  double plane_depth = 4.0;  // sphere_on_plane background, step_planes far plane
  double near_depth = 1.0;   // step_planes near plane (left half)

  double amplitude = 0.05;  // sine_relief: z = depth + amplitude sin(2 pi X / wavelength)
  double wavelength = 0.5;

  /// Defaults tuned per kind (e.g. sphere_on_plane places a sunk sphere cap
  /// off-axis so the plane junction is visible on one side and the rim
  /// occludes the plane on the other).
  static SceneSpec defaults(SceneKind kind, int resolution);

  CameraIntrinsics intrinsics() const noexcept;
};

struct SceneRender {
  CameraIntrinsics intrinsics;
  NormalMap normals;
  DepthMap depth;
  std::vector<std::uint8_t> region;  // 0 background/plane, 1 foreground object
};

/// Throws Error(DegenerateSpec) on invalid geometry.
SceneRender render_scene(const SceneSpec& spec);

/// Rotates every valid normal about a random axis perpendicular to it by an
/// angle drawn from |N(0, sigma)|.
NormalMap perturb_normals(const NormalMap& nmap, double angle_sigma, std::uint64_t seed);

}  // namespace normint
