#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace normint {

using Vec3 = Eigen::Vector3d;

/// Pinhole intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Throws Error(InvalidArgument) unless fx, fy > 0 and cx, cy are finite.
  void validate() const;

  /// Single focal length used where a formula needs one: (fx + fy) / 2.
  double mean_focal() const noexcept { return 0.5 * (fx + fy); }
};

struct Pixel {
  int u = 0;
  int v = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Ray through pixel (u, v) with unit z-component, so that a point at
/// perspective depth z is z * ray_at(...).
Vec3 ray_at(const CameraIntrinsics& intr, double u, double v) noexcept;

/// Ray through the coordinate midpoint of two neighboring pixels.
Vec3 subpixel_ray(const CameraIntrinsics& intr, Pixel a, Pixel b) noexcept;

/// Per-pixel scalar image with a validity mask. The tag keeps depth and
/// log-depth maps from being mixed up.
template <class Tag>
class ScalarMap {
 public:
  ScalarMap() = default;
  ScalarMap(int width, int height, double fill = 0.0)
      : width_(width),
        height_(height),
        values_(static_cast<std::size_t>(width) * height, fill),
        mask_(static_cast<std::size_t>(width) * height, 0) {}
  ScalarMap(int width, int height, std::vector<double> values,
            std::vector<std::uint8_t> mask)
      : width_(width), height_(height), values_(std::move(values)), mask_(std::move(mask)) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * width_ + u;
  }
  double& at(int u, int v) noexcept { return values_[index(u, v)]; }
  double at(int u, int v) const noexcept { return values_[index(u, v)]; }
  bool valid(int u, int v) const noexcept { return mask_[index(u, v)] != 0; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<std::uint8_t> mask() noexcept { return mask_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

struct DepthTag {};
struct LogDepthTag {};

using DepthMap = ScalarMap<DepthTag>;
using LogDepthMap = ScalarMap<LogDepthTag>;

/// Elementwise exp on valid pixels; invalid pixels are written as 0.
DepthMap depth_from_logdepth(const LogDepthMap& zmap);

/// Elementwise log on valid pixels. Throws Error(InvalidArgument) on a
/// non-positive valid depth.
LogDepthMap logdepth_from_depth(const DepthMap& depth);

/// Unit normals in camera coordinates plus a validity mask. Visible surfaces
/// have n . ray < 0 (camera looks down +z).
class NormalMap {
 public:
  /// Tolerance on |n| - 1 for valid pixels; within it normals are
  /// renormalized, beyond it construction fails.
  static constexpr double kUnitTolerance = 1e-4;

  NormalMap() = default;

  /// Invalid pixels get the zero sentinel regardless of their input value.
  /// Throws Error(InvalidArgument) on size mismatch or a non-unit valid normal.
  NormalMap(int width, int height, std::vector<Vec3> normals, std::vector<std::uint8_t> mask);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * width_ + u;
  }
  const Vec3& normal(int u, int v) const noexcept { return normals_[index(u, v)]; }
  bool valid(int u, int v) const noexcept { return mask_[index(u, v)] != 0; }
  std::size_t valid_count() const noexcept { return valid_count_; }

  std::span<const Vec3> normals() const noexcept { return normals_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }

  /// Returns a copy with every valid normal negated.
  NormalMap flipped() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Vec3> normals_;
  std::vector<std::uint8_t> mask_;
  std::size_t valid_count_ = 0;
};

/// Precomputed ray_at for every pixel of a width x height image.
class RayField {
 public:
  RayField(const CameraIntrinsics& intr, int width, int height);

  const Vec3& at(int u, int v) const noexcept {
    return rays_[static_cast<std::size_t>(v) * width_ + u];
  }
  const CameraIntrinsics& intrinsics() const noexcept { return intr_; }

 private:
  CameraIntrinsics intr_;
  int width_;
  std::vector<Vec3> rays_;
};

}  // namespace normint
