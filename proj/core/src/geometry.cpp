#include "normint/geometry.hpp"

#include <cmath>
#include <string>

#include "normint/error.hpp"

namespace normint {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::DegenerateSpec: return "DegenerateSpec";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::UnsupportedBitDepth: return "UnsupportedBitDepth";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive and finite");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorCode::InvalidArgument, "principal point must be finite");
  }
}

Vec3 ray_at(const CameraIntrinsics& intr, double u, double v) noexcept {
  return Vec3((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
}

Vec3 subpixel_ray(const CameraIntrinsics& intr, Pixel a, Pixel b) noexcept {
  return ray_at(intr, 0.5 * (a.u + b.u), 0.5 * (a.v + b.v));
}

DepthMap depth_from_logdepth(const LogDepthMap& zmap) {
  DepthMap out(zmap.width(), zmap.height());
  auto src = zmap.values();
  auto mask = zmap.mask();
  auto dst = out.values();
  auto dst_mask = out.mask();
  for (std::size_t i = 0; i < zmap.size(); ++i) {
    dst_mask[i] = mask[i];
    dst[i] = mask[i] ? std::exp(src[i]) : 0.0;
  }
  return out;
}

LogDepthMap logdepth_from_depth(const DepthMap& depth) {
  LogDepthMap out(depth.width(), depth.height());
  auto src = depth.values();
  auto mask = depth.mask();
  auto dst = out.values();
  auto dst_mask = out.mask();
  for (std::size_t i = 0; i < depth.size(); ++i) {
    dst_mask[i] = mask[i];
    if (!mask[i]) continue;
    if (!(src[i] > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "non-positive depth at a valid pixel");
    }
    dst[i] = std::log(src[i]);
  }
  return out;
}

NormalMap::NormalMap(int width, int height, std::vector<Vec3> normals,
                     std::vector<std::uint8_t> mask)
    : width_(width), height_(height), normals_(std::move(normals)), mask_(std::move(mask)) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative normal map size");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (normals_.size() != n || mask_.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "normal map buffers do not match its size");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask_[i]) {
      normals_[i].setZero();
      continue;
    }
    mask_[i] = 1;
    const double norm = normals_[i].norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  "non-unit normal at pixel (" + std::to_string(i % width) + ", " +
                      std::to_string(i / width) + "), norm " + std::to_string(norm));
    }
    normals_[i] /= norm;
    ++valid_count_;
  }
}

NormalMap NormalMap::flipped() const {
  std::vector<Vec3> out(normals_.size());
  for (std::size_t i = 0; i < normals_.size(); ++i) out[i] = -normals_[i];
  return NormalMap(width_, height_, std::move(out), mask_);
}

RayField::RayField(const CameraIntrinsics& intr, int width, int height)
    : intr_(intr), width_(width), rays_(static_cast<std::size_t>(width) * height) {
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      rays_[static_cast<std::size_t>(v) * width + u] = ray_at(intr, u, v);
    }
  }
}

}  // namespace normint
