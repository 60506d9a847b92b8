#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "normint/geometry.hpp"

namespace normint::testing {

/// Normal map built from a per-pixel function; pixels where `valid` is false
/// are masked.
inline NormalMap make_normals(int w, int h, const std::function<Vec3(int, int)>& normal,
                              const std::function<bool(int, int)>& valid = {}) {
  std::vector<Vec3> n(static_cast<std::size_t>(w) * h, Vec3::Zero());
  std::vector<std::uint8_t> m(n.size(), 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (valid && !valid(u, v)) continue;
      n[static_cast<std::size_t>(v) * w + u] = normal(u, v).normalized();
      m[static_cast<std::size_t>(v) * w + u] = 1;
    }
  }
  return NormalMap(w, h, std::move(n), std::move(m));
}

inline NormalMap uniform_normals(int w, int h, const Vec3& n = Vec3(0, 0, -1)) {
  return make_normals(w, h, [&](int, int) { return n; });
}

inline Vec3 tilted_x(double degrees) {
  const double r = degrees * M_PI / 180.0;
  return {std::sin(r), 0.0, -std::cos(r)};
}

inline double deg(double d) { return d * M_PI / 180.0; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("normint_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace normint::testing
