#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "normint/error.hpp"
#include "normint/geometry.hpp"
#include "support.hpp"

using namespace normint;
using doctest::Approx;

TEST_SUITE("geometry") {

TEST_CASE("ray_at returns the unit-z pinhole ray") {
  const Vec3 principal = ray_at({1, 1, 0, 0}, 0, 0);
  CHECK(principal == Vec3(0, 0, 1));
  CHECK(ray_at({500, 500, 320, 240}, 320, 240) == Vec3(0, 0, 1));
  const Vec3 r = ray_at({500, 400, 320, 240}, 420, 240);
  CHECK(r.x() == Approx(0.2).epsilon(1e-15));
  CHECK(r.y() == 0.0);
  CHECK(r.z() == 1.0);
}

TEST_CASE("ray_at is affine in the pixel offset and fixed at the principal point") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> f(10, 2000), c(-500, 500), px(-1000, 1000);
  for (int i = 0; i < 200; ++i) {
    const CameraIntrinsics intr{f(rng), f(rng), c(rng), c(rng)};
    CHECK((ray_at(intr, intr.cx, intr.cy) - Vec3(0, 0, 1)).norm() == 0.0);
    const double u1 = px(rng), u2 = px(rng), v1 = px(rng), v2 = px(rng);
    // ray(p1) + ray(p2) - ray(c) == ray(p1 + p2 - c)
    const Vec3 lhs = ray_at(intr, u1, v1) + ray_at(intr, u2, v2) - ray_at(intr, intr.cx, intr.cy);
    const Vec3 rhs = ray_at(intr, u1 + u2 - intr.cx, v1 + v2 - intr.cy);
    CHECK((lhs - rhs).norm() < 1e-10);
  }
}

TEST_CASE("subpixel_ray uses the coordinate midpoint") {
  const CameraIntrinsics unit{1, 1, 0, 0};
  CHECK(subpixel_ray(unit, {0, 0}, {2, 0}) == Vec3(1, 0, 1));
  CHECK(subpixel_ray(unit, {3, 4}, {3, 4}) == ray_at(unit, 3, 4));
  const Vec3 r = subpixel_ray({500, 500, 320, 240}, {320, 240}, {321, 241});
  CHECK(r.x() == Approx(0.001).epsilon(1e-12));
  CHECK(r.y() == Approx(0.001).epsilon(1e-12));
  CHECK(r.z() == 1.0);
}

TEST_CASE("RayField caches ray_at") {
  const CameraIntrinsics intr{120, 90, 31.5, 20.25};
  const RayField field(intr, 64, 48);
  for (int v = 0; v < 48; v += 7) {
    for (int u = 0; u < 64; u += 5) CHECK(field.at(u, v) == ray_at(intr, u, v));
  }
}

TEST_CASE("intrinsics validation") {
  CHECK_NOTHROW(CameraIntrinsics{1, 2, 0, 0}.validate());
  CHECK_THROWS_AS(CameraIntrinsics({0, 1, 0, 0}).validate(), Error);
  CHECK_THROWS_AS(CameraIntrinsics({1, -1, 0, 0}).validate(), Error);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(CameraIntrinsics({1, 1, nan, 0}).validate(), Error);
  CHECK(CameraIntrinsics{100, 300, 0, 0}.mean_focal() == 200.0);
}

TEST_CASE("depth_from_logdepth exponentiates valid pixels") {
  LogDepthMap z(3, 2);
  for (auto& m : z.mask()) m = 1;
  SUBCASE("zero maps to unit depth") {
    const DepthMap d = depth_from_logdepth(z);
    for (double x : d.values()) CHECK(x == 1.0);
  }
  SUBCASE("ln 2 maps to 2") {
    for (auto& x : z.values()) x = std::log(2.0);
    const DepthMap d = depth_from_logdepth(z);
    for (double x : d.values()) CHECK(x == Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("mixed values against scalar exp, invalid pixels zeroed") {
    const double vals[] = {-1.5, 0.25, 3.0, -0.01, 0.7, 12.0};
    for (int i = 0; i < 6; ++i) z.values()[i] = vals[i];
    z.mask()[4] = 0;
    const DepthMap d = depth_from_logdepth(z);
    for (int i = 0; i < 6; ++i) {
      if (i == 4) {
        CHECK(d.values()[i] == 0.0);
        CHECK(d.mask()[i] == 0);
      } else {
        CHECK(d.values()[i] == std::exp(vals[i]));
      }
    }
  }
}

TEST_CASE("log then exp is the identity on positive depths") {
  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> dist(0.0, 2.0);
  DepthMap d(17, 9);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d.values()[i] = dist(rng);
    d.mask()[i] = 1;
  }
  const DepthMap back = depth_from_logdepth(logdepth_from_depth(d));
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(std::abs(back.values()[i] - d.values()[i]) <= 1e-12 * d.values()[i]);
  }
  d.values()[3] = -1.0;
  CHECK_THROWS_AS(logdepth_from_depth(d), Error);
}

TEST_CASE("NormalMap enforces unit length on valid pixels") {
  std::vector<std::uint8_t> mask{1, 1, 0, 1};
  SUBCASE("within tolerance is renormalized") {
    std::vector<Vec3> n{Vec3(0, 0, -1.00005), Vec3(0.6, 0, -0.8), Vec3(5, 5, 5),
                        Vec3(0, -0.99995, 0)};
    const NormalMap m(2, 2, n, mask);
    CHECK(m.valid_count() == 3);
    CHECK(std::abs(m.normal(0, 0).norm() - 1.0) < 1e-15);
    CHECK(std::abs(m.normal(1, 1).norm() - 1.0) < 1e-15);
    CHECK(m.normal(0, 1) == Vec3::Zero());  // masked pixel carries the sentinel
    CHECK_FALSE(m.valid(0, 1));
  }
  SUBCASE("beyond tolerance is rejected") {
    std::vector<Vec3> n{Vec3(0, 0, -1.0002), Vec3(0, 0, -1), Vec3::Zero(), Vec3(0, 0, -1)};
    CHECK_THROWS_AS(NormalMap(2, 2, n, mask), Error);
  }
  SUBCASE("masked pixels may hold anything") {
    std::vector<Vec3> n{Vec3(0, 0, -1), Vec3(0, 0, -1),
                        Vec3(std::numeric_limits<double>::quiet_NaN(), 0, 0), Vec3(0, 0, -1)};
    CHECK_NOTHROW(NormalMap(2, 2, n, mask));
  }
  SUBCASE("size mismatch") {
    CHECK_THROWS_AS(NormalMap(2, 2, std::vector<Vec3>(3, Vec3(0, 0, -1)), mask), Error);
  }
}

TEST_CASE("flipped negates valid normals only") {
  const NormalMap m = testing::make_normals(
      3, 1, [](int u, int) { return Vec3(0.1 * u, 0, -1); }, [](int u, int) { return u != 1; });
  const NormalMap f = m.flipped();
  CHECK(f.normal(0, 0) == -m.normal(0, 0));
  CHECK(f.normal(2, 0) == -m.normal(2, 0));
  CHECK(f.normal(1, 0) == Vec3::Zero());
  CHECK(f.valid_count() == 2);
}

TEST_CASE("error codes have names") {
  CHECK(std::string(to_string(ErrorCode::EmptyMask)) == "EmptyMask");
  const Error e(ErrorCode::NoOverlap, "x");
  CHECK(e.code() == ErrorCode::NoOverlap);
}

}
