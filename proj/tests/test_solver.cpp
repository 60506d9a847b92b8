#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "normint/solver.hpp"

using namespace normint;
using doctest::Approx;

namespace {

// Minimum-norm weighted least-squares solution from a dense complete
// orthogonal decomposition of W^(1/2) A.
Eigen::VectorXd dense_oracle(const EdgeSystem& sys) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sys.rows.size()),
                                            static_cast<Eigen::Index>(sys.unknowns));
  Eigen::VectorXd b(static_cast<Eigen::Index>(sys.rows.size()));
  for (std::size_t i = 0; i < sys.rows.size(); ++i) {
    const ConstraintRow& r = sys.rows[i];
    const double s = std::sqrt(r.weight);
    const auto row = static_cast<Eigen::Index>(i);
    a(row, r.plus) += s;
    a(row, r.minus) -= s;
    b(row) = s * r.rhs;
  }
  return a.completeOrthogonalDecomposition().solve(b);
}

EdgeSystem random_system(std::mt19937_64& rng, std::size_t n, std::size_t extra_rows,
                         bool zero_weights) {
  std::uniform_real_distribution<double> rhs(-1.0, 1.0), w(0.1, 5.0), coin(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  EdgeSystem sys;
  sys.unknowns = n;
  // A spanning path keeps the block structure predictable; extra rows add cycles.
  for (std::uint32_t i = 0; i + 1 < n; ++i) {
    sys.rows.push_back({i + 1, i, rhs(rng), w(rng)});
    sys.rows.push_back({i, i + 1, rhs(rng), w(rng)});
  }
  for (std::size_t k = 0; k < extra_rows; ++k) {
    std::uint32_t a = pick(rng), b = pick(rng);
    if (a == b) b = (a + 1) % static_cast<std::uint32_t>(n);
    sys.rows.push_back({a, b, rhs(rng), zero_weights && coin(rng) < 0.2 ? 0.0 : w(rng)});
  }
  return sys;
}

double max_abs_diff(const std::vector<double>& x, const Eigen::VectorXd& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y(static_cast<Eigen::Index>(i))));
  return m;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("zero right-hand side gives zero") {
  EdgeSystem sys{3, {{0, 1, 0.0, 1.0}, {1, 2, 0.0, 1.0}, {2, 0, 0.0, 2.0}}};
  const CgResult r = cg_normal_equations(sys);
  CHECK(r.converged);
  for (double x : r.x) CHECK(x == 0.0);
}

TEST_CASE("two-pixel system splits the difference") {
  EdgeSystem sys{2, {{0, 1, 0.7, 1.0}, {1, 0, -0.7, 1.0}}};
  const CgResult r = cg_normal_equations(sys);
  CHECK(r.converged);
  CHECK(r.x[0] == Approx(0.35).epsilon(1e-12));
  CHECK(r.x[1] == Approx(-0.35).epsilon(1e-12));
  CHECK(sys.energy(r.x) < 1e-24);
}

TEST_CASE("random 10-pixel path matches a dense solve") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const EdgeSystem sys = random_system(rng, 10, 0, false);
    const CgResult r = cg_normal_equations(sys);
    CHECK(r.converged);
    CHECK(max_abs_diff(r.x, dense_oracle(sys)) < 1e-8);
  }
}

TEST_CASE("cycles, zero weights and untouched unknowns") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    EdgeSystem sys = random_system(rng, 30 + trial, 40, true);
    // Unknowns beyond the path are untouched by any row.
    sys.unknowns += 3;
    const CgResult r = cg_normal_equations(sys);
    CHECK(r.converged);
    CHECK(max_abs_diff(r.x, dense_oracle(sys)) < 1e-8);
    for (std::size_t i = sys.unknowns - 3; i < sys.unknowns; ++i) CHECK(r.x[i] == 0.0);
  }
}

TEST_CASE("disconnected blocks each get zero mean") {
  EdgeSystem sys{5,
                 {{0, 1, 1.0, 1.0}, {1, 0, -1.0, 1.0}, {3, 2, 0.5, 2.0}, {4, 3, 0.25, 1.0},
                  {2, 4, 9.0, 0.0}}};
  const CgResult r = cg_normal_equations(sys);
  CHECK(r.x[0] + r.x[1] == Approx(0.0).epsilon(1e-14));
  CHECK(r.x[2] + r.x[3] + r.x[4] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.x[0] - r.x[1] == Approx(1.0).epsilon(1e-12));
  CHECK(r.x[3] - r.x[2] == Approx(0.5).epsilon(1e-12));
  CHECK(r.x[4] - r.x[3] == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("already optimal right-hand sides need no iterations") {
  // Inconsistent cycle at its least-squares optimum: x = 0 minimizes.
  EdgeSystem sys{3, {{1, 0, 1.0, 1.0}, {2, 1, 1.0, 1.0}, {0, 2, 1.0, 1.0}}};
  const CgResult r = cg_normal_equations(sys);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  CHECK(sys.energy(r.x) == Approx(3.0));
}

TEST_CASE("iteration cap is reported") {
  std::mt19937_64 rng(61);
  const EdgeSystem sys = random_system(rng, 400, 200, false);
  const CgResult capped = cg_normal_equations(sys, {1e-14, 2});
  CHECK_FALSE(capped.converged);
  CHECK(capped.iterations == 2);
  const CgResult full = cg_normal_equations(sys);
  CHECK(full.converged);
  CHECK(full.relative_residual <= 1e-10);
}

TEST_CASE("energy") {
  EdgeSystem sys{2, {{0, 1, 1.0, 2.0}, {1, 0, 0.0, 0.5}}};
  const std::vector<double> x{0.5, 0.0};
  // 2 (0.5 - 1)^2 + 0.5 (-0.5)^2
  CHECK(sys.energy(x) == Approx(0.625));
}

TEST_CASE("empty systems") {
  CHECK(cg_normal_equations(EdgeSystem{}).x.empty());
  const CgResult r = cg_normal_equations(EdgeSystem{4, {}});
  CHECK(r.x == std::vector<double>(4, 0.0));
}

TEST_CASE("solution is invariant to row order") {
  std::mt19937_64 rng(67);
  EdgeSystem sys = random_system(rng, 50, 60, false);
  const CgResult a = cg_normal_equations(sys);
  std::shuffle(sys.rows.begin(), sys.rows.end(), rng);
  const CgResult b = cg_normal_equations(sys);
  for (std::size_t i = 0; i < a.x.size(); ++i) CHECK(std::abs(a.x[i] - b.x[i]) < 1e-8);
}

}
