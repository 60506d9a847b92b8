#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace normint {

/// One weighted constraint x[plus] - x[minus] = rhs.
struct ConstraintRow {
  std::uint32_t plus;
  std::uint32_t minus;
  double rhs;
  double weight;
};

/// Sparse weighted least-squares system min (Ax - b)^T W (Ax - b) whose design
/// matrix rows each hold a single +1 and -1.
struct EdgeSystem {
  std::size_t unknowns = 0;
  std::vector<ConstraintRow> rows;

  /// (Ax - b)^T W (Ax - b).
  double energy(std::span<const double> x) const noexcept;
};

struct CgSettings {
  // Stop when ||A^T W A x - A^T W b|| <= tolerance * sqrt(tr(A^T W A)) * ||W^(1/2) b||.
  double tolerance = 1e-10;
  std::size_t max_iterations = 0;  // 0: max(5000, unknowns)
};

struct CgResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = true;
};

/// Jacobi-preconditioned conjugate gradient on the normal equations
/// A^T W A x = A^T W b, started from zero. The result is projected onto the
/// minimum-norm representative: zero mean on every connected block of the
/// positively weighted constraint graph, zero on unconstrained unknowns.
CgResult cg_normal_equations(const EdgeSystem& system, const CgSettings& settings = {});

}  // namespace normint
