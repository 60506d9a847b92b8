#include "normint/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "normint/graph.hpp"

namespace normint {

double EdgeSystem::energy(std::span<const double> x) const noexcept {
  double e = 0.0;
  for (const ConstraintRow& r : rows) {
    const double d = x[r.plus] - x[r.minus] - r.rhs;
    e += r.weight * d * d;
  }
  return e;
}

namespace {

// Symmetric CSR form of A^T W A (a weighted graph Laplacian).
struct Laplacian {
  std::vector<double> diagonal;
  std::vector<std::size_t> row_start;
  std::vector<std::uint32_t> cols;
  std::vector<double> values;

  void multiply(std::span<const double> x, std::span<double> y) const noexcept {
    const std::size_t n = diagonal.size();
    for (std::size_t i = 0; i < n; ++i) {
      double acc = diagonal[i] * x[i];
      for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) acc += values[k] * x[cols[k]];
      y[i] = acc;
    }
  }
};

// `scale` receives sqrt(trace(A^T W A)) * ||W^(1/2) b||, an upper bound on
// ||A^T W b|| that stays meaningful when b is already least-squares optimal.
Laplacian build_laplacian(const EdgeSystem& system, std::vector<double>& rhs, double& scale) {
  const std::size_t n = system.unknowns;
  Laplacian lap;
  lap.diagonal.assign(n, 0.0);
  rhs.assign(n, 0.0);

  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };
  std::vector<Entry> entries;
  entries.reserve(2 * system.rows.size());
  double weight_sum = 0.0;
  double weighted_b2 = 0.0;
  for (const ConstraintRow& r : system.rows) {
    if (!(r.weight > 0.0)) continue;
    weight_sum += r.weight;
    weighted_b2 += r.weight * r.rhs * r.rhs;
    lap.diagonal[r.plus] += r.weight;
    lap.diagonal[r.minus] += r.weight;
    rhs[r.plus] += r.weight * r.rhs;
    rhs[r.minus] -= r.weight * r.rhs;
    entries.push_back({r.plus, r.minus, -r.weight});
    entries.push_back({r.minus, r.plus, -r.weight});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });

  lap.row_start.assign(n + 1, 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    if (!lap.cols.empty() && i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col) {
      lap.values.back() += e.value;
      continue;
    }
    lap.cols.push_back(e.col);
    lap.values.push_back(e.value);
    ++lap.row_start[e.row + 1];
  }
  for (std::size_t i = 0; i < n; ++i) lap.row_start[i + 1] += lap.row_start[i];
  scale = std::sqrt(2.0 * weight_sum) * std::sqrt(weighted_b2);
  return lap;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Removes the null space of the Laplacian: per connected block, subtract the mean.
void project_min_norm(const EdgeSystem& system, std::span<double> x) {
  const std::size_t n = system.unknowns;
  UnionFind blocks(n);
  std::vector<std::uint8_t> touched(n, 0);
  for (const ConstraintRow& r : system.rows) {
    if (!(r.weight > 0.0)) continue;
    blocks.unite(r.plus, r.minus);
    touched[r.plus] = touched[r.minus] = 1;
  }
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!touched[i]) continue;
    const std::uint32_t root = blocks.find(i);
    sum[root] += x[i];
    ++count[root];
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!touched[i]) {
      x[i] = 0.0;
      continue;
    }
    const std::uint32_t root = blocks.find(i);
    x[i] -= sum[root] / static_cast<double>(count[root]);
  }
}

}  // namespace

CgResult cg_normal_equations(const EdgeSystem& system, const CgSettings& settings) {
  const std::size_t n = system.unknowns;
  CgResult result;
  result.x.assign(n, 0.0);
  if (n == 0 || system.rows.empty()) return result;

  std::vector<double> g;
  double scale = 0.0;
  const Laplacian lap = build_laplacian(system, g, scale);
  const double g_norm = std::sqrt(dot(g, g));
  const double threshold = settings.tolerance * scale;
  if (g_norm <= threshold) {
    result.relative_residual = scale > 0.0 ? g_norm / scale : 0.0;
    return result;
  }

  const std::size_t max_iter =
      settings.max_iterations ? settings.max_iterations : std::max<std::size_t>(5000, n);

  std::vector<double> inv_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_diag[i] = lap.diagonal[i] > 0.0 ? 1.0 / lap.diagonal[i] : 1.0;
  }

  std::vector<double>& x = result.x;
  std::vector<double> r = g;
  std::vector<double> z(n);
  std::vector<double> p(n);
  std::vector<double> ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  double r_norm = g_norm;

  result.converged = false;
  std::size_t it = 0;
  while (it < max_iter) {
    lap.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    ++it;
    r_norm = std::sqrt(dot(r, r));
    if (r_norm <= threshold) {
      result.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (!result.converged && r_norm <= threshold) result.converged = true;
  result.iterations = it;
  result.relative_residual = r_norm / scale;
  project_min_norm(system, x);
  return result;
}

}  // namespace normint
