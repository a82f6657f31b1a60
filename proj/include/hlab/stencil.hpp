#pragma once

// Matrix-free kernels for the (2n+1)-point operator -Delta_h + sigma on a
// masked node lattice. Inactive nodes act as Dirichlet data: their values
// are read by neighbours but never updated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hlab/grid.hpp"
#include "hlab/lattice.hpp"

namespace hlab {

struct StencilLevel {
  NodeLattice lattice;
  double h = 1.0;
  std::vector<std::uint8_t> active;  // 1 = unknown, 0 = Dirichlet node

  std::size_t size() const noexcept { return lattice.size(); }

  std::size_t active_count() const noexcept {
    return static_cast<std::size_t>(std::count(active.begin(), active.end(), std::uint8_t{1}));
  }
};

/// Visits every active node as fn(i, neighbour_sum) where neighbour_sum is the
/// sum of the 2n neighbour values of x.
template <class Fn>
inline void for_each_active_node(const StencilLevel& lv, const double* x, Fn&& fn) {
  const NodeLattice& lat = lv.lattice;
  const int n = lat.dim();
  const auto len = static_cast<std::size_t>(lat.extent(n - 1));
  const bool periodic = lat.periodic();
  const std::uint8_t* act = lv.active.data();
  lat.for_each_line([&](const LineInfo& line) {
    if (!periodic && line.on_boundary) return;
    const std::size_t b = line.base;
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t i = b + j;
      if (!act[i]) continue;
      double s = x[b + (j == 0 ? len - 1 : j - 1)] + x[b + (j + 1 == len ? 0 : j + 1)];
      for (int a = 0; a + 1 < n; ++a) s += x[i + line.offsets[2 * a]] + x[i + line.offsets[2 * a + 1]];
      fn(i, s);
    }
  });
}

/// y = (-Delta_h + sigma) x on active nodes, y = 0 elsewhere.
inline void apply_operator(const StencilLevel& lv, double sigma, const double* x, double* y) {
  const double inv_h2 = 1.0 / (lv.h * lv.h);
  const double diag = 2.0 * lv.lattice.dim() * inv_h2 + sigma;
  std::fill(y, y + lv.size(), 0.0);
  for_each_active_node(lv, x, [&](std::size_t i, double s) { y[i] = diag * x[i] - s * inv_h2; });
}

/// r = b - (-Delta_h + sigma) x on active nodes, r = 0 elsewhere.
inline void residual(const StencilLevel& lv, double sigma, const double* x, const double* b, double* r) {
  const double inv_h2 = 1.0 / (lv.h * lv.h);
  const double diag = 2.0 * lv.lattice.dim() * inv_h2 + sigma;
  std::fill(r, r + lv.size(), 0.0);
  for_each_active_node(lv, x, [&](std::size_t i, double s) { r[i] = b[i] - (diag * x[i] - s * inv_h2); });
}

/// One Gauss-Seidel half sweep over nodes of the given colour.
inline void gauss_seidel_colour(const StencilLevel& lv, double sigma, double* x, const double* b, int colour) {
  const NodeLattice& lat = lv.lattice;
  const int n = lat.dim();
  const auto len = static_cast<std::size_t>(lat.extent(n - 1));
  const bool periodic = lat.periodic();
  const double inv_h2 = 1.0 / (lv.h * lv.h);
  const double inv_diag = 1.0 / (2.0 * n * inv_h2 + sigma);
  const std::uint8_t* act = lv.active.data();
  lat.for_each_line([&](const LineInfo& line) {
    if (!periodic && line.on_boundary) return;
    const std::size_t b0 = line.base;
    for (std::size_t j = static_cast<std::size_t>((colour + line.parity) & 1); j < len; j += 2) {
      const std::size_t i = b0 + j;
      if (!act[i]) continue;
      double s = x[b0 + (j == 0 ? len - 1 : j - 1)] + x[b0 + (j + 1 == len ? 0 : j + 1)];
      for (int a = 0; a + 1 < n; ++a) s += x[i + line.offsets[2 * a]] + x[i + line.offsets[2 * a + 1]];
      x[i] = (b[i] + s * inv_h2) * inv_diag;
    }
  });
}

/// Discrete Laplacian of a field at every non-boundary node (holes included).
/// Box boundary nodes get 0.
inline Field laplacian(const Field& u) {
  const auto& g = *u.grid;
  StencilLevel lv{g.lattice(), g.h(), std::vector<std::uint8_t>(g.size(), 1)};
  if (!g.periodic()) {
    g.lattice().for_each_node([&](std::size_t i, const MultiIndex& mi) { lv.active[i] = !g.lattice().on_box_boundary(mi); });
  }
  Field out(u.grid);
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const double diag = 2.0 * g.dim();
  for_each_active_node(lv, u.values.data(),
                       [&](std::size_t i, double s) { out[i] = (s - diag * u[i]) * inv_h2; });
  return out;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace hlab
