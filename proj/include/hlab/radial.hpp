#pragma once

// Radially symmetric two-point problems
//   r^{1-n} (r^{n-1} w')' = k   on a < r < R,   w(a) = w_a,
// with either w'(R) = 0 or w(R) = w_R. Conservative finite volumes on a
// log-uniform mesh, refined once and Richardson-extrapolated.

#include <cmath>
#include <vector>

#include "hlab/error.hpp"
#include "hlab/lattice.hpp"

namespace hlab {

struct RadialProblem {
  int n = 3;
  double a = 1.0;
  double R = 2.0;
  double k = 0.0;
  double inner_value = 1.0;
  bool outer_neumann = true;
  double outer_value = 0.0;
};

struct RadialSolution {
  std::vector<double> r;
  std::vector<double> w;
  double inner_flux = 0.0;  // sigma_{n-1} a^{n-1} w'(a), radially outward
};

namespace detail {

inline RadialSolution radial_fv(const RadialProblem& p, int cells) {
  const int n = p.n;
  const int M = cells;
  RadialSolution s;
  s.r.resize(M + 1);
  for (int i = 0; i <= M; ++i) s.r[i] = p.a * std::pow(p.R / p.a, static_cast<double>(i) / M);
  auto mid = [&](int i) { return 0.5 * (s.r[i] + s.r[i + 1]); };
  // Transmissibility of face i+1/2 and control volume of node i (both per unit solid angle).
  std::vector<double> T(M), V(M + 1, 0.0);
  for (int i = 0; i < M; ++i) T[i] = std::pow(mid(i), n - 1) / (s.r[i + 1] - s.r[i]);
  for (int i = 1; i <= M; ++i) {
    const double lo = mid(i - 1);
    const double hi = i < M ? mid(i) : s.r[M];
    V[i] = (std::pow(hi, n) - std::pow(lo, n)) / n;
  }
  // Tridiagonal system for nodes 1..M (node 0 is Dirichlet).
  const int m = p.outer_neumann ? M : M - 1;
  std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0);
  for (int j = 0; j < m; ++j) {
    const int i = j + 1;
    const double tl = T[i - 1];
    const double tr = i < M ? T[i] : 0.0;
    diag[j] = -(tl + tr);
    lower[j] = tl;
    upper[j] = tr;
    rhs[j] = p.k * V[i];
  }
  rhs[0] -= lower[0] * p.inner_value;
  if (!p.outer_neumann) rhs[m - 1] -= upper[m - 1] * p.outer_value;
  for (int j = 1; j < m; ++j) {
    const double f = lower[j] / diag[j - 1];
    diag[j] -= f * upper[j - 1];
    rhs[j] -= f * rhs[j - 1];
  }
  s.w.assign(M + 1, 0.0);
  s.w[0] = p.inner_value;
  if (!p.outer_neumann) s.w[M] = p.outer_value;
  s.w[m] = rhs[m - 1] / diag[m - 1];
  for (int j = m - 2; j >= 0; --j) s.w[j + 1] = (rhs[j] - upper[j] * s.w[j + 2]) / diag[j];
  // Face flux at a: the half-face flux minus the source in [a, r_{1/2}].
  const double half_cell = (std::pow(mid(0), n) - std::pow(p.a, n)) / n;
  s.inner_flux = unit_sphere_area(n) * (T[0] * (s.w[1] - s.w[0]) - p.k * half_cell);
  return s;
}

}  // namespace detail

/// Solves the radial problem. Values at the coarse nodes and the inner flux are
/// Richardson-extrapolated from `cells` and 2*`cells` log-uniform cells.
inline RadialSolution solve_radial(const RadialProblem& p, int cells = 4000) {
  if (p.n < 1) throw Error(ErrorKind::InvalidDimension, "radial dimension must be positive");
  if (!(p.a > 0.0) || !(p.R > p.a)) throw Error(ErrorKind::Geometry, "radial problem needs 0 < a < R");
  RadialSolution coarse = detail::radial_fv(p, cells);
  RadialSolution fine = detail::radial_fv(p, 2 * cells);
  for (std::size_t i = 0; i < coarse.w.size(); ++i) coarse.w[i] = (4.0 * fine.w[2 * i] - coarse.w[i]) / 3.0;
  coarse.inner_flux = (4.0 * fine.inner_flux - coarse.inner_flux) / 3.0;
  return coarse;
}

/// Linear interpolation of a radial solution at radius rho.
inline double radial_value(const RadialSolution& s, double rho) {
  if (rho <= s.r.front()) return s.w.front();
  if (rho >= s.r.back()) return s.w.back();
  std::size_t lo = 0, hi = s.r.size() - 1;
  while (hi - lo > 1) {
    const std::size_t midp = (lo + hi) / 2;
    (s.r[midp] <= rho ? lo : hi) = midp;
  }
  const double t = (rho - s.r[lo]) / (s.r[hi] - s.r[lo]);
  return (1.0 - t) * s.w[lo] + t * s.w[hi];
}

}  // namespace hlab
