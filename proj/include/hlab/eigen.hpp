#pragma once

// Positive solutions of -Delta phi + kappa phi = phi^p, 0 < p < 1, with phi = 0
// on holes and on the box boundary, by monotone iteration
//   (-Delta_h + kappa) phi^{k+1} = (phi^k)^p .

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hlab/correctors.hpp"
#include "hlab/diagnostics.hpp"
#include "hlab/multigrid.hpp"

namespace hlab {

struct EigenProblem {
  GridPtr grid;
  double p = 0.5;
  double kappa = 0.0;
  double tol = 1e-8;
  int max_iter = 2000;
};

struct EigenSolution {
  Field phi;
  double lambda = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

enum class EigenStart { Supersolution, Subsolution };

namespace detail {

inline void check_eigen(const EigenProblem& prob) {
  if (!prob.grid) throw Error(ErrorKind::Config, "eigen problem without grid");
  if (!(prob.p > 0.0 && prob.p < 1.0)) throw Error(ErrorKind::Config, "exponent p must lie in (0, 1)");
  if (prob.kappa < 0.0) throw Error(ErrorKind::Config, "kappa must be non-negative");
  if (!(prob.tol > 0.0)) throw Error(ErrorKind::Config, "tolerance must be positive");
}

inline double eigen_residual(const ScreenedPoissonSolver& solver, const std::vector<double>& phi, double p) {
  const auto& lv = solver.level();
  std::vector<double> Lphi(phi.size());
  apply_operator(lv, solver.sigma(), phi.data(), Lphi.data());
  double r = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (lv.active[i]) r = std::max(r, std::abs(Lphi[i] - std::pow(std::max(phi[i], 0.0), p)));
  }
  return r;
}

}  // namespace detail

/// Discrete L^q norm (sum h^n |f|^q)^{1/q}.
inline double lq_norm(const Field& f, double q) {
  double s = 0.0;
  for (double v : f.values) s += std::pow(std::abs(v), q);
  return std::pow(s * f.grid->cell_volume(), 1.0 / q);
}

/// Discrete Dirichlet energy: sum over lattice edges of ((f_j - f_i)/h)^2 h^n.
inline double dirichlet_energy(const Field& f) {
  const auto& g = *f.grid;
  const auto& lat = g.lattice();
  double s = 0.0;
  lat.for_each_node([&](std::size_t i, const MultiIndex& mi) {
    for (int a = 0; a < g.dim(); ++a) {
      std::size_t j = 0;
      if (lat.neighbor(mi, a, 1, j)) {
        const double d = (f[j] - f[i]) / g.h();
        s += d * d;
      }
    }
  });
  return s * g.cell_volume();
}

/// lambda = |grad phi~|^2 + kappa |phi~|^2 for phi~ = phi / |phi|_{p+1}.
inline double variational_lambda(const Field& phi, double p, double kappa) {
  const double nq = lq_norm(phi, p + 1.0);
  if (!(nq > 0.0)) throw Error(ErrorKind::Degenerate, "zero field has no variational constant");
  const double l2 = lq_norm(phi, 2.0);
  return (dirichlet_energy(phi) + kappa * l2 * l2) / (nq * nq);
}

/// phi = lambda^{-1/(1-p)} phi~ rebuilt from the normalized field.
inline Field renormalize(const Field& phi, double p, double kappa) {
  const double lambda = variational_lambda(phi, p, kappa);
  const double nq = lq_norm(phi, p + 1.0);
  const double c = std::pow(lambda, -1.0 / (1.0 - p));
  Field out = phi;
  for (double& v : out.values) v = c * v / nq;
  return out;
}

/// Monotone iteration from a given start. `direction` is -1 when iterates must
/// not increase, +1 when they must not decrease, 0 to skip the check.
/// Tolerances are relative to the current peak of phi (change, monotonicity)
/// and of phi^p (residual), so tiny solutions at large kappa are resolved.
inline EigenSolution solve_eigen_from(const EigenProblem& prob, const Field& start, int direction = 0) {
  detail::check_eigen(prob);
  const auto& g = *prob.grid;
  const ScreenedPoissonSolver solver = ScreenedPoissonSolver::on_fluid(g, prob.kappa);
  const auto& act = solver.level().active;
  std::vector<double> phi = start.values, next(g.size(), 0.0), rhs(g.size(), 0.0);
  double start_peak = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (!act[i]) phi[i] = 0.0;
    start_peak = std::max(start_peak, phi[i]);
  }
  if (!(start_peak > 0.0)) throw Error(ErrorKind::Degenerate, "start is the zero solution");
  EigenSolution sol;
  for (int it = 1; it <= prob.max_iter; ++it) {
    double rmax = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      rhs[i] = act[i] ? std::pow(std::max(phi[i], 0.0), prob.p) : 0.0;
      rmax = std::max(rmax, rhs[i]);
    }
    next = phi;
    solver.solve(next, rhs, {prob.tol / 10.0 * rmax, 1000, true});
    double change = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) peak = std::max(peak, next[i]);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const double d = next[i] - phi[i];
      if (direction != 0 && direction * d < -0.5 * prob.tol * peak) {
        throw Error(ErrorKind::Instability, "monotone iteration violated at iteration " + std::to_string(it) +
                                                " node " + std::to_string(i) + " by " + format_number(std::abs(d)));
      }
      change = std::max(change, std::abs(d));
    }
    phi.swap(next);
    if (!(peak > prob.tol * start_peak)) throw Error(ErrorKind::Degenerate, "iteration collapsed to the zero solution");
    sol.iterations = it;
    if (change <= prob.tol * peak) {
      sol.residual = detail::eigen_residual(solver, phi, prob.p);
      if (sol.residual <= prob.tol * std::pow(peak, prob.p)) {
        sol.phi = Field(prob.grid, std::move(phi));
        sol.lambda = variational_lambda(sol.phi, prob.p, prob.kappa);
        return sol;
      }
    }
  }
  throw IterationLimitError("eigen iteration did not converge", prob.max_iter,
                            detail::eigen_residual(solver, phi, prob.p));
}

/// Torsion-like function e solving (-Delta_h + kappa) e = 1 with zero data.
inline Field eigen_torsion(const EigenProblem& prob) {
  const auto& g = *prob.grid;
  const ScreenedPoissonSolver solver = ScreenedPoissonSolver::on_fluid(g, prob.kappa);
  std::vector<double> e(g.size(), 0.0), one(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) one[i] = g.is_fluid(i) ? 1.0 : 0.0;
  solver.solve(e, one, {prob.tol / 10.0, 1000, true});
  return Field(prob.grid, std::move(e));
}

/// Supersolution (M^p + 1) e with M = 1 + (2 max e)^{1/(1-p)}, or the
/// subsolution s e with s = min over fluid of e^{p/(1-p)} / 2.
inline Field eigen_start(const EigenProblem& prob, EigenStart kind) {
  Field e = eigen_torsion(prob);
  const auto& g = *prob.grid;
  double emax = 0.0, emin = INFINITY;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_fluid(i)) continue;
    emax = std::max(emax, e[i]);
    emin = std::min(emin, e[i]);
  }
  if (!(emax > 0.0)) throw Error(ErrorKind::Degenerate, "no fluid nodes");
  double c = 0.0;
  if (kind == EigenStart::Supersolution) {
    const double M = 1.0 + std::pow(2.0 * emax, 1.0 / (1.0 - prob.p));
    c = std::pow(M, prob.p) + 1.0;
  } else {
    c = 0.5 * std::pow(emin, prob.p / (1.0 - prob.p));
  }
  for (double& v : e.values) v *= c;
  return e;
}

inline EigenSolution solve_eigen(const EigenProblem& prob, EigenStart start = EigenStart::Supersolution) {
  detail::check_eigen(prob);
  const Field s = eigen_start(prob, start);
  return solve_eigen_from(prob, s, start == EigenStart::Supersolution ? -1 : 1);
}

/// Perforated problem: kappa must be 0.
inline EigenSolution solve_eigen_perforated(const EigenProblem& prob) {
  if (prob.kappa != 0.0) throw Error(ErrorKind::Config, "perforated eigen problem has no reaction term");
  return solve_eigen(prob);
}

/// Homogenized problem -Delta phi + kappa phi = phi^p on an unperforated grid.
inline EigenSolution solve_eigen_homogenized(const EigenProblem& prob) {
  if (prob.grid && prob.grid->count(NodeTag::Hole) != 0) {
    throw Error(ErrorKind::Config, "homogenized eigen problem expects an unperforated grid");
  }
  return solve_eigen(prob);
}

struct NondegeneracyReport {
  double c_low = 0.0;
  double C_high = 0.0;
  bool degenerate = false;
};

/// Extremes of |phi(x + eps nu)| / eps over box-face nodes x (nu the inward
/// normal). Only face nodes at least a quarter extent away from the other
/// faces are used, so corners (where phi is flat) do not count, and probes
/// landing in a hole are skipped.
inline NondegeneracyReport discrete_nondegeneracy_report(const Field& phi, double eps) {
  const auto& g = *phi.grid;
  const auto& lat = g.lattice();
  long K = 0;
  if (!detail::integer_ratio(eps, g.h(), K) || K < 1) throw Error(ErrorKind::Alignment, "eps is not a multiple of h");
  NondegeneracyReport rep;
  rep.c_low = INFINITY;
  bool any = false;
  lat.for_each_node([&](std::size_t, const MultiIndex& mi) {
    for (int a = 0; a < g.dim(); ++a) {
      const int last = lat.extent(a) - 1;
      if (mi[a] != 0 && mi[a] != last) continue;
      bool core = true;
      for (int b = 0; b < g.dim() && core; ++b) {
        if (b == a) continue;
        const int m = lat.extent(b) - 1;
        core = mi[b] >= m / 4.0 && mi[b] <= m - m / 4.0;
      }
      if (!core) continue;
      MultiIndex in = mi;
      in[a] = mi[a] == 0 ? static_cast<int>(std::min<long>(K, last)) : static_cast<int>(std::max<long>(0, last - K));
      // On an aligned lattice the probe can land on a hole center, where phi = 0 by construction.
      if (g.tag(lat.flatten(in)) == NodeTag::Hole) continue;
      const double q = std::abs(phi[lat.flatten(in)]) / eps;
      rep.c_low = std::min(rep.c_low, q);
      rep.C_high = std::max(rep.C_high, q);
      any = true;
    }
  });
  if (!any) rep.c_low = 0.0;
  rep.degenerate = !(rep.c_low > 0.0);
  return rep;
}

inline double average_over_fluid(const Field& w, const std::function<double(std::size_t)>& f) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w.grid->is_fluid(i)) continue;
    s += f(i);
    ++n;
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

/// |-b kappa - (k_b - b^p)| with k_b the fluid average of -b Delta_h w + (b (1 - w))^p,
/// the first term taken from the hole flux.
inline double correctibility_I_residual(double b, const RegimeSpec& spec, const CellSolution& cell, double p) {
  if (spec.regime != Regime::Critical) throw Error(ErrorKind::Regime, "correctibility needs the critical regime");
  if (b < 0.0) throw Error(ErrorKind::Config, "level b must be non-negative");
  if (b == 0.0) return 0.0;
  const double flux_term = b * cell.hole_flux / cell.fluid_volume;
  const double reaction = average_over_fluid(cell.w, [&](std::size_t i) {
    return std::pow(std::max(b * (1.0 - cell.w[i]), 0.0), p);
  });
  const double kb = flux_term + reaction;
  return std::abs(-b * spec.kappa - (kb - std::pow(b, p)));
}

}  // namespace hlab
