#pragma once

// Periodic cell correctors: Delta_h w = k on the fluid part of one period
// cell, w = 1 on the hole. Also ball capacities and regime classification.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hlab/grid.hpp"
#include "hlab/multigrid.hpp"
#include "hlab/parallel.hpp"
#include "hlab/radial.hpp"
#include "hlab/report.hpp"
#include "hlab/trend.hpp"

namespace hlab {

struct CellProblem {
  int n = 3;
  double eps = 0.5;
  double hole_radius = 0.1;
  double k = 0.0;
  double h = 0.05;
};

struct CellSolution {
  Field w;
  double min_w = 0.0;
  double hole_flux = 0.0;
  double residual = 0.0;
  int iterations = 0;
  double k = 0.0;
  double fluid_volume = 0.0;
};

/// Sum over HOLE/FLUID faces of (w_fluid - w_hole)/h times the face area h^{n-1}.
/// Negative when w decreases away from the hole.
inline double hole_flux(const Field& w) {
  const auto& g = *w.grid;
  const double scale = std::pow(g.h(), g.dim() - 2);
  double flux = 0.0;
  g.lattice().for_each_node([&](std::size_t i, const MultiIndex& mi) {
    if (!g.is_fluid(i)) return;
    for (int a = 0; a < g.dim(); ++a) {
      for (int dir : {-1, 1}) {
        std::size_t j = 0;
        if (g.lattice().neighbor(mi, a, dir, j) && g.tag(j) == NodeTag::Hole) flux += (w[i] - w[j]) * scale;
      }
    }
  });
  return flux;
}

inline double hole_flux(const CellSolution& sol) { return hole_flux(sol.w); }

/// Max-norm of Delta_h w - k over fluid nodes.
inline double cell_residual(const Field& w, double k) {
  const Field lap = laplacian(w);
  double r = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w.grid->is_fluid(i)) r = std::max(r, std::abs(lap[i] - k));
  }
  return r;
}

inline CellSolution solve_cell_corrector(const CellProblem& prob, double tol = 1e-8, int max_iter = 500,
                                         bool allow_unresolved = false) {
  if (prob.k < 0.0) throw Error(ErrorKind::Config, "corrector source k must be non-negative");
  if (!(tol > 0.0)) throw Error(ErrorKind::Config, "tolerance must be positive");
  auto g = build_periodic_cell(prob.n, prob.eps, prob.hole_radius, prob.h);
  if (g->unresolved_hole() && !allow_unresolved) {
    throw Error(ErrorKind::Geometry, "hole radius below grid spacing (unresolved hole)");
  }
  auto solver = ScreenedPoissonSolver::on_fluid(*g, 0.0);
  std::vector<double> x(g->size(), 1.0), b(g->size(), 0.0);
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (g->is_fluid(i)) b[i] = -prob.k;
  }
  CellSolution sol;
  const SolveStats st = solver.solve(x, b, {tol, max_iter, true});
  sol.w = Field(g, std::move(x));
  sol.iterations = st.iterations;
  sol.k = prob.k;
  sol.residual = cell_residual(sol.w, prob.k);
  sol.min_w = *std::min_element(sol.w.values.begin(), sol.w.values.end());
  sol.hole_flux = hole_flux(sol.w);
  sol.fluid_volume = static_cast<double>(g->count(NodeTag::Fluid)) * g->cell_volume();
  return sol;
}

enum class CapacityMethod { Analytic, Numeric };

/// Harmonic capacity of B_r in R^n, n >= 3: (n-2) |S^{n-1}| r^{n-2}.
/// NUMERIC solves the radial potential problem on (r, R) and (r, 2R) and
/// extrapolates flux(R) = cap + c R^{2-n}.
inline double harmonic_capacity(double r, int n, CapacityMethod method = CapacityMethod::Analytic,
                                double outer_ratio = 64.0) {
  if (n < 2) throw Error(ErrorKind::InvalidDimension, "capacity needs n >= 2");
  if (n == 2) throw Error(ErrorKind::UnsupportedDimension, "no ball capacity normalization in two dimensions");
  if (!(r > 0.0)) throw Error(ErrorKind::Config, "radius must be positive");
  if (method == CapacityMethod::Analytic) return (n - 2) * unit_sphere_area(n) * std::pow(r, n - 2);
  auto flux_at = [&](double R) {
    RadialProblem p;
    p.n = n;
    p.a = r;
    p.R = R;
    p.k = 0.0;
    p.inner_value = 1.0;
    p.outer_neumann = false;
    p.outer_value = 0.0;
    return -solve_radial(p).inner_flux;
  };
  const double R = outer_ratio * r;
  const double f1 = flux_at(R);
  const double f2 = flux_at(2.0 * R);
  const double q = std::pow(2.0, n - 2);
  return (q * f2 - f1) / (q - 1.0);
}

enum class Regime { Vanishing, Critical, Dominant };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Vanishing: return "VANISHING";
    case Regime::Critical: return "CRITICAL";
    case Regime::Dominant: return "DOMINANT";
  }
  return "?";
}

/// Hole radius a = c0 * eps^alpha.
struct RegimeSpec {
  int n = 3;
  double alpha = 3.0;
  double alpha_star = 3.0;
  double c0 = 1.0;
  double r0 = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  Regime regime = Regime::Critical;

  double hole_radius(double eps) const { return c0 * std::pow(eps, alpha); }
};

inline RegimeSpec classify_regime(int n, double alpha, double c0 = 1.0) {
  if (n < 3) throw Error(ErrorKind::InvalidDimension, "regime classification needs n >= 3");
  if (!(alpha > 0.0) || !(c0 > 0.0)) throw Error(ErrorKind::Config, "alpha and c0 must be positive");
  RegimeSpec s;
  s.n = n;
  s.alpha = alpha;
  s.c0 = c0;
  s.alpha_star = static_cast<double>(n) / (n - 2);
  if (std::abs(alpha - s.alpha_star) <= 1e-12 * s.alpha_star) {
    s.regime = Regime::Critical;
    s.r0 = c0;
    s.kappa = harmonic_capacity(1.0, n) * std::pow(c0, n - 2);
  } else {
    s.regime = alpha > s.alpha_star ? Regime::Vanishing : Regime::Dominant;
  }
  return s;
}

/// Grid spacing for a cell: the hole radius spans at least `cells_per_radius`
/// spacings and eps/h is a multiple of `multiple`.
struct HRule {
  double cells_per_radius = 4.0;
  int multiple = 8;

  double operator()(double eps, double a) const {
    long N = static_cast<long>(std::ceil(cells_per_radius * eps / a - 1e-9));
    N = ((N + multiple - 1) / multiple) * multiple;
    return eps / static_cast<double>(N);
  }
};

inline void check_eps_list(const std::vector<double>& eps_list) {
  if (eps_list.empty()) throw Error(ErrorKind::Config, "empty eps list");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i) {
    if (!(eps_list[i + 1] < eps_list[i])) throw Error(ErrorKind::Config, "eps list must be strictly decreasing");
  }
}

/// min_w per eps, with the trend verdict for the regime of (n, alpha).
inline StudyReport corrector_limit_study(int n, double alpha, double k, const std::vector<double>& eps_list,
                                         const HRule& h_rule = {}, double c0 = 1.0, double tol = 1e-8,
                                         const StudyOptions& opt = {}) {
  check_eps_list(eps_list);
  const RegimeSpec spec = classify_regime(n, alpha, c0);
  StudyReport rep;
  rep.kind = "corrector";
  rep.columns = {"eps", "alpha", "k", "min_w", "hole_flux", "residual", "wall_ms"};
  std::vector<std::vector<double>> rows(eps_list.size());
  std::vector<std::string> errors(eps_list.size());
  parallel_for(
      eps_list.size(),
      [&](std::size_t i) {
        const double eps = eps_list[i];
        const double a = spec.hole_radius(eps);
        rows[i] = {eps, alpha, k};
        try {
          Stopwatch sw;
          const double h = h_rule(eps, a);
          if (a < 4.0 * h * (1.0 - 1e-12)) throw Error(ErrorKind::Geometry, "h_rule leaves the hole under-resolved");
          const CellSolution sol = solve_cell_corrector({n, eps, a, k, h}, tol);
          rows[i].insert(rows[i].end(), {sol.min_w, sol.hole_flux, sol.residual,
                                         opt.record_wall_time ? sw.elapsed_ms() : 0.0});
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      },
      opt.threads ? std::min(opt.threads, thread_limit()) : thread_limit());
  for (std::size_t i = 0; i < rows.size(); ++i) rep.add_row(rows[i], errors[i]);

  const auto mins = rep.column("min_w");
  Verdict v;
  v.detail = std::string(to_string(spec.regime)) + " min_w: " + join_numbers(mins);
  switch (spec.regime) {
    case Regime::Vanishing:
      v.name = "min_w decreasing below -1";
      v.pass = decreasing(mins) && mins.back() < -1.0;
      break;
    case Regime::Dominant:
      v.name = "min_w increasing toward 1";
      v.pass = increasing(mins) && mins.back() > 0.5 && mins.back() <= 1.0;
      break;
    case Regime::Critical: {
      const double rel = (k - spec.kappa) / spec.kappa;
      if (std::abs(rel) <= 1e-9) {
        v.name = "|min_w| decreasing toward 0";
        v.pass = decreasing(abs_values(mins));
      } else if (rel > 0) {
        v.name = "min_w decreasing (k above capacity)";
        v.pass = decreasing(mins) && mins.back() < 0.0;
      } else {
        v.name = "min_w increasing (k below capacity)";
        v.pass = increasing(mins);
      }
      break;
    }
  }
  v.pass = v.pass && rep.rows_ok();
  rep.verdicts.push_back(v);
  return rep;
}

}  // namespace hlab
