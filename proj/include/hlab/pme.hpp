#pragma once

// Porous medium equation u_t = Delta u^m on perforated grids (u-form), the
// pressure form v_t = v^{1-1/m} (Delta v - kappa v_+) and its penalized
// variant, the periodic cutoff xi, the separated barrier
// V = alpha phi / (lambda + t)^{m/(m-1)} and correctibility II.
//
// Time scales: if u solves u_t = Delta u^m then v(x, s) = u(x, s/m)^m solves
// v_s = v^{1-1/m} Delta v. pressure_transform applies this rescale.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hlab/correctors.hpp"
#include "hlab/eigen.hpp"
#include "hlab/heat_obstacle.hpp"
#include "hlab/multigrid.hpp"

namespace hlab {

struct PMEProblem {
  Field g;  // initial density, zero on holes and on the box boundary
  double m = 2.0;
  ParabolicRunConfig rc;
};

struct PmeRun {
  TimeField traj;
  double clamp_max = 0.0;  // largest negative value removed by clamping
};

namespace detail {

inline void check_exponent(double m) {
  if (!(m > 1.0)) throw Error(ErrorKind::Config, "PME exponent m must exceed 1");
}

// Explicit loop with snapshots. step(cur, next, k) fills next from cur.
template <class Step>
TimeField run_steps(const Field& x0, const ParabolicRunConfig& rc, const StepPlan& plan, std::vector<double> cur,
                    Step&& step) {
  TimeField out;
  out.step_dt = plan.dt;
  out.steps = plan.steps;
  out.dt = plan.dt * rc.snapshot_every;
  out.snapshots.emplace_back(x0.grid, cur);
  std::vector<double> next = cur;
  for (std::size_t k = 0; k < plan.steps; ++k) {
    step(cur, next, k);
    cur.swap(next);
    if ((k + 1) % static_cast<std::size_t>(rc.snapshot_every) == 0) out.snapshots.emplace_back(x0.grid, cur);
  }
  return out;
}

inline double positive_max(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

// Zeroes Dirichlet entries after checking they are (numerically) zero.
inline std::vector<double> prepare_density(const Field& g0, const std::vector<std::uint8_t>& active, double tol,
                                           const char* what) {
  std::vector<double> u = g0.values;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < -tol) throw Error(ErrorKind::Config, std::string(what) + " must be non-negative");
    if (!active[i]) {
      if (std::abs(u[i]) > 1e-12) throw Error(ErrorKind::Config, std::string(what) + " must vanish on holes and on the box boundary");
      u[i] = 0.0;
    }
    u[i] = std::max(u[i], 0.0);
  }
  return u;
}

inline std::vector<std::uint8_t> fluid_mask(const PerforatedGrid& g) {
  std::vector<std::uint8_t> a(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) a[i] = g.is_fluid(i) ? 1 : 0;
  return a;
}

// Clamps negatives; throws beyond -tol.
inline void clamp_nonnegative(std::vector<double>& v, double tol, std::size_t step, double& clamp_max) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] >= 0.0) continue;
    if (v[i] < -tol) {
      throw Error(ErrorKind::PositivityLoss, "value " + format_number(v[i]) + " at node " + std::to_string(i) +
                                                 " after step " + std::to_string(step + 1));
    }
    clamp_max = std::max(clamp_max, -v[i]);
    v[i] = 0.0;
  }
}

}  // namespace detail

/// Explicit march u^{k+1} = u^k + dt Delta_h((u^k)^m) with u = 0 on holes and on
/// the box boundary. The step bound h^2 / (2 n m max(u)^{m-1}) is re-checked
/// every step against the current maximum.
inline PmeRun solve_pme_perforated(const PMEProblem& prob) {
  detail::check_exponent(prob.m);
  const auto& g = *prob.g.grid;
  const auto& rc = prob.rc;
  const double m = prob.m;
  const StencilLevel lv{g.lattice(), g.h(), detail::fluid_mask(g)};
  std::vector<double> u = detail::prepare_density(prob.g, lv.active, rc.tol, "PME initial data");
  const double h2 = g.h() * g.h();
  auto limit_for = [&](double umax) {
    return umax > 0.0 ? h2 / (2.0 * g.dim() * m * std::pow(umax, m - 1.0)) : h2 / (2.0 * g.dim());
  };
  const auto plan = detail::plan_steps(rc, limit_for(detail::positive_max(u)));
  PmeRun run;
  std::vector<double> w(u.size(), 0.0);
  const double diag = 2.0 * g.dim();
  run.traj = detail::run_steps(prob.g, rc, plan, std::move(u),
                               [&](const std::vector<double>& cur, std::vector<double>& next, std::size_t k) {
                                 const double umax = detail::positive_max(cur);
                                 if (plan.dt > rc.cfl_safety * limit_for(umax) * (1.0 + 1e-12)) {
                                   throw Error(ErrorKind::Instability, "step size exceeds the PME bound at step " +
                                                                           std::to_string(k + 1));
                                 }
                                 for (std::size_t i = 0; i < cur.size(); ++i) w[i] = std::pow(cur[i], m);
                                 next = cur;
                                 for_each_active_node(lv, w.data(), [&](std::size_t i, double s) {
                                   next[i] = cur[i] + plan.dt * (s - diag * w[i]) / h2;
                                 });
                                 detail::clamp_nonnegative(next, rc.tol, k, run.clamp_max);
                               });
  return run;
}

/// Pointwise v = u^m with snapshot spacing m dt (pressure time s = m t).
inline TimeField pressure_transform(const TimeField& u, double m) {
  detail::check_exponent(m);
  TimeField v;
  v.dt = m * u.dt;
  v.step_dt = m * u.step_dt;
  v.steps = u.steps;
  for (const auto& s : u.snapshots) {
    Field f(s.grid);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] < 0.0) throw Error(ErrorKind::Domain, "pressure transform of a negative density");
      f[i] = std::pow(s[i], m);
    }
    v.snapshots.push_back(std::move(f));
  }
  return v;
}

/// Optional penalized mode: boundary and hole value delta, reaction
/// beta_delta(M xi + delta - v) capping v near M xi.
struct PressurePenalty {
  bool enabled = false;
  PenaltyConfig penalty{1e-3};
  double M = 0.0;  // 0 picks max v0
  Field xi;
};

struct PressureOptions {
  double kappa = 0.0;
  PressurePenalty penalized;
};

/// Explicit march v^{k+1} = v^k + dt (v^k)_+^{1-1/m} (Delta_h v^k - kappa v^k_+ [+ beta term]).
inline PmeRun solve_pme_pressure(const Field& v0, double m, const ParabolicRunConfig& rc,
                                 const PressureOptions& opt = {}) {
  detail::check_exponent(m);
  if (opt.kappa < 0.0) throw Error(ErrorKind::Config, "kappa must be non-negative");
  const auto& g = *v0.grid;
  const StencilLevel lv{g.lattice(), g.h(), detail::fluid_mask(g)};
  const auto& pen = opt.penalized;
  std::vector<double> v;
  double M = 0.0, slope = 0.0;
  if (pen.enabled) {
    if (!(pen.penalty.delta > 0.0)) throw Error(ErrorKind::Config, "penalty width must be positive");
    if (!pen.xi.grid || pen.xi.size() != g.size()) throw Error(ErrorKind::Config, "penalized mode needs xi on the same grid");
    v = v0.values;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] < -rc.tol) throw Error(ErrorKind::Config, "pressure initial data must be non-negative");
      if (!lv.active[i]) v[i] = pen.penalty.delta;
    }
    M = pen.M > 0.0 ? pen.M : detail::positive_max(v0.values);
    slope = beta_delta_slope(pen.penalty);
  } else {
    v = detail::prepare_density(v0, lv.active, rc.tol, "pressure initial data");
  }
  const double h2 = g.h() * g.h();
  const double q = 1.0 - 1.0 / m;
  auto limit_for = [&](double vmax) {
    const double rate = 2.0 * g.dim() / h2 + opt.kappa + slope;
    return vmax > 0.0 ? 1.0 / (std::pow(vmax, q) * rate) : h2 / (2.0 * g.dim());
  };
  const auto plan = detail::plan_steps(rc, limit_for(detail::positive_max(v)));
  PmeRun run;
  const double diag = 2.0 * g.dim();
  run.traj = detail::run_steps(v0, rc, plan, std::move(v),
                               [&](const std::vector<double>& cur, std::vector<double>& next, std::size_t k) {
                                 if (plan.dt > rc.cfl_safety * limit_for(detail::positive_max(cur)) * (1.0 + 1e-12)) {
                                   throw Error(ErrorKind::Instability, "step size exceeds the pressure-form bound at step " +
                                                                           std::to_string(k + 1));
                                 }
                                 next = cur;
                                 for_each_active_node(lv, cur.data(), [&](std::size_t i, double s) {
                                   const double vp = std::max(cur[i], 0.0);
                                   double rhs = (s - diag * cur[i]) / h2 - opt.kappa * vp;
                                   if (pen.enabled) rhs += beta_delta(M * pen.xi[i] + pen.penalty.delta - cur[i], pen.penalty);
                                   next[i] = cur[i] + plan.dt * std::pow(vp, q) * rhs;
                                 });
                                 detail::clamp_nonnegative(next, rc.tol, k, run.clamp_max);
                               });
  return run;
}

/// Homogenized pressure equation on an unperforated grid, v0 = g^m.
inline PmeRun solve_pme_homogenized(const Field& g0, double m, double kappa, const ParabolicRunConfig& rc) {
  detail::check_exponent(m);
  if (g0.grid->count(NodeTag::Hole) != 0) throw Error(ErrorKind::Config, "homogenized PME expects an unperforated grid");
  Field v0(g0.grid);
  for (std::size_t i = 0; i < g0.size(); ++i) {
    if (g0[i] < -rc.tol) throw Error(ErrorKind::Config, "PME initial data must be non-negative");
    v0[i] = std::pow(std::max(g0[i], 0.0), m);
  }
  return solve_pme_pressure(v0, m, rc, {kappa, {}});
}

struct BarrierIdentity {
  double alpha = 0.0;
  double power = 0.0;           // m / (m - 1)
  double alpha_relation = 0.0;  // alpha^{1-1/m} - m/(m-1)
  double power_relation = 0.0;  // power (1 - 1/m) - 1
};

inline BarrierIdentity barrier_identity(double m) {
  detail::check_exponent(m);
  BarrierIdentity b;
  b.power = m / (m - 1.0);
  b.alpha = std::pow(b.power, b.power);
  b.alpha_relation = std::pow(b.alpha, 1.0 - 1.0 / m) - b.power;
  b.power_relation = b.power * (1.0 - 1.0 / m) - 1.0;
  return b;
}

/// V = alpha phi / (lambda + t)^{m/(m-1)}, alpha = (m/(m-1))^{m/(m-1)}.
inline Field self_similar_barrier(const Field& phi, double m, double lambda, double t) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::Config, "barrier lambda must be positive");
  const auto b = barrier_identity(m);
  const double c = b.alpha / std::pow(lambda + t, b.power);
  Field out(phi.grid);
  for (std::size_t i = 0; i < phi.size(); ++i) out[i] = c * phi[i];
  return out;
}

/// max over fluid nodes at least `margin` inside the box and the steps
/// t0, t0 + dt, ..., t1 - dt of |V^{1-1/m} Delta_h V - (V(t + dt) - V(t)) / dt|.
/// Near the box boundary phi vanishes linearly and the truncation error of
/// Delta_h phi^{1/m} degrades to first order in h; the margin excludes that layer.
inline double barrier_residual(const Field& phi, double m, double lambda, double t0, double t1, double dt,
                               double margin = 0.0) {
  if (!(dt > 0.0) || !(t1 > t0)) throw Error(ErrorKind::Config, "barrier residual needs t1 > t0 and dt > 0");
  const auto& g = *phi.grid;
  const double q = 1.0 - 1.0 / m;
  const auto steps = static_cast<std::size_t>(std::llround((t1 - t0) / dt));
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_fluid(i)) continue;
    const Point x = g.position(i);
    bool inside = true;
    for (int a = 0; a < g.dim(); ++a) inside = inside && x[a] - g.box().lo[a] >= margin && g.box().hi[a] - x[a] >= margin;
    if (inside) nodes.push_back(i);
  }
  if (nodes.empty()) throw Error(ErrorKind::EmptySet, "no fluid node inside the residual window");
  double worst = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = t0 + dt * static_cast<double>(k);
    const Field V = self_similar_barrier(phi, m, lambda, t);
    const Field V1 = self_similar_barrier(phi, m, lambda, t + dt);
    const Field lap = laplacian(V);
    for (std::size_t i : nodes) {
      const double r = std::pow(std::max(V[i], 0.0), q) * lap[i] - (V1[i] - V[i]) / dt;
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

struct SandwichReport {
  double lambda1 = 0.0;  // +inf when the lower barrier is trivial
  double lambda2 = 0.0;
  bool pass = false;
  double lower_violation = 0.0;  // max of V_{lambda1} - v
  double upper_violation = 0.0;  // max of v - V_{lambda2}
};

/// Calibrates lambda1 >= lambda2 on the t = 0 snapshot of the pressure
/// trajectory v (pressure time) and checks V_{lambda1} <= v <= V_{lambda2} + tol
/// at every snapshot.
inline SandwichReport barrier_sandwich_check(const TimeField& v, const Field& phi, double m, double tol = 1e-8) {
  if (v.snapshots.empty()) throw Error(ErrorKind::Config, "empty trajectory");
  const auto b = barrier_identity(m);
  const Field& v0 = v.snapshots.front();
  const double e = 1.0 / b.power;
  SandwichReport rep;
  rep.lambda1 = 0.0;
  rep.lambda2 = INFINITY;
  bool any = false, trivial_lower = false;
  for (std::size_t i = 0; i < v0.size(); ++i) {
    if (v0[i] > tol) {
      if (!(phi[i] > 0.0)) {
        // v positive where phi vanishes: no finite upper barrier.
        rep.lambda2 = 0.0;
        any = true;
        continue;
      }
      const double lam = std::pow(b.alpha * phi[i] / v0[i], e);
      rep.lambda1 = std::max(rep.lambda1, lam);
      rep.lambda2 = std::min(rep.lambda2, lam);
      any = true;
    } else if (phi[i] > tol) {
      trivial_lower = true;
    }
  }
  if (!any) throw Error(ErrorKind::Degenerate, "no node with positive pressure to calibrate the barriers");
  if (trivial_lower) rep.lambda1 = INFINITY;
  if (!(rep.lambda2 > 0.0)) {
    rep.pass = false;
    rep.upper_violation = INFINITY;
    return rep;
  }
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double t = v.time(k);
    const double up = b.alpha / std::pow(rep.lambda2 + t, b.power);
    const double lo = std::isinf(rep.lambda1) ? 0.0 : b.alpha / std::pow(rep.lambda1 + t, b.power);
    const Field& s = v.snapshots[k];
    for (std::size_t i = 0; i < s.size(); ++i) {
      rep.upper_violation = std::max(rep.upper_violation, s[i] - up * phi[i]);
      rep.lower_violation = std::max(rep.lower_violation, lo * phi[i] - s[i]);
    }
  }
  rep.pass = rep.upper_violation <= tol && rep.lower_violation <= tol;
  return rep;
}

struct MonotonicityReport {
  bool pass = true;
  std::size_t snapshot = 0;  // first violating snapshot (k + 1)
  std::size_t node = 0;
  double excess = 0.0;  // largest v^{k+1} - v^k
};

/// Checks v^{k+1} <= v^k + tol for all snapshots. Requires Delta_h v^0 <= 0 at
/// fluid nodes (up to roundoff); otherwise throws PreconditionError listing them.
inline MonotonicityReport monotonicity_check(const TimeField& v, double tol = 1e-12) {
  if (v.snapshots.empty()) throw Error(ErrorKind::Config, "empty trajectory");
  const Field& v0 = v.snapshots.front();
  const auto& g = *v0.grid;
  const Field lap = laplacian(v0);
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + max_abs(v0.values)) / (g.h() * g.h());
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_fluid(i) && lap[i] > slack) bad.push_back(i);
  }
  if (!bad.empty()) {
    throw PreconditionError("initial data is not discretely superharmonic at " + std::to_string(bad.size()) + " nodes",
                            std::move(bad));
  }
  MonotonicityReport rep;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const auto& a = v.snapshots[k];
    const auto& b = v.snapshots[k + 1];
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = b[i] - a[i];
      if (d > rep.excess) rep.excess = d;
      if (d > tol && rep.pass) {
        rep.pass = false;
        rep.snapshot = k + 1;
        rep.node = i;
      }
    }
  }
  return rep;
}

/// Periodic cutoff: 0 within the hole radius, 1 beyond eps^{(n-1)/(n-2)} from
/// every lattice point, discrete harmonic in between (solved on one cell and
/// tiled).
struct CutoffField {
  Field xi;
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  double residual = 0.0;
};

inline double cutoff_outer_radius(double eps, int n) {
  if (n < 3) throw Error(ErrorKind::UnsupportedDimension, "cutoff needs n >= 3");
  return std::pow(eps, (n - 1.0) / (n - 2.0));
}

inline CutoffField build_cutoff_xi(const GridPtr& grid, double tol = 1e-10) {
  const auto& g = *grid;
  if (!g.perforated()) throw Error(ErrorKind::Geometry, "cutoff needs a perforated grid");
  const int n = g.dim();
  const double Ro = cutoff_outer_radius(g.eps(), n);
  if (Ro < 4.0 * g.h()) throw Error(ErrorKind::Geometry, "outer cutoff radius is resolved by fewer than 4 cells");
  if (g.unresolved_hole()) throw Error(ErrorKind::Geometry, "hole radius below the grid spacing");
  if (Ro <= g.hole_radius()) throw Error(ErrorKind::Geometry, "outer cutoff radius inside the hole");
  auto cell = build_periodic_cell(n, g.eps(), g.hole_radius(), g.h());
  const auto& lat = cell->lattice();
  StencilLevel lv{lat, g.h(), std::vector<std::uint8_t>(cell->size(), 0)};
  std::vector<double> x(cell->size(), 0.0), rhs(cell->size(), 0.0);
  lat.for_each_node([&](std::size_t i, const MultiIndex& mi) {
    if (!cell->is_fluid(i)) return;
    if (cell->distance_to_lattice(mi) >= Ro) {
      x[i] = 1.0;
    } else {
      lv.active[i] = 1;
      x[i] = 0.5;
    }
  });
  const ScreenedPoissonSolver solver(lv, 0.0);
  const auto st = solver.solve(x, rhs, {tol, 1000, true});
  CutoffField out{Field(grid), g.hole_radius(), Ro, st.residual};
  const long K = g.cell_nodes();
  g.lattice().for_each_node([&](std::size_t i, const MultiIndex& mi) {
    MultiIndex c{}, o{};
    g.nearest_lattice_point(mi, c, o);
    MultiIndex ci{};
    for (int a = 0; a < n; ++a) ci[a] = static_cast<int>(((o[a] + K / 2) % K + K) % K);
    out.xi[i] = g.tag(i) == NodeTag::Hole ? 0.0 : x[lat.flatten(ci)];
  });
  return out;
}

/// |-d^{1+p} kappa - avg| with avg the fluid average of
/// ((1-w)^p - 1) d^p c - d^{1+p} (1-w)^p Delta_h w.
inline double correctibility_II_residual(double c, double d, double p, const RegimeSpec& spec,
                                         const CellSolution& cell) {
  if (spec.regime != Regime::Critical) throw Error(ErrorKind::Regime, "correctibility needs the critical regime");
  if (d < 0.0) throw Error(ErrorKind::Config, "level d must be non-negative");
  if (d == 0.0) return 0.0;
  const Field lap = laplacian(cell.w);
  const double dp = std::pow(d, p), dp1 = std::pow(d, 1.0 + p);
  const double avg = average_over_fluid(cell.w, [&](std::size_t i) {
    const double s = std::pow(std::max(1.0 - cell.w[i], 0.0), p);
    return (s - 1.0) * dp * c - dp1 * s * lap[i];
  });
  return std::abs(-dp1 * spec.kappa - avg);
}

}  // namespace hlab
