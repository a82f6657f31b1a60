#pragma once

// Convergence studies across eps: grid -> eps-problem -> limit problem ->
// diagnostics, one report row per eps.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hlab/config.hpp"
#include "hlab/correctors.hpp"
#include "hlab/diagnostics.hpp"
#include "hlab/eigen.hpp"
#include "hlab/heat_obstacle.hpp"
#include "hlab/multigrid.hpp"
#include "hlab/parallel.hpp"
#include "hlab/pme.hpp"
#include "hlab/report.hpp"
#include "hlab/trend.hpp"

#ifndef HLAB_VERSION
#define HLAB_VERSION "dev"
#endif

namespace hlab {

inline const std::vector<std::string>& heat_columns() {
  static const std::vector<std::string> c{"eps", "delta", "h", "dt", "max_dq", "max_dt_norm",
                                          "min_gap", "osc_layer", "err_Ddelta", "wall_ms"};
  return c;
}

inline const std::vector<std::string>& eigen_columns() {
  static const std::vector<std::string> c{"eps",      "p",         "lambda",          "min_phi", "c_low",
                                          "C_high",   "flatness",  "corr_I_residual", "iters",   "wall_ms"};
  return c;
}

inline std::vector<std::string> pme_columns() {
  auto c = heat_columns();
  c.insert(c.end(), {"m", "lambda1", "lambda2", "sandwich_pass", "mono_pass", "clamp_max", "h_grad"});
  return c;
}

/// Inner radius of the error set: sqrt(eps a / 2).
inline double layer_radius(double eps, double a) { return std::sqrt(0.5 * eps * a); }

namespace detail {

inline ErrorKind kind_from_message(const std::string& msg) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::IO); ++k) {
    const std::string prefix = std::string(to_string(static_cast<ErrorKind>(k))) + ":";
    if (msg.rfind(prefix, 0) == 0) return static_cast<ErrorKind>(k);
  }
  return ErrorKind::Instability;
}

inline std::string row_error(const std::exception& e) { return e.what(); }

// Per-cell oscillation outside the layer: band [layer, eps/2].
inline double oscillation_or_nan(const Field& f, double layer, double eps) {
  try {
    return layer_oscillation(f, layer, 0.5 * eps);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::EmptySet) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline GridPtr study_grid(const StudyConfig& c, double eps, double a) {
  const double h = c.spacing(eps, a);
  auto g = build_perforated_grid(c.n, Box::unit(c.n), eps, a, h);
  if (g->unresolved_hole()) throw Error(ErrorKind::Geometry, "hole radius below the grid spacing at eps " + format_number(eps));
  return g;
}

inline double finest_spacing(const StudyConfig& c, const RegimeSpec& spec) {
  double h = INFINITY;
  for (double e : c.eps_list) h = std::min(h, c.spacing(e, spec.hole_radius(e)));
  return h;
}

inline ParabolicRunConfig run_config(const StudyConfig& c) {
  ParabolicRunConfig rc;
  rc.T = c.T;
  rc.dt = c.dt;
  rc.cfl_safety = c.cfl_safety;
  rc.snapshot_every = c.snapshot_every;
  rc.tol = c.tol;
  rc.obstacle_static = true;
  return rc;
}

inline Field torsion_on_fluid(const GridPtr& g, double sigma, double tol) {
  const auto solver = ScreenedPoissonSolver::on_fluid(*g, sigma);
  std::vector<double> x(g->size(), 0.0), one(g->size(), 0.0);
  for (std::size_t i = 0; i < g->size(); ++i) one[i] = g->is_fluid(i) ? 1.0 : 0.0;
  solver.solve(x, one, {tol, 1000, true});
  return Field(g, std::move(x));
}

inline double wall(const StudyConfig& c, const Stopwatch& sw) { return c.record_wall_time ? sw.elapsed_ms() : 0.0; }

// Runs rows concurrently; failures are recorded per row.
template <class Row>
void fill_rows(StudyReport& rep, const StudyConfig& c, Row&& row) {
  const std::size_t count = c.eps_list.size();
  std::vector<std::vector<double>> rows(count);
  std::vector<std::string> errors(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        rows[i] = {c.eps_list[i]};
        try {
          rows[i] = row(c.eps_list[i]);
        } catch (const std::exception& e) {
          errors[i] = row_error(e);
        }
      },
      c.threads ? std::min(c.threads, thread_limit()) : thread_limit());
  for (std::size_t i = 0; i < count; ++i) rep.add_row(rows[i], errors[i]);
}

inline Verdict trend_verdict(const StudyReport& rep, const std::string& col, const std::string& name, bool pass) {
  return {name, pass && rep.rows_ok(), col + ": " + join_numbers(rep.column(col))};
}

inline double column_max(const StudyReport& rep, const std::string& col) {
  double m = -INFINITY;
  for (double v : rep.column(col)) {
    if (std::isfinite(v)) m = std::max(m, v);
  }
  return m;
}

}  // namespace detail

/// phi = A prod sin(pi x_a); vanishes on the unit box boundary.
inline SpaceTimeFn sine_obstacle(int n, double amplitude) {
  return [n, amplitude](const Point& x, double) {
    double v = amplitude;
    for (int a = 0; a < n; ++a) v *= std::sin(std::numbers::pi * x[a]);
    return v;
  };
}

inline StudyReport corrector_study(const StudyConfig& c) {
  const double k = c.k ? *c.k : harmonic_capacity(c.c0, c.n);
  StudyOptions opt;
  opt.record_wall_time = c.record_wall_time;
  opt.threads = c.threads;
  return corrector_limit_study(c.n, c.alpha, k, c.eps_list, {c.cells_per_radius, c.h_multiple}, c.c0, c.tol, opt);
}

/// Heat equation with an obstacle on the holes against the regime's limit
/// problem on an unperforated grid as fine as the finest perforated one.
inline StudyReport heat_obstacle_study(const StudyConfig& c) {
  const RegimeSpec spec = classify_regime(c.n, c.alpha, c.c0);
  const SpaceTimeFn phi = sine_obstacle(c.n, c.amplitude);
  const ParabolicRunConfig rc = detail::run_config(c);
  const auto initial = [&](const GridPtr& g) {
    return c.initial == "zero" ? Field(g) : sample_field([&](const Point& x) { return phi(x, 0.0); }, g);
  };
  StudyReport rep;
  rep.kind = "heat_obstacle";
  rep.columns = heat_columns();
  const auto box = build_box_grid(c.n, Box::unit(c.n), detail::finest_spacing(c, spec));
  const TimeField limit = regime_limit_solver(spec, initial(box), phi, rc);
  detail::fill_rows(rep, c, [&](double eps) {
    Stopwatch sw;
    const double a = spec.hole_radius(eps);
    const auto g = detail::study_grid(c, eps, a);
    const TimeField u = c.solver == "penalized"
                            ? solve_obstacle_heat_penalized(initial(g), phi, PenaltyConfig{c.delta}, rc)
                            : solve_obstacle_heat_projected(initial(g), phi, rc);
    const double layer = layer_radius(eps, a);
    double min_gap = INFINITY;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double t = u.time(k);
      for (std::size_t i = 0; i < g->size(); ++i) {
        if (g->tag(i) != NodeTag::OuterBoundary) min_gap = std::min(min_gap, u.snapshots[k][i] - phi(g->position(i), t));
      }
    }
    return std::vector<double>{eps,
                               layer,
                               g->h(),
                               u.step_dt,
                               difference_quotient_norm(u, eps),
                               time_derivative_norm(u),
                               min_gap,
                               detail::oscillation_or_nan(u.back(), layer, eps),
                               error_outside_layer(u, limit, layer).error,
                               detail::wall(c, sw)};
  });
  rep.verdicts.push_back(detail::trend_verdict(rep, "err_Ddelta", std::string("error decreasing vs ") +
                                                                      to_string(spec.regime) + " limit",
                                               decreasing(rep.column("err_Ddelta"))));
  rep.verdicts.push_back(detail::trend_verdict(rep, "max_dq", "difference quotients bounded",
                                               bounded_ratio(rep.column("max_dq"), 2.0)));
  rep.verdicts.push_back(detail::trend_verdict(rep, "max_dt_norm", "time derivatives bounded",
                                               bounded_ratio(rep.column("max_dt_norm"), 2.0)));
  rep.add_constant("dq_bound", detail::column_max(rep, "max_dq"));
  rep.add_constant("dt_bound", detail::column_max(rep, "max_dt_norm"));
  if (spec.regime == Regime::Dominant) {
    // min(u - phi) >= -C eps^beta / a^{beta-2}, beta = n + 1.
    const double beta = c.n + 1.0;
    double C = 0.0;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const double eps = rep.rows[i][0];
      const double gap = rep.rows[i][rep.column_index("min_gap")];
      if (std::isfinite(gap)) C = std::max(C, -gap * std::pow(spec.hole_radius(eps), beta - 2.0) / std::pow(eps, beta));
    }
    rep.add_constant("lower_barrier_C", C);
  }
  return rep;
}

/// Perforated sublinear eigenproblem per eps with boundary nondegeneracy,
/// flatness near holes and the first correctibility residual.
inline StudyReport eigen_study(const StudyConfig& c) {
  const RegimeSpec spec = classify_regime(c.n, c.alpha, c.c0);
  StudyReport rep;
  rep.kind = "eigen";
  rep.columns = eigen_columns();
  detail::fill_rows(rep, c, [&](double eps) {
    Stopwatch sw;
    const double a = spec.hole_radius(eps);
    const auto g = detail::study_grid(c, eps, a);
    const auto sol = solve_eigen_perforated({g, c.p, 0.0, c.tol});
    double min_phi = INFINITY;
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (g->is_fluid(i)) min_phi = std::min(min_phi, sol.phi[i]);
    }
    const auto nd = discrete_nondegeneracy_report(sol.phi, eps);
    double corr = std::numeric_limits<double>::quiet_NaN();
    if (spec.regime == Regime::Critical) {
      const double hc = HRule{}(eps, a);
      corr = correctibility_I_residual(1.0, spec, solve_cell_corrector({c.n, eps, a, spec.kappa, hc}, 1e-10), c.p);
    }
    return std::vector<double>{eps,      c.p,   sol.lambda,
                               min_phi,  nd.c_low, nd.C_high,
                               detail::oscillation_or_nan(sol.phi, layer_radius(eps, a), eps),
                               corr,     static_cast<double>(sol.iterations), detail::wall(c, sw)};
  });
  const auto mins = rep.column("min_phi");
  bool positive = true;
  for (double v : mins) positive = positive && v > 0.0;
  rep.verdicts.push_back(detail::trend_verdict(rep, "min_phi", "phi positive on the fluid", positive));
  const auto lows = rep.column("c_low");
  bool nondeg = true;
  for (std::size_t i = 0; i + 1 < lows.size(); ++i) {
    const double r = lows[i + 1] / lows[i];
    nondeg = nondeg && r >= 0.5 && r <= 2.0;
  }
  rep.verdicts.push_back(detail::trend_verdict(rep, "c_low", "boundary slope nondegenerate", nondeg));
  rep.verdicts.push_back(
      detail::trend_verdict(rep, "flatness", "oscillation near holes decreasing", decreasing(rep.column("flatness"))));
  if (spec.regime == Regime::Critical) {
    rep.verdicts.push_back(detail::trend_verdict(rep, "corr_I_residual", "correctibility residual decreasing",
                                                 decreasing(rep.column("corr_I_residual"))));
  }
  double c_low_min = INFINITY;
  for (double v : lows) {
    if (std::isfinite(v)) c_low_min = std::min(c_low_min, v);
  }
  rep.add_constant("c_low_min", c_low_min);
  rep.add_constant("C_high_max", detail::column_max(rep, "C_high"));
  return rep;
}

/// Pressure-form PME on perforated grids from the torsion function (discretely
/// superharmonic), against the homogenized pressure equation.
inline StudyReport pme_study(const StudyConfig& c) {
  const RegimeSpec spec = classify_regime(c.n, c.alpha, c.c0);
  const double m = c.m, q = 1.0 - 1.0 / m;
  const double kappa = spec.regime == Regime::Critical ? spec.kappa : 0.0;
  const double hmin = detail::finest_spacing(c, spec);

  const auto box = build_box_grid(c.n, Box::unit(c.n), hmin);
  Field lim0 = spec.regime == Regime::Dominant ? Field(box) : detail::torsion_on_fluid(box, kappa, 1e-12);

  // One step size for every run so the snapshot times coincide.
  ParabolicRunConfig rc = detail::run_config(c);
  if (rc.dt <= 0.0) {
    const double vmax = std::max(max_abs(lim0.values), max_abs(detail::torsion_on_fluid(box, 0.0, 1e-12).values));
    rc.dt = c.cfl_safety / (std::pow(vmax, q) * (2.0 * c.n / (hmin * hmin) + kappa));
  }
  for (double& v : lim0.values) v = std::pow(std::max(v, 0.0), 1.0 / m);
  const TimeField limit = solve_pme_homogenized(lim0, m, kappa, rc).traj;

  StudyReport rep;
  rep.kind = "pme";
  rep.columns = pme_columns();
  detail::fill_rows(rep, c, [&](double eps) {
    Stopwatch sw;
    const double a = spec.hole_radius(eps);
    const auto g = detail::study_grid(c, eps, a);
    const Field v0 = detail::torsion_on_fluid(g, 0.0, 1e-12);
    const PmeRun run = solve_pme_pressure(v0, m, rc);
    const auto& v = run.traj;
    const auto mono = monotonicity_check(v);
    const auto eig = solve_eigen_perforated({g, 1.0 / m, 0.0, c.tol});
    const auto sw_rep = barrier_sandwich_check(v, eig.phi, m);
    double min_v = INFINITY;
    for (const auto& s : v.snapshots) {
      for (double x : s.values) min_v = std::min(min_v, x);
    }
    const double layer = layer_radius(eps, a);
    return std::vector<double>{eps,
                               layer,
                               g->h(),
                               v.step_dt,
                               difference_quotient_norm(v, eps),
                               time_derivative_norm(v),
                               min_v,
                               detail::oscillation_or_nan(v.back(), layer, eps),
                               error_outside_layer(v, limit, layer).error,
                               detail::wall(c, sw),
                               m,
                               sw_rep.lambda1,
                               sw_rep.lambda2,
                               sw_rep.pass ? 1.0 : 0.0,
                               mono.pass ? 1.0 : 0.0,
                               run.clamp_max,
                               hole_gradient_norm(v, a + 2.0 * g->h())};
  });
  const auto all_set = [&](const std::string& col) {
    for (double v : rep.column(col)) {
      if (v != 1.0) return false;
    }
    return true;
  };
  const auto grad = rep.column("h_grad");
  bool grows = true;
  for (std::size_t i = 0; i + 1 < grad.size(); ++i) grows = grows && grad[i + 1] > grad[i];
  rep.verdicts.push_back(detail::trend_verdict(rep, "max_dq", "difference quotients bounded",
                                               bounded_ratio(rep.column("max_dq"), 2.0)));
  rep.verdicts.push_back(detail::trend_verdict(rep, "max_dt_norm", "time derivatives bounded",
                                               bounded_ratio(rep.column("max_dt_norm"), 2.0)));
  rep.verdicts.push_back(detail::trend_verdict(rep, "h_grad", "gradient near holes grows", grows));
  rep.verdicts.push_back(detail::trend_verdict(rep, "sandwich_pass", "barrier sandwich holds", all_set("sandwich_pass")));
  rep.verdicts.push_back(detail::trend_verdict(rep, "mono_pass", "time monotone", all_set("mono_pass")));
  rep.add_constant("dq_bound", detail::column_max(rep, "max_dq"));
  rep.add_constant("dt_bound", detail::column_max(rep, "max_dt_norm"));
  rep.add_constant("kappa", kappa);
  return rep;
}

/// Writes the configured formats into cfg.output (if set).
inline void write_study_outputs(const StudyReport& rep, const StudyConfig& c) {
  if (c.output.empty()) return;
  for (const auto& f : c.formats) {
    emit_report(rep, f == "csv" ? ReportFormat::Csv : f == "json" ? ReportFormat::Json : ReportFormat::PlotData,
                c.output);
  }
}

/// Runs the study, stamps provenance and writes the report. Throws when every
/// row failed, with the error class of the first row.
inline StudyReport run_study(const StudyConfig& c) {
  validate(c);
  StudyReport rep;
  switch (c.kind) {
    case StudyKind::Corrector: rep = corrector_study(c); break;
    case StudyKind::HeatObstacle: rep = heat_obstacle_study(c); break;
    case StudyKind::Eigen: rep = eigen_study(c); break;
    case StudyKind::Pme: rep = pme_study(c); break;
  }
  rep.config_hash = config_hash(c);
  rep.version = HLAB_VERSION;
  rep.seed = c.seed;
  write_study_outputs(rep, c);
  bool any_ok = false;
  for (const auto& e : rep.row_errors) any_ok = any_ok || e.empty();
  if (!any_ok && !rep.row_errors.empty()) {
    throw Error(detail::kind_from_message(rep.row_errors.front()), "every row failed; first: " + rep.row_errors.front());
  }
  return rep;
}

}  // namespace hlab
