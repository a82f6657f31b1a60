#pragma once

// Explicit solvers for the heat equation with an oscillating obstacle:
// penalized, projected, plain, and the homogenized reaction equation
//   u_t = Delta u + kappa (phi - u)_+ .

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hlab/correctors.hpp"
#include "hlab/grid.hpp"
#include "hlab/stencil.hpp"

namespace hlab {

enum class PenaltyShape { PiecewiseLinear, SmoothConcave };

struct PenaltyConfig {
  double delta = 1e-3;
  PenaltyShape shape = PenaltyShape::PiecewiseLinear;
};

/// beta(0) = -1, beta = 0 beyond delta, nondecreasing and concave.
inline double beta_delta(double s, const PenaltyConfig& cfg) {
  const double d = cfg.delta;
  if (s > d) return 0.0;
  if (cfg.shape == PenaltyShape::PiecewiseLinear) return (s - d) / d;
  const double q = (d - s) / d;
  return -q * q;
}

/// Slope bound of beta on [-delta, delta], used in the step-size check.
inline double beta_delta_slope(const PenaltyConfig& cfg) {
  return cfg.shape == PenaltyShape::PiecewiseLinear ? 1.0 / cfg.delta : 4.0 / cfg.delta;
}

struct ParabolicRunConfig {
  double dt = 0.0;  // 0 picks cfl_safety times the stability limit
  double T = 0.1;
  double cfl_safety = 0.9;
  double tol = 1e-8;
  int snapshot_every = 1;
  bool obstacle_static = false;  // evaluate phi once instead of every step
};

/// Where the obstacle acts: at hole nodes only (phi_eps), or at every interior node.
enum class ObstacleSupport { Holes, Everywhere };

namespace detail {

inline StencilLevel interior_level(const PerforatedGrid& g) {
  StencilLevel lv{g.lattice(), g.h(), std::vector<std::uint8_t>(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) lv.active[i] = g.tag(i) != NodeTag::OuterBoundary;
  return lv;
}

struct StepPlan {
  double dt = 0.0;
  std::size_t steps = 0;
};

// Resolves dt and the step count. dt_limit is the stability bound.
inline StepPlan plan_steps(const ParabolicRunConfig& rc, double dt_limit) {
  if (!(rc.T > 0.0)) throw Error(ErrorKind::Config, "final time must be positive");
  if (!(rc.cfl_safety > 0.0 && rc.cfl_safety <= 1.0)) throw Error(ErrorKind::Config, "cfl_safety must lie in (0, 1]");
  if (rc.snapshot_every < 1) throw Error(ErrorKind::Config, "snapshot_every must be at least 1");
  const double bound = rc.cfl_safety * dt_limit;
  double dt_req = rc.dt > 0.0 ? rc.dt : bound;
  if (dt_req > bound * (1.0 + 1e-12)) {
    throw Error(ErrorKind::Config, "time step " + format_number(dt_req) + " violates the stability bound " +
                                       format_number(bound));
  }
  const auto every = static_cast<std::size_t>(rc.snapshot_every);
  std::size_t steps = static_cast<std::size_t>(std::ceil(rc.T / dt_req - 1e-9));
  steps = std::max<std::size_t>(every, ((steps + every - 1) / every) * every);
  return {rc.T / static_cast<double>(steps), steps};
}

// Evaluates phi at the support nodes; other entries are left untouched.
inline void eval_obstacle(const PerforatedGrid& g, const std::vector<std::size_t>& support, const SpaceTimeFn& phi,
                          double t, std::vector<double>& out) {
  for (std::size_t i : support) out[i] = phi(g.position(i), t);
}

inline std::vector<std::size_t> obstacle_nodes(const PerforatedGrid& g, ObstacleSupport where) {
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeTag t = g.tag(i);
    if (t == NodeTag::Hole || (where == ObstacleSupport::Everywhere && t == NodeTag::Fluid)) nodes.push_back(i);
  }
  return nodes;
}

// Generic explicit march. update(i, u_i, lap_i, t) returns the new value at
// interior node i; post(u_new, t_new) may modify the whole new state.
template <class Update, class Post>
TimeField march(const Field& u0, const ParabolicRunConfig& rc, const StepPlan& plan, double scale, Update&& update,
                Post&& post) {
  const PerforatedGrid& g = *u0.grid;
  const StencilLevel lv = interior_level(g);
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const double diag = 2.0 * g.dim();
  TimeField out;
  out.step_dt = plan.dt;
  out.steps = plan.steps;
  out.dt = plan.dt * rc.snapshot_every;
  out.snapshots.push_back(u0);
  out.snapshots.front().values = u0.values;
  std::vector<double> u = u0.values, next(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (g.tag(i) == NodeTag::OuterBoundary) u[i] = 0.0;
  }
  const double blowup = 1e3 * (scale > 0.0 ? scale : 1.0);
  for (std::size_t k = 0; k < plan.steps; ++k) {
    const double t = plan.dt * static_cast<double>(k);
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!lv.active[i]) next[i] = u[i];
    }
    for_each_active_node(lv, u.data(), [&](std::size_t i, double s) { next[i] = update(i, u[i], (s - diag * u[i]) * inv_h2, t); });
    post(next, plan.dt * static_cast<double>(k + 1));
    u.swap(next);
    if ((k + 1) % static_cast<std::size_t>(rc.snapshot_every) == 0) {
      const double m = max_abs(u);
      if (!(m <= blowup)) {
        throw Error(ErrorKind::Instability, "solution exceeded 1e3 times the initial scale at step " + std::to_string(k + 1));
      }
      out.snapshots.emplace_back(u0.grid, u);
    }
  }
  return out;
}

inline void check_initial(const Field& g, const char* what) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.grid->tag(i) == NodeTag::OuterBoundary && std::abs(g[i]) > 1e-12) {
      throw Error(ErrorKind::Config, std::string(what) + " must vanish on the outer boundary");
    }
  }
}

}  // namespace detail

/// u_t = Delta_h u at every non-boundary node (holes included), u = 0 on the box boundary.
inline TimeField solve_plain_heat(const Field& g0, const ParabolicRunConfig& rc) {
  detail::check_initial(g0, "initial data");
  const auto& g = *g0.grid;
  const auto plan = detail::plan_steps(rc, g.h() * g.h() / (2.0 * g.dim()));
  return detail::march(
      g0, rc, plan, max_abs(g0.values), [&](std::size_t, double u, double lap, double) { return u + plan.dt * lap; },
      [](std::vector<double>&, double) {});
}

/// u^{k+1} = u^k + dt (Delta_h u^k - beta_delta(u^k - phi^k)), the penalty acting on `support` nodes.
inline TimeField solve_obstacle_heat_penalized(const Field& g0, const SpaceTimeFn& phi, const PenaltyConfig& pc,
                                               const ParabolicRunConfig& rc,
                                               ObstacleSupport support = ObstacleSupport::Holes) {
  if (!(pc.delta > 0.0)) throw Error(ErrorKind::Config, "penalty width must be positive");
  detail::check_initial(g0, "initial data");
  const auto& g = *g0.grid;
  const double limit = 1.0 / (2.0 * g.dim() / (g.h() * g.h()) + beta_delta_slope(pc));
  const auto plan = detail::plan_steps(rc, limit);
  const auto nodes = detail::obstacle_nodes(g, support);
  std::vector<std::uint8_t> on(g.size(), 0);
  for (std::size_t i : nodes) on[i] = 1;
  std::vector<double> obst(g.size(), 0.0);
  detail::eval_obstacle(g, nodes, phi, 0.0, obst);
  double scale = max_abs(g0.values);
  for (std::size_t i : nodes) {
    if (g0[i] < obst[i] - rc.tol) throw Error(ErrorKind::Config, "initial data lies below the obstacle");
    scale = std::max(scale, std::abs(obst[i]));
  }
  double last_t = 0.0;
  return detail::march(
      g0, rc, plan, scale,
      [&](std::size_t i, double u, double lap, double t) {
        if (!on[i]) return u + plan.dt * lap;
        if (!rc.obstacle_static && t != last_t) {
          detail::eval_obstacle(g, nodes, phi, t, obst);
          last_t = t;
        }
        return u + plan.dt * (lap - beta_delta(u - obst[i], pc));
      },
      [](std::vector<double>&, double) {});
}

/// u^{k+1} = max(u^k + dt Delta_h u^k, phi^{k+1}) on `support` nodes.
inline TimeField solve_obstacle_heat_projected(const Field& g0, const SpaceTimeFn& phi, const ParabolicRunConfig& rc,
                                               ObstacleSupport support = ObstacleSupport::Holes) {
  detail::check_initial(g0, "initial data");
  const auto& g = *g0.grid;
  const auto plan = detail::plan_steps(rc, g.h() * g.h() / (2.0 * g.dim()));
  const auto nodes = detail::obstacle_nodes(g, support);
  std::vector<double> obst(g.size(), 0.0);
  detail::eval_obstacle(g, nodes, phi, 0.0, obst);
  double scale = max_abs(g0.values);
  for (std::size_t i : nodes) {
    if (g0[i] < obst[i] - rc.tol) throw Error(ErrorKind::Config, "initial data lies below the obstacle");
    scale = std::max(scale, std::abs(obst[i]));
  }
  return detail::march(
      g0, rc, plan, scale, [&](std::size_t, double u, double lap, double) { return u + plan.dt * lap; },
      [&](std::vector<double>& next, double t_new) {
        if (!rc.obstacle_static) detail::eval_obstacle(g, nodes, phi, t_new, obst);
        for (std::size_t i : nodes) next[i] = std::max(next[i], obst[i]);
      });
}

/// u^{k+1} = u^k + dt (Delta_h u^k + kappa max(phi^k - u^k, 0)) on an unperforated grid.
inline TimeField solve_homogenized_heat(const Field& g0, const SpaceTimeFn& phi, double kappa,
                                        const ParabolicRunConfig& rc) {
  if (kappa < 0.0) throw Error(ErrorKind::Config, "kappa must be non-negative");
  detail::check_initial(g0, "initial data");
  const auto& g = *g0.grid;
  if (g.count(NodeTag::Hole) != 0) throw Error(ErrorKind::Config, "homogenized solver expects an unperforated grid");
  double limit = g.h() * g.h() / (2.0 * g.dim());
  // The reaction must also satisfy dt * kappa <= cfl_safety.
  if (kappa > 0.0) limit = std::min(limit, 1.0 / kappa);
  const auto plan = detail::plan_steps(rc, limit);
  if (kappa == 0.0) {
    return detail::march(
        g0, rc, plan, max_abs(g0.values), [&](std::size_t, double u, double lap, double) { return u + plan.dt * lap; },
        [](std::vector<double>&, double) {});
  }
  std::vector<std::size_t> nodes = detail::obstacle_nodes(g, ObstacleSupport::Everywhere);
  std::vector<double> obst(g.size(), 0.0);
  detail::eval_obstacle(g, nodes, phi, 0.0, obst);
  double scale = std::max(max_abs(g0.values), max_abs(obst));
  double last_t = 0.0;
  return detail::march(
      g0, rc, plan, scale,
      [&](std::size_t i, double u, double lap, double t) {
        if (!rc.obstacle_static && t != last_t) {
          detail::eval_obstacle(g, nodes, phi, t, obst);
          last_t = t;
        }
        return u + plan.dt * (lap + kappa * std::max(obst[i] - u, 0.0));
      },
      [](std::vector<double>&, double) {});
}

/// Limit problem of a regime on an unperforated grid: plain heat (VANISHING),
/// kappa-reaction equation (CRITICAL), projected full obstacle (DOMINANT).
inline TimeField regime_limit_solver(const RegimeSpec& spec, const Field& g0, const SpaceTimeFn& phi,
                                     const ParabolicRunConfig& rc) {
  if (g0.grid->count(NodeTag::Hole) != 0) throw Error(ErrorKind::Config, "limit solvers expect an unperforated grid");
  switch (spec.regime) {
    case Regime::Vanishing: return solve_plain_heat(g0, rc);
    case Regime::Critical: return solve_homogenized_heat(g0, phi, spec.kappa, rc);
    case Regime::Dominant: return solve_obstacle_heat_projected(g0, phi, rc, ObstacleSupport::Everywhere);
  }
  throw Error(ErrorKind::Config, "unknown regime");
}

}  // namespace hlab
