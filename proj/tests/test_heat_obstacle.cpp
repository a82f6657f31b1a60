#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hlab/heat_obstacle.hpp"
#include "oracles.hpp"

using namespace hlab;

namespace {

constexpr double kPi = std::numbers::pi;

double sine_bump(const Point& x, int n) {
  double v = 1.0;
  for (int a = 0; a < n; ++a) v *= std::sin(kPi * x[a]);
  return v;
}

GridPtr perforated2d() { return build_perforated_grid(2, Box::unit(2), 0.25, 0.05, 0.0125); }

double max_diff(const TimeField& a, const TimeField& b) {
  EXPECT_EQ(a.size(), b.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
    for (std::size_t i = 0; i < a.snapshots[k].size(); ++i) {
      worst = std::max(worst, std::abs(a.snapshots[k][i] - b.snapshots[k][i]));
    }
  }
  return worst;
}

bool bitwise_equal(const TimeField& a, const TimeField& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a.snapshots[k].values != b.snapshots[k].values) return false;
  }
  return true;
}

// Smallest stability bound shared by the plain and penalized schemes.
double common_dt(const PerforatedGrid& g, const PenaltyConfig& pc) {
  return 0.9 / (2.0 * g.dim() / (g.h() * g.h()) + beta_delta_slope(pc));
}

}  // namespace

TEST(Penalty, PiecewiseLinearValues) {
  const PenaltyConfig pc{1e-3};
  EXPECT_DOUBLE_EQ(beta_delta(0.0, pc), -1.0);
  EXPECT_DOUBLE_EQ(beta_delta(2e-3, pc), 0.0);
  EXPECT_DOUBLE_EQ(beta_delta(-1e-3, pc), -2.0);
  double prev = 0.0;
  for (double d : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double v = beta_delta(-0.1, {d});
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, -999.0);
}

TEST(Penalty, ShapesSatisfyTheAxioms) {
  for (auto shape : {PenaltyShape::PiecewiseLinear, PenaltyShape::SmoothConcave}) {
    const PenaltyConfig pc{0.01, shape};
    EXPECT_DOUBLE_EQ(beta_delta(0.0, pc), -1.0);
    EXPECT_DOUBLE_EQ(beta_delta(0.02, pc), 0.0);
    const double ds = 1e-4;
    for (double s = -0.05; s < 0.05; s += ds) {
      const double a = beta_delta(s - ds, pc), b = beta_delta(s, pc), c = beta_delta(s + ds, pc);
      EXPECT_LE(a, b + 1e-15);
      EXPECT_LE(a + c - 2 * b, 1e-12);
      // The slope bound used by the step-size check covers [-delta, delta].
      if (std::abs(s) <= pc.delta) EXPECT_LE((c - b) / ds, beta_delta_slope(pc) * (1 + 1e-9));
    }
  }
}

TEST(HeatObstacle, InactiveObstacleKeepsZero) {
  auto g = perforated2d();
  ParabolicRunConfig rc;
  rc.T = 0.01;
  const auto u = solve_obstacle_heat_penalized(Field(g), [](const Point&, double) { return -1.0; }, {}, rc);
  for (const auto& s : u.snapshots) {
    for (double v : s.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(HeatObstacle, InactivePenaltyEqualsPlainHeat) {
  auto g = perforated2d();
  const PenaltyConfig pc{1e-3};
  ParabolicRunConfig rc;
  rc.dt = common_dt(*g, pc);
  rc.T = 200 * rc.dt;
  const Field g0 = sample_field([](const Point& x) { return sine_bump(x, 2); }, g);
  const auto plain = solve_plain_heat(g0, rc);
  const auto pen = solve_obstacle_heat_penalized(g0, [](const Point&, double) { return -1.0; }, pc, rc);
  EXPECT_LE(max_diff(plain, pen), 1e-12);
  const auto proj = solve_obstacle_heat_projected(g0, [](const Point&, double) { return -1e6; }, rc);
  EXPECT_TRUE(bitwise_equal(plain, proj));
}

TEST(HeatObstacle, ProjectedAgreesWithPenalized1D) {
  // 65 nodes, 100 steps, full obstacle; the gap shrinks with delta.
  auto g = build_box_grid(1, Box::unit(1), 1.0 / 64);
  const SpaceTimeFn phi = [](const Point& x, double) { return 0.25 - 2.0 * (x[0] - 0.5) * (x[0] - 0.5); };
  const Field g0 = sample_field([&](const Point& x) { return std::max(phi(x, 0.0), 0.0); }, g);
  double prev = INFINITY;
  for (double delta : {1e-2, 1e-3}) {
    const PenaltyConfig pc{delta};
    ParabolicRunConfig rc;
    rc.dt = common_dt(*g, {1e-3});
    rc.T = 100 * rc.dt;
    const auto proj = solve_obstacle_heat_projected(g0, phi, rc, ObstacleSupport::Everywhere);
    const auto pen = solve_obstacle_heat_penalized(g0, phi, pc, rc, ObstacleSupport::Everywhere);
    ASSERT_EQ(proj.steps, 100u);
    const double gap = max_diff(proj, pen);
    EXPECT_LE(gap, 10 * delta) << delta;
    EXPECT_LT(gap, prev);
    prev = gap;
  }
}

TEST(HeatObstacle, PenaltyViolationShrinksWithDelta) {
  auto g = perforated2d();
  const SpaceTimeFn phi = [](const Point& x, double t) { return 0.5 * sine_bump(x, 2) * (1.0 + t); };
  const Field g0 = sample_field([&](const Point& x) { return phi(x, 0.0); }, g);
  double prev = INFINITY;
  std::vector<double> gaps;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    ParabolicRunConfig rc;
    rc.T = 0.02;
    const auto u = solve_obstacle_heat_penalized(g0, phi, {delta}, rc);
    double gap = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const Field ob = oscillating_obstacle(phi, g, u.time(k));
      for (std::size_t i = 0; i < g->size(); ++i) {
        if (g->tag(i) == NodeTag::Hole) gap = std::max(gap, ob[i] - u.snapshots[k][i]);
      }
    }
    EXPECT_LT(gap, prev) << delta;
    gaps.push_back(gap);
    prev = gap;
  }
  // Hole nodes next to the fluid carry a large Laplacian, so c(delta) is not
  // a small multiple of delta at this resolution; it still goes to zero.
  EXPECT_LT(gaps.back(), 0.2 * gaps.front());
}

TEST(HeatObstacle, ProjectionKeepsConstraintExactly) {
  auto g = perforated2d();
  const SpaceTimeFn phi = [](const Point& x, double t) { return 0.5 * sine_bump(x, 2) * (1.0 - t); };
  const Field g0 = sample_field([&](const Point& x) { return phi(x, 0.0); }, g);
  ParabolicRunConfig rc;
  rc.T = 0.02;
  rc.snapshot_every = 4;
  const auto u = solve_obstacle_heat_projected(g0, phi, rc);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Field ob = oscillating_obstacle(phi, g, u.time(k));
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (g->tag(i) == NodeTag::Hole) EXPECT_GE(u.snapshots[k][i], ob[i]);
    }
  }
}

TEST(HeatObstacle, SupersolutionDecreases) {
  // x(1-x) y(1-y) is discretely superharmonic; the obstacle sits below it.
  auto g = perforated2d();
  auto prod = [](const Point& x) { return 4.0 * x[0] * (1 - x[0]) * x[1] * (1 - x[1]); };
  const Field g0 = sample_field(prod, g);
  ParabolicRunConfig rc;
  rc.T = 0.01;
  rc.obstacle_static = true;
  const auto u = solve_obstacle_heat_projected(g0, [&](const Point& x, double) { return 0.5 * prod(x); }, rc);
  for (std::size_t k = 0; k + 1 < u.size(); ++k) {
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_LE(u.snapshots[k + 1][i], u.snapshots[k][i]);
  }
}

TEST(HeatObstacle, ComparisonPrinciple) {
  auto g = perforated2d();
  auto bump = [](const Point& x) { return sine_bump(x, 2); };
  const Field g1 = sample_field([&](const Point& x) { return 0.5 * bump(x); }, g);
  const Field g2 = sample_field([&](const Point& x) { return 0.8 * bump(x); }, g);
  const SpaceTimeFn phi1 = [&](const Point& x, double) { return 0.4 * bump(x); };
  const SpaceTimeFn phi2 = [&](const Point& x, double) { return 0.7 * bump(x); };
  ParabolicRunConfig rc;
  rc.T = 0.02;
  const auto u1 = solve_obstacle_heat_penalized(g1, phi1, {1e-3}, rc);
  const auto u2 = solve_obstacle_heat_penalized(g2, phi2, {1e-3}, rc);
  for (std::size_t k = 0; k < u1.size(); ++k) {
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_LE(u1.snapshots[k][i], u2.snapshots[k][i] + 1e-8);
  }
}

TEST(HeatObstacle, Preconditions) {
  auto g = perforated2d();
  const Field g0 = sample_field([](const Point& x) { return sine_bump(x, 2); }, g);
  ParabolicRunConfig rc;
  rc.dt = 1.0;
  EXPECT_THROW(solve_plain_heat(g0, rc), Error);
  rc.dt = 0.0;
  try {
    solve_obstacle_heat_projected(Field(g), [](const Point&, double) { return 1.0; }, rc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  const Field bad = sample_field([](const Point&) { return 1.0; }, g);
  EXPECT_THROW(solve_plain_heat(bad, rc), Error);
  EXPECT_THROW(solve_obstacle_heat_penalized(g0, [](const Point&, double) { return 0.0; }, {0.0}, rc), Error);
}

TEST(Homogenized, KappaZeroIsBitwisePlainHeat) {
  auto g = build_box_grid(2, Box::unit(2), 1.0 / 32);
  const Field g0 = sample_field([](const Point& x) { return sine_bump(x, 2); }, g);
  ParabolicRunConfig rc;
  rc.T = 0.02;
  const auto plain = solve_plain_heat(g0, rc);
  const auto hom = solve_homogenized_heat(g0, [](const Point&, double) { return 5.0; }, 0.0, rc);
  EXPECT_TRUE(bitwise_equal(plain, hom));
}

TEST(Homogenized, ReactionInactiveBelowData) {
  // phi <= 0 stays below the nonnegative heat flow, so (phi - u)_+ vanishes.
  auto g = build_box_grid(2, Box::unit(2), 1.0 / 32);
  const Field g0 = sample_field([](const Point& x) { return sine_bump(x, 2); }, g);
  ParabolicRunConfig rc;
  rc.T = 0.02;
  rc.obstacle_static = true;
  const auto plain = solve_plain_heat(g0, rc);
  const auto hom = solve_homogenized_heat(g0, [](const Point& x, double) { return -x[0]; }, 50.0, rc);
  EXPECT_TRUE(bitwise_equal(plain, hom));
  EXPECT_THROW(solve_homogenized_heat(g0, [](const Point&, double) { return 0.0; }, -1.0, rc), Error);
  EXPECT_THROW(solve_homogenized_heat(Field(perforated2d()), [](const Point&, double) { return 0.0; }, 1.0, rc), Error);
}

TEST(Homogenized, SteadySemilinearOracle) {
  auto g = build_box_grid(1, Box::unit(1), 1.0 / 64);
  ParabolicRunConfig rc;
  rc.T = 3.0;
  rc.obstacle_static = true;
  rc.snapshot_every = 1000;
  const auto u = solve_homogenized_heat(Field(g), [](const Point&, double) { return 1.0; }, 1.0, rc);
  const auto f = [](double y) { return -std::max(1.0 - y, 0.0); };
  const double m = oracle::shoot_symmetric(f, 0.0, 1.0);
  const auto ref = oracle::symmetric_profile(f, m, 64);
  double worst = 0.0, closed = 0.0;
  for (int j = 0; j <= 64; ++j) {
    const double x = j / 64.0;
    worst = std::max(worst, std::abs(u.back()[j] - ref[j]));
    closed = std::max(closed, std::abs(ref[j] - (1.0 - std::cosh(x - 0.5) / std::cosh(0.5))));
  }
  EXPECT_LT(worst, 1e-3);
  EXPECT_LT(closed, 1e-9);
}

TEST(RegimeLimit, Dispatch) {
  auto g = build_box_grid(3, Box::unit(3), 1.0 / 16);
  const Field g0 = sample_field([](const Point& x) { return sine_bump(x, 3); }, g);
  const SpaceTimeFn phi = [](const Point& x, double) { return 0.6 * sine_bump(x, 3); };
  ParabolicRunConfig rc;
  rc.T = 0.02;
  rc.obstacle_static = true;

  const auto van = regime_limit_solver(classify_regime(3, 4.0), g0, phi, rc);
  EXPECT_TRUE(bitwise_equal(van, solve_plain_heat(g0, rc)));
  // Discrete heat residual of the vanishing limit.
  const double dt = van.step_dt;
  ParabolicRunConfig one = rc;
  one.dt = dt;
  one.T = dt;
  const auto step = solve_plain_heat(van.back(), one);
  const Field lap = laplacian(van.back());
  double res = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) res = std::max(res, std::abs((step.back()[i] - van.back()[i]) / dt - lap[i]));
  EXPECT_LE(res, 1e-8);

  const auto dom = regime_limit_solver(classify_regime(3, 2.0), g0, phi, rc);
  for (const auto& s : dom.snapshots) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (g->tag(i) != NodeTag::OuterBoundary) EXPECT_GE(s[i], phi(g->position(i), 0.0) - rc.tol);
    }
  }

  const auto crit = regime_limit_solver(classify_regime(3, 3.0), g0, phi, rc);
  EXPECT_TRUE(bitwise_equal(crit, solve_homogenized_heat(g0, phi, 4 * kPi, rc)));
}
