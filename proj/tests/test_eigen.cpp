#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hlab/eigen.hpp"
#include "oracles.hpp"

using namespace hlab;

namespace {

constexpr double kPi = std::numbers::pi;

// -phi'' + kappa phi = phi^p written as y'' = f(y).
std::function<double(double)> eigen_rhs(double p, double kappa) {
  return [=](double y) { return kappa * y - std::pow(std::max(y, 0.0), p); };
}

double oracle_error(const EigenSolution& sol, double p, double kappa) {
  const auto& g = *sol.phi.grid;
  const int N = g.lattice().extent(0) - 1;
  const auto f = eigen_rhs(p, kappa);
  const double m = oracle::shoot_symmetric(f, 1e-3, 10.0);
  const auto ref = oracle::symmetric_profile(f, m, N);
  double worst = 0.0;
  for (int j = 0; j <= N; ++j) worst = std::max(worst, std::abs(sol.phi[j] - ref[j]));
  return worst;
}

GridPtr interval(double len, int N) { return build_box_grid(1, Box::cube(1, 0.0, len), len / N); }

}  // namespace

TEST(EigenOracle, OneDimensionalShooting) {
  for (double p : {0.5, 2.0 / 3.0}) {
    const auto sol = solve_eigen_perforated({interval(1.0, 512), p});
    EXPECT_LT(oracle_error(sol, p, 0.0), 1e-4) << p;
    EXPECT_LE(sol.residual, 1e-8);
  }
}

TEST(EigenOracle, HomogenizedKappaOne) {
  const auto sol = solve_eigen_homogenized({interval(1.0, 512), 0.5, 1.0});
  EXPECT_LT(oracle_error(sol, 0.5, 1.0), 1e-4);
}

TEST(EigenOracle, BoundarySlopeMatchesQuotient) {
  const double p = 0.5, eps = 1.0 / 16;
  const auto sol = solve_eigen_perforated({interval(1.0, 512), p});
  const auto f = eigen_rhs(p, 0.0);
  const double m = oracle::shoot_symmetric(f, 1e-3, 10.0);
  const auto end = oracle::rk4([&](double, double y, double) { return f(y); }, 0.5, 0.0, {m, 0.0}, 8000);
  const auto rep = discrete_nondegeneracy_report(sol.phi, eps);
  EXPECT_FALSE(rep.degenerate);
  EXPECT_NEAR(rep.c_low, std::abs(end.yp), 2 * eps);
  EXPECT_NEAR(rep.C_high, rep.c_low, 1e-9);
}

TEST(EigenProperties, ScalingIdentity) {
  // On [0, s] the solution is s^{2/(1-p)} phi(x / s); same node count keeps it exact.
  const double p = 0.5, s = 2.0;
  const auto a = solve_eigen_perforated({interval(1.0, 128), p, 0.0, 1e-10});
  const auto b = solve_eigen_perforated({interval(s, 128), p, 0.0, 1e-10});
  const double f = std::pow(s, 2.0 / (1.0 - p));
  double worst = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < a.phi.size(); ++i) {
    worst = std::max(worst, std::abs(b.phi[i] - f * a.phi[i]));
    peak = std::max(peak, b.phi[i]);
  }
  EXPECT_LT(worst, 1e-8 * peak);
}

TEST(EigenProperties, SubAndSuperStartsAgree) {
  const double tol = 1e-8;
  EigenProblem prob{interval(1.0, 256), 2.0 / 3.0, 0.0, tol};
  const auto up = solve_eigen(prob, EigenStart::Subsolution);
  const auto down = solve_eigen(prob, EigenStart::Supersolution);
  double worst = 0.0;
  for (std::size_t i = 0; i < up.phi.size(); ++i) worst = std::max(worst, std::abs(up.phi[i] - down.phi[i]));
  EXPECT_LE(worst, 5 * tol);
}

TEST(EigenProperties, StartsBracketTheSolution) {
  EigenProblem prob{interval(1.0, 64), 0.5};
  const auto sol = solve_eigen(prob);
  const Field hi = eigen_start(prob, EigenStart::Supersolution);
  const Field lo = eigen_start(prob, EigenStart::Subsolution);
  for (std::size_t i = 0; i < sol.phi.size(); ++i) {
    EXPECT_LE(lo[i], sol.phi[i]);
    EXPECT_GE(hi[i], sol.phi[i]);
  }
}

TEST(EigenProperties, LargeKappaBound) {
  const double p = 0.5, kappa = 1e6, tol = 1e-8;
  const auto sol = solve_eigen_homogenized({build_box_grid(2, Box::unit(2), 1.0 / 32), p, kappa, tol});
  double mx = 0.0;
  for (double v : sol.phi.values) mx = std::max(mx, v);
  EXPECT_GT(mx, 0.0);
  EXPECT_LE(mx, std::pow(1.0 / kappa, 1.0 / (1.0 - p)) * (1.0 + tol));
}

TEST(EigenProperties, ZeroStartIsDegenerate) {
  EigenProblem prob{interval(1.0, 64), 0.5};
  try {
    solve_eigen_from(prob, Field(prob.grid));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
  }
  const auto rep = discrete_nondegeneracy_report(Field(prob.grid), 1.0 / 16);
  EXPECT_TRUE(rep.degenerate);
  EXPECT_EQ(rep.c_low, 0.0);
  EXPECT_EQ(rep.C_high, 0.0);
}

TEST(EigenProperties, InvalidProblems) {
  auto g = interval(1.0, 64);
  EXPECT_THROW(solve_eigen({g, 1.0}), Error);
  EXPECT_THROW(solve_eigen({g, 0.5, -1.0}), Error);
  EXPECT_THROW(solve_eigen_perforated({g, 0.5, 1.0}), Error);
  auto holes = build_perforated_grid(2, Box::unit(2), 0.25, 0.05, 0.0125);
  EXPECT_THROW(solve_eigen_homogenized({holes, 0.5, 1.0}), Error);
}

TEST(EigenProperties, VariationalConsistency) {
  const double tol = 1e-10;
  const auto sol = solve_eigen_perforated({interval(1.0, 256), 0.5, 0.0, tol});
  const Field back = renormalize(sol.phi, 0.5, 0.0);
  double worst = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    worst = std::max(worst, std::abs(back[i] - sol.phi[i]));
    peak = std::max(peak, sol.phi[i]);
  }
  EXPECT_LT(worst, 1e-6 * peak);
  EXPECT_GT(sol.lambda, 0.0);
}

TEST(EigenPerforated, PositiveOffHolesAndMonotone) {
  auto g = build_perforated_grid(2, Box::unit(2), 0.25, 0.05, 0.0125);
  const auto sol = solve_eigen_perforated({g, 0.5});
  double mn = INFINITY;
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (g->is_fluid(i)) {
      mn = std::min(mn, sol.phi[i]);
    } else {
      EXPECT_EQ(sol.phi[i], 0.0);
    }
  }
  EXPECT_GT(mn, 0.0);
  // The holes only remove mass: the perforated solution lies below the plain one.
  const auto plain = solve_eigen_perforated({build_box_grid(2, Box::unit(2), 0.0125), 0.5});
  for (std::size_t i = 0; i < g->size(); ++i) EXPECT_LE(sol.phi[i], plain.phi[i] + 1e-9);
}

TEST(Correctibility, FirstKind) {
  const auto spec = classify_regime(3, 3.0);
  const auto cell = solve_cell_corrector({3, 0.5, 0.125, spec.kappa, 0.5 / 32});
  EXPECT_EQ(correctibility_I_residual(0.0, spec, cell, 0.5), 0.0);
  EXPECT_THROW(correctibility_I_residual(1.0, classify_regime(3, 2.0), cell, 0.5), Error);
  // The flux term alone is -b k for any cell; the reaction average carries the error.
  const double r = correctibility_I_residual(1.0, spec, cell, 0.5);
  const double avg = average_over_fluid(cell.w, [&](std::size_t i) { return std::sqrt(std::max(1.0 - cell.w[i], 0.0)); });
  EXPECT_NEAR(r, std::abs(avg - 1.0), 1e-8);
  EXPECT_NEAR(spec.kappa, 4 * kPi, 1e-12);
}
