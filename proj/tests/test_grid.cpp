#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hlab/grid.hpp"

using namespace hlab;

TEST(CriticalRadius, Formula) {
  EXPECT_NEAR(critical_radius(0.1, 3), 1e-3, 1e-15);
  EXPECT_NEAR(critical_radius(0.1, 4), 1e-2, 1e-15);
  EXPECT_NEAR(critical_radius(0.5, 2), std::exp(-4.0), 1e-15);
  EXPECT_THROW(critical_radius(0.5, 1), Error);
}

TEST(PerforatedGrid, CountsInteriorHoles2D) {
  auto g = build_perforated_grid(2, Box::unit(2), 0.25, 0.05, 0.0125);
  EXPECT_EQ(g->hole_count(), 9u);
  EXPECT_FALSE(g->unresolved_hole());
  // a/h = 4: lattice points of Z^2 in the closed disc of radius 4.
  EXPECT_EQ(g->count(NodeTag::Hole), 9u * 49u);
  EXPECT_EQ(g->count(NodeTag::OuterBoundary), 4u * 80u);
}

TEST(PerforatedGrid, ConstructionErrors) {
  try {
    build_perforated_grid(3, Box::unit(3), 0.5, 0.3, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Geometry);
  }
  try {
    build_perforated_grid(2, Box::unit(2), 0.25, 0.05, 0.03);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Alignment);
  }
  EXPECT_THROW(build_perforated_grid(5, Box::unit(2), 0.25, 0.05, 0.0125), Error);
}

TEST(PerforatedGrid, UnresolvedFlag) {
  auto g = build_perforated_grid(2, Box::unit(2), 0.25, 0.001, 0.0125);
  EXPECT_TRUE(g->unresolved_hole());
  // Only the center node of each hole survives.
  EXPECT_EQ(g->count(NodeTag::Hole), 9u);
}

TEST(PerforatedGrid, MembershipMatchesDistance) {
  auto g = build_perforated_grid(3, Box::unit(3), 0.25, 0.07, 0.03125);
  g->lattice().for_each_node([&](std::size_t i, const MultiIndex& mi) {
    if (g->lattice().on_box_boundary(mi)) {
      EXPECT_EQ(g->tag(i), NodeTag::OuterBoundary);
      return;
    }
    // Brute force over lattice points strictly inside the box.
    const Point x = g->position(mi);
    double best = INFINITY;
    for (int p = 1; p <= 3; ++p)
      for (int q = 1; q <= 3; ++q)
        for (int r = 1; r <= 3; ++r) {
          const double d = std::hypot(x[0] - 0.25 * p, x[1] - 0.25 * q, x[2] - 0.25 * r);
          best = std::min(best, d);
        }
    EXPECT_EQ(g->tag(i) == NodeTag::Hole, best <= 0.07) << i;
  });
}

TEST(PerforatedGrid, HoleVolumeConverges) {
  const double a = 0.1;
  double prev = INFINITY;
  for (double h : {0.025, 0.0125, 0.00625}) {
    auto g = build_perforated_grid(3, Box::unit(3), 0.5, a, h);
    const double vol = static_cast<double>(g->count(NodeTag::Hole)) * h * h * h;
    const double exact = static_cast<double>(g->hole_count()) * 4.0 / 3.0 * std::numbers::pi * a * a * a;
    const double rel = std::abs(vol - exact) / exact;
    EXPECT_LT(rel, 3.0 * h / a);
    EXPECT_LT(rel, prev);
    prev = rel;
  }
}

TEST(PeriodicCell, CenterIsHoleAndWrapDistances) {
  auto g = build_periodic_cell(3, 0.25, 0.02, 0.25 / 16);
  EXPECT_EQ(g->lattice().size(), 16u * 16u * 16u);
  MultiIndex c{8, 8, 8, 0};
  EXPECT_EQ(g->tag(g->lattice().flatten(c)), NodeTag::Hole);
  EXPECT_DOUBLE_EQ(g->distance_to_lattice(c), 0.0);
  MultiIndex corner{0, 0, 0, 0};
  EXPECT_NEAR(g->distance_to_lattice(corner), 0.125 * std::sqrt(3.0), 1e-14);
  EXPECT_EQ(g->count(NodeTag::OuterBoundary), 0u);
}

TEST(Fields, ObstacleAndSampling) {
  auto g = build_perforated_grid(2, Box::unit(2), 0.25, 0.05, 0.0125);
  auto zero = oscillating_obstacle([](const Point&, double) { return 0.0; }, g, 0.0);
  for (double v : zero.values) EXPECT_EQ(v, 0.0);
  auto one = oscillating_obstacle([](const Point&, double) { return 1.0; }, g, 0.0);
  auto x1 = oscillating_obstacle([](const Point& x, double) { return x[0]; }, g, 0.3);
  for (std::size_t i = 0; i < g->size(); ++i) {
    EXPECT_EQ(one[i], g->tag(i) == NodeTag::Hole ? 1.0 : 0.0);
    if (g->tag(i) == NodeTag::Hole) EXPECT_DOUBLE_EQ(x1[i], g->position(i)[0]);
    if (g->tag(i) == NodeTag::Fluid) EXPECT_EQ(x1[i], 0.0);
  }
  auto lin = sample_field([](const Point& x) { return x[0]; }, g);
  EXPECT_DOUBLE_EQ(*std::min_element(lin.values.begin(), lin.values.end()), 0.0);
  EXPECT_DOUBLE_EQ(*std::max_element(lin.values.begin(), lin.values.end()), 1.0);
  auto dist = sample_field([&](const Point& x) {
    double s = 0;
    for (int a = 0; a < 2; ++a) {
      const double d = x[a] - 0.25 * std::round(x[a] / 0.25);
      s += d * d;
    }
    return std::sqrt(s);
  }, g);
  auto it = std::min_element(dist.values.begin(), dist.values.end());
  EXPECT_EQ(*it, 0.0);
}

TEST(Fields, SizeMismatchThrows) {
  auto g = build_box_grid(1, Box::unit(1), 0.125);
  EXPECT_EQ(g->size(), 9u);
  EXPECT_THROW(Field(g, std::vector<double>(3)), Error);
}
