#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "meltctl/semilag.hpp"

using namespace meltctl;

TEST(Feet, ZeroVelocityGivesNodes) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 4, 8);
  const Feet f = characteristic_feet(m, constant_velocity({0.0, 0.0}), 0.1, 0.1);
  for (int i = 0; i < m.num_nodes(); ++i) {
    EXPECT_EQ(f.points[i][0], m.nodes[i][0]);
    EXPECT_EQ(f.points[i][1], m.nodes[i][1]);
  }
  EXPECT_EQ(f.clamped_fraction, 0.0);
}

TEST(Feet, ConstantVelocityShiftsAndClamps) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 50, 100);
  const Feet f = characteristic_feet(m, constant_velocity({-0.5, 0.0}), 0.1, 0.1);
  for (int j = 0; j <= 100; ++j) {
    for (int i = 0; i <= 50; ++i) {
      const int k = m.node_index(i, j);
      const double expect = std::min(2.0, m.nodes[k][0] + 0.05);
      EXPECT_NEAR(f.points[k][0], expect, 1e-14);
      EXPECT_EQ(f.points[k][1], m.nodes[k][1]);
    }
  }
  // Node at x1 = 1.98 moves past the right edge.
  EXPECT_EQ(f.points[m.node_index(49, 10)][0], 2.0);
  EXPECT_GT(f.clamped_fraction, 0.0);
}

TEST(Advect, IdentityForZeroVelocity) {
  const StructuredMesh m = build_interval_mesh(1.0, 10);
  const Feet f = characteristic_feet(m, constant_velocity({0.0, 0.0}), 0.0, 0.01);
  Vector y = Vector::LinSpaced(11, 0.0, 3.0).array().square();
  Vector xi = Vector::LinSpaced(11, 1.0, 0.0);
  const AdvectedPair a = advect(m, f, y, xi);
  EXPECT_EQ(a.y_bar, y);
  EXPECT_EQ(a.xi_bar, xi);
}

TEST(Advect, ExactForAffineFields) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 9, 13);
  const VelocityField v = rotation_velocity(0.7, {1.0, 2.0});
  const Feet f = characteristic_feet(m, v, 0.3, 0.2);
  Vector y(m.num_nodes()), xi(m.num_nodes());
  auto affine = [](const Point& x) { return 0.3 + 1.2 * x[0] - 0.7 * x[1]; };
  for (int i = 0; i < m.num_nodes(); ++i) {
    y[i] = affine(m.nodes[i]);
    xi[i] = 0.5;
  }
  const AdvectedPair a = advect(m, f, y, xi);
  for (int i = 0; i < m.num_nodes(); ++i) {
    EXPECT_NEAR(a.y_bar[i], affine(f.points[i]), 1e-12);
    EXPECT_NEAR(a.xi_bar[i], 0.5, 1e-15);
  }
}

TEST(Advect, StepProfileStaysInUnitInterval) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 20, 40);
  const Feet f = characteristic_feet(m, rotation_velocity(1.3, {1.0, 2.0}), 0.0, 0.37);
  Vector y(m.num_nodes()), xi(m.num_nodes());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < m.num_nodes(); ++i) {
    xi[i] = m.nodes[i][0] > 1.0 ? 1.0 : 0.0;
    y[i] = 2.0 * U(rng);
  }
  const AdvectedPair a = advect(m, f, y, xi);
  EXPECT_GE(a.xi_bar.minCoeff(), 0.0);
  EXPECT_LE(a.xi_bar.maxCoeff(), 1.0);
  EXPECT_GE(a.y_bar.minCoeff(), 0.0);
  EXPECT_LE(a.y_bar.maxCoeff(), y.maxCoeff());
}

TEST(Interpolate, NodesAndMidpoints) {
  const StructuredMesh m = build_interval_mesh(1.0, 4);
  const Vector w = Vector::LinSpaced(5, 0.0, 4.0).array().square();
  for (int i = 0; i < 5; ++i) EXPECT_EQ(interpolate(m, w, m.nodes[i]), w[i]);
  EXPECT_NEAR(interpolate(m, w, {0.375, 0.0}), 0.5 * (w[1] + w[2]), 1e-15);
}
