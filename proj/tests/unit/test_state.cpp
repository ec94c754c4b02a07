#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "meltctl/errors.hpp"
#include "meltctl/oracle.hpp"
#include "meltctl/state.hpp"

using namespace meltctl;

namespace {

AdvectedPair uniform(int n, double y, double xi) {
  return {Vector::Constant(n, y), Vector::Constant(n, xi), 0.0};
}

// Partly melted 1D slab heated from the left.
struct SlabCase {
  StructuredMesh mesh = build_interval_mesh(1.0, 40);
  StateOperators ops = assemble_operators(mesh, 1.0, 0.05);
  Vector u = Vector::Constant(1, 3.0);
  AdvectedPair adv;
  SlabCase() {
    const int n = mesh.num_nodes();
    adv.y_bar = Vector::Zero(n);
    adv.xi_bar = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      const double x = mesh.nodes[i][0];
      adv.y_bar[i] = x < 0.3 ? 0.5 * (0.3 - x) : 0.0;
      adv.xi_bar[i] = x < 0.3 ? 0.0 : 1.0;
    }
  }
};

}  // namespace

TEST(SolveState, FrozenAtMeltingPointStaysFrozen) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 6, 8);
  const StateOperators ops = assemble_operators(m, 1.0, 0.1);
  const StateSolution s = solve_state(ops, Vector::Zero(ops.num_controls()), uniform(m.num_nodes(), 0.0, 1.0));
  EXPECT_LE(s.y.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((s.xi.array() - 1.0).abs().maxCoeff(), 1e-14);
}

TEST(SolveState, AllZeroData) {
  const StructuredMesh m = build_interval_mesh(1.0, 10);
  const StateOperators ops = assemble_operators(m, 1.0, 0.1);
  const StateSolution s = solve_state(ops, Vector::Zero(1), uniform(m.num_nodes(), 0.0, 0.0));
  EXPECT_EQ(s.y.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.xi.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SolveState, RejectsInadmissibleData) {
  const StructuredMesh m = build_interval_mesh(1.0, 10);
  const StateOperators ops = assemble_operators(m, 1.0, 0.1);
  EXPECT_THROW(solve_state(ops, Vector::Constant(1, -1.0), uniform(11, 0.0, 1.0)), InvalidArgument);
  EXPECT_THROW(solve_state(ops, Vector::Zero(1), uniform(11, -0.5, 1.0)), InvalidArgument);
  EXPECT_THROW(solve_state(ops, Vector::Zero(1), uniform(11, 0.0, 1.5)), InvalidArgument);
  EXPECT_THROW(solve_state(ops, Vector::Zero(2), uniform(11, 0.0, 1.0)), InvalidArgument);
}

TEST(SolveState, ComplementarityAndSigns) {
  const SlabCase c;
  const StateSolution s = solve_state(c.ops, c.u, c.adv);
  EXPECT_TRUE(check_maximum_principle(s).ok);
  for (int i = 0; i < c.mesh.num_nodes(); ++i) EXPECT_LE(std::min(s.y[i], s.xi[i]), 1e-14);
  EXPECT_LE(std::abs(s.complementarity_residual), 1e-14);
  // The state equation holds on free nodes.
  const Vector m = c.ops.lumped_mass_free();
  const Vector r = c.ops.A * c.ops.restrict_to_free(s.y) - m.cwiseProduct(c.ops.restrict_to_free(s.xi)) -
                   state_load(c.ops, c.u, c.adv);
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SolveState, MatchesEnumerationOnRandomInstances) {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int free_nodes = 2 + k % 9;
    const TinyInstance inst = random_instance(free_nodes, rng);
    const EnumerationResult ref = enumerate_state(inst.ops, inst.u, inst.advected);
    const StateSolution s = solve_state(inst.ops, inst.u, inst.advected);
    worst = std::max(worst, (s.y - ref.solution.y).cwiseAbs().maxCoeff());
    worst = std::max(worst, (s.xi - ref.solution.xi).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(SolveState, MonotoneInControl) {
  const SlabCase c;
  Vector prev = solve_state(c.ops, Vector::Zero(1), c.adv).y;
  for (double u : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const Vector y = solve_state(c.ops, Vector::Constant(1, u), c.adv).y;
    EXPECT_GE((y - prev).minCoeff(), -1e-13);
    prev = y;
  }
}

TEST(Heaviside, RegularizedValues) {
  const double eps = 0.2;
  EXPECT_EQ(regularized_heaviside(-1.0, eps), 1.0);
  EXPECT_EQ(regularized_heaviside(0.0, eps), 1.0);
  EXPECT_EQ(regularized_heaviside(eps, eps), 0.0);
  EXPECT_DOUBLE_EQ(regularized_heaviside(eps / 2.0, eps), 0.5);
  EXPECT_EQ(regularized_heaviside(5.0, eps), 0.0);
}

TEST(Regularized, ZeroDataFixedPoint) {
  const StructuredMesh m = build_interval_mesh(1.0, 10);
  const StateOperators ops = assemble_operators(m, 1.0, 0.1);
  const StateSolution s = solve_state_regularized(ops, Vector::Zero(1), uniform(11, 0.0, 1.0), 1e-3);
  EXPECT_LE(s.y.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Regularized, ApproachesComplementaritySolution) {
  const SlabCase c;
  const StateSolution exact = solve_state(c.ops, c.u, c.adv);
  const double ynorm = std::sqrt(l2_norm_sq(c.ops, exact.y));
  ASSERT_GT(ynorm, 0.0);
  double prev = INFINITY;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const StateSolution r = solve_state_regularized(c.ops, c.u, c.adv, eps);
    const double gap = std::sqrt(l2_norm_sq(c.ops, r.y - exact.y));
    EXPECT_LT(gap, prev) << "eps = " << eps;
    prev = gap;
    EXPECT_TRUE(check_maximum_principle(r).ok);
  }
  EXPECT_LE(prev, 1e-3 * ynorm);
}

TEST(MaximumPrinciple, ReportsWorstNode) {
  Vector y = Vector::Zero(6);
  Vector xi = Vector::Constant(6, 0.5);
  y[3] = -1e-3;
  const MaximumPrincipleReport r = check_maximum_principle(y, xi);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.worst_node, 3);
  EXPECT_EQ(r.field, "y");
  EXPECT_NEAR(r.worst_violation, 1e-3, 1e-18);

  xi[1] = 1.0 + 1e-6;
  y[3] = 0.0;
  const MaximumPrincipleReport q = check_maximum_principle(y, xi);
  EXPECT_FALSE(q.ok);
  EXPECT_EQ(q.worst_node, 1);
  EXPECT_EQ(q.field, "xi");
  EXPECT_TRUE(check_maximum_principle(Vector::Zero(3), Vector::Ones(3)).ok);
}
