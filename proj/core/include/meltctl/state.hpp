#pragma once

#include <optional>
#include <string>
#include <vector>

#include "meltctl/fem.hpp"
#include "meltctl/semilag.hpp"
#include "meltctl/types.hpp"

namespace meltctl {

struct StateOptions {
  int max_iterations = 200;       // primal-dual active-set iterations
  int psor_max_sweeps = 200000;
  double psor_omega = 1.5;
  double psor_tol = 1e-14;
  double sign_tol = 1e-12;        // precondition slack on u, y_bar, xi_bar
};

struct SolverStats {
  int iterations = 0;
  double residual = 0.0;
  std::string method;
  std::vector<double> history;
};

// Nodal temperature and solid fraction on all mesh nodes.
struct StateSolution {
  Vector y;
  Vector xi;
  double complementarity_residual = 0.0;  // sum_i m_i y_i xi_i
  SolverStats stats;
};

// Right-hand side of A y = M_L xi + g on free nodes: g = M_L (y_bar - xi_bar) + B u.
Vector state_load(const StateOperators& ops, const Vector& u, const AdvectedPair& advected);

// Solid fraction at Dirichlet nodes, where y = 0 is imposed:
// xi = max(0, xi_bar - y_bar). Returned as a full nodal vector (0 elsewhere).
Vector dirichlet_solid_fraction(const StateOperators& ops, const AdvectedPair& advected);

// Complementarity system y >= 0, xi >= 0, y_i xi_i = 0, A y = M_L xi + g, solved
// as an obstacle problem by a primal-dual active-set method with projected SOR
// as fallback. `initial_active` (free-node mask of {y = 0}) seeds the iteration.
StateSolution solve_state(const StateOperators& ops, const Vector& u, const AdvectedPair& advected,
                          const StateOptions& opts = {},
                          const std::vector<char>* initial_active = nullptr);

// Same system for an explicit free-node load g (no precondition checks).
StateSolution solve_obstacle(const StateOperators& ops, const Vector& load_free,
                             const StateOptions& opts = {},
                             const std::vector<char>* initial_active = nullptr);

// Clamp(1 - x/eps, 0, 1).
double regularized_heaviside(double x, double eps);

struct RegularizedOptions {
  int max_iterations = 500;
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
};

// Solves A y = M_L H_eps(y) + g, i.e. the fixed point y = T(y) of the
// regularized problem, and sets xi = H_eps(y).
StateSolution solve_state_regularized(const StateOperators& ops, const Vector& u, const AdvectedPair& advected,
                                      double epsilon, const RegularizedOptions& opts = {});

struct MaximumPrincipleReport {
  bool ok = true;
  double worst_violation = 0.0;
  int worst_node = -1;
  std::string field;  // "y", "xi" or empty
};

MaximumPrincipleReport check_maximum_principle(const StateSolution& sol, double tol = 1e-12);
MaximumPrincipleReport check_maximum_principle(const Vector& y, const Vector& xi, double tol = 1e-12);

}  // namespace meltctl
