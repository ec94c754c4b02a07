#pragma once

#include <functional>
#include <string>
#include <vector>

#include "meltctl/errors.hpp"
#include "meltctl/fem.hpp"
#include "meltctl/semilag.hpp"
#include "meltctl/types.hpp"

namespace meltctl {

struct ControlProblemData {
  Vector y_d;   // desired temperature, nodal
  Vector xi_d;  // desired solid fraction, nodal
  double nu = 1e-4;
  AdvectedPair advected;
};

// eps(gamma) = 1 / (offset + gamma^power).
struct EpsilonRule {
  double offset = 1e3;
  double power = 4.0;
  double operator()(double gamma) const;
  std::string describe() const;
};

struct PathSchedule {
  std::vector<double> gammas;
  std::vector<double> epsilons;

  int size() const { return static_cast<int>(gammas.size()); }
  // Throws InvalidArgument unless gammas increase strictly, epsilons decrease
  // strictly, and gamma*eps at the end is below its initial value.
  void validate() const;
};

// gamma_k = gamma0 * growth^k for k = 1..count.
PathSchedule make_schedule(double gamma0, double growth, int count, const EpsilonRule& rule = {});
PathSchedule default_schedule();

// All fields nodal on the full mesh. p and lam vanish on Dirichlet nodes,
// where y = 0 and xi is fixed by the advected data.
struct KktState {
  Vector y;
  Vector xi;
  Vector u;
  Vector p;
  Vector lam;
  double gamma = 0.0;
  double epsilon = 0.0;
};

struct JTerms {
  double state = 0.0;  // 1/2 |y - y_d|^2_{H1}
  double xi = 0.0;     // 1/2 |xi - xi_d|^2
  double control = 0.0;  // nu/2 |u|^2_{Gamma_C}
  double total() const { return state + xi + control; }
};

JTerms evaluate_J_terms(const ControlProblemData& data, const StateOperators& ops, const Vector& y, const Vector& xi,
                        const Vector& u);
double evaluate_J(const ControlProblemData& data, const StateOperators& ops, const Vector& y, const Vector& xi,
                  const Vector& u);
// (xi, y + eps xi) in the lumped inner product.
double penalty_term(const StateOperators& ops, const Vector& y, const Vector& xi, double epsilon);
double evaluate_J_gamma(const ControlProblemData& data, const StateOperators& ops, const Vector& y, const Vector& xi,
                        const Vector& u, double gamma, double epsilon);

struct KktResiduals {
  double r[5] = {0, 0, 0, 0, 0};
  double max() const;
};

KktResiduals kkt_residual(const ControlProblemData& data, const StateOperators& ops, const KktState& state);

// Projection formulas of the optimality system.
Vector project_xi(const Vector& p, const Vector& xi_d, const Vector& lam, const Vector& y, double gamma,
                  double epsilon);
Vector project_u(const Vector& p_control, double tau, double nu);

// Free-node masks of the active constraints xi = 0 and y + eps xi = 0.
struct ActiveSets {
  std::vector<char> xi_active;
  std::vector<char> w_active;
  bool empty() const { return xi_active.empty(); }
};

struct PathOptions {
  double kkt_tol = 1e-9;        // target for the relative KKT residuals per gamma
  int max_outer = 200;          // projected Newton iterations in u per gamma
  int max_inner = 300;          // active-set iterations in (y, xi) per inner solve
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct PathTraceEntry {
  double gamma = 0.0;
  double epsilon = 0.0;
  double J = 0.0;
  double J_gamma = 0.0;
  double penalty = 0.0;
  double pg_norm = 0.0;  // |u - max(0, u - (nu u - tau p_C))|_{Gamma_C}
  KktResiduals residuals;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool curvature_shift = false;
};

struct PathResult {
  KktState state;
  std::vector<PathTraceEntry> trace;
  std::vector<ActiveSets> sets;  // converged sets per gamma index
  // Estimate of C in penalty <= C / gamma: max_k gamma_k * penalty_k.
  double penalty_constant() const;
};

// Solves the discrete penalized-regularized problems along the schedule,
// warm-starting each gamma from the previous one. `warm_u` seeds the control
// (cold start: u = 0); `set_hints` optionally provides per-gamma active sets
// from an earlier solve. Throws PathFailure on non-convergence.
PathResult solve_penalized_step(const ControlProblemData& data, const StateOperators& ops,
                                const PathSchedule& schedule, const Vector* warm_u = nullptr,
                                const std::vector<ActiveSets>* set_hints = nullptr, const PathOptions& opts = {});

class PathFailure : public SolverError {
 public:
  PathFailure(const std::string& what, std::vector<PathTraceEntry> trace)
      : SolverError(what), trace_(std::move(trace)) {}
  const std::vector<PathTraceEntry>& trace() const { return trace_; }

 private:
  std::vector<PathTraceEntry> trace_;
};

// Reduced problem V(u) = min over (y, xi) of J_gamma subject to the state
// equation and y + eps xi >= 0, xi >= 0. With `face`, the inequality
// constraints are replaced by the equalities of that face, so V is quadratic.
struct ReducedEvaluation {
  double value = 0.0;
  Vector gradient;  // Euclidean gradient in u: S_L (nu u - tau p_C)
  KktState state;
  ActiveSets sets;
};

ReducedEvaluation evaluate_reduced(const ControlProblemData& data, const StateOperators& ops, const Vector& u,
                                   double gamma, double epsilon, const ActiveSets* face = nullptr,
                                   const PathOptions& opts = {});

Vector reduced_gradient(const ControlProblemData& data, const StateOperators& ops, const Vector& u, double gamma,
                        double epsilon, const ActiveSets* face = nullptr);

}  // namespace meltctl
