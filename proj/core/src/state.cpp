#include "meltctl/state.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "meltctl/errors.hpp"

namespace meltctl {

namespace {

SparseMatrix principal_submatrix(const SparseMatrix& A, const std::vector<int>& idx, const std::vector<int>& pos) {
  std::vector<Triplet> trip;
  for (std::size_t c = 0; c < idx.size(); ++c) {
    for (SparseMatrix::InnerIterator it(A, idx[c]); it; ++it) {
      const int r = pos[it.row()];
      if (r >= 0) trip.emplace_back(r, static_cast<int>(c), it.value());
    }
  }
  SparseMatrix out(idx.size(), idx.size());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

// Solves A y = f with y fixed to 0 on the active set.
Vector solve_inactive(const SparseMatrix& A, const Vector& f, const std::vector<char>& active) {
  const int n = static_cast<int>(f.size());
  std::vector<int> idx;
  std::vector<int> pos(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!active[i]) {
      pos[i] = static_cast<int>(idx.size());
      idx.push_back(i);
    }
  }
  Vector y = Vector::Zero(n);
  if (idx.empty()) return y;
  const SparseMatrix Aii = principal_submatrix(A, idx, pos);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(Aii);
  if (ldlt.info() != Eigen::Success) throw SolverError("obstacle solver: factorization of A failed");
  Vector fi(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) fi[k] = f[idx[k]];
  const Vector yi = ldlt.solve(fi);
  for (std::size_t k = 0; k < idx.size(); ++k) y[idx[k]] = yi[k];
  return y;
}

std::string key_of(const std::vector<char>& mask) { return std::string(mask.begin(), mask.end()); }

void check_signs(const StateOperators& ops, const Vector& u, const AdvectedPair& adv, double tol) {
  auto fail = [](const std::string& field, int i, double v) {
    std::ostringstream msg;
    msg << "solve_state: precondition violated for " << field << " at index " << i << " (value " << v << ")";
    throw InvalidArgument(msg.str());
  };
  if (u.size() != ops.num_controls()) throw InvalidArgument("solve_state: control size mismatch");
  if (adv.y_bar.size() != ops.num_nodes() || adv.xi_bar.size() != ops.num_nodes()) {
    throw InvalidArgument("solve_state: advected field size mismatch");
  }
  for (int i = 0; i < u.size(); ++i) {
    if (!(u[i] >= -tol)) fail("u", i, u[i]);
  }
  for (int i = 0; i < ops.num_nodes(); ++i) {
    if (!(adv.y_bar[i] >= -tol)) fail("y_bar", i, adv.y_bar[i]);
    if (!(adv.xi_bar[i] >= -tol && adv.xi_bar[i] <= 1.0 + tol)) fail("xi_bar", i, adv.xi_bar[i]);
  }
}

}  // namespace

Vector state_load(const StateOperators& ops, const Vector& u, const AdvectedPair& advected) {
  const Vector m = ops.lumped_mass_free();
  Vector g = m.cwiseProduct(ops.restrict_to_free(advected.y_bar - advected.xi_bar));
  if (ops.num_controls() > 0) g += ops.B * u;
  return g;
}

Vector dirichlet_solid_fraction(const StateOperators& ops, const AdvectedPair& advected) {
  Vector xi = Vector::Zero(ops.num_nodes());
  for (int node : ops.dirichlet_nodes) xi[node] = std::max(0.0, advected.xi_bar[node] - advected.y_bar[node]);
  return xi;
}

StateSolution solve_obstacle(const StateOperators& ops, const Vector& f, const StateOptions& opts,
                             const std::vector<char>* initial_active) {
  const int n = ops.num_free();
  if (f.size() != n) throw InvalidArgument("solve_obstacle: load size mismatch");
  const SparseMatrix& A = ops.A;
  const Vector c = A.diagonal();
  const Vector m = ops.lumped_mass_free();

  std::vector<char> active(n);
  if (initial_active && static_cast<int>(initial_active->size()) == n) {
    active = *initial_active;
  } else {
    for (int i = 0; i < n; ++i) active[i] = f[i] < 0.0;
  }

  StateSolution sol;
  sol.stats.method = "pdas";
  std::set<std::string> seen;
  Vector y, mu;
  bool converged = false;
  auto pdas = [&](int max_it) {
    for (int it = 0; it < max_it; ++it) {
      ++sol.stats.iterations;
      y = solve_inactive(A, f, active);
      mu = A * y - f;
      int changes = 0;
      std::vector<char> next(n);
      for (int i = 0; i < n; ++i) {
        if (!active[i]) mu[i] = 0.0;
        next[i] = mu[i] - c[i] * y[i] > 0.0;
        changes += next[i] != active[i];
      }
      sol.stats.history.push_back(changes);
      if (changes == 0) return true;
      if (!seen.insert(key_of(next)).second) return false;
      active.swap(next);
    }
    return false;
  };
  seen.insert(key_of(active));
  converged = pdas(opts.max_iterations);

  if (!converged) {
    // Projected SOR from the last iterate, then re-enter the active-set method
    // from its zero pattern to recover an exact solution.
    sol.stats.method = "psor";
    Vector z = y.size() == n ? Vector(y.cwiseMax(0.0)) : Vector(Vector::Zero(n));
    double change = 0.0;
    int sweep = 0;
    for (; sweep < opts.psor_max_sweeps; ++sweep) {
      change = 0.0;
      for (int i = 0; i < n; ++i) {
        double r = f[i];
        double diag = 0.0;
        for (SparseMatrix::InnerIterator it(A, i); it; ++it) {
          if (it.row() == i) diag = it.value();
          r -= it.value() * z[it.row()];
        }
        const double zn = std::max(0.0, z[i] + opts.psor_omega * r / diag);
        change = std::max(change, std::abs(zn - z[i]));
        z[i] = zn;
      }
      if (change <= opts.psor_tol * std::max(1.0, z.lpNorm<Eigen::Infinity>())) break;
    }
    sol.stats.iterations += sweep;
    for (int i = 0; i < n; ++i) active[i] = z[i] <= 0.0;
    seen.clear();
    seen.insert(key_of(active));
    if (pdas(opts.max_iterations)) {
      sol.stats.method = "psor+pdas";
    } else {
      if (change > 1e3 * opts.psor_tol * std::max(1.0, z.lpNorm<Eigen::Infinity>())) {
        throw SolverError("obstacle solver did not converge", sol.stats.history);
      }
      y = z;
      mu = (A * y - f).cwiseMax(0.0);
      for (int i = 0; i < n; ++i) {
        if (y[i] > 0.0) mu[i] = 0.0;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    if (active[i] && sol.stats.method != "psor") y[i] = 0.0;
  }
  Vector xi_free = mu.cwiseQuotient(m);
  sol.y = ops.extend_from_free(y);
  sol.xi = ops.extend_from_free(xi_free);
  sol.stats.residual = (A * y - f - m.cwiseProduct(xi_free)).lpNorm<Eigen::Infinity>();
  return sol;
}

StateSolution solve_state(const StateOperators& ops, const Vector& u, const AdvectedPair& advected,
                          const StateOptions& opts, const std::vector<char>* initial_active) {
  check_signs(ops, u, advected, opts.sign_tol);
  StateSolution sol = solve_obstacle(ops, state_load(ops, u, advected), opts, initial_active);
  sol.xi += dirichlet_solid_fraction(ops, advected);
  sol.complementarity_residual = (ops.lumped_mass.cwiseProduct(sol.y).cwiseProduct(sol.xi)).sum();
  return sol;
}

double regularized_heaviside(double x, double eps) { return std::clamp(1.0 - x / eps, 0.0, 1.0); }

StateSolution solve_state_regularized(const StateOperators& ops, const Vector& u, const AdvectedPair& advected,
                                      double epsilon, const RegularizedOptions& opts) {
  if (!(epsilon > 0.0)) throw InvalidArgument("solve_state_regularized: epsilon must be positive");
  const int n = ops.num_free();
  const Vector f = state_load(ops, u, advected);
  const Vector m = ops.lumped_mass_free();
  const SparseMatrix& A = ops.A;

  auto H = [&](const Vector& y) {
    Vector h(n);
    for (int i = 0; i < n; ++i) h[i] = regularized_heaviside(y[i], epsilon);
    return h;
  };
  auto residual = [&](const Vector& y) -> Vector { return A * y - m.cwiseProduct(H(y)) - f; };

  StateSolution sol;
  sol.stats.method = "regularized-fixed-point";
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_a(A);
  if (ldlt_a.info() != Eigen::Success) throw SolverError("regularized solver: factorization of A failed");

  // Plain fixed-point iterate y = T(y0) from y0 = 0, then Newton on y - T(y) = 0
  // with residual backtracking.
  Vector y = ldlt_a.solve(m.cwiseProduct(H(Vector::Zero(n))) + f);
  Vector r = residual(y);
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    ++sol.stats.iterations;
    SparseMatrix J = A;
    for (int i = 0; i < n; ++i) {
      if (y[i] > 0.0 && y[i] < epsilon) J.coeffRef(i, i) += m[i] / epsilon;
    }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(J);
    if (ldlt.info() != Eigen::Success) throw SolverError("regularized solver: Newton matrix factorization failed");
    const Vector step = ldlt.solve(-r);
    const double r0 = r.norm();
    double alpha = 1.0;
    Vector y_new = y + step;
    Vector r_new = residual(y_new);
    while (r_new.norm() > (1.0 - 1e-4 * alpha) * r0 && alpha > 1e-12) {
      alpha *= 0.5;
      y_new = y + alpha * step;
      r_new = residual(y_new);
    }
    const double dy = (y_new - y).norm();
    y = y_new;
    r = r_new;
    sol.stats.history.push_back(r.norm());
    if (dy <= opts.rel_tol * y.norm() + opts.abs_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw SolverError("regularized solver: fixed point not reached", sol.stats.history);

  sol.y = ops.extend_from_free(y);
  sol.xi = ops.extend_from_free(H(y)) + dirichlet_solid_fraction(ops, advected);
  sol.stats.residual = r.lpNorm<Eigen::Infinity>();
  sol.complementarity_residual = (ops.lumped_mass.cwiseProduct(sol.y).cwiseProduct(sol.xi)).sum();
  return sol;
}

MaximumPrincipleReport check_maximum_principle(const Vector& y, const Vector& xi, double tol) {
  MaximumPrincipleReport rep;
  auto consider = [&](double violation, int node, const char* field) {
    if (violation > rep.worst_violation) {
      rep.worst_violation = violation;
      rep.worst_node = node;
      rep.field = field;
    }
  };
  for (int i = 0; i < y.size(); ++i) {
    consider(-y[i], i, "y");
    if (!std::isfinite(y[i])) consider(INFINITY, i, "y");
  }
  for (int i = 0; i < xi.size(); ++i) {
    consider(-xi[i], i, "xi");
    consider(xi[i] - 1.0, i, "xi");
    if (!std::isfinite(xi[i])) consider(INFINITY, i, "xi");
  }
  rep.ok = rep.worst_violation <= tol;
  return rep;
}

MaximumPrincipleReport check_maximum_principle(const StateSolution& sol, double tol) {
  return check_maximum_principle(sol.y, sol.xi, tol);
}

}  // namespace meltctl
