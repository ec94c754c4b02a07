#include "meltctl/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "meltctl/errors.hpp"
#include "meltctl/mesh.hpp"

namespace meltctl {

EnumerationResult enumerate_state(const StateOperators& ops, const Vector& u, const AdvectedPair& advected,
                                  int max_free, double sign_tol) {
  const int n = ops.num_free();
  if (n > max_free || n > 24) throw InvalidArgument("enumerate_state: too many free nodes for enumeration");
  const Matrix A = Matrix(ops.A);
  const Vector f = state_load(ops, u, advected);
  const Vector m = ops.lumped_mass_free();
  const double scale = std::max(1.0, f.lpNorm<Eigen::Infinity>());

  EnumerationResult out;
  bool found = false;
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    ++out.patterns_tried;
    // Bit i set: y_i = 0 (xi_i free); clear: xi_i = 0 (y_i free).
    Eigen::VectorXi inactive_idx(n);
    int ni = 0;
    for (int i = 0; i < n; ++i) {
      if (!(mask >> i & 1ul)) inactive_idx[ni++] = i;
    }
    Vector y = Vector::Zero(n);
    if (ni > 0) {
      Matrix Aii(ni, ni);
      Vector fi(ni);
      for (int a = 0; a < ni; ++a) {
        fi[a] = f[inactive_idx[a]];
        for (int b = 0; b < ni; ++b) Aii(a, b) = A(inactive_idx[a], inactive_idx[b]);
      }
      const Vector yi = Aii.fullPivLu().solve(fi);
      for (int a = 0; a < ni; ++a) y[inactive_idx[a]] = yi[a];
    }
    Vector mu = A * y - f;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (mask >> i & 1ul) {
        ok = mu[i] >= -sign_tol * scale;
      } else {
        ok = y[i] >= -sign_tol * scale;
        mu[i] = 0.0;
      }
    }
    if (!ok) continue;
    ++out.patterns_feasible;
    if (!found) {
      found = true;
      out.solution.y = ops.extend_from_free(y);
      out.solution.xi = ops.extend_from_free(mu.cwiseQuotient(m)) + dirichlet_solid_fraction(ops, advected);
      out.solution.stats.method = "enumeration";
      out.solution.stats.iterations = out.patterns_tried;
      out.solution.complementarity_residual =
          (ops.lumped_mass.cwiseProduct(out.solution.y).cwiseProduct(out.solution.xi)).sum();
    }
  }
  if (!found) throw SolverError("enumerate_state: no sign pattern satisfies the complementarity conditions");
  return out;
}

TinyInstance random_instance(int free_nodes, std::mt19937_64& rng) {
  if (free_nodes < 2) throw InvalidArgument("random_instance: need at least 2 free nodes");
  std::uniform_real_distribution<double> U(0.0, 1.0);
  TinyInstance inst;
  const double length = 0.5 + 3.5 * U(rng);
  inst.mesh = build_interval_mesh(length, free_nodes, {BoundaryTag::Control, BoundaryTag::Dirichlet});
  const double tau = std::pow(10.0, -3.0 + 2.7 * U(rng));
  const int n = inst.mesh.num_nodes();
  Vector kappa(n);
  for (int i = 0; i < n; ++i) kappa[i] = 0.2 + 2.8 * U(rng);
  inst.ops = assemble_operators(inst.mesh, kappa, tau);
  inst.u = Vector::Constant(inst.ops.num_controls(), U(rng) < 0.2 ? 0.0 : 5.0 * U(rng));
  inst.advected.y_bar.resize(n);
  inst.advected.xi_bar.resize(n);
  for (int i = 0; i < n; ++i) {
    const double a = U(rng);
    inst.advected.y_bar[i] = a < 0.4 ? 0.0 : 2.0 * U(rng);
    const double b = U(rng);
    inst.advected.xi_bar[i] = b < 0.3 ? 1.0 : (b < 0.5 ? 0.0 : U(rng));
  }
  return inst;
}

}  // namespace meltctl
