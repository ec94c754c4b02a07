#include "meltctl/control.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "meltctl/errors.hpp"
#include "meltctl/state.hpp"

namespace meltctl {

double EpsilonRule::operator()(double gamma) const { return 1.0 / (offset + std::pow(gamma, power)); }

std::string EpsilonRule::describe() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "1/(%g+gamma^%g)", offset, power);
  return buf;
}

void PathSchedule::validate() const {
  if (gammas.empty() || gammas.size() != epsilons.size()) {
    throw InvalidArgument("schedule: gammas and epsilons must be non-empty and of equal length");
  }
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    if (!(gammas[k] > 0.0) || !(epsilons[k] > 0.0)) throw InvalidArgument("schedule: values must be positive");
    if (k > 0 && !(gammas[k] > gammas[k - 1])) throw InvalidArgument("schedule: gammas must increase strictly");
    if (k > 0 && !(epsilons[k] < epsilons[k - 1])) throw InvalidArgument("schedule: epsilons must decrease strictly");
  }
  if (gammas.size() > 1 && !(gammas.back() * epsilons.back() < gammas.front() * epsilons.front())) {
    throw InvalidArgument("schedule: gamma*eps must decrease along the path");
  }
}

PathSchedule make_schedule(double gamma0, double growth, int count, const EpsilonRule& rule) {
  if (!(gamma0 > 0.0) || !(growth > 1.0) || count < 1) {
    throw InvalidArgument("schedule: need gamma0 > 0, growth > 1, count >= 1");
  }
  PathSchedule s;
  for (int k = 1; k <= count; ++k) {
    const double g = gamma0 * std::pow(growth, k);
    s.gammas.push_back(g);
    s.epsilons.push_back(rule(g));
  }
  s.validate();
  return s;
}

PathSchedule default_schedule() { return make_schedule(1e-3, 1.5, 40); }

JTerms evaluate_J_terms(const ControlProblemData& data, const StateOperators& ops, const Vector& y, const Vector& xi,
                        const Vector& u) {
  if (y.size() != ops.num_nodes() || xi.size() != ops.num_nodes() || data.y_d.size() != ops.num_nodes() ||
      data.xi_d.size() != ops.num_nodes() || u.size() != ops.num_controls()) {
    throw InvalidArgument("evaluate_J: dimension mismatch");
  }
  JTerms t;
  const Vector e = y - data.y_d;
  t.state = 0.5 * e.dot(ops.H1 * e);
  const Vector d = xi - data.xi_d;
  t.xi = 0.5 * d.cwiseProduct(d).dot(ops.lumped_mass);
  t.control = ops.num_controls() > 0 ? 0.5 * data.nu * u.cwiseProduct(u).dot(ops.control_weights) : 0.0;
  return t;
}

double evaluate_J(const ControlProblemData& data, const StateOperators& ops, const Vector& y, const Vector& xi,
                  const Vector& u) {
  return evaluate_J_terms(data, ops, y, xi, u).total();
}

double penalty_term(const StateOperators& ops, const Vector& y, const Vector& xi, double epsilon) {
  if (y.size() != ops.num_nodes() || xi.size() != ops.num_nodes()) throw InvalidArgument("penalty_term: size");
  return (ops.lumped_mass.cwiseProduct(xi).cwiseProduct(y + epsilon * xi)).sum();
}

double evaluate_J_gamma(const ControlProblemData& data, const StateOperators& ops, const Vector& y, const Vector& xi,
                        const Vector& u, double gamma, double epsilon) {
  return evaluate_J(data, ops, y, xi, u) + gamma * penalty_term(ops, y, xi, epsilon);
}

double KktResiduals::max() const { return *std::max_element(r, r + 5); }

Vector project_xi(const Vector& p, const Vector& xi_d, const Vector& lam, const Vector& y, double gamma,
                  double epsilon) {
  return ((p + xi_d + epsilon * lam - gamma * y) / (1.0 + 2.0 * gamma * epsilon)).cwiseMax(0.0);
}

Vector project_u(const Vector& p_control, double tau, double nu) { return (tau * p_control / nu).cwiseMax(0.0); }

double PathResult::penalty_constant() const {
  double c = 0.0;
  for (const auto& e : trace) c = std::max(c, e.gamma * e.penalty);
  return c;
}

namespace {

double max_of(std::initializer_list<double> xs) { return std::max(1.0, *std::max_element(xs.begin(), xs.end())); }

double weighted_norm(const Vector& v, const Vector& w) { return std::sqrt(v.cwiseProduct(v).dot(w)); }

// Free-node quantities shared by the inner and outer solvers.
struct Problem {
  const ControlProblemData& data;
  const StateOperators& ops;
  int n = 0;
  int nc = 0;
  Vector m;       // lumped mass, free nodes
  SparseMatrix Hff;
  Vector h;       // (H1 y_d)_F
  Vector xid;     // xi_d on free nodes
  Vector g;       // advected load on free nodes
  Vector xi_dir;  // fixed solid fraction on Dirichlet nodes (full vector, 0 elsewhere)

  Problem(const ControlProblemData& d, const StateOperators& o) : data(d), ops(o) {
    n = ops.num_free();
    nc = ops.num_controls();
    m = ops.lumped_mass_free();
    SparseMatrix H1 = ops.H1;
    std::vector<Triplet> trip;
    for (int col = 0; col < H1.outerSize(); ++col) {
      const int fc = ops.free_index[col];
      if (fc < 0) continue;
      for (SparseMatrix::InnerIterator it(H1, col); it; ++it) {
        const int fr = ops.free_index[it.row()];
        if (fr >= 0) trip.emplace_back(fr, fc, it.value());
      }
    }
    Hff.resize(n, n);
    Hff.setFromTriplets(trip.begin(), trip.end());
    h = ops.restrict_to_free(ops.H1 * data.y_d);
    xid = ops.restrict_to_free(data.xi_d);
    g = state_load(ops, Vector::Zero(nc), data.advected);
    xi_dir = dirichlet_solid_fraction(ops, data.advected);
  }

  Vector control_load(const Vector& u) const { return nc > 0 ? Vector(ops.B * u) : Vector::Zero(n); }

  Vector p_control(const Vector& p_free) const {
    Vector pc(nc);
    for (int j = 0; j < nc; ++j) pc[j] = p_free[ops.control_free[j]];
    return pc;
  }
};

struct FreeIterate {
  Vector y, xi, p, lam;
};

KktState to_state(const Problem& P, const FreeIterate& it, const Vector& u, double gamma, double epsilon) {
  KktState s;
  s.y = P.ops.extend_from_free(it.y);
  s.xi = P.ops.extend_from_free(it.xi) + P.xi_dir;
  s.p = P.ops.extend_from_free(it.p);
  s.lam = P.ops.extend_from_free(it.lam);
  s.u = u;
  s.gamma = gamma;
  s.epsilon = epsilon;
  return s;
}

KktResiduals residuals_free(const Problem& P, const FreeIterate& it, const Vector& u, double gamma, double epsilon) {
  const auto& ops = P.ops;
  KktResiduals R;
  const Vector Ay = ops.A * it.y;
  const Vector mxi = P.m.cwiseProduct(it.xi);
  const Vector load = P.g + P.control_load(u);
  R.r[0] = (Ay - mxi - load).norm() / max_of({Ay.norm(), mxi.norm(), load.norm()});

  const Vector Ap = ops.A * it.p;
  const Vector Hy = P.Hff * it.y - P.h;
  const Vector gm = gamma * mxi;
  const Vector ml = P.m.cwiseProduct(it.lam);
  R.r[1] = (Ap + Hy + gm - ml).norm() / max_of({Ap.norm(), Hy.norm(), gm.norm(), ml.norm()});

  const Vector w = it.y + epsilon * it.xi;
  R.r[2] = w.cwiseMin(it.lam).norm() / max_of({w.norm(), it.lam.norm()});

  const Vector xi_proj = project_xi(it.p, P.xid, it.lam, it.y, gamma, epsilon);
  R.r[3] = (it.xi - xi_proj).norm() / max_of({it.xi.norm()});

  if (P.nc > 0) {
    const Vector target = project_u(P.p_control(it.p), ops.tau, P.data.nu);
    const Vector& wc = ops.control_weights;
    R.r[4] = weighted_norm(u - target, wc) / max_of({weighted_norm(u, wc)});
  }
  return R;
}

// Face system of the penalized problem for fixed u and fixed active sets.
// Unknowns are ordered [y, xi, p, lam] on free nodes.
class FaceSolver {
 public:
  explicit FaceSolver(const Problem& P) : P_(P) {}

  void factorize(const ActiveSets& sets, double gamma, double epsilon) {
    const int n = P_.n;
    std::vector<Triplet> trip;
    trip.reserve(2 * P_.ops.A.nonZeros() + P_.Hff.nonZeros() + 12 * n);
    const SparseMatrix& A = P_.ops.A;
    for (int col = 0; col < A.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
        trip.emplace_back(it.row(), col, it.value());              // state: A y
        trip.emplace_back(n + it.row(), 2 * n + col, it.value());  // adjoint: A p
      }
    }
    for (int col = 0; col < P_.Hff.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(P_.Hff, col); it; ++it) trip.emplace_back(n + it.row(), col, it.value());
    }
    const double c = 1.0 + 2.0 * gamma * epsilon;
    for (int i = 0; i < n; ++i) {
      const double mi = P_.m[i];
      trip.emplace_back(i, n + i, -mi);
      trip.emplace_back(n + i, n + i, gamma * mi);
      trip.emplace_back(n + i, 3 * n + i, -mi);
      const bool ax = sets.xi_active[i];
      trip.emplace_back(2 * n + i, i, ax ? 0.0 : gamma);
      trip.emplace_back(2 * n + i, n + i, ax ? 1.0 : c);
      trip.emplace_back(2 * n + i, 2 * n + i, ax ? 0.0 : -1.0);
      trip.emplace_back(2 * n + i, 3 * n + i, ax ? 0.0 : -epsilon);
      const bool aw = sets.w_active[i];
      trip.emplace_back(3 * n + i, i, aw ? 1.0 : 0.0);
      trip.emplace_back(3 * n + i, n + i, aw ? epsilon : 0.0);
      trip.emplace_back(3 * n + i, 3 * n + i, aw ? 0.0 : 1.0);
    }
    K_.resize(4 * n, 4 * n);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();
    if (!analyzed_) {
      lu_.analyzePattern(K_);
      analyzed_ = true;
    }
    lu_.factorize(K_);
    if (lu_.info() != Eigen::Success) throw SolverError("face system is singular: " + lu_.lastErrorMessage());
    sets_ = sets;
  }

  FreeIterate solve(const Vector& u) const {
    const int n = P_.n;
    Vector rhs = Vector::Zero(4 * n);
    rhs.segment(0, n) = P_.g + P_.control_load(u);
    rhs.segment(n, n) = P_.h;
    for (int i = 0; i < n; ++i) rhs[2 * n + i] = sets_.xi_active[i] ? 0.0 : P_.xid[i];
    const Vector s = lu_.solve(rhs);
    return {s.segment(0, n), s.segment(n, n), s.segment(2 * n, n), s.segment(3 * n, n)};
  }

  // d p_C / d u on the current face (columns per control dof).
  Matrix adjoint_sensitivity() const {
    const int n = P_.n;
    const int nc = P_.nc;
    Matrix rhs = Matrix::Zero(4 * n, nc);
    for (int j = 0; j < nc; ++j) rhs(P_.ops.control_free[j], j) = P_.ops.tau * P_.ops.control_weights[j];
    const Matrix sol = lu_.solve(rhs);
    Matrix dpc(nc, nc);
    for (int j = 0; j < nc; ++j) {
      for (int i = 0; i < nc; ++i) dpc(i, j) = sol(2 * n + P_.ops.control_free[i], j);
    }
    return dpc;
  }

 private:
  const Problem& P_;
  SparseMatrix K_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
  ActiveSets sets_;
};

struct InnerResult {
  FreeIterate it;
  ActiveSets sets;
  int iterations = 0;
};

std::string key_of(const ActiveSets& s) {
  std::string k(s.xi_active.begin(), s.xi_active.end());
  k.append(s.w_active.begin(), s.w_active.end());
  return k;
}

// Primal-dual active-set iteration for the (y, xi) problem at fixed u, which
// is convex on the affine set of the state equation. On return the solver
// holds the factorization of the final face.
// Without `allow_biactive` a node asking for both constraints keeps only
// y + eps xi = 0: clusters of doubly constrained nodes can leave a state row
// without unknowns. Isolated biactive nodes at the solution are fine.
InnerResult active_set_inner(const Problem& P, FaceSolver& face, const Vector& u, double gamma, double epsilon,
                             ActiveSets sets, int max_it, bool allow_biactive) {
  const int n = P.n;
  const double c = 1.0 + 2.0 * gamma * epsilon;
  std::set<std::string> seen;
  seen.insert(key_of(sets));
  int limit = n;  // max set changes per iteration, reduced after a cycle
  InnerResult res;
  for (int it = 0; it < max_it; ++it) {
    ++res.iterations;
    face.factorize(sets, gamma, epsilon);
    FreeIterate x = face.solve(u);
    for (int i = 0; i < n; ++i) {
      if (sets.w_active[i]) {
        x.y[i] = -epsilon * x.xi[i];
      } else {
        x.lam[i] = 0.0;
      }
      if (sets.xi_active[i]) x.xi[i] = 0.0;
    }
    ActiveSets next{std::vector<char>(n), std::vector<char>(n)};
    std::vector<std::pair<double, int>> changes;
    bool infeasible_biactive = false;
    for (int i = 0; i < n; ++i) {
      const double w = x.y[i] + epsilon * x.xi[i];
      const double mu = sets.xi_active[i] ? c * x.xi[i] + gamma * x.y[i] - x.p[i] - epsilon * x.lam[i] - P.xid[i] : 0.0;
      const double sw = x.lam[i] - w;
      const double sx = mu - x.xi[i];
      next.w_active[i] = sw > 0.0;
      next.xi_active[i] = sx > 0.0 && (allow_biactive || !next.w_active[i]);
      if (sx > 0.0 && next.w_active[i] && !sets.xi_active[i] && x.xi[i] < 0.0) infeasible_biactive = true;
      if (next.w_active[i] != sets.w_active[i]) changes.emplace_back(std::abs(sw), i);
      if (next.xi_active[i] != sets.xi_active[i]) changes.emplace_back(std::abs(sx), n + i);
    }
    if (changes.empty()) {
      if (infeasible_biactive) {
        // Converged face violates xi >= 0 at a biactive node; switch those
        // nodes to the xi = 0 face and continue.
        for (int i = 0; i < n; ++i) {
          if (sets.w_active[i] && x.xi[i] < 0.0) {
            next.w_active[i] = 0;
            next.xi_active[i] = 1;
          }
        }
        if (!seen.insert(key_of(next)).second) throw SolverError("inner active-set iteration: biactive cycle");
        sets = next;
        continue;
      }
      res.it = std::move(x);
      res.sets = std::move(sets);
      return res;
    }
    if (static_cast<int>(changes.size()) > limit) {
      std::sort(changes.begin(), changes.end(), [](auto& a, auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
      ActiveSets partial = sets;
      for (int k = 0; k < limit; ++k) {
        const int idx = changes[k].second;
        if (idx < n) {
          partial.w_active[idx] = next.w_active[idx];
          if (partial.w_active[idx] && !allow_biactive) partial.xi_active[idx] = 0;
        } else {
          partial.xi_active[idx - n] = next.xi_active[idx - n];
          if (partial.xi_active[idx - n] && !allow_biactive) partial.w_active[idx - n] = 0;
        }
      }
      next = std::move(partial);
    }
    if (!seen.insert(key_of(next)).second) {
      if (limit == 1) throw SolverError("inner active-set iteration cycles");
      limit = std::max(1, std::min(limit, static_cast<int>(changes.size())) / 2);
      seen.clear();
      seen.insert(key_of(sets));
      continue;
    }
    sets = std::move(next);
  }
  throw SolverError("inner active-set iteration did not converge");
}

// Primal-dual interior-point method for the same problem. Used only to find
// the active sets when the active-set iteration cycles; the multipliers of
// xi >= 0 and y + eps xi >= 0 are mu and lam.
ActiveSets interior_point_sets(const Problem& P, const Vector& u, double gamma, double epsilon) {
  const int n = P.n;
  const Vector& m = P.m;
  const SparseMatrix& A = P.ops.A;
  const Vector load = P.g + P.control_load(u);
  const double c = 1.0 + 2.0 * gamma * epsilon;

  const StateSolution s0 = solve_obstacle(P.ops, load);
  Vector y = P.ops.restrict_to_free(s0.y).array() + 1e-2;
  Vector xi = P.ops.restrict_to_free(s0.xi).array() + 1e-2;
  Vector p = Vector::Zero(n);
  Vector mu = Vector::Ones(n);
  Vector lam = Vector::Ones(n);

  std::vector<Triplet> base;
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
      base.emplace_back(it.row(), 2 * n + col, it.value());
      base.emplace_back(2 * n + it.row(), col, it.value());
    }
  }
  for (int col = 0; col < P.Hff.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(P.Hff, col); it; ++it) base.emplace_back(it.row(), col, it.value());
  }
  for (int i = 0; i < n; ++i) {
    base.emplace_back(n + i, 2 * n + i, -m[i]);
    base.emplace_back(2 * n + i, n + i, -m[i]);
  }
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;

  for (int it = 0; it < 200; ++it) {
    const Vector w = y + epsilon * xi;
    const Vector ry = P.Hff * y - P.h + gamma * m.cwiseProduct(xi) + A * p - m.cwiseProduct(lam);
    const Vector rxi = m.cwiseProduct(c * xi + gamma * y - P.xid - p - epsilon * lam - mu);
    const Vector rp = A * y - m.cwiseProduct(xi) - load;
    const double gap = (xi.dot(mu) + w.dot(lam)) / (2.0 * n);
    const double scale = std::max({1.0, load.norm(), P.h.norm()});
    // Set identification only needs a small gap; the active-set pass polishes.
    if (std::max({ry.norm(), rxi.norm(), rp.norm()}) <= 1e-10 * scale && gap <= 1e-12) break;
    const double sigma = std::min(0.1, gap);
    const double target = sigma * gap;

    const Vector dl = lam.cwiseQuotient(w);
    const Vector dm = mu.cwiseQuotient(xi);
    std::vector<Triplet> trip = base;
    for (int i = 0; i < n; ++i) {
      trip.emplace_back(i, i, m[i] * dl[i]);
      trip.emplace_back(i, n + i, m[i] * (gamma + epsilon * dl[i]));
      trip.emplace_back(n + i, i, m[i] * (gamma + epsilon * dl[i]));
      trip.emplace_back(n + i, n + i, m[i] * (c + epsilon * epsilon * dl[i] + dm[i]));
    }
    SparseMatrix K(3 * n, 3 * n);
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(K);
      analyzed = true;
    }
    lu.factorize(K);
    if (lu.info() != Eigen::Success) {
      if (gap <= 1e-8) break;
      throw SolverError("interior-point system is singular");
    }

    // Eliminated multiplier steps: m dlam = m (target - w lam - lam dw) / w, same for mu.
    const Vector el = (Vector::Constant(n, target) - w.cwiseProduct(lam)).cwiseQuotient(w);
    const Vector em = (Vector::Constant(n, target) - xi.cwiseProduct(mu)).cwiseQuotient(xi);
    Vector rhs(3 * n);
    rhs.segment(0, n) = -ry + m.cwiseProduct(el);
    rhs.segment(n, n) = -rxi + m.cwiseProduct(epsilon * el + em);
    rhs.segment(2 * n, n) = -rp;
    const Vector d = lu.solve(rhs);
    const Vector dy = d.segment(0, n);
    const Vector dxi = d.segment(n, n);
    const Vector dp = d.segment(2 * n, n);
    const Vector dw = dy + epsilon * dxi;
    const Vector dlam = el - dl.cwiseProduct(dw);
    const Vector dmu = em - dm.cwiseProduct(dxi);

    double alpha = 1.0;
    auto bound = [&](const Vector& v, const Vector& dv) {
      for (int i = 0; i < n; ++i) {
        if (dv[i] < 0.0) alpha = std::min(alpha, -0.995 * v[i] / dv[i]);
      }
    };
    bound(xi, dxi);
    bound(w, dw);
    bound(mu, dmu);
    bound(lam, dlam);
    y += alpha * dy;
    xi += alpha * dxi;
    p += alpha * dp;
    mu += alpha * dmu;
    lam += alpha * dlam;
  }

  ActiveSets sets{std::vector<char>(n), std::vector<char>(n)};
  const Vector w = y + epsilon * xi;
  for (int i = 0; i < n; ++i) {
    sets.w_active[i] = lam[i] > w[i];
    sets.xi_active[i] = mu[i] > xi[i];
  }
  return sets;
}

InnerResult solve_inner(const Problem& P, FaceSolver& face, const Vector& u, double gamma, double epsilon,
                        ActiveSets sets, int max_it) {
  try {
    return active_set_inner(P, face, u, gamma, epsilon, std::move(sets), max_it, false);
  } catch (const SolverError&) {
  }
  return active_set_inner(P, face, u, gamma, epsilon, interior_point_sets(P, u, gamma, epsilon), max_it, true);
}

ActiveSets sets_from_state_response(const Problem& P, const Vector& u) {
  const StateSolution s = solve_obstacle(P.ops, P.g + P.control_load(u.cwiseMax(0.0)));
  const Vector y = P.ops.restrict_to_free(s.y);
  const Vector xi = P.ops.restrict_to_free(s.xi);
  ActiveSets sets{std::vector<char>(P.n), std::vector<char>(P.n)};
  for (int i = 0; i < P.n; ++i) {
    sets.w_active[i] = y[i] <= 0.0;
    sets.xi_active[i] = xi[i] <= 0.0 && !sets.w_active[i];
  }
  return sets;
}

double objective(const Problem& P, const FreeIterate& x, const Vector& u, double gamma, double epsilon) {
  const Vector y = P.ops.extend_from_free(x.y);
  const Vector xi = P.ops.extend_from_free(x.xi) + P.xi_dir;
  return evaluate_J_gamma(P.data, P.ops, y, xi, u, gamma, epsilon);
}

Vector gradient(const Problem& P, const FreeIterate& x, const Vector& u) {
  if (P.nc == 0) return Vector::Zero(0);
  return P.ops.control_weights.cwiseProduct(P.data.nu * u - P.ops.tau * P.p_control(x.p));
}

// min 1/2 d'Hd + g'd subject to d >= lo, H symmetric positive definite.
Vector box_qp(const Matrix& H, const Vector& g, const Vector& lo) {
  const int n = static_cast<int>(g.size());
  std::vector<char> active(n, 0);
  std::set<std::string> seen;
  Vector d = Vector::Zero(n);
  for (int it = 0; it < 100; ++it) {
    std::vector<int> I, Aidx;
    for (int i = 0; i < n; ++i) (active[i] ? Aidx : I).push_back(i);
    d = Vector::Zero(n);
    for (int i : Aidx) d[i] = lo[i];
    if (!I.empty()) {
      Matrix Hii(I.size(), I.size());
      Vector r(I.size());
      for (std::size_t a = 0; a < I.size(); ++a) {
        r[a] = -g[I[a]];
        for (int j : Aidx) r[a] -= H(I[a], j) * lo[j];
        for (std::size_t b = 0; b < I.size(); ++b) Hii(a, b) = H(I[a], I[b]);
      }
      const Vector di = Hii.llt().solve(r);
      for (std::size_t a = 0; a < I.size(); ++a) d[I[a]] = di[a];
    }
    const Vector grad = H * d + g;
    std::vector<char> next(n);
    bool same = true;
    for (int i = 0; i < n; ++i) {
      const double mult = active[i] ? grad[i] : 0.0;
      next[i] = mult - (d[i] - lo[i]) > 0.0;
      same = same && next[i] == active[i];
    }
    if (same) return d;
    if (!seen.insert(std::string(next.begin(), next.end())).second) break;
    active.swap(next);
  }
  // Projected Gauss-Seidel fallback; converges for positive definite H.
  d = d.cwiseMax(lo);
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = g[i] + H.row(i).dot(d);
      const double di = std::max(lo[i], d[i] - r / H(i, i));
      change = std::max(change, std::abs(di - d[i]));
      d[i] = di;
    }
    if (change <= 1e-15 * std::max(1.0, d.lpNorm<Eigen::Infinity>())) break;
  }
  return d;
}

struct GammaSolve {
  FreeIterate it;
  Vector u;
  ActiveSets sets;
  PathTraceEntry entry;
};

GammaSolve solve_gamma(const Problem& P, FaceSolver& face, Vector u, ActiveSets sets, double gamma, double epsilon,
                       const PathOptions& opts) {
  GammaSolve out;
  out.entry.gamma = gamma;
  out.entry.epsilon = epsilon;
  InnerResult cur = solve_inner(P, face, u, gamma, epsilon, std::move(sets), opts.max_inner);
  out.entry.inner_iterations += cur.iterations;
  double V = objective(P, cur.it, u, gamma, epsilon);
  KktResiduals R = residuals_free(P, cur.it, u, gamma, epsilon);
  std::vector<double> history{R.max()};

  for (int outer = 0; outer < opts.max_outer && P.nc > 0; ++outer) {
    if (R.max() <= opts.kkt_tol) break;
    ++out.entry.outer_iterations;
    const Vector g = gradient(P, cur.it, u);
    const Vector& w = P.ops.control_weights;

    // Reduced Hessian of V on the current face (face is factorized in `face`).
    const Matrix dpc = face.adjoint_sensitivity();
    Matrix Hr = -P.ops.tau * w.asDiagonal() * dpc;
    Hr.diagonal() += P.data.nu * w;
    Hr = 0.5 * (Hr + Hr.transpose()).eval();
    double shift = 0.0;
    const double scale = std::max(Hr.diagonal().cwiseAbs().maxCoeff(), P.data.nu * w.maxCoeff());
    while (true) {
      Matrix Hs = Hr;
      Hs.diagonal() += shift * w;
      Eigen::LLT<Matrix> llt(Hs);
      if (llt.info() == Eigen::Success) {
        Hr = Hs;
        break;
      }
      shift = shift == 0.0 ? 1e-10 * scale / w.maxCoeff() : shift * 10.0;
      out.entry.curvature_shift = true;
    }
    const Vector d = box_qp(Hr, g, -u);
    const double slope = g.dot(d);
    if (!(slope < 0.0)) break;  // stationary up to round-off

    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      const Vector trial = (u + alpha * d).cwiseMax(0.0);
      try {
        InnerResult next = solve_inner(P, face, trial, gamma, epsilon, cur.sets, opts.max_inner);
        out.entry.inner_iterations += next.iterations;
        const double Vn = objective(P, next.it, trial, gamma, epsilon);
        // A full step that stays on the current face minimizes the (shifted)
        // quadratic model of V exactly and therefore descends. Near the
        // solution the predicted decrease drops to the round-off in V; there
        // the KKT residual decides instead.
        const bool same_face = alpha == 1.0 && key_of(next.sets) == key_of(cur.sets);
        const bool unresolved = -slope <= 1e-10 * std::abs(V);
        if (same_face || Vn <= V + opts.armijo * alpha * slope + 1e-15 * std::abs(V) ||
            (unresolved && residuals_free(P, next.it, trial, gamma, epsilon).max() < R.max())) {
          u = trial;
          cur = std::move(next);
          V = Vn;
          accepted = true;
          break;
        }
      } catch (const SolverError&) {
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Restore the factorization of the current face before giving up.
      face.factorize(cur.sets, gamma, epsilon);
      break;
    }
    R = residuals_free(P, cur.it, u, gamma, epsilon);
    history.push_back(R.max());
  }
  if (P.nc == 0) R = residuals_free(P, cur.it, u, gamma, epsilon);

  out.entry.residuals = R;
  const KktState st = to_state(P, cur.it, u, gamma, epsilon);
  const JTerms jt = evaluate_J_terms(P.data, P.ops, st.y, st.xi, u);
  out.entry.J = jt.total();
  out.entry.penalty = penalty_term(P.ops, st.y, st.xi, epsilon);
  out.entry.J_gamma = out.entry.J + gamma * out.entry.penalty;
  if (P.nc > 0) {
    const Vector gt = P.data.nu * u - P.ops.tau * P.p_control(cur.it.p);
    out.entry.pg_norm = weighted_norm(u - (u - gt).cwiseMax(0.0), P.ops.control_weights);
  }
  out.it = std::move(cur.it);
  out.sets = std::move(cur.sets);
  out.u = std::move(u);
  return out;
}

}  // namespace

KktResiduals kkt_residual(const ControlProblemData& data, const StateOperators& ops, const KktState& state) {
  const Problem P(data, ops);
  FreeIterate it{ops.restrict_to_free(state.y), ops.restrict_to_free(state.xi), ops.restrict_to_free(state.p),
                 ops.restrict_to_free(state.lam)};
  return residuals_free(P, it, state.u, state.gamma, state.epsilon);
}

PathResult solve_penalized_step(const ControlProblemData& data, const StateOperators& ops,
                                const PathSchedule& schedule, const Vector* warm_u,
                                const std::vector<ActiveSets>* set_hints, const PathOptions& opts) {
  schedule.validate();
  if (!(data.nu > 0.0)) throw InvalidArgument("solve_penalized_step: nu must be positive");
  const Problem P(data, ops);
  FaceSolver face(P);

  Vector u = (warm_u && warm_u->size() == P.nc) ? Vector(warm_u->cwiseMax(0.0)) : Vector::Zero(P.nc);
  ActiveSets sets = sets_from_state_response(P, u);

  PathResult result;
  FreeIterate last;
  for (int k = 0; k < schedule.size(); ++k) {
    const double gamma = schedule.gammas[k];
    const double eps = schedule.epsilons[k];
    if (set_hints && k < static_cast<int>(set_hints->size()) && !(*set_hints)[k].empty() &&
        static_cast<int>((*set_hints)[k].xi_active.size()) == P.n) {
      sets = (*set_hints)[k];
    }
    GammaSolve gs;
    try {
      gs = solve_gamma(P, face, u, sets, gamma, eps, opts);
    } catch (const SolverError& e) {
      std::ostringstream msg;
      msg << "path solver failed at gamma index " << k + 1 << " (gamma=" << gamma << "): " << e.what();
      throw PathFailure(msg.str(), result.trace);
    }
    result.trace.push_back(gs.entry);
    if (gs.entry.residuals.max() > 1e3 * opts.kkt_tol && gs.entry.residuals.max() > 1e-6) {
      std::ostringstream msg;
      msg << "path solver stalled at gamma index " << k + 1 << " (gamma=" << gamma
          << "), KKT residual " << gs.entry.residuals.max();
      throw PathFailure(msg.str(), result.trace);
    }
    result.sets.push_back(gs.sets);
    u = gs.u;
    sets = gs.sets;
    last = std::move(gs.it);
  }
  result.state = to_state(P, last, u, schedule.gammas.back(), schedule.epsilons.back());
  return result;
}

ReducedEvaluation evaluate_reduced(const ControlProblemData& data, const StateOperators& ops, const Vector& u,
                                   double gamma, double epsilon, const ActiveSets* face_sets,
                                   const PathOptions& opts) {
  const Problem P(data, ops);
  if (u.size() != P.nc) throw InvalidArgument("evaluate_reduced: control size mismatch");
  FaceSolver face(P);
  ReducedEvaluation ev;
  FreeIterate x;
  if (face_sets) {
    face.factorize(*face_sets, gamma, epsilon);
    x = face.solve(u);
    ev.sets = *face_sets;
  } else {
    InnerResult r = solve_inner(P, face, u, gamma, epsilon, sets_from_state_response(P, u), opts.max_inner);
    x = std::move(r.it);
    ev.sets = std::move(r.sets);
  }
  ev.value = objective(P, x, u, gamma, epsilon);
  ev.gradient = gradient(P, x, u);
  ev.state = to_state(P, x, u, gamma, epsilon);
  return ev;
}

Vector reduced_gradient(const ControlProblemData& data, const StateOperators& ops, const Vector& u, double gamma,
                        double epsilon, const ActiveSets* face) {
  return evaluate_reduced(data, ops, u, gamma, epsilon, face).gradient;
}

}  // namespace meltctl
