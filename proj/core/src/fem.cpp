#include "meltctl/fem.hpp"

#include <cmath>
#include <sstream>

#include "meltctl/errors.hpp"

namespace meltctl {

namespace {

struct ElementMatrices {
  double mass[3][3];
  double stiff[3][3];  // unit conductivity
};

ElementMatrices element_matrices(const StructuredMesh& mesh, int e) {
  ElementMatrices em{};
  const auto& el = mesh.elements[e];
  if (mesh.dimension == 1) {
    const double h = mesh.element_measure(e);
    em.mass[0][0] = em.mass[1][1] = h / 3.0;
    em.mass[0][1] = em.mass[1][0] = h / 6.0;
    em.stiff[0][0] = em.stiff[1][1] = 1.0 / h;
    em.stiff[0][1] = em.stiff[1][0] = -1.0 / h;
    return em;
  }
  const Point& a = mesh.nodes[el[0]];
  const Point& b = mesh.nodes[el[1]];
  const Point& c = mesh.nodes[el[2]];
  const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
  const double area = 0.5 * std::abs(det);
  // Gradients of the barycentric functions.
  const double gx[3] = {(b[1] - c[1]) / det, (c[1] - a[1]) / det, (a[1] - b[1]) / det};
  const double gy[3] = {(c[0] - b[0]) / det, (a[0] - c[0]) / det, (b[0] - a[0]) / det};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      em.mass[i][j] = area / 12.0 * (i == j ? 2.0 : 1.0);
      em.stiff[i][j] = area * (gx[i] * gx[j] + gy[i] * gy[j]);
    }
  }
  return em;
}

SparseMatrix restrict_matrix(const SparseMatrix& full, const std::vector<int>& free_index, int n_free) {
  std::vector<Triplet> trip;
  trip.reserve(full.nonZeros());
  for (int col = 0; col < full.outerSize(); ++col) {
    const int fc = free_index[col];
    if (fc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
      const int fr = free_index[it.row()];
      if (fr >= 0) trip.emplace_back(fr, fc, it.value());
    }
  }
  SparseMatrix out(n_free, n_free);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace

std::vector<int> control_nodes(const StructuredMesh& mesh) {
  std::vector<int> out;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (mesh.tags[i] == BoundaryTag::Control) out.push_back(i);
  }
  return out;
}

SparseMatrix boundary_mass(const StructuredMesh& mesh) {
  const std::vector<int> ctrl = control_nodes(mesh);
  if (ctrl.empty()) throw InvalidArgument("boundary_mass: mesh has no control nodes");
  std::vector<int> cidx(mesh.num_nodes(), -1);
  for (std::size_t k = 0; k < ctrl.size(); ++k) cidx[ctrl[k]] = static_cast<int>(k);

  const int nc = static_cast<int>(ctrl.size());
  SparseMatrix S(nc, nc);
  if (mesh.dimension == 1) {
    std::vector<Triplet> trip;
    for (int k = 0; k < nc; ++k) trip.emplace_back(k, k, 1.0);
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
  }
  std::vector<Triplet> trip;
  for (const auto& f : mesh.facets) {
    if (f.tag != BoundaryTag::Control) continue;
    const int a = cidx[f.nodes[0]];
    const int b = cidx[f.nodes[1]];
    // Segments touching a higher-priority (Dirichlet) corner are not part of
    // the discrete control boundary.
    if (a < 0 || b < 0) continue;
    const double h = f.measure;
    trip.emplace_back(a, a, h / 3.0);
    trip.emplace_back(b, b, h / 3.0);
    trip.emplace_back(a, b, h / 6.0);
    trip.emplace_back(b, a, h / 6.0);
  }
  S.setFromTriplets(trip.begin(), trip.end());
  for (int k = 0; k < nc; ++k) {
    if (!(S.coeff(k, k) > 0.0)) {
      std::ostringstream msg;
      msg << "boundary_mass: control node " << ctrl[k] << " is not on any control segment";
      throw InvalidArgument(msg.str());
    }
  }
  return S;
}

StateOperators assemble_operators(const StructuredMesh& mesh, double kappa, double tau) {
  return assemble_operators(mesh, Vector::Constant(mesh.num_nodes(), kappa), tau);
}

StateOperators assemble_operators(const StructuredMesh& mesh, const Vector& kappa, double tau) {
  const int n = mesh.num_nodes();
  if (kappa.size() != n) throw InvalidArgument("assemble_operators: kappa size does not match mesh");
  for (int i = 0; i < n; ++i) {
    if (!(kappa[i] > 0.0) || !std::isfinite(kappa[i])) {
      std::ostringstream msg;
      msg << "assemble_operators: conductivity must be positive (node " << i << ", value " << kappa[i] << ")";
      throw InvalidArgument(msg.str());
    }
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("assemble_operators: tau must be positive");

  StateOperators ops;
  ops.tau = tau;
  ops.kappa = kappa;

  const int npe = mesh.nodes_per_element();
  std::vector<Triplet> tm, tk, tk1;
  tm.reserve(mesh.num_elements() * npe * npe);
  tk.reserve(tm.capacity());
  tk1.reserve(tm.capacity());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements[e];
    const ElementMatrices em = element_matrices(mesh, e);
    double ke = 0.0;
    for (int a = 0; a < npe; ++a) ke += kappa[el[a]];
    ke /= npe;
    for (int a = 0; a < npe; ++a) {
      for (int b = 0; b < npe; ++b) {
        tm.emplace_back(el[a], el[b], em.mass[a][b]);
        tk.emplace_back(el[a], el[b], ke * em.stiff[a][b]);
        tk1.emplace_back(el[a], el[b], em.stiff[a][b]);
      }
    }
  }
  ops.M.resize(n, n);
  ops.K.resize(n, n);
  ops.K1.resize(n, n);
  ops.M.setFromTriplets(tm.begin(), tm.end());
  ops.K.setFromTriplets(tk.begin(), tk.end());
  ops.K1.setFromTriplets(tk1.begin(), tk1.end());
  ops.H1 = ops.M + ops.K1;
  ops.lumped_mass = ops.M * Vector::Ones(n);

  ops.free_index.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (mesh.tags[i] == BoundaryTag::Dirichlet) {
      ops.dirichlet_nodes.push_back(i);
    } else {
      ops.free_index[i] = static_cast<int>(ops.free_nodes.size());
      ops.free_nodes.push_back(i);
    }
  }
  const int nf = ops.num_free();
  if (nf == 0) throw InvalidArgument("assemble_operators: every node is Dirichlet");

  SparseMatrix Afull = SparseMatrix(ops.K * tau);
  for (int i = 0; i < n; ++i) Afull.coeffRef(i, i) += ops.lumped_mass[i];
  Afull.makeCompressed();
  ops.A = restrict_matrix(Afull, ops.free_index, nf);

  ops.control_nodes = control_nodes(mesh);
  for (int node : ops.control_nodes) ops.control_free.push_back(ops.free_index[node]);
  if (!ops.control_nodes.empty()) {
    ops.S = boundary_mass(mesh);
    ops.control_weights = ops.S * Vector::Ones(ops.num_controls());
    std::vector<Triplet> tb;
    for (int k = 0; k < ops.num_controls(); ++k) {
      tb.emplace_back(ops.control_free[k], k, tau * ops.control_weights[k]);
    }
    ops.B.resize(nf, ops.num_controls());
    ops.B.setFromTriplets(tb.begin(), tb.end());
  } else {
    ops.S.resize(0, 0);
    ops.control_weights.resize(0);
    ops.B.resize(nf, 0);
  }
  return ops;
}

Vector StateOperators::restrict_to_free(const Vector& full) const {
  Vector out(num_free());
  for (int k = 0; k < num_free(); ++k) out[k] = full[free_nodes[k]];
  return out;
}

Vector StateOperators::extend_from_free(const Vector& free) const {
  Vector out = Vector::Zero(num_nodes());
  for (int k = 0; k < num_free(); ++k) out[free_nodes[k]] = free[k];
  return out;
}

Vector StateOperators::lumped_mass_free() const { return restrict_to_free(lumped_mass); }

Vector StateOperators::control_from_nodes(const Vector& full) const {
  Vector out(num_controls());
  for (int k = 0; k < num_controls(); ++k) out[k] = full[control_nodes[k]];
  return out;
}

double h1_norm_sq(const StateOperators& ops, const Vector& w) {
  if (w.size() != ops.num_nodes()) throw InvalidArgument("h1_norm_sq: dimension mismatch");
  return w.dot(ops.H1 * w);
}

double l2_norm_sq(const StateOperators& ops, const Vector& w) {
  if (w.size() != ops.num_nodes()) throw InvalidArgument("l2_norm_sq: dimension mismatch");
  return w.dot(ops.M * w);
}

}  // namespace meltctl
