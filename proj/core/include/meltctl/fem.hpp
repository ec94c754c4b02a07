#pragma once

#include <vector>

#include "meltctl/mesh.hpp"
#include "meltctl/types.hpp"

namespace meltctl {

// Discrete operators of the time-discrete state equation on P1 elements.
//
// Full-size matrices (M, K, K1, H1) act on all mesh nodes. A and B act on the
// free (non-Dirichlet) nodes only; Dirichlet values are eliminated. The
// zero-order part of A is the lumped mass, which keeps A an M-matrix.
struct StateOperators {
  double tau = 0.0;
  Vector kappa;  // nodal conductivity

  SparseMatrix M;   // consistent mass
  SparseMatrix K;   // kappa-weighted stiffness
  SparseMatrix K1;  // unit-conductivity stiffness
  SparseMatrix H1;  // M + K1, inner product of the objective
  Vector lumped_mass;

  std::vector<int> free_nodes;      // free index -> node
  std::vector<int> free_index;      // node -> free index, -1 on Dirichlet nodes
  std::vector<int> dirichlet_nodes;
  std::vector<int> control_nodes;   // control index -> node
  std::vector<int> control_free;    // control index -> free index

  SparseMatrix A;       // lumped M + tau*K restricted to free nodes
  SparseMatrix S;       // consistent boundary mass on control nodes
  Vector control_weights;  // row sums of S
  SparseMatrix B;       // free x control, tau * S_lumped placed at control rows

  int num_nodes() const { return static_cast<int>(free_index.size()); }
  int num_free() const { return static_cast<int>(free_nodes.size()); }
  int num_controls() const { return static_cast<int>(control_nodes.size()); }
  bool is_dirichlet(int node) const { return free_index[node] < 0; }

  Vector restrict_to_free(const Vector& full) const;
  // Zero on Dirichlet nodes.
  Vector extend_from_free(const Vector& free) const;
  Vector lumped_mass_free() const;
  // Control values read from / written to nodal fields.
  Vector control_from_nodes(const Vector& full) const;
};

StateOperators assemble_operators(const StructuredMesh& mesh, const Vector& kappa, double tau);
StateOperators assemble_operators(const StructuredMesh& mesh, double kappa, double tau);

// Consistent P1 mass on the control boundary, indexed by control node.
// In 1D the control boundary is a point and S is the 1x1 identity.
SparseMatrix boundary_mass(const StructuredMesh& mesh);

// Control-tagged nodes in increasing node order.
std::vector<int> control_nodes(const StructuredMesh& mesh);

// w^T (M + K1) w for a nodal field w.
double h1_norm_sq(const StateOperators& ops, const Vector& w);

// w^T M w for a nodal field w.
double l2_norm_sq(const StateOperators& ops, const Vector& w);

}  // namespace meltctl
