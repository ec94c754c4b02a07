#pragma once

#include <random>

#include "meltctl/fem.hpp"
#include "meltctl/semilag.hpp"
#include "meltctl/state.hpp"

namespace meltctl {

struct EnumerationResult {
  StateSolution solution;
  int patterns_tried = 0;
  int patterns_feasible = 0;
};

// Exhaustive active-set enumeration for the complementarity system on meshes
// with at most `max_free` free nodes: for every subset {y = 0} the remaining
// unknowns are solved densely and the sign conditions checked.
EnumerationResult enumerate_state(const StateOperators& ops, const Vector& u, const AdvectedPair& advected,
                                  int max_free = 16, double sign_tol = 1e-12);

struct TinyInstance {
  StructuredMesh mesh;
  StateOperators ops;
  Vector u;
  AdvectedPair advected;
};

// Random admissible data (u >= 0, y_bar >= 0, 0 <= xi_bar <= 1, with exact
// zeros and ones mixed in) on an interval with `free_nodes` free nodes.
TinyInstance random_instance(int free_nodes, std::mt19937_64& rng);

}  // namespace meltctl
