#pragma once

#include <string>

#include "meltctl/mesh.hpp"
#include "meltctl/types.hpp"

namespace meltctl {

struct DesiredState {
  Vector y_d;
  Vector xi_d;
};

// One-dimensional melting front moving at unit speed:
// y = exp(t - x) - 1 for x < t, else 0; xi = 1 for x >= t; u = exp(t).
// Nodes on the front take the solid value.
DesiredState example1_fields(double t, const StructuredMesh& mesh);
double example1_control(double t);
double example1_temperature(double x, double t);
double example1_solid_fraction(double x, double t);

// Time-independent parabolic front x1 = (4 - x2) x2 / 4 on ]0,2[ x ]0,4[.
DesiredState example2_fields(const StructuredMesh& mesh);
double example2_front(double x2);

// y_d = 0, xi_d = 1: the frozen initial state.
DesiredState rest_fields(const StructuredMesh& mesh);

// CSV with header node_index,y_d,xi_d and one row per mesh node.
DesiredState load_desired_state(const std::string& path, const StructuredMesh& mesh);

}  // namespace meltctl
