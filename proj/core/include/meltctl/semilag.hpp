#pragma once

#include <functional>
#include <string>
#include <vector>

#include "meltctl/mesh.hpp"
#include "meltctl/types.hpp"

namespace meltctl {

struct VelocityField {
  std::function<Point(const Point&, double)> evaluate;
  std::string description;

  Point operator()(const Point& x, double t) const { return evaluate(x, t); }
};

VelocityField constant_velocity(Point v);
// Rigid rotation with angular speed omega about `center`.
VelocityField rotation_velocity(double omega, Point center);

struct Feet {
  std::vector<Point> points;
  double clamped_fraction = 0.0;
};

// X(x_i) = clamp(x_i - tau * v(x_i, t_n)) for every node.
Feet characteristic_feet(const StructuredMesh& mesh, const VelocityField& v, double t_n, double tau);

struct AdvectedPair {
  Vector y_bar;
  Vector xi_bar;
  double clamped_fraction = 0.0;
};

// P1 interpolant of a nodal field at x.
double interpolate(const StructuredMesh& mesh, const Vector& field, const Point& x);

AdvectedPair advect(const StructuredMesh& mesh, const Feet& feet, const Vector& y_prev, const Vector& xi_prev);

}  // namespace meltctl
