#include "meltctl/semilag.hpp"

#include <cstdio>

#include "meltctl/errors.hpp"

namespace meltctl {

VelocityField constant_velocity(Point v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "constant (%g, %g)", v[0], v[1]);
  return {[v](const Point&, double) { return v; }, buf};
}

VelocityField rotation_velocity(double omega, Point center) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "rotation omega=%g about (%g, %g)", omega, center[0], center[1]);
  return {[omega, center](const Point& x, double) {
            return Point{-omega * (x[1] - center[1]), omega * (x[0] - center[0])};
          },
          buf};
}

Feet characteristic_feet(const StructuredMesh& mesh, const VelocityField& v, double t_n, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("characteristic_feet: tau must be positive");
  Feet feet;
  feet.points.resize(mesh.num_nodes());
  int clamped = 0;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const Point& x = mesh.nodes[i];
    const Point vel = v(x, t_n);
    Point foot{x[0] - tau * vel[0], mesh.dimension == 2 ? x[1] - tau * vel[1] : 0.0};
    const Point c = clamp_to_domain(mesh, foot);
    if (c != foot) ++clamped;
    feet.points[i] = c;
  }
  feet.clamped_fraction = mesh.num_nodes() > 0 ? static_cast<double>(clamped) / mesh.num_nodes() : 0.0;
  return feet;
}

double interpolate(const StructuredMesh& mesh, const Vector& field, const Point& x) {
  const Location loc = locate_point(mesh, x);
  const auto& el = mesh.elements[loc.element];
  double v = 0.0;
  for (int a = 0; a < mesh.nodes_per_element(); ++a) v += loc.bary[a] * field[el[a]];
  return v;
}

AdvectedPair advect(const StructuredMesh& mesh, const Feet& feet, const Vector& y_prev, const Vector& xi_prev) {
  const int n = mesh.num_nodes();
  if (static_cast<int>(feet.points.size()) != n || y_prev.size() != n || xi_prev.size() != n) {
    throw InvalidArgument("advect: dimension mismatch");
  }
  AdvectedPair out;
  out.y_bar.resize(n);
  out.xi_bar.resize(n);
  for (int i = 0; i < n; ++i) {
    const Location loc = locate_point(mesh, feet.points[i]);
    const auto& el = mesh.elements[loc.element];
    double y = 0.0, xi = 0.0;
    for (int a = 0; a < mesh.nodes_per_element(); ++a) {
      y += loc.bary[a] * y_prev[el[a]];
      xi += loc.bary[a] * xi_prev[el[a]];
    }
    out.y_bar[i] = y;
    out.xi_bar[i] = xi;
  }
  out.clamped_fraction = feet.clamped_fraction;
  return out;
}

}  // namespace meltctl
