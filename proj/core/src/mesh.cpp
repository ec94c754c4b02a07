#include "meltctl/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "meltctl/errors.hpp"

namespace meltctl {

std::string to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Interior: return "Interior";
    case BoundaryTag::Dirichlet: return "Dirichlet";
    case BoundaryTag::Neumann: return "Neumann";
    case BoundaryTag::Control: return "Control";
  }
  return "?";
}

namespace {

int priority(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Dirichlet: return 3;
    case BoundaryTag::Control: return 2;
    case BoundaryTag::Neumann: return 1;
    case BoundaryTag::Interior: return 0;
  }
  return 0;
}

void assign_tag(BoundaryTag& slot, BoundaryTag side) {
  if (side == BoundaryTag::Interior) {
    throw InvalidArgument("boundary side cannot be tagged Interior");
  }
  if (priority(side) > priority(slot)) slot = side;
}

}  // namespace

double StructuredMesh::element_measure(int e) const {
  const auto& el = elements.at(e);
  if (dimension == 1) return std::abs(nodes[el[1]][0] - nodes[el[0]][0]);
  const Point& a = nodes[el[0]];
  const Point& b = nodes[el[1]];
  const Point& c = nodes[el[2]];
  return 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

double StructuredMesh::domain_measure() const {
  if (dimension == 1) return upper[0] - lower[0];
  return (upper[0] - lower[0]) * (upper[1] - lower[1]);
}

bool StructuredMesh::contains(const Point& x, double tol) const {
  for (int a = 0; a < dimension; ++a) {
    if (!(x[a] >= lower[a] - tol && x[a] <= upper[a] + tol)) return false;
  }
  return true;
}

StructuredMesh build_interval_mesh(double x_max, int n_cells, IntervalTags tags) {
  if (!(x_max > 0.0) || !std::isfinite(x_max)) {
    throw InvalidArgument("interval mesh: x_max must be positive");
  }
  if (n_cells < 2) throw InvalidArgument("interval mesh: need at least 2 cells");

  StructuredMesh m;
  m.dimension = 1;
  m.lower = {0.0, 0.0};
  m.upper = {x_max, 0.0};
  m.cells = {n_cells, 0};
  const double h = x_max / n_cells;
  m.nodes.resize(n_cells + 1);
  m.tags.assign(n_cells + 1, BoundaryTag::Interior);
  for (int i = 0; i <= n_cells; ++i) m.nodes[i] = {i == n_cells ? x_max : i * h, 0.0};
  for (int i = 0; i < n_cells; ++i) m.elements.push_back({i, i + 1, -1});
  assign_tag(m.tags[0], tags.left);
  assign_tag(m.tags[n_cells], tags.right);
  // Point boundaries carry counting measure.
  m.facets.push_back({{0, -1}, tags.left, 1.0});
  m.facets.push_back({{n_cells, -1}, tags.right, 1.0});
  return m;
}

StructuredMesh build_rectangle_mesh(double lx, double ly, int nx, int ny, RectangleTags tags) {
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw InvalidArgument("rectangle mesh: extents must be positive");
  }
  if (nx < 2 || ny < 2) throw InvalidArgument("rectangle mesh: need at least 2 cells per axis");

  StructuredMesh m;
  m.dimension = 2;
  m.lower = {0.0, 0.0};
  m.upper = {lx, ly};
  m.cells = {nx, ny};
  const double hx = lx / nx;
  const double hy = ly / ny;
  m.nodes.resize((nx + 1) * (ny + 1));
  m.tags.assign(m.nodes.size(), BoundaryTag::Interior);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      m.nodes[m.node_index(i, j)] = {i == nx ? lx : i * hx, j == ny ? ly : j * hy};
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n00 = m.node_index(i, j);
      const int n10 = m.node_index(i + 1, j);
      const int n11 = m.node_index(i + 1, j + 1);
      const int n01 = m.node_index(i, j + 1);
      m.elements.push_back({n00, n10, n11});
      m.elements.push_back({n00, n11, n01});
    }
  }
  for (int j = 0; j <= ny; ++j) {
    assign_tag(m.tags[m.node_index(0, j)], tags.left);
    assign_tag(m.tags[m.node_index(nx, j)], tags.right);
  }
  for (int i = 0; i <= nx; ++i) {
    assign_tag(m.tags[m.node_index(i, 0)], tags.bottom);
    assign_tag(m.tags[m.node_index(i, ny)], tags.top);
  }
  for (int j = 0; j < ny; ++j) {
    m.facets.push_back({{m.node_index(0, j), m.node_index(0, j + 1)}, tags.left, hy});
    m.facets.push_back({{m.node_index(nx, j), m.node_index(nx, j + 1)}, tags.right, hy});
  }
  for (int i = 0; i < nx; ++i) {
    m.facets.push_back({{m.node_index(i, 0), m.node_index(i + 1, 0)}, tags.bottom, hx});
    m.facets.push_back({{m.node_index(i, ny), m.node_index(i + 1, ny)}, tags.top, hx});
  }
  return m;
}

Point clamp_to_domain(const StructuredMesh& mesh, const Point& x) {
  Point out = x;
  for (int a = 0; a < mesh.dimension; ++a) out[a] = std::clamp(x[a], mesh.lower[a], mesh.upper[a]);
  if (mesh.dimension == 1) out[1] = 0.0;
  return out;
}

namespace {

// Cell index and local coordinate in [0,1] along one axis.
std::pair<int, double> axis_cell(const StructuredMesh& mesh, int axis, double x) {
  const int n = mesh.cells[axis];
  const double h = mesh.spacing(axis);
  double r = (x - mesh.lower[axis]) / h;
  // Snap grid lines so that nodes get barycentric weight exactly 1.
  const double rn = std::round(r);
  if (std::abs(r - rn) <= 1e-12 * std::max(1.0, std::abs(r))) r = rn;
  int i = static_cast<int>(std::floor(r));
  i = std::clamp(i, 0, n - 1);
  double s = r - i;
  s = std::clamp(s, 0.0, 1.0);
  return {i, s};
}

}  // namespace

Location locate_point(const StructuredMesh& mesh, const Point& x) {
  const double tol = 1e-12;
  for (int a = 0; a < mesh.dimension; ++a) {
    const double ext = mesh.upper[a] - mesh.lower[a];
    if (!(x[a] >= mesh.lower[a] - tol * ext && x[a] <= mesh.upper[a] + tol * ext)) {
      std::ostringstream msg;
      msg << "locate_point: point (" << x[0];
      if (mesh.dimension == 2) msg << ", " << x[1];
      msg << ") is outside the domain";
      throw InvalidArgument(msg.str());
    }
  }
  Location loc;
  if (mesh.dimension == 1) {
    auto [i, s] = axis_cell(mesh, 0, x[0]);
    loc.element = i;
    loc.bary = {1.0 - s, s, 0.0};
    return loc;
  }
  auto [i, s] = axis_cell(mesh, 0, x[0]);
  auto [j, t] = axis_cell(mesh, 1, x[1]);
  const int cell = j * mesh.cells[0] + i;
  if (s >= t) {
    loc.element = 2 * cell;
    loc.bary = {1.0 - s, s - t, t};
  } else {
    loc.element = 2 * cell + 1;
    loc.bary = {1.0 - t, s, t - s};
  }
  return loc;
}

}  // namespace meltctl
