#pragma once

#include <array>
#include <string>
#include <vector>

namespace meltctl {

using Point = std::array<double, 2>;

enum class BoundaryTag { Interior, Dirichlet, Neumann, Control };

std::string to_string(BoundaryTag tag);

struct IntervalTags {
  BoundaryTag left = BoundaryTag::Control;
  BoundaryTag right = BoundaryTag::Dirichlet;
};

struct RectangleTags {
  BoundaryTag left = BoundaryTag::Control;
  BoundaryTag right = BoundaryTag::Neumann;
  BoundaryTag bottom = BoundaryTag::Dirichlet;
  BoundaryTag top = BoundaryTag::Dirichlet;
};

// A boundary facet (a point in 1D, a segment in 2D) carrying a side tag.
struct BoundaryFacet {
  std::array<int, 2> nodes{-1, -1};  // second entry is -1 in 1D
  BoundaryTag tag = BoundaryTag::Neumann;
  double measure = 0.0;
};

// Uniform structured grid on an interval or a rectangle. Nodes are numbered
// lexicographically with x fastest. In 2D every cell is split along the
// diagonal (i,j)-(i+1,j+1) into (n00,n10,n11) and (n00,n11,n01).
struct StructuredMesh {
  int dimension = 1;
  Point lower{0.0, 0.0};
  Point upper{0.0, 0.0};
  std::array<int, 2> cells{0, 0};
  std::vector<Point> nodes;
  std::vector<BoundaryTag> tags;
  std::vector<std::array<int, 3>> elements;  // third entry is -1 in 1D
  std::vector<BoundaryFacet> facets;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int nodes_per_axis(int axis) const { return cells[axis] + 1; }
  double spacing(int axis) const { return (upper[axis] - lower[axis]) / cells[axis]; }
  int node_index(int i, int j = 0) const { return j * (cells[0] + 1) + i; }
  int nodes_per_element() const { return dimension == 1 ? 2 : 3; }
  double element_measure(int e) const;
  double domain_measure() const;
  bool contains(const Point& x, double tol = 0.0) const;
};

StructuredMesh build_interval_mesh(double x_max, int n_cells, IntervalTags tags = {});
StructuredMesh build_rectangle_mesh(double lx, double ly, int nx, int ny, RectangleTags tags = {});

struct Location {
  int element = -1;
  std::array<double, 3> bary{0.0, 0.0, 0.0};
};

// Element containing x (points on shared edges resolve to the lower cell) and
// its barycentric coordinates. Throws InvalidArgument outside the closed domain.
Location locate_point(const StructuredMesh& mesh, const Point& x);

// Componentwise projection onto the closed domain box.
Point clamp_to_domain(const StructuredMesh& mesh, const Point& x);

}  // namespace meltctl
