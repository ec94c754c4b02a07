#include <gtest/gtest.h>

#include <random>

#include "meltctl/errors.hpp"
#include "meltctl/mesh.hpp"

using namespace meltctl;

TEST(IntervalMesh, CountsAndTags) {
  const StructuredMesh m = build_interval_mesh(4.0, 400);
  EXPECT_EQ(m.num_nodes(), 401);
  EXPECT_EQ(m.num_elements(), 400);
  EXPECT_DOUBLE_EQ(m.spacing(0), 0.01);
  EXPECT_EQ(m.tags.front(), BoundaryTag::Control);
  EXPECT_EQ(m.tags.back(), BoundaryTag::Dirichlet);
  for (int i = 1; i < 400; ++i) ASSERT_EQ(m.tags[i], BoundaryTag::Interior);
  EXPECT_EQ(m.facets.size(), 2u);
  EXPECT_NEAR(m.domain_measure(), 4.0, 1e-14);
}

TEST(IntervalMesh, RejectsBadInput) {
  EXPECT_THROW(build_interval_mesh(0.0, 10), InvalidArgument);
  EXPECT_THROW(build_interval_mesh(1.0, 0), InvalidArgument);
}

TEST(RectangleMesh, CountsAndTags) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 50, 100);
  EXPECT_EQ(m.num_nodes(), 51 * 101);
  EXPECT_EQ(m.num_elements(), 2 * 50 * 100);
  EXPECT_NEAR(m.domain_measure(), 8.0, 1e-12);
  double sum = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) sum += m.element_measure(e);
  EXPECT_NEAR(sum, 8.0, 1e-12);

  // Corners belong to the Dirichlet sides.
  EXPECT_EQ(m.tags[m.node_index(0, 0)], BoundaryTag::Dirichlet);
  EXPECT_EQ(m.tags[m.node_index(50, 100)], BoundaryTag::Dirichlet);
  EXPECT_EQ(m.tags[m.node_index(0, 50)], BoundaryTag::Control);
  EXPECT_EQ(m.tags[m.node_index(50, 50)], BoundaryTag::Neumann);
  EXPECT_EQ(m.tags[m.node_index(25, 0)], BoundaryTag::Dirichlet);
  EXPECT_EQ(m.tags[m.node_index(25, 50)], BoundaryTag::Interior);

  int control = 0;
  for (BoundaryTag t : m.tags) control += t == BoundaryTag::Control;
  EXPECT_EQ(control, 99);
  double boundary = 0.0;
  for (const BoundaryFacet& f : m.facets) boundary += f.measure;
  EXPECT_NEAR(boundary, 12.0, 1e-12);
}

TEST(RectangleMesh, ElementsArePositivelyOriented) {
  const StructuredMesh m = build_rectangle_mesh(1.0, 2.0, 3, 5);
  for (const auto& e : m.elements) {
    const Point& a = m.nodes[e[0]];
    const Point& b = m.nodes[e[1]];
    const Point& c = m.nodes[e[2]];
    const double det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    EXPECT_GT(det, 0.0);
  }
}

TEST(LocatePoint, MatchesAffineInversion) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 7, 9);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(0.0, 2.0), uy(0.0, 4.0);
  for (int k = 0; k < 500; ++k) {
    const Point x{ux(rng), uy(rng)};
    const Location loc = locate_point(m, x);
    ASSERT_GE(loc.element, 0);
    const auto& e = m.elements[loc.element];
    // Invert the element's affine map independently.
    const Point& a = m.nodes[e[0]];
    const Point& b = m.nodes[e[1]];
    const Point& c = m.nodes[e[2]];
    const double det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    const double l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (x[1] - a[1]) * (c[0] - a[0])) / det;
    const double l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0])) / det;
    EXPECT_NEAR(loc.bary[1], l1, 1e-12);
    EXPECT_NEAR(loc.bary[2], l2, 1e-12);
    EXPECT_NEAR(loc.bary[0], 1.0 - l1 - l2, 1e-12);
    for (double l : loc.bary) EXPECT_GE(l, -1e-12);
  }
}

TEST(LocatePoint, IntervalAndBoundaries) {
  const StructuredMesh m = build_interval_mesh(1.0, 4);
  const Location loc = locate_point(m, {0.3, 0.0});
  EXPECT_EQ(loc.element, 1);
  EXPECT_NEAR(loc.bary[0], 0.8, 1e-14);
  EXPECT_NEAR(loc.bary[1], 0.2, 1e-14);
  EXPECT_NO_THROW(locate_point(m, {1.0, 0.0}));
  EXPECT_THROW(locate_point(m, {1.1, 0.0}), InvalidArgument);
  EXPECT_THROW(locate_point(m, {-0.1, 0.0}), InvalidArgument);
}

TEST(ClampToDomain, ProjectsComponentwise) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 2, 2);
  const Point p = clamp_to_domain(m, {-1.0, 5.0});
  EXPECT_EQ(p[0], 0.0);
  EXPECT_EQ(p[1], 4.0);
  const Point q = clamp_to_domain(m, {1.5, 2.5});
  EXPECT_EQ(q[0], 1.5);
  EXPECT_EQ(q[1], 2.5);
}

TEST(RectangleMesh, SmallestAllDirichlet) {
  const StructuredMesh m = build_rectangle_mesh(1.0, 1.0, 2, 2, {BoundaryTag::Dirichlet, BoundaryTag::Dirichlet,
                                                                 BoundaryTag::Dirichlet, BoundaryTag::Dirichlet});
  EXPECT_EQ(m.num_nodes(), 9);
  EXPECT_EQ(m.num_elements(), 8);
  EXPECT_EQ(m.tags[4], BoundaryTag::Interior);
}

TEST(IntervalMesh, SmallestAdmissible) {
  const StructuredMesh m = build_interval_mesh(1.0, 2);
  ASSERT_EQ(m.num_nodes(), 3);
  EXPECT_EQ(m.nodes[1][0], 0.5);
  EXPECT_THROW(build_interval_mesh(4.0, 1), InvalidArgument);
}

TEST(LocatePoint, NodesGetUnitWeight) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 7, 9);
  for (int k = 0; k < m.num_nodes(); ++k) {
    const Location loc = locate_point(m, m.nodes[k]);
    const auto& e = m.elements[loc.element];
    double on_node = 0.0;
    for (int a = 0; a < 3; ++a) {
      if (e[a] == k) on_node = loc.bary[a];
    }
    EXPECT_EQ(on_node, 1.0) << "node " << k;
  }
  const StructuredMesh line = build_interval_mesh(1.0, 3);
  const Location mid = locate_point(line, {0.5, 0.0});
  EXPECT_DOUBLE_EQ(mid.bary[0], 0.5);
  EXPECT_DOUBLE_EQ(mid.bary[1], 0.5);
}
