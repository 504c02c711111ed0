#include <cmath>

#include "doctest.h"
#include "hf/boundary.hpp"
#include "hf/types.hpp"

using namespace hf;

namespace {

BoundaryData simple_boundary() {
  BoundaryData bd;
  bd.length_x = 2.0;
  bd.length_y = 0.5;
  bd.steps = {1.05, 1.1};
  bd.fx = VecX(2);
  bd.fx << 0.3, 0.6;
  bd.fy = VecX(2);
  bd.fy << 0.1, 0.2;
  return bd;
}

}  // namespace

TEST_CASE("boundary: average stress and uniform tractions from resultants") {
  BoundaryData bd = simple_boundary();
  const Mat2 P = bd.average_stress(1);
  CHECK(P(0, 0) == doctest::Approx(0.6 / 0.5));
  CHECK(P(1, 1) == doctest::Approx(0.2 / 2.0));
  CHECK(P(0, 1) == 0.0);
  CHECK(P(1, 0) == 0.0);

  // signs follow the outward normals
  CHECK(bd.uniform_traction(EdgeId::XMax, 1)[0] == doctest::Approx(1.2));
  CHECK(bd.uniform_traction(EdgeId::XMin, 1)[0] == doctest::Approx(-1.2));
  CHECK(bd.uniform_traction(EdgeId::XMax, 1)[1] == 0.0);
  CHECK(bd.uniform_traction(EdgeId::YMax, 1)[1] == doctest::Approx(0.1));
  CHECK(bd.uniform_traction(EdgeId::YMin, 1)[1] == doctest::Approx(-0.1));

  CHECK(bd.max_average_stress() == doctest::Approx(1.2));

  BoundaryData zero = bd;
  zero.length_y = 0.0;
  CHECK_THROWS_AS(zero.average_stress(0), ConfigurationError);
  CHECK_THROWS_AS(bd.average_stress(5), DimensionError);
}

TEST_CASE("boundary: validation catches inconsistent series") {
  Grid2D grid = Grid2D::unit_square(4, 3);
  BoundaryData bd = simple_boundary();
  bd.length_x = grid.length_x();
  bd.length_y = grid.length_y();
  bd.validate(&grid);

  BoundaryData bad = bd;
  bad.fx = VecX::Zero(3);
  CHECK_THROWS_AS(bad.validate(&grid), DimensionError);

  bad = bd;
  bad.steps = {1.1, 1.05};
  CHECK_THROWS_AS(bad.validate(&grid), DataError);

  bad = bd;
  bad.edge(EdgeId::XMax).per_node = {MatX::Zero(3, 2)};  // one step missing
  CHECK_THROWS_AS(bad.validate(&grid), DimensionError);

  bad = bd;
  // x_max edge has ny = 3 nodes; give it the wrong count
  bad.edge(EdgeId::XMax).per_node = {MatX::Zero(2, 2), MatX::Zero(2, 2)};
  CHECK_THROWS_AS(bad.validate(&grid), DimensionError);

  bd.edge(EdgeId::XMax).per_node = {MatX::Ones(3, 2), MatX::Ones(3, 2)};
  bd.validate(&grid);
}

TEST_CASE("boundary: edge node order and normals") {
  Grid2D grid = Grid2D::unit_square(4, 3);
  const auto xmin = edge_node_indices(grid, EdgeId::XMin);
  REQUIRE(xmin.size() == 3);
  CHECK(xmin[0] == grid.index(0, 0));
  CHECK(xmin[2] == grid.index(0, 2));
  const auto ymax = edge_node_indices(grid, EdgeId::YMax);
  REQUIRE(ymax.size() == 4);
  CHECK(ymax[0] == grid.index(0, 2));
  CHECK(ymax[3] == grid.index(3, 2));

  CHECK(outward_normal(EdgeId::XMin) == Vec2(-1, 0));
  CHECK(outward_normal(EdgeId::YMax) == Vec2(0, 1));
  CHECK(edge_from_string("y_min") == EdgeId::YMin);
  CHECK(std::string(to_string(EdgeId::XMax)) == "x_max");
  CHECK_THROWS_AS(edge_from_string("north"), ConfigurationError);
}

TEST_CASE("boundary: trapezoid average is exact for bilinear fields") {
  Grid2D grid = Grid2D::unit_square(5, 7);
  MatX vals(grid.size(), 2);
  for (int i = 0; i < grid.size(); ++i) {
    const Vec2 X = grid.node(i);
    vals(i, 0) = 2.0 + 3.0 * X[0] - 1.5 * X[1] + 4.0 * X[0] * X[1];
    vals(i, 1) = 1.0;
  }
  const VecX avg = spatial_average(grid, vals);
  // integral of the bilinear over the unit square: 2 + 1.5 - 0.75 + 1
  CHECK(avg[0] == doctest::Approx(3.75).epsilon(1e-12));
  CHECK(avg[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("boundary: edge resultant of a uniform stress matches P N times length") {
  Grid2D grid = Grid2D::unit_square(6, 4);
  const auto idx = edge_node_indices(grid, EdgeId::XMax);
  MatX P_edge(static_cast<int>(idx.size()), 4);
  for (int i = 0; i < P_edge.rows(); ++i) P_edge.row(i) << 2.0, 0.3, -0.1, 0.7;

  const Vec2 f = edge_resultant(grid, EdgeId::XMax, P_edge);
  // length of the x_max edge is 1 in the unit square; N = (1, 0)
  CHECK(f[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f[1] == doctest::Approx(-0.1).epsilon(1e-12));

  const auto idx_y = edge_node_indices(grid, EdgeId::YMin);
  MatX P_y(static_cast<int>(idx_y.size()), 4);
  for (int i = 0; i < P_y.rows(); ++i) P_y.row(i) << 2.0, 0.3, -0.1, 0.7;
  const Vec2 fy = edge_resultant(grid, EdgeId::YMin, P_y);
  CHECK(fy[0] == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(fy[1] == doctest::Approx(-0.7).epsilon(1e-12));

  CHECK_THROWS_AS(edge_resultant(grid, EdgeId::XMax, MatX::Zero(2, 4)), DimensionError);
}
