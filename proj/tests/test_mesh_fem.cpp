#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cryobayes/fem.hpp"
#include "cryobayes/mesh.hpp"
#include "cryobayes/random.hpp"
#include "oracles.hpp"

using namespace cryobayes;

namespace {
const Polygon kUnitSquare = Polygon::rectangle(0, 0, 1, 1);
}

TEST_CASE("build_mesh: unit square, edge 0.1, extension 0") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.1, 0.0);
  CHECK(mesh.n_vertices() >= 121);
  const BBox hull = mesh.hull_bbox();
  CHECK(hull.xmin == doctest::Approx(0.0));
  CHECK(hull.xmax == doctest::Approx(1.0));
  CHECK(hull.ymin == doctest::Approx(0.0));
  CHECK(hull.ymax == doctest::Approx(1.0));
  // max edge <= 1.5 x target
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Point2& a = mesh.vertices[(std::size_t)tri[(std::size_t)k]];
      const Point2& b = mesh.vertices[(std::size_t)tri[(std::size_t)((k + 1) % 3)]];
      CHECK(std::hypot(a.x - b.x, a.y - b.y) <= 1.5 * 0.1 + 1e-12);
    }
  }
}

TEST_CASE("build_mesh: extension 0.5 of diameter covers [-0.5,1.5]^2") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.1, 0.5);
  const BBox hull = mesh.hull_bbox();
  CHECK(hull.xmin <= -0.5);
  CHECK(hull.xmax >= 1.5);
  CHECK(hull.ymin <= -0.5);
  CHECK(hull.ymax >= 1.5);
}

TEST_CASE("build_mesh: range hint controls the margin") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.1, 1.0, 0.3);
  const BBox hull = mesh.hull_bbox();
  CHECK(hull.xmin == doctest::Approx(-0.3));
  CHECK(hull.xmax == doctest::Approx(1.3));
}

TEST_CASE("build_mesh rejects bad input") {
  CHECK_THROWS_AS(build_mesh(Polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), 0.1, 0.0), InvalidInput);
  CHECK_THROWS_AS(build_mesh(Polygon({{0, 0}, {1, 0}, {2, 0}}), 0.1, 0.0), InvalidInput);
  CHECK_THROWS_AS(build_mesh(kUnitSquare, -1.0, 0.0), InvalidInput);
  CHECK_THROWS_AS(build_mesh(kUnitSquare, 0.1, -0.5), InvalidInput);
}

TEST_CASE("single right triangle: hand-integrated P1 matrices") {
  TriMesh mesh;
  mesh.vertices = {{0, 0}, {1, 0}, {0, 1}};
  mesh.triangles = {{0, 1, 2}};
  mesh.boundary_flags = {true, true, true};
  const FemMatrices fem = assemble_fem(mesh);
  const double area = 0.5;
  const Mat c = oracle::dense(fem.mass);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(c(i, j) == doctest::Approx(i == j ? area / 6.0 : area / 12.0).epsilon(1e-14));
  // Stiffness of the unit right triangle: K = 1/2 [[2,-1,-1],[-1,1,0],[-1,0,1]]
  const Mat g = oracle::dense(fem.stiffness);
  Mat expect(3, 3);
  expect << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  expect *= 0.5;
  CHECK((g - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("assembled matrices: G row sums ~ 0, total mass = hull area") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.13, 0.0);
  const FemMatrices fem = assemble_fem(mesh);
  const Vec grow = fem.stiffness * Vec::Ones(mesh.n_vertices());
  CHECK(grow.cwiseAbs().maxCoeff() < 1e-12);
  const double total_mass = fem.lumped_mass.sum();
  CHECK(total_mass == doctest::Approx(mesh.hull_area()).epsilon(1e-10));
  CHECK(total_mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("two-element unit square has total mass 1") {
  TriMesh mesh;
  mesh.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  mesh.boundary_flags = {true, true, true, true};
  const FemMatrices fem = assemble_fem(mesh);
  CHECK(fem.lumped_mass.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("point_eval_matrix: vertex, centroid and partition of unity") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.25, 0.0);
  const TriangleLocator locator(mesh);

  // a vertex location gives a unit row
  const Point2 v = mesh.vertices[5];
  SpMat a = point_eval_matrix(locator, {v});
  Vec row = Vec(a.row(0));
  CHECK(row.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-12));

  // centroid of a triangle: three weights of 1/3
  const auto& tri = mesh.triangles[3];
  const Point2 c{(mesh.vertices[(std::size_t)tri[0]].x + mesh.vertices[(std::size_t)tri[1]].x +
                  mesh.vertices[(std::size_t)tri[2]].x) / 3.0,
                 (mesh.vertices[(std::size_t)tri[0]].y + mesh.vertices[(std::size_t)tri[1]].y +
                  mesh.vertices[(std::size_t)tri[2]].y) / 3.0};
  a = point_eval_matrix(locator, {c});
  for (int k = 0; k < 3; ++k) CHECK(a.coeff(0, tri[(std::size_t)k]) == doctest::Approx(1.0 / 3.0));

  // partition of unity at random interior points
  RandomStream rng(7);
  std::vector<Point2> pts;
  for (int k = 0; k < 50; ++k) pts.push_back({rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99)});
  a = point_eval_matrix(locator, pts);
  for (int r = 0; r < a.rows(); ++r) {
    CHECK(Vec(a.row(r)).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("point_eval_matrix: outside location names the offending index") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.25, 0.0);
  const TriangleLocator locator(mesh);
  try {
    point_eval_matrix(locator, {{0.5, 0.5}, {3.0, 0.5}});
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("location 1") != std::string::npos);
  }
}

TEST_CASE("25 synthetic stake sites: rows sum to one") {
  // glacier-like blob polygon
  std::vector<Point2> blob;
  for (int k = 0; k < 40; ++k) {
    const double a = 2 * M_PI * k / 40;
    const double r = 0.38 + 0.07 * std::sin(3 * a) + 0.04 * std::cos(5 * a);
    blob.push_back({0.5 + r * std::cos(a), 0.5 + r * std::sin(a)});
  }
  const Polygon glacier(blob);
  const TriMesh mesh = build_mesh(glacier, 0.08, 0.3);
  const TriangleLocator locator(mesh);
  RandomStream rng(42);
  std::vector<Point2> sites;
  while (sites.size() < 25) {
    const Point2 p{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
    if (glacier.contains(p.x, p.y)) sites.push_back(p);
  }
  const SpMat a = point_eval_matrix(locator, sites);
  CHECK(a.rows() == 25);
  CHECK(a.cols() == mesh.n_vertices());
  for (int r = 0; r < 25; ++r) CHECK(Vec(a.row(r)).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("footprint quadrature: weights sum to polygon area") {
  const Polygon d = Polygon::disk(0.5, 0.5, 0.22, 77);
  const Footprint fp = make_footprint(d, 0.02);
  CHECK(fp.weight_sum() == doctest::Approx(d.area()).epsilon(1e-6));
  for (std::size_t l = 0; l < fp.quad_points.size(); ++l)
    CHECK(d.contains(fp.quad_points[l].x, fp.quad_points[l].y));
}

TEST_CASE("footprint_matrix: constant field over one triangle") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.2, 0.0);
  const TriangleLocator locator(mesh);
  const auto& tri = mesh.triangles[4];
  const Polygon tri_poly({mesh.vertices[(std::size_t)tri[0]], mesh.vertices[(std::size_t)tri[1]],
                          mesh.vertices[(std::size_t)tri[2]]});
  const Footprint fp = make_footprint(tri_poly, 0.01);
  const auto row = footprint_matrix(locator, fp, 1.0);
  // constant coefficients c = 2.5 -> integral = 2.5 * area
  const Vec ones = Vec::Constant(mesh.n_vertices(), 2.5);
  CHECK(row.dot(ones) == doctest::Approx(2.5 * tri_poly.area()).epsilon(1e-6));
}

TEST_CASE("footprint_matrix: ice-density weight is a mass conversion") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.2, 0.0);
  const TriangleLocator locator(mesh);
  const Polygon box = Polygon::rectangle(0.2, 0.2, 0.8, 0.7);
  const Footprint fp = make_footprint(box, 0.02);
  const auto row = footprint_matrix(locator, fp, 917.0);
  const double h = 0.37;
  const Vec coeffs = Vec::Constant(mesh.n_vertices(), h);
  CHECK(row.dot(coeffs) == doctest::Approx(917.0 * h * box.area()).epsilon(1e-9));
}

TEST_CASE("footprint_matrix: f=1 over hull integrates constants to hull area") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.21, 0.0);
  const TriangleLocator locator(mesh);
  const BBox hull = mesh.hull_bbox();
  const Footprint fp =
      make_footprint(Polygon::rectangle(hull.xmin, hull.ymin, hull.xmax, hull.ymax), 0.05);
  const auto row = footprint_matrix(locator, fp, 1.0);
  CHECK(row.dot(Vec::Ones(mesh.n_vertices())) ==
        doctest::Approx(mesh.hull_area()).epsilon(1e-9));
}

TEST_CASE("footprint_matrix vs Monte Carlo oracle: field s1 over a disk") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.05, 0.0);
  const TriangleLocator locator(mesh);
  const Polygon d = Polygon::disk(0.45, 0.55, 0.25, 128);
  const Footprint fp = make_footprint(d, 0.0125);
  const auto row = footprint_matrix(locator, fp, 1.0);

  // coefficients of the field eta(s) = s1 (linear, exactly representable)
  Vec coeffs(mesh.n_vertices());
  for (int i = 0; i < mesh.n_vertices(); ++i) coeffs[i] = mesh.vertices[(std::size_t)i].x;
  const double integral = row.dot(coeffs);

  // 1e6-point Monte Carlo over the bounding box
  RandomStream rng(123);
  const BBox box = d.bbox();
  const int n = 1000000;
  double acc = 0.0;
  int hits = 0;
  for (int k = 0; k < n; ++k) {
    const double x = rng.uniform(box.xmin, box.xmax);
    const double y = rng.uniform(box.ymin, box.ymax);
    if (d.contains(x, y)) {
      acc += x;
      ++hits;
    }
  }
  const double mc = acc / n * box.width() * box.height();
  CHECK(hits > 0);
  CHECK(integral == doctest::Approx(mc).epsilon(1e-3));
}

TEST_CASE("refinement consistency: footprint integral error drops ~4x per halving") {
  // eta(s) = s1^2 has exact integral over the disk: pi r^2 (cx^2 + r^2/4).
  const Polygon d = Polygon::disk(0.5, 0.5, 0.3, 512);
  const double exact = M_PI * 0.09 * (0.25 + 0.09 / 4.0);
  auto integral_error = [&](double edge) {
    const TriMesh mesh = build_mesh(kUnitSquare, edge, 0.0);
    const TriangleLocator locator(mesh);
    const Footprint fp = make_footprint(d, edge / 4.0);
    const auto row = footprint_matrix(locator, fp, 1.0);
    Vec coeffs(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i)
      coeffs[i] = mesh.vertices[(std::size_t)i].x * mesh.vertices[(std::size_t)i].x;
    return std::abs(row.dot(coeffs) - exact);
  };
  const double e1 = integral_error(0.08);
  const double e2 = integral_error(0.04);
  const double ratio = e1 / e2;
  CHECK(ratio > 4.0 * 0.7);
  CHECK(ratio < 4.0 * 1.3);
}

TEST_CASE("assembly is deterministic") {
  const TriMesh mesh = build_mesh(kUnitSquare, 0.11, 0.25);
  const FemMatrices a = assemble_fem(mesh);
  const FemMatrices b = assemble_fem(mesh);
  CHECK((oracle::dense(a.mass) - oracle::dense(b.mass)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((oracle::dense(a.stiffness) - oracle::dense(b.stiffness)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("empty footprint is rejected") {
  CHECK_THROWS_AS(make_footprint(Polygon({{0, 0}, {1, 0}, {2, 0}}), 0.1), InvalidInput);
}
