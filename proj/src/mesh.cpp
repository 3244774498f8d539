#include "cryobayes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace cryobayes {

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Point2& a = vertices[static_cast<std::size_t>(tri[0])];
  const Point2& b = vertices[static_cast<std::size_t>(tri[1])];
  const Point2& c = vertices[static_cast<std::size_t>(tri[2])];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

BBox TriMesh::hull_bbox() const {
  BBox b{vertices[0].x, vertices[0].y, vertices[0].x, vertices[0].y};
  for (const auto& p : vertices) {
    b.xmin = std::min(b.xmin, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.xmax = std::max(b.xmax, p.x);
    b.ymax = std::max(b.ymax, p.y);
  }
  return b;
}

double TriMesh::hull_area() const {
  double a = 0.0;
  for (int t = 0; t < n_triangles(); ++t) a += triangle_area(t);
  return a;
}

void TriMesh::validate() const {
  if (vertices.size() < 3 || triangles.empty())
    throw InvalidInput("mesh: needs at least 3 vertices and 1 triangle");
  for (int t = 0; t < n_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int v = triangles[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
      if (v < 0 || v >= n_vertices())
        throw InvalidInput("mesh: triangle " + std::to_string(t) + " has out-of-range vertex");
    }
    if (triangle_area(t) <= 0.0)
      throw InvalidInput("mesh: triangle " + std::to_string(t) + " has non-positive area");
  }
  // Conformity: every interior edge is shared by exactly two triangles with
  // the same vertex pair; an edge seen more than twice is non-conforming.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[static_cast<std::size_t>(k)];
      int b = tri[static_cast<std::size_t>((k + 1) % 3)];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  for (const auto& [edge, count] : edge_count) {
    if (count > 2)
      throw InvalidInput("mesh: edge (" + std::to_string(edge.first) + "," +
                         std::to_string(edge.second) + ") shared by " + std::to_string(count) +
                         " triangles");
  }
  if (domain_polygon.size() >= 3) {
    if (!domain_polygon.is_simple()) throw InvalidInput("mesh: domain polygon is not simple");
    const BBox hull = hull_bbox();
    for (const auto& p : domain_polygon.vertices())
      if (!hull.contains(p.x, p.y, 1e-9))
        throw InvalidInput("mesh: domain polygon vertex outside mesh hull");
  }
}

TriMesh build_mesh(const Polygon& domain_polygon, double target_edge_length,
                   double extension_factor, double range_hint) {
  if (target_edge_length <= 0.0) throw InvalidInput("build_mesh: target_edge_length must be > 0");
  if (extension_factor < 0.0) throw InvalidInput("build_mesh: extension_factor must be >= 0");
  if (domain_polygon.size() < 3 || !domain_polygon.is_simple())
    throw InvalidInput("build_mesh: domain polygon must be simple with >= 3 vertices");
  if (domain_polygon.area() <= 0.0) throw InvalidInput("build_mesh: degenerate polygon (area 0)");

  const double scale = range_hint > 0.0 ? range_hint : domain_polygon.diameter();
  const double margin = extension_factor * scale;
  const BBox box = domain_polygon.bbox().expanded(margin);

  const int nx = std::max(1, static_cast<int>(std::ceil(box.width() / target_edge_length - 1e-12)));
  const int ny = std::max(1, static_cast<int>(std::ceil(box.height() / target_edge_length - 1e-12)));
  const double hx = box.width() / nx;
  const double hy = box.height() / ny;

  TriMesh mesh;
  mesh.domain_polygon = domain_polygon;
  mesh.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  mesh.boundary_flags.resize(static_cast<std::size_t>((nx + 1) * (ny + 1)), false);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      mesh.vertices.push_back({box.xmin + i * hx, box.ymin + j * hy});
      mesh.boundary_flags[static_cast<std::size_t>(j * (nx + 1) + i)] =
          (i == 0 || i == nx || j == 0 || j == ny);
    }
  }
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }
  mesh.validate();
  return mesh;
}

}  // namespace cryobayes
