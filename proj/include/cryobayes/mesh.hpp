#pragma once

#include <array>
#include <vector>

#include "cryobayes/geometry.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

/// Conforming planar triangulation with piecewise-linear (P1) basis.
/// Coordinates are dimensionless, scaled to roughly [0,1].
struct TriMesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;  // CCW vertex-index triples
  std::vector<bool> boundary_flags;           // vertex on hull boundary
  Polygon domain_polygon;                     // physical region D

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  BBox hull_bbox() const;
  double hull_area() const;

  /// Triangle positivity, conformity (shared edges), domain simplicity
  /// and containment. Throws InvalidInput on violation.
  void validate() const;
};

/// Builds a structured triangulation covering `domain_polygon` dilated by
/// extension_factor * (range_hint if positive, else the polygon diameter).
/// Every edge is at most 1.5 * target_edge_length.
TriMesh build_mesh(const Polygon& domain_polygon, double target_edge_length,
                   double extension_factor, double range_hint = 0.0);

}  // namespace cryobayes
