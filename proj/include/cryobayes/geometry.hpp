#pragma once

#include <vector>

#include "cryobayes/types.hpp"

namespace cryobayes {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct BBox {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(double x, double y, double tol = 0.0) const {
    return x >= xmin - tol && x <= xmax + tol && y >= ymin - tol && y <= ymax + tol;
  }
  BBox expanded(double margin) const {
    return {xmin - margin, ymin - margin, xmax + margin, ymax + margin};
  }
};

/// Simple planar polygon, implicitly closed (last vertex connects to first).
class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(std::vector<Point2> vertices) : verts_(std::move(vertices)) {}

  static Polygon rectangle(double xmin, double ymin, double xmax, double ymax);
  /// Regular n-gon approximation of a disk.
  static Polygon disk(double cx, double cy, double radius, int n_segments = 64);

  const std::vector<Point2>& vertices() const { return verts_; }
  std::size_t size() const { return verts_.size(); }

  double signed_area() const;
  double area() const;
  Point2 centroid() const;
  BBox bbox() const;
  /// Largest inter-vertex distance.
  double diameter() const;

  /// Boundary points count as inside.
  bool contains(double x, double y) const;

  /// No two non-adjacent edges intersect, no repeated consecutive vertices.
  bool is_simple() const;

  /// Area and centroid of the intersection with an axis-aligned rectangle
  /// (Sutherland-Hodgman clip). Returns area 0 when disjoint.
  struct ClipResult {
    double area = 0.0;
    Point2 centroid{};
    std::vector<Point2> poly;
  };
  ClipResult clip_rect(const BBox& rect) const;

 private:
  std::vector<Point2> verts_;
};

}  // namespace cryobayes
