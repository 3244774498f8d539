#include "cryobayes/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace cryobayes {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Proper or improper intersection of segments pq and rs, excluding the case
// where they merely share an endpoint.
bool segments_intersect(const Point2& p, const Point2& q, const Point2& r, const Point2& s) {
  auto eq = [](const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; };
  if (eq(p, r) || eq(p, s) || eq(q, r) || eq(q, s)) return false;
  const double d1 = cross(r, s, p);
  const double d2 = cross(r, s, q);
  const double d3 = cross(p, q, r);
  const double d4 = cross(p, q, s);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on_segment = [](const Point2& a, const Point2& b, const Point2& c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
  };
  if (d1 == 0 && on_segment(r, s, p)) return true;
  if (d2 == 0 && on_segment(r, s, q)) return true;
  if (d3 == 0 && on_segment(p, q, r)) return true;
  if (d4 == 0 && on_segment(p, q, s)) return true;
  return false;
}

double poly_signed_area(const std::vector<Point2>& v) {
  double a = 0.0;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = v[i];
    const Point2& q = v[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

Point2 poly_centroid(const std::vector<Point2>& v, double signed_area) {
  Point2 c{};
  const std::size_t n = v.size();
  if (std::abs(signed_area) < 1e-300) {
    for (const auto& p : v) {
      c.x += p.x;
      c.y += p.y;
    }
    if (!v.empty()) {
      c.x /= static_cast<double>(v.size());
      c.y /= static_cast<double>(v.size());
    }
    return c;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = v[i];
    const Point2& q = v[(i + 1) % n];
    const double w = p.x * q.y - q.x * p.y;
    c.x += (p.x + q.x) * w;
    c.y += (p.y + q.y) * w;
  }
  c.x /= 6.0 * signed_area;
  c.y /= 6.0 * signed_area;
  return c;
}

}  // namespace

Polygon Polygon::rectangle(double xmin, double ymin, double xmax, double ymax) {
  return Polygon({{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}});
}

Polygon Polygon::disk(double cx, double cy, double radius, int n_segments) {
  std::vector<Point2> v;
  v.reserve(static_cast<std::size_t>(n_segments));
  for (int k = 0; k < n_segments; ++k) {
    const double a = 2.0 * M_PI * k / n_segments;
    v.push_back({cx + radius * std::cos(a), cy + radius * std::sin(a)});
  }
  return Polygon(std::move(v));
}

double Polygon::signed_area() const { return poly_signed_area(verts_); }

double Polygon::area() const { return std::abs(signed_area()); }

Point2 Polygon::centroid() const { return poly_centroid(verts_, signed_area()); }

BBox Polygon::bbox() const {
  BBox b{verts_[0].x, verts_[0].y, verts_[0].x, verts_[0].y};
  for (const auto& p : verts_) {
    b.xmin = std::min(b.xmin, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.xmax = std::max(b.xmax, p.x);
    b.ymax = std::max(b.ymax, p.y);
  }
  return b;
}

double Polygon::diameter() const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < verts_.size(); ++i)
    for (std::size_t j = i + 1; j < verts_.size(); ++j) {
      const double dx = verts_[i].x - verts_[j].x;
      const double dy = verts_[i].y - verts_[j].y;
      d2 = std::max(d2, dx * dx + dy * dy);
    }
  return std::sqrt(d2);
}

bool Polygon::contains(double x, double y) const {
  const std::size_t n = verts_.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = verts_[i];
    const Point2& b = verts_[j];
    // On-edge check with a small absolute tolerance.
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double len2 = ex * ex + ey * ey;
    if (len2 > 0) {
      const double t = std::clamp(((x - a.x) * ex + (y - a.y) * ey) / len2, 0.0, 1.0);
      const double dx = x - (a.x + t * ex), dy = y - (a.y + t * ey);
      if (dx * dx + dy * dy < 1e-24) return true;
    }
    if ((a.y > y) != (b.y > y)) {
      const double x_int = a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (x < x_int) inside = !inside;
    }
  }
  return inside;
}

bool Polygon::is_simple() const {
  const std::size_t n = verts_.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = verts_[i];
    const Point2& b = verts_[(i + 1) % n];
    if (a.x == b.x && a.y == b.y) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip adjacent edges (they share an endpoint by construction).
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      const Point2& c = verts_[j];
      const Point2& d = verts_[(j + 1) % n];
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

Polygon::ClipResult Polygon::clip_rect(const BBox& rect) const {
  // Sutherland-Hodgman against the four half-planes of the rectangle.
  std::vector<Point2> poly = verts_;
  if (signed_area() < 0) std::reverse(poly.begin(), poly.end());

  auto clip_halfplane = [](const std::vector<Point2>& in,
                           auto inside_fn, auto intersect_fn) {
    std::vector<Point2> out;
    out.reserve(in.size() + 4);
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2& cur = in[i];
      const Point2& prev = in[(i + n - 1) % n];
      const bool cur_in = inside_fn(cur);
      const bool prev_in = inside_fn(prev);
      if (cur_in) {
        if (!prev_in) out.push_back(intersect_fn(prev, cur));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(intersect_fn(prev, cur));
      }
    }
    return out;
  };

  auto x_cut = [](const Point2& a, const Point2& b, double x) {
    const double t = (x - a.x) / (b.x - a.x);
    return Point2{x, a.y + t * (b.y - a.y)};
  };
  auto y_cut = [](const Point2& a, const Point2& b, double y) {
    const double t = (y - a.y) / (b.y - a.y);
    return Point2{a.x + t * (b.x - a.x), y};
  };

  poly = clip_halfplane(poly, [&](const Point2& p) { return p.x >= rect.xmin; },
                        [&](const Point2& a, const Point2& b) { return x_cut(a, b, rect.xmin); });
  if (poly.size() >= 3)
    poly = clip_halfplane(poly, [&](const Point2& p) { return p.x <= rect.xmax; },
                          [&](const Point2& a, const Point2& b) { return x_cut(a, b, rect.xmax); });
  if (poly.size() >= 3)
    poly = clip_halfplane(poly, [&](const Point2& p) { return p.y >= rect.ymin; },
                          [&](const Point2& a, const Point2& b) { return y_cut(a, b, rect.ymin); });
  if (poly.size() >= 3)
    poly = clip_halfplane(poly, [&](const Point2& p) { return p.y <= rect.ymax; },
                          [&](const Point2& a, const Point2& b) { return y_cut(a, b, rect.ymax); });

  ClipResult res;
  if (poly.size() < 3) return res;
  const double sa = poly_signed_area(poly);
  res.area = std::abs(sa);
  res.centroid = poly_centroid(poly, sa);
  res.poly = std::move(poly);
  return res;
}

}  // namespace cryobayes
