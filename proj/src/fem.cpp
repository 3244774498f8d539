#include "cryobayes/fem.hpp"

#include <algorithm>
#include <cmath>

namespace cryobayes {

FemMatrices assemble_fem(const TriMesh& mesh) {
  mesh.validate();
  const int n = mesh.n_vertices();
  std::vector<Triplet> mass_t, stiff_t;
  mass_t.reserve(static_cast<std::size_t>(9 * mesh.n_triangles()));
  stiff_t.reserve(static_cast<std::size_t>(9 * mesh.n_triangles()));

  // Elements visited in index order; triplet order is fixed, so assembly is
  // deterministic for a given mesh.
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const Point2& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Point2& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Point2& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
    const double area = mesh.triangle_area(t);

    // Gradient coefficients of the P1 basis: grad phi_i = (b_i, c_i) / (2A).
    const double b[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    const double c[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};

    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double m = (i == j ? area / 6.0 : area / 12.0);
        const double k = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        mass_t.emplace_back(tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>(j)], m);
        stiff_t.emplace_back(tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>(j)], k);
      }
    }
  }

  FemMatrices fem;
  fem.mass.resize(n, n);
  fem.mass.setFromTriplets(mass_t.begin(), mass_t.end());
  fem.stiffness.resize(n, n);
  fem.stiffness.setFromTriplets(stiff_t.begin(), stiff_t.end());
  fem.lumped_mass = fem.mass * Vec::Ones(n);
  return fem;
}

TriangleLocator::TriangleLocator(const TriMesh& mesh) : mesh_(&mesh) {
  box_ = mesh.hull_bbox();
  // Bin pitch near the typical triangle size keeps candidate lists short.
  double max_dim = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    double xmin = box_.xmax, xmax = box_.xmin, ymin = box_.ymax, ymax = box_.ymin;
    for (int k = 0; k < 3; ++k) {
      const Point2& p = mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    max_dim = std::max({max_dim, xmax - xmin, ymax - ymin});
  }
  cell_ = std::max(max_dim, 1e-12);
  nx_ = std::max(1, static_cast<int>(std::ceil(box_.width() / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(box_.height() / cell_)));
  bins_.resize(static_cast<std::size_t>(nx_ * ny_));

  auto bin_of = [this](double x, double y) {
    int i = std::clamp(static_cast<int>((x - box_.xmin) / cell_), 0, nx_ - 1);
    int j = std::clamp(static_cast<int>((y - box_.ymin) / cell_), 0, ny_ - 1);
    return j * nx_ + i;
  };
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    double xmin = box_.xmax, xmax = box_.xmin, ymin = box_.ymax, ymax = box_.ymin;
    for (int k = 0; k < 3; ++k) {
      const Point2& p = mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const int b0 = bin_of(xmin, ymin);
    const int b1 = bin_of(xmax, ymax);
    const int i0 = b0 % nx_, j0 = b0 / nx_;
    const int i1 = b1 % nx_, j1 = b1 / nx_;
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) bins_[static_cast<std::size_t>(j * nx_ + i)].push_back(t);
  }
  for (auto& bin : bins_) std::sort(bin.begin(), bin.end());
}

int TriangleLocator::locate(double x, double y, std::array<double, 3>& bary) const {
  if (!box_.contains(x, y, 1e-12)) return -1;
  const int i = std::clamp(static_cast<int>((x - box_.xmin) / cell_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>((y - box_.ymin) / cell_), 0, ny_ - 1);

  // Relative tolerance so edge/vertex hits are accepted; candidates are
  // sorted, so the first hit is the lowest-index containing triangle.
  const double tol = 1e-10;
  for (int t : bins_[static_cast<std::size_t>(j * nx_ + i)]) {
    const auto& tri = mesh_->triangles[static_cast<std::size_t>(t)];
    const Point2& a = mesh_->vertices[static_cast<std::size_t>(tri[0])];
    const Point2& b = mesh_->vertices[static_cast<std::size_t>(tri[1])];
    const Point2& c = mesh_->vertices[static_cast<std::size_t>(tri[2])];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double l1 = ((x - a.x) * (c.y - a.y) - (c.x - a.x) * (y - a.y)) / det;
    const double l2 = ((b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y)) / det;
    const double l0 = 1.0 - l1 - l2;
    if (l0 >= -tol && l1 >= -tol && l2 >= -tol) {
      bary = {l0, l1, l2};
      return t;
    }
  }
  return -1;
}

SpMat point_eval_matrix(const TriangleLocator& locator, const std::vector<Point2>& locations) {
  const TriMesh& mesh = locator.mesh();
  std::vector<Triplet> trips;
  trips.reserve(3 * locations.size());
  for (std::size_t r = 0; r < locations.size(); ++r) {
    std::array<double, 3> bary{};
    const int t = locator.locate(locations[r].x, locations[r].y, bary);
    if (t < 0)
      throw InvalidInput("point_eval_matrix: location " + std::to_string(r) +
                         " is outside the mesh hull");
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k)
      trips.emplace_back(static_cast<int>(r), tri[static_cast<std::size_t>(k)],
                         bary[static_cast<std::size_t>(k)]);
  }
  SpMat A(static_cast<int>(locations.size()), mesh.n_vertices());
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

double Footprint::weight_sum() const {
  double s = 0.0;
  for (double w : quad_weights) s += w;
  return s;
}

Footprint make_footprint(const Polygon& region, double cell_side) {
  if (region.size() < 3 || region.area() <= 0.0)
    throw InvalidInput("make_footprint: empty or degenerate footprint polygon");
  if (cell_side <= 0.0) throw InvalidInput("make_footprint: cell_side must be > 0");

  Footprint fp;
  fp.region = region;
  const BBox box = region.bbox();
  const int nx = std::max(1, static_cast<int>(std::ceil(box.width() / cell_side - 1e-12)));
  const int ny = std::max(1, static_cast<int>(std::ceil(box.height() / cell_side - 1e-12)));
  const double hx = box.width() / nx;
  const double hy = box.height() / ny;

  const double area_floor = 1e-14 * hx * hy;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const BBox cell{box.xmin + i * hx, box.ymin + j * hy, box.xmin + (i + 1) * hx,
                      box.ymin + (j + 1) * hy};
      auto clip = region.clip_rect(cell);
      if (clip.area <= area_floor) continue;
      Point2 node = clip.centroid;
      if (!region.contains(node.x, node.y)) {
        // Non-convex slivers: fall back to the centroid of the largest
        // triangle in a fan of the clipped polygon.
        double best = -1.0;
        for (std::size_t k = 1; k + 1 < clip.poly.size(); ++k) {
          const Point2& a = clip.poly[0];
          const Point2& b = clip.poly[k];
          const Point2& c = clip.poly[k + 1];
          const double ta =
              std::abs(0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)));
          const Point2 cen{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
          if (ta > best && region.contains(cen.x, cen.y)) {
            best = ta;
            node = cen;
          }
        }
      }
      fp.quad_points.push_back(node);
      fp.quad_weights.push_back(clip.area);
    }
  }
  if (fp.quad_points.empty()) throw InvalidInput("make_footprint: footprint produced no quadrature nodes");
  return fp;
}

Eigen::SparseVector<double> footprint_matrix(
    const TriangleLocator& locator, const Footprint& fp,
    const std::function<double(double, double)>& weight_fn) {
  if (fp.quad_points.empty()) throw InvalidInput("footprint_matrix: empty footprint");
  const TriMesh& mesh = locator.mesh();
  Vec row = Vec::Zero(mesh.n_vertices());
  for (std::size_t l = 0; l < fp.quad_points.size(); ++l) {
    const Point2& s = fp.quad_points[l];
    std::array<double, 3> bary{};
    const int t = locator.locate(s.x, s.y, bary);
    if (t < 0)
      throw InvalidInput("footprint_matrix: quadrature node " + std::to_string(l) +
                         " falls outside the mesh hull");
    const double fw = weight_fn(s.x, s.y) * fp.quad_weights[l];
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k)
      row[tri[static_cast<std::size_t>(k)]] += fw * bary[static_cast<std::size_t>(k)];
  }
  return row.sparseView();
}

Eigen::SparseVector<double> footprint_matrix(const TriangleLocator& locator, const Footprint& fp,
                                             double weight) {
  return footprint_matrix(locator, fp, [weight](double, double) { return weight; });
}

}  // namespace cryobayes
