#pragma once

#include <functional>
#include <vector>

#include "cryobayes/mesh.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

/// P1 finite-element matrices: consistent mass C (units of area), stiffness
/// G (dimensionless, Neumann: zero row sums), and the row-sum lumped mass.
struct FemMatrices {
  SpMat mass;
  SpMat stiffness;
  Vec lumped_mass;
};

FemMatrices assemble_fem(const TriMesh& mesh);

/// Uniform-bin point locator. Ties on shared edges resolve to the
/// lowest-index containing triangle.
class TriangleLocator {
 public:
  explicit TriangleLocator(const TriMesh& mesh);

  /// Containing triangle index and barycentric weights, or -1 if outside
  /// the mesh hull.
  int locate(double x, double y, std::array<double, 3>& bary) const;

  const TriMesh& mesh() const { return *mesh_; }

 private:
  const TriMesh* mesh_;
  BBox box_;
  int nx_ = 0, ny_ = 0;
  double cell_ = 0.0;
  std::vector<std::vector<int>> bins_;
};

/// Rows are barycentric weights of each location's containing triangle;
/// row sums are exactly 1. Throws InvalidInput naming the first location
/// outside the mesh hull.
SpMat point_eval_matrix(const TriangleLocator& locator, const std::vector<Point2>& locations);

/// Observation footprint: quadrature nodes are centroids of an axis-aligned
/// fine gridding of the region clipped to it; weights are the clipped cell
/// areas, so they sum to the polygon area exactly (up to roundoff).
struct Footprint {
  Polygon region;
  std::vector<Point2> quad_points;
  std::vector<double> quad_weights;

  double weight_sum() const;
};

/// cell_side is the quadrature grid pitch (recommended: mesh target edge / 4).
Footprint make_footprint(const Polygon& region, double cell_side);

/// Sparse row approximating the integral of f(s) * phi(s)' over the
/// footprint: b[v] = sum_l f(s_l) phi_v(s_l) * w_l.
Eigen::SparseVector<double> footprint_matrix(const TriangleLocator& locator, const Footprint& fp,
                                             const std::function<double(double, double)>& weight_fn);

/// Same with a constant weight.
Eigen::SparseVector<double> footprint_matrix(const TriangleLocator& locator, const Footprint& fp,
                                             double weight = 1.0);

/// Mesh with its FEM matrices and point locator, built once and shared.
/// Immovable: the locator refers to the mesh in place.
struct MeshContext {
  TriMesh mesh;
  FemMatrices fem;
  TriangleLocator locator;

  explicit MeshContext(TriMesh m) : mesh(std::move(m)), fem(assemble_fem(mesh)), locator(mesh) {}
  MeshContext(const MeshContext&) = delete;
  MeshContext& operator=(const MeshContext&) = delete;

  int n_vertices() const { return mesh.n_vertices(); }
};

}  // namespace cryobayes
