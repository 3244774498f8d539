#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "cryobayes/matern.hpp"
#include "cryobayes/mesh.hpp"
#include "oracles.hpp"

using namespace cryobayes;

TEST_CASE("bessel_k1 against a high-precision table") {
  // Values computed with 40-digit arithmetic (series + besselk reference).
  const struct { double x, k1; } table[] = {
      {0.0001, 9999.99950868640448},
      {0.001, 999.996238156085553},
      {0.01, 99.9738941182962456},
      {0.05, 19.9096743258825054},
      {0.1, 9.85384478087060557},
      {0.25, 3.74702597444071164},
      {0.5, 1.65644112000330089},
      {0.75, 0.949580466962140232},
      {1.0, 0.601907230197234575},
      {1.5, 0.277387800456843816},
      {2.0, 0.139865881816522427},
      {2.5, 0.0738908163477470636},
      {2.8284271247461903, 0.0493799089937048387},
      {3.0, 0.0401564311281941844},
      {4.0, 0.0124834988872684315},
      {5.0, 0.00404461344545216421},
      {6.0, 0.00134391971773550901},
      {7.0, 0.000454182486884896971},
      {7.9999, 0.000155385801883369963},  // series side of the crossover
      {8.0001, 0.000155352623511965685},  // asymptotic side
      {9.0, 0.0000536370163794519452},
      {10.0, 0.0000186487734538255846},
      {12.0, 2.29075746476718782e-6},
      {15.0, 1.01417293697620918e-7},
      {20.0, 5.88305796955703818e-10},
      {30.0, 2.16773200189154942e-14},
  };
  for (const auto& row : table)
    CHECK(bessel_k1(row.x) == doctest::Approx(row.k1).epsilon(5e-8));
}

TEST_CASE("matern_cov limits and values") {
  MaternParams p{1.0, 1.0, 1.0};
  CHECK(matern_cov(p, 0.0) == doctest::Approx(1.0));
  // sqrt(8) K1(sqrt(8)) = 0.139667474015293143 (Bessel oracle)
  CHECK(matern_cov(p, 1.0) == doctest::Approx(0.139667474015293143).epsilon(1e-9));

  MaternParams p2{2.0, 1.0, 1.0};
  CHECK(matern_cov(p2, 1.0) == doctest::Approx(4.0 * matern_cov(p, 1.0)).epsilon(1e-12));

  MaternParams p3{1.0, 0.3, 1.0};
  CHECK(matern_cov(p3, 0.3) == doctest::Approx(0.139667474015293143).epsilon(1e-9));
  MaternParams p4{1.5, 2.0, 1.0};
  CHECK(matern_cov(p4, 0.5) == doctest::Approx(1.6468075720382912).epsilon(1e-9));
}

TEST_CASE("matern_cov is monotone non-increasing in distance") {
  MaternParams p{1.3, 0.7, 1.0};
  double prev = matern_cov(p, 0.0);
  for (int k = 1; k <= 1000; ++k) {
    const double d = 3.0 * 0.7 * k / 1000.0;
    const double c = matern_cov(p, d);
    CHECK(c <= prev + 1e-15);
    prev = c;
  }
}

TEST_CASE("matern_cov rejects unsupported smoothness and bad input") {
  CHECK_THROWS_AS(matern_cov({1.0, 1.0, 1.5}, 0.5), InvalidInput);
  CHECK_THROWS_AS(matern_cov({-1.0, 1.0, 1.0}, 0.5), InvalidInput);
  CHECK_THROWS_AS(matern_cov({1.0, 1.0, 1.0}, -0.5), InvalidInput);
}

namespace {

// Correlation implied by dense Q^{-1} between the two interior vertices
// closest to a requested pair of points.
double implied_correlation(const TriMesh& mesh, const Mat& cov, Point2 a, Point2 b) {
  auto nearest = [&](Point2 p) {
    int best = 0;
    double best_d = 1e300;
    for (int i = 0; i < mesh.n_vertices(); ++i) {
      const double d = std::hypot(mesh.vertices[(std::size_t)i].x - p.x,
                                  mesh.vertices[(std::size_t)i].y - p.y);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  const int ia = nearest(a), ib = nearest(b);
  return cov(ia, ib) / std::sqrt(cov(ia, ia) * cov(ib, ib));
}

}  // namespace

TEST_CASE("SPDE precision reproduces the Matern marginal variance and correlation") {
  const Polygon square = Polygon::rectangle(0, 0, 1, 1);
  MaternParams p{1.0, 0.3, 1.0};
  const TriMesh mesh = build_mesh(square, 0.05, 1.0, p.rho);
  const FemMatrices fem = assemble_fem(mesh);
  const SpdeOperator op = build_precision(fem, p);

  const Mat cov = oracle::dense_inverse(op.Q);

  // marginal variance near the domain centre within 15%
  int centre = 0;
  double best = 1e300;
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    const double d = std::hypot(mesh.vertices[(std::size_t)i].x - 0.5,
                                mesh.vertices[(std::size_t)i].y - 0.5);
    if (d < best) {
      best = d;
      centre = i;
    }
  }
  CHECK(cov(centre, centre) == doctest::Approx(1.0).epsilon(0.15));

  // correlation at separation rho matches the analytic kernel within 10%
  const double corr = implied_correlation(mesh, cov, {0.35, 0.5}, {0.65, 0.5});
  CHECK(corr == doctest::Approx(0.139667474015293143).epsilon(0.10));
}

TEST_CASE("SPDE correlation at fixed distance increases with rho") {
  const Polygon square = Polygon::rectangle(0, 0, 1, 1);
  const TriMesh mesh = build_mesh(square, 0.1, 1.0, 0.4);
  const FemMatrices fem = assemble_fem(mesh);
  double prev = -1.0;
  for (double rho : {0.15, 0.25, 0.35, 0.5}) {
    const SpdeOperator op = build_precision(fem, {1.0, rho, 1.0});
    const Mat cov = oracle::dense_inverse(op.Q);
    const double corr = implied_correlation(mesh, cov, {0.4, 0.5}, {0.6, 0.5});
    CHECK(corr > prev);
    prev = corr;
  }
}

TEST_CASE("precision sparsity stays within the two-ring adjacency") {
  const Polygon square = Polygon::rectangle(0, 0, 1, 1);
  const TriMesh mesh = build_mesh(square, 0.2, 0.0);
  const FemMatrices fem = assemble_fem(mesh);
  const SpdeOperator op = build_precision(fem, {1.0, 0.4, 1.0});

  // adjacency from the mesh
  std::vector<std::set<int>> ring1((std::size_t)mesh.n_vertices());
  for (const auto& tri : mesh.triangles)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) ring1[(std::size_t)tri[(std::size_t)a]].insert(tri[(std::size_t)b]);
  std::vector<std::set<int>> ring2 = ring1;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    for (int w : ring1[(std::size_t)v]) ring2[(std::size_t)v].insert(ring1[(std::size_t)w].begin(), ring1[(std::size_t)w].end());

  for (int col = 0; col < op.Q.outerSize(); ++col)
    for (SpMat::InnerIterator it(op.Q, col); it; ++it)
      CHECK(ring2[(std::size_t)it.row()].count(col) == 1);
}

TEST_CASE("coordinate/range rescaling leaves the correlation matrix unchanged") {
  const Polygon square = Polygon::rectangle(0, 0, 1, 1);
  const TriMesh mesh = build_mesh(square, 0.16, 0.5);
  const FemMatrices fem = assemble_fem(mesh);
  const SpdeOperator op1 = build_precision(fem, {1.2, 0.3, 1.0});

  TriMesh scaled = mesh;
  const double factor = 3.7;
  for (auto& v : scaled.vertices) {
    v.x *= factor;
    v.y *= factor;
  }
  scaled.domain_polygon = Polygon::rectangle(0, 0, factor, factor);
  const FemMatrices fem2 = assemble_fem(scaled);
  const SpdeOperator op2 = build_precision(fem2, {1.2, 0.3 * factor, 1.0});

  const Mat c1 = oracle::correlation_from_cov(oracle::dense_inverse(op1.Q));
  const Mat c2 = oracle::correlation_from_cov(oracle::dense_inverse(op2.Q));
  CHECK((c1 - c2).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pc prior: tail probabilities recovered by quadrature") {
  const PcPrior prior{0.4, 0.3, 1.5, 0.1};
  // P(rho < rho0) = alpha_rho
  const double p_rho = oracle::simpson(
      [&](double r) { return std::exp(pc_log_density(prior, {1.0, r, 1.0}) -
                                      (std::log(prior.lambda_sigma()) - prior.lambda_sigma())); },
      1e-6, prior.rho0, 20000);
  // dividing out the sigma factor evaluated at sigma = 1
  CHECK(p_rho == doctest::Approx(prior.alpha_rho).epsilon(1e-5));

  // P(sigma > sigma0) = alpha_sigma
  const double lr = prior.lambda_rho();
  const double rho_term = std::log(lr) - 2.0 * std::log(1.0) - lr / 1.0;
  const double p_sigma = oracle::simpson(
      [&](double s) { return std::exp(pc_log_density(prior, {s, 1.0, 1.0}) - rho_term); },
      prior.sigma0, 60.0, 20000);
  CHECK(p_sigma == doctest::Approx(prior.alpha_sigma).epsilon(1e-5));

  // density vanishes for large sigma
  CHECK(std::exp(pc_log_density(prior, {1e4, 1.0, 1.0})) < 1e-300);
}

TEST_CASE("pc prior validation") {
  CHECK_THROWS_AS((PcPrior{-1.0, 0.5, 1.0, 0.5}).validate(), InvalidInput);
  CHECK_THROWS_AS((PcPrior{1.0, 1.5, 1.0, 0.5}).validate(), InvalidInput);
}
