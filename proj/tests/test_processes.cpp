#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include <Eigen/SparseCholesky>

#include "cryobayes/processes.hpp"
#include "cryobayes/random.hpp"
#include "oracles.hpp"

using namespace cryobayes;

namespace {

const Polygon kSquare = Polygon::rectangle(0, 0, 1, 1);

ProcessSpec spatial_spec(const std::string& id, double sigma = 1.0, double rho = 0.4) {
  ProcessSpec s;
  s.id = id;
  s.kind = ProcessKind::SpatialOnly;
  s.matern = {sigma, rho, 1.0};
  return s;
}

}  // namespace

TEST_CASE("spatial-only block: one block served at every epoch, zero mean") {
  const TriMesh mesh = build_mesh(kSquare, 0.2, 1.0, 0.4);
  const FemMatrices fem = assemble_fem(mesh);
  ProcessSpec s = spatial_spec("gia");
  s.n_epochs = 5;
  const StackedPrior prior = stack({spatial_only_prior(s, fem)});

  int field_blocks = 0;
  for (const auto& b : prior.blocks())
    if (b.role == "field") ++field_blocks;
  CHECK(field_blocks == 1);
  for (int t = 0; t < 5; ++t) {
    const auto view = prior.epoch_view("gia", t);
    REQUIRE(view.size() == 1);
    CHECK(view[0].offset == 0);
    CHECK(view[0].scale == 1.0);
  }
  CHECK(prior.mean().cwiseAbs().maxCoeff() == 0.0);

  // marginal variance ~ sigma^2 within 15% at an interior vertex
  const Mat cov = oracle::dense_inverse(prior.precision());
  int centre = 0;
  double best = 1e300;
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    const double d = std::hypot(mesh.vertices[(std::size_t)i].x - 0.5,
                                mesh.vertices[(std::size_t)i].y - 0.5);
    if (d < best) { best = d; centre = i; }
  }
  CHECK(cov(centre, centre) == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("ar1: a = 0 gives a block-diagonal joint precision") {
  const TriMesh mesh = build_mesh(kSquare, 0.25, 0.5, 0.4);
  const FemMatrices fem = assemble_fem(mesh);
  ProcessSpec s;
  s.id = "w";
  s.kind = ProcessKind::Ar1SpatioTemporal;
  s.n_epochs = 3;
  s.matern = {1.0, 0.4, 1.0};
  s.ar_coeff = Vec::Zero(1);
  const ProcessPrior p = ar1_prior(s, fem);
  const int n = mesh.n_vertices();
  const Mat q = oracle::dense(p.Q);
  for (int t1 = 0; t1 < 3; ++t1)
    for (int t2 = 0; t2 < 3; ++t2)
      if (t1 != t2)
        CHECK(q.block(t1 * n, t2 * n, n, n).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ar1 scalar case: stationary variance and lag-1 covariance") {
  // one-vertex 'mesh' is not possible; use a direct 1-d innovation precision
  // by reducing a real mesh block to a scalar via a 1x1 slice is awkward, so
  // check the assembled tridiagonal structure algebraically instead:
  // with innovation variance 1 and a = 0.5, the dense inverse of the T x T
  // joint precision must have diagonal 1/(1-a^2) and lag-1 a/(1-a^2).
  const double a = 0.5;
  const int T = 3;
  Mat q = Mat::Zero(T, T);
  // mirror of the library's block recipe in the scalar case
  q(0, 0) = (1.0 - a * a) + a * a;
  for (int t = 1; t < T - 1; ++t) q(t, t) = 1.0 + a * a;
  q(T - 1, T - 1) = 1.0;
  for (int t = 0; t + 1 < T; ++t) {
    q(t, t + 1) = -a;
    q(t + 1, t) = -a;
  }
  const Mat cov = oracle::dense_inverse(q);
  for (int t = 0; t < T; ++t) CHECK(cov(t, t) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  for (int t = 0; t + 1 < T; ++t)
    CHECK(cov(t, t + 1) == doctest::Approx(0.5 * 4.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("ar1 with constant a: assembled joint matches the scalar recipe blockwise") {
  const TriMesh mesh = build_mesh(kSquare, 0.34, 0.0);
  const FemMatrices fem = assemble_fem(mesh);
  ProcessSpec s;
  s.id = "s";
  s.kind = ProcessKind::Ar1SpatioTemporal;
  s.n_epochs = 4;
  s.matern = {0.8, 0.5, 1.0};
  s.ar_coeff = Vec::Constant(1, 0.6);
  const ProcessPrior p = ar1_prior(s, fem);
  const Mat q = oracle::dense(p.Q);
  const Mat qw = oracle::dense(build_precision(fem, s.matern).Q);
  const int n = mesh.n_vertices();
  const double a = 0.6;
  CHECK((q.block(0, 0, n, n) - qw).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((q.block(n, n, n, n) - (1 + a * a) * qw).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((q.block(3 * n, 3 * n, n, n) - qw).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((q.block(0, n, n, n) + a * qw).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ar1 stationarity: t=0 and t=T-1 marginals agree (constant a)") {
  const TriMesh mesh = build_mesh(kSquare, 0.3, 0.5, 0.5);
  const FemMatrices fem = assemble_fem(mesh);
  ProcessSpec s;
  s.id = "s";
  s.kind = ProcessKind::Ar1SpatioTemporal;
  s.n_epochs = 4;
  s.matern = {1.0, 0.5, 1.0};
  s.ar_coeff = Vec::Constant(1, 0.7);
  const ProcessPrior p = ar1_prior(s, fem);
  const Mat cov = oracle::dense_inverse(p.Q);
  const int n = mesh.n_vertices();
  const Mat first = cov.block(0, 0, n, n);
  const Mat last = cov.block(3 * n, 3 * n, n, n);
  CHECK((first - last).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("ar1 with spatially varying a: joint covariance matches Monte Carlo") {
  // tiny mesh (~10 vertices in the domain direction) for a cheap dense oracle
  const TriMesh mesh = build_mesh(kSquare, 0.5, 0.0);
  const FemMatrices fem = assemble_fem(mesh);
  const int n = mesh.n_vertices();
  ProcessSpec s;
  s.id = "s";
  s.kind = ProcessKind::Ar1SpatioTemporal;
  s.n_epochs = 3;
  s.matern = {1.0, 0.6, 1.0};
  Vec a(n);
  for (int i = 0; i < n; ++i) a[i] = 0.2 + 0.5 * mesh.vertices[(std::size_t)i].x;
  s.ar_coeff = a;
  const ProcessPrior p = ar1_prior(s, fem);
  const Mat cov = oracle::dense_inverse(p.Q);

  // brute-force simulation of the generative recursion:
  //   y_0 = (I - A^2)^{-1/2} e_0,  y_t = A y_{t-1} + e_t,  e_t ~ N(0, Q_w^{-1})
  const Mat qw_cov = oracle::dense_inverse(build_precision(fem, s.matern).Q);
  const Mat chol = Eigen::LLT<Mat>(qw_cov).matrixL();
  RandomStream rng(99);
  const int draws = 200000;
  const int T = s.n_epochs;
  Mat acc = Mat::Zero(n * T, n * T);
  Vec y(n * T);
  for (int k = 0; k < draws; ++k) {
    Vec e = chol * rng.normal_vector(n);
    for (int i = 0; i < n; ++i) y[i] = e[i] / std::sqrt(1.0 - a[i] * a[i]);
    for (int t = 1; t < T; ++t) {
      e = chol * rng.normal_vector(n);
      for (int i = 0; i < n; ++i) y[t * n + i] = a[i] * y[(t - 1) * n + i] + e[i];
    }
    acc.noalias() += y * y.transpose();
  }
  acc /= draws;

  // 3-standard-error agreement, se(cov_ij) ~ sqrt((c_ii c_jj + c_ij^2)/N)
  int violations = 0;
  for (int i = 0; i < n * T; ++i)
    for (int j = 0; j < n * T; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / draws);
      if (std::abs(acc(i, j) - cov(i, j)) > 3.0 * se) ++violations;
    }
  // 3 SE two-sided: expect ~0.27% violations; allow 1% of entries
  CHECK(violations <= static_cast<int>(0.01 * n * T * n * T) + 1);
}

TEST_CASE("ar1 rejects |a| >= 1") {
  const TriMesh mesh = build_mesh(kSquare, 0.5, 0.0);
  const FemMatrices fem = assemble_fem(mesh);
  ProcessSpec s;
  s.id = "s";
  s.kind = ProcessKind::Ar1SpatioTemporal;
  s.n_epochs = 2;
  s.matern = {1.0, 0.5, 1.0};
  s.ar_coeff = Vec::Constant(1, 1.0);
  CHECK_THROWS_AS(ar1_prior(s, fem), InvalidInput);
}

TEST_CASE("trend regression: degenerate beta1 and variance growth") {
  const int n = 12;
  ProcessSpec s;
  s.id = "ice";
  s.kind = ProcessKind::TrendRegression;
  s.n_epochs = 4;
  s.beta0_var = Vec::Constant(1, 0.5);
  s.beta1_var = Vec::Zero(1);
  s.resid_var = 0.09;
  const ProcessPrior p = trend_regression_prior(s, n);

  // no beta1 block when its prior variance is identically zero
  for (const auto& b : p.blocks) CHECK(b.role != "beta1");

  const StackedPrior prior = stack({p});
  for (int t = 0; t < 4; ++t) {
    const auto view = prior.epoch_view("ice", t);
    REQUIRE(view.size() == 2);  // beta0 + resid_t
    CHECK(view[0].scale == 1.0);
  }

  // with beta1 variance > 0, the marginal variance grows quadratically in t
  ProcessSpec s2 = s;
  s2.beta1_var = Vec::Constant(1, 0.2);
  const StackedPrior prior2 = stack({trend_regression_prior(s2, n)});
  const Mat cov = oracle::dense_inverse(prior2.precision());
  auto epoch_var = [&](int t) {
    // variance of beta0 + t beta1 + w_t at vertex 0
    Vec c = Vec::Zero(prior2.size());
    for (const auto& term : prior2.epoch_view("ice", t)) c[term.offset] += term.scale;
    return double(c.transpose() * cov * c);
  };
  const double v0 = epoch_var(0), v1 = epoch_var(1), v3 = epoch_var(3);
  CHECK(v0 == doctest::Approx(0.5 + 0.09).epsilon(1e-9));
  CHECK(v1 == doctest::Approx(0.5 + 0.2 + 0.09).epsilon(1e-9));
  CHECK(v3 == doctest::Approx(0.5 + 9.0 * 0.2 + 0.09).epsilon(1e-9));
}

TEST_CASE("trend regression: speed-monotone beta1 variance is honoured per vertex") {
  const int n = 6;
  Vec speed(n);
  for (int i = 0; i < n; ++i) speed[i] = 0.1 + 0.2 * i;
  ProcessSpec s;
  s.id = "ice";
  s.kind = ProcessKind::TrendRegression;
  s.n_epochs = 2;
  s.beta0_var = Vec::Constant(1, 0.3);
  s.beta1_var = (0.05 * speed.array().square()).matrix();  // monotone in speed
  s.resid_var = 0.0;
  const StackedPrior prior = stack({trend_regression_prior(s, n)});
  const Mat cov = oracle::dense_inverse(prior.precision());
  const auto& b1 = prior.block("ice", "beta1", -1);
  double prev = -1.0;
  for (int i = 0; i < n; ++i) {
    const double v = cov(b1.offset + i, b1.offset + i);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("stack: independence, layout round trip, duplicate rejection") {
  const TriMesh mesh = build_mesh(kSquare, 0.3, 0.0);
  const FemMatrices fem = assemble_fem(mesh);
  const ProcessPrior a = spatial_only_prior(spatial_spec("a", 1.0, 0.4), fem);
  const ProcessPrior b = spatial_only_prior(spatial_spec("b", 0.7, 0.6), fem);
  const StackedPrior joint = stack({a, b});

  // joint log-density of independent blocks = sum of block log-densities
  RandomStream rng(5);
  const Vec xa = rng.normal_vector(a.size());
  const Vec xb = rng.normal_vector(b.size());
  Vec x(joint.size());
  x << xa, xb;
  auto logdens = [](const Mat& q, const Vec& v) {
    Eigen::LLT<Mat> llt(q);
    double ld = 0;
    for (Eigen::Index i = 0; i < q.rows(); ++i) ld += 2 * std::log(Mat(llt.matrixL())(i, i));
    return 0.5 * (ld - v.size() * std::log(2 * M_PI) - v.dot(q * v));
  };
  const double joint_ld = logdens(oracle::dense(joint.precision()), x);
  const double sum_ld = logdens(oracle::dense(a.Q), xa) + logdens(oracle::dense(b.Q), xb);
  CHECK(joint_ld == doctest::Approx(sum_ld).epsilon(1e-10));

  // layout round trip
  for (int g : {0, 3, a.size(), joint.size() - 1}) {
    const auto [blk, local] = joint.locate_index(g);
    CHECK(blk->offset + local == g);
  }

  CHECK_THROWS_AS(stack({a, a}), InvalidInput);
}

TEST_CASE("stacking order permutation gives a permutation-similar joint precision") {
  const TriMesh mesh = build_mesh(kSquare, 0.4, 0.0);
  const FemMatrices fem = assemble_fem(mesh);
  const ProcessPrior a = spatial_only_prior(spatial_spec("a", 1.0, 0.4), fem);
  const ProcessPrior b = spatial_only_prior(spatial_spec("b", 0.7, 0.6), fem);
  const StackedPrior ab = stack({a, b});
  const StackedPrior ba = stack({b, a});

  const int na = a.size(), nb = b.size();
  Mat perm = Mat::Zero(na + nb, na + nb);
  // rows of P pick: ba = P ab P'
  for (int i = 0; i < nb; ++i) perm(i, na + i) = 1.0;
  for (int i = 0; i < na; ++i) perm(nb + i, i) = 1.0;
  const Mat lhs = oracle::dense(ba.precision());
  const Mat rhs = perm * oracle::dense(ab.precision()) * perm.transpose();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("every stacked prior passes sparse Cholesky and matches dense brute force") {
  const TriMesh mesh = build_mesh(kSquare, 0.42, 0.0);
  const FemMatrices fem = assemble_fem(mesh);
  const int n = mesh.n_vertices();

  ProcessSpec ar;
  ar.id = "smb";
  ar.kind = ProcessKind::Ar1SpatioTemporal;
  ar.n_epochs = 3;
  ar.matern = {0.8, 0.5, 1.0};
  ar.ar_coeff = Vec::Constant(1, 0.4);

  ProcessSpec tr;
  tr.id = "ice";
  tr.kind = ProcessKind::TrendRegression;
  tr.n_epochs = 3;
  tr.beta0_var = Vec::Constant(1, 0.4);
  tr.beta1_var = Vec::Constant(1, 0.1);
  tr.resid_var = 0.05;

  const StackedPrior joint =
      stack({spatial_only_prior(spatial_spec("gia"), fem), ar1_prior(ar, fem),
             trend_regression_prior(tr, n)});
  REQUIRE(joint.size() <= 400);

  Eigen::SimplicialLDLT<SpMat> chol(joint.precision());
  CHECK(chol.info() == Eigen::Success);

  // dense brute-force covariance: block-diagonal of per-process covariances
  const Mat cov = oracle::dense_inverse(joint.precision());
  const Mat cov_gia = oracle::dense_inverse(spatial_only_prior(spatial_spec("gia"), fem).Q);
  const Mat cov_ar = oracle::dense_inverse(ar1_prior(ar, fem).Q);
  const Mat cov_tr = oracle::dense_inverse(trend_regression_prior(tr, n).Q);
  CHECK((cov.block(0, 0, n, n) - cov_gia).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((cov.block(n, n, 3 * n, 3 * n) - cov_ar).cwiseAbs().maxCoeff() < 1e-8);
  const int off = 4 * n;
  CHECK((cov.block(off, off, cov_tr.rows(), cov_tr.cols()) - cov_tr).cwiseAbs().maxCoeff() < 1e-8);
  // cross blocks vanish
  CHECK(cov.block(0, n, n, 3 * n).cwiseAbs().maxCoeff() < 1e-8);
}
