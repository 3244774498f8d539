#include "cryobayes/matern.hpp"

#include <cmath>

#include <Eigen/SparseCholesky>

namespace cryobayes {

void MaternParams::validate() const {
  if (!(sigma > 0.0)) throw InvalidInput("matern: sigma must be > 0");
  if (!(rho > 0.0)) throw InvalidInput("matern: rho must be > 0");
  if (!(nu > 0.0)) throw InvalidInput("matern: nu must be > 0");
}

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

double k1_series(double x) {
  // A&S 9.6.11: K1(x) = ln(x/2) I1(x) + 1/x
  //             - (x/4) sum_k [psi(k+1)+psi(k+2)] (x^2/4)^k / (k!(k+1)!)
  const double q = 0.25 * x * x;
  double i1 = 0.0, term = 0.5 * x;
  for (int k = 1; k <= 60; ++k) {
    i1 += term;
    term *= q / (k * (k + 1.0));
    if (term < 1e-19 * i1) break;
  }
  double psi1 = -kEulerGamma;
  double psi2 = 1.0 - kEulerGamma;
  double s = 0.0, coef = 1.0;
  for (int k = 1; k <= 60; ++k) {
    s += (psi1 + psi2) * coef;
    psi1 += 1.0 / k;
    psi2 += 1.0 / (k + 1.0);
    coef *= q / (k * (k + 1.0));
    if (coef * (psi1 + psi2) < 1e-19 * std::abs(s)) break;
  }
  return std::log(0.5 * x) * i1 + 1.0 / x - 0.25 * x * s;
}

double k1_asymptotic(double x) {
  // K1(x) ~ sqrt(pi/(2x)) e^{-x} sum_k t_k with mu = 4; the expansion is
  // divergent, so stop at the smallest term.
  const double pref = std::sqrt(M_PI / (2.0 * x)) * std::exp(-x);
  double s = 1.0, t = 1.0;
  for (int k = 0; k < 40; ++k) {
    const double c = 2.0 * k + 1.0;
    const double ratio = (4.0 - c * c) / ((k + 1.0) * 8.0 * x);
    const double tn = t * ratio;
    if (std::abs(tn) >= std::abs(t)) break;
    t = tn;
    s += t;
    if (std::abs(t) < 1e-17 * s) break;
  }
  return pref * s;
}

}  // namespace

double bessel_k1(double x) {
  if (!(x > 0.0)) throw InvalidInput("bessel_k1: argument must be > 0");
  return x <= 8.0 ? k1_series(x) : k1_asymptotic(x);
}

double matern_cov(const MaternParams& p, double dist) {
  p.validate();
  if (p.nu != 1.0) throw InvalidInput("matern_cov: only nu = 1 is supported");
  if (dist < 0.0) throw InvalidInput("matern_cov: dist must be >= 0");
  if (dist == 0.0) return p.sigma * p.sigma;
  const double u = std::sqrt(8.0) * dist / p.rho;
  return p.sigma * p.sigma * u * bessel_k1(u);
}

SpdeOperator build_precision(const FemMatrices& fem, const MaternParams& p) {
  p.validate();
  if (p.nu != 1.0) throw InvalidInput("build_precision: only nu = 1 (alpha = 2) is supported");

  SpdeOperator op;
  op.kappa = std::sqrt(8.0 * p.nu) / p.rho;
  op.alpha = 2;
  const double tau_sq = 1.0 / (4.0 * M_PI * op.kappa * op.kappa * p.sigma * p.sigma);
  op.tau = std::sqrt(tau_sq);

  const Eigen::Index n = fem.lumped_mass.size();
  Vec inv_c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(fem.lumped_mass[i] > 0.0))
      throw NumericalError("build_precision: non-positive lumped mass entry");
    inv_c[i] = 1.0 / fem.lumped_mass[i];
  }

  // Q = tau^2 * M C^{-1} M with M = kappa^2 C + G (C lumped/diagonal).
  SpMat m = fem.stiffness;
  const double k2 = op.kappa * op.kappa;
  SpMat c_diag(n, n);
  c_diag.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index i = 0; i < n; ++i) c_diag.insert(i, i) = k2 * fem.lumped_mass[i];
  m += c_diag;
  op.Q = tau_sq * (m * inv_c.asDiagonal() * m);
  op.Q.makeCompressed();

  Eigen::SimplicialLDLT<SpMat> chol(op.Q);
  if (chol.info() != Eigen::Success || (chol.vectorD().array() <= 0.0).any())
    throw NumericalError(
        "build_precision: precision matrix is not positive definite; refine the mesh");
  return op;
}

void PcPrior::validate() const {
  if (!(rho0 > 0.0) || !(sigma0 > 0.0)) throw InvalidInput("pc_prior: rho0, sigma0 must be > 0");
  if (!(alpha_rho > 0.0 && alpha_rho < 1.0) || !(alpha_sigma > 0.0 && alpha_sigma < 1.0))
    throw InvalidInput("pc_prior: tail probabilities must be in (0,1)");
}

double PcPrior::lambda_rho() const { return -rho0 * std::log(alpha_rho); }

double PcPrior::lambda_sigma() const { return -std::log(alpha_sigma) / sigma0; }

double pc_log_density(const PcPrior& prior, const MaternParams& p) {
  prior.validate();
  if (!(p.rho > 0.0) || !(p.sigma > 0.0))
    throw InvalidInput("pc_log_density: parameters must be positive");
  const double lr = prior.lambda_rho();
  const double ls = prior.lambda_sigma();
  return std::log(lr) - 2.0 * std::log(p.rho) - lr / p.rho + std::log(ls) - ls * p.sigma;
}

}  // namespace cryobayes
