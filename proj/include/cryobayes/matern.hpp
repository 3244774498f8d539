#pragma once

#include "cryobayes/fem.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

/// Stationary Matern field parameters. Only nu = 1 (alpha = 2 in two
/// dimensions) is supported by the precision builder.
struct MaternParams {
  double sigma = 1.0;  // marginal standard deviation
  double rho = 1.0;    // spatial range
  double nu = 1.0;     // smoothness

  void validate() const;
};

/// Modified Bessel function K1. Ascending series for x <= 8, asymptotic
/// expansion with optimal truncation above; worst relative error ~1e-8
/// near the crossover.
double bessel_k1(double x);

/// Matern covariance at separation dist:
///   sigma^2 2^{1-nu}/Gamma(nu) (sqrt(8 nu) d / rho)^nu K_nu(sqrt(8 nu) d / rho),
/// equal to sigma^2 at d = 0. nu = 1 only.
double matern_cov(const MaternParams& p, double dist);

/// Sparse precision of the Matern field on a FEM basis:
///   Q = tau^2 (kappa^4 C + 2 kappa^2 G + G C^{-1} G), lumped C,
/// with tau^2 = 1 / (4 pi kappa^2 sigma^2) so the marginal variance is
/// sigma^2 away from the boundary.
struct SpdeOperator {
  double kappa = 0.0;
  double tau = 0.0;
  int alpha = 2;
  SpMat Q;
};

SpdeOperator build_precision(const FemMatrices& fem, const MaternParams& p);

/// Penalised-complexity prior on (rho, sigma) via tail probabilities
/// P(rho < rho0) = alpha_rho and P(sigma > sigma0) = alpha_sigma.
struct PcPrior {
  double rho0 = 1.0;
  double alpha_rho = 0.5;
  double sigma0 = 1.0;
  double alpha_sigma = 0.5;

  void validate() const;
  double lambda_rho() const;    // rho ~ density l r^-2 exp(-l/r)
  double lambda_sigma() const;  // sigma ~ Exp(l)
};

/// Normalised joint log-density of (rho, sigma) under the PC prior.
double pc_log_density(const PcPrior& prior, const MaternParams& p);

}  // namespace cryobayes
