#include "cryobayes/inference.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

namespace cryobayes {

void SparseChol::analyze_pattern(const SpMat& Q) {
  ldlt_.analyzePattern(Q);
  analyzed_ = true;
  ready_ = false;
  n_ = static_cast<int>(Q.rows());
}

void SparseChol::factorize(const SpMat& Q) {
  if (!analyzed_ || n_ != Q.rows()) analyze_pattern(Q);
  ldlt_.factorize(Q);
  if (ldlt_.info() != Eigen::Success || (ldlt_.vectorD().array() <= 0.0).any())
    throw NumericalError("SparseChol: matrix is not symmetric positive definite");
  ready_ = true;
  n_ = static_cast<int>(Q.rows());
}

Vec SparseChol::solve(const Vec& rhs) const {
  if (!ready_) throw NumericalError("SparseChol: factorisation not available");
  return ldlt_.solve(rhs);
}

double SparseChol::log_det() const {
  if (!ready_) throw NumericalError("SparseChol: factorisation not available");
  return ldlt_.vectorD().array().log().sum();
}

Vec SparseChol::sample(RandomStream& rng) const {
  if (!ready_) throw NumericalError("SparseChol: factorisation not available");
  // Q = P' L D L' P  =>  x = P^{-1} L^{-T} D^{-1/2} z  ~  N(0, Q^{-1}).
  Vec z = rng.normal_vector(n_);
  z.array() /= ldlt_.vectorD().array().sqrt();
  Vec y = ldlt_.matrixU().solve(z);
  return ldlt_.permutationPinv() * y;
}

Vec SparseChol::marginal_variances() const {
  if (!ready_) throw NumericalError("SparseChol: factorisation not available");
  Vec out(n_);
  Vec e = Vec::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    e[i] = 1.0;
    out[i] = ldlt_.solve(e)[i];
    e[i] = 0.0;
  }
  return out;
}

PosteriorResult gaussian_condition(const StackedPrior& prior, const SpMat& H,
                                   const Vec& noise_var, const Vec& z, const Vec& offset,
                                   const ConditionOptions& options) {
  const int n = prior.size();
  const int m = static_cast<int>(z.size());
  if (H.rows() != m) throw InvalidInput("gaussian_condition: H rows must match data length");
  if (H.cols() != n) throw InvalidInput("gaussian_condition: H cols must match latent size");
  if (noise_var.size() != m)
    throw InvalidInput("gaussian_condition: noise_var must match data length");
  if ((noise_var.array() <= 0.0).any())
    throw InvalidInput("gaussian_condition: noise variances must be > 0");
  if (offset.size() != 0 && offset.size() != m)
    throw InvalidInput("gaussian_condition: offset must be empty or match data length");

  PosteriorResult res;
  res.factor = options.workspace ? options.workspace->post : std::make_shared<SparseChol>();

  Vec r = z;
  if (offset.size()) r -= offset;
  r -= H * prior.mean();

  const Vec noise_prec = noise_var.cwiseInverse();
  SpMat q_post = prior.precision();
  if (m > 0) {
    SpMat ht_r_h = H.transpose() * noise_prec.asDiagonal() * H;
    q_post += ht_r_h;
  }
  q_post.makeCompressed();
  res.factor->factorize(q_post);

  if (m == 0) {
    res.mean = prior.mean();
    res.log_marginal_likelihood = 0.0;
  } else {
    const Vec b = H.transpose() * noise_prec.cwiseProduct(r).eval();
    const Vec delta = res.factor->solve(b);
    res.mean = prior.mean() + delta;

    SparseChol local_prior_chol;
    SparseChol& prior_chol =
        options.workspace ? *options.workspace->prior : local_prior_chol;
    prior_chol.factorize(prior.precision());
    const double quad = r.dot(noise_prec.cwiseProduct(r)) - b.dot(delta);
    res.log_marginal_likelihood =
        -0.5 * (m * std::log(2.0 * M_PI) + noise_var.array().log().sum() +
                res.factor->log_det() - prior_chol.log_det() + quad);
  }

  if (options.exact_sd) {
    res.marginal_sd = res.factor->marginal_variances().cwiseSqrt();
    res.sd_method = "exact";
  } else if (options.sd_draws > 0) {
    RandomStream rng(options.seed);
    Vec sum_sq = Vec::Zero(n);
    for (int k = 0; k < options.sd_draws; ++k) {
      const Vec x = res.factor->sample(rng);
      sum_sq += x.cwiseProduct(x);
    }
    res.marginal_sd = (sum_sq / options.sd_draws).cwiseSqrt();
    res.sd_method = "sampling(" + std::to_string(options.sd_draws) + ")";
  } else {
    res.sd_method = "none";
  }

  if (options.store_samples > 0)
    res.samples = sample_posterior(res, options.store_samples,
                                   RandomStream::derive_seed(options.seed, 0x5a));
  return res;
}

DensePosterior gaugau_exact(const Vec& mu_prior, const Mat& sigma_prior, const Mat& F,
                            const Mat& sigma_like, const Vec& x) {
  const Eigen::Index m = x.size();
  const Eigen::Index n = mu_prior.size();
  if (F.rows() != m || F.cols() != n) throw InvalidInput("gaugau_exact: F has wrong shape");
  if (sigma_prior.rows() != n || sigma_prior.cols() != n)
    throw InvalidInput("gaugau_exact: prior covariance has wrong shape");
  if (sigma_like.rows() != m || sigma_like.cols() != m)
    throw InvalidInput("gaugau_exact: likelihood covariance has wrong shape");

  const Mat gain_denom = F * sigma_prior * F.transpose() + sigma_like;
  Eigen::LDLT<Mat> ldlt(gain_denom);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
    throw NumericalError("gaugau_exact: singular covariance");

  const Mat k_gain = sigma_prior * F.transpose() * ldlt.solve(Mat::Identity(m, m));
  DensePosterior res;
  res.mean = mu_prior + k_gain * (x - F * mu_prior);
  res.cov = sigma_prior - k_gain * F * sigma_prior;
  // Symmetrise against roundoff.
  res.cov = 0.5 * (res.cov + res.cov.transpose()).eval();
  return res;
}

Mat sample_posterior(const PosteriorResult& result, int n_draws, std::uint64_t seed) {
  if (!result.factor || !result.factor->ready())
    throw NumericalError("sample_posterior: no factorisation available");
  RandomStream rng(seed);
  Mat draws(n_draws, result.mean.size());
  for (int k = 0; k < n_draws; ++k)
    draws.row(k) = (result.mean + result.factor->sample(rng)).transpose();
  return draws;
}

}  // namespace cryobayes
