#pragma once

#include <memory>
#include <string>

#include <Eigen/SparseCholesky>

#include "cryobayes/processes.hpp"
#include "cryobayes/random.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

/// Sparse Cholesky (LDLT with AMD ordering) of an SPD matrix. The symbolic
/// analysis can be reused across matrices with the same sparsity pattern.
class SparseChol {
 public:
  SparseChol() = default;
  explicit SparseChol(const SpMat& Q) { factorize(Q); }

  void analyze_pattern(const SpMat& Q);
  /// Numerical factorisation; throws NumericalError if Q is not SPD.
  void factorize(const SpMat& Q);

  bool ready() const { return ready_; }
  int size() const { return n_; }

  Vec solve(const Vec& rhs) const;
  double log_det() const;

  /// Draw x ~ N(0, Q^{-1}) by back-substitution of standard normals.
  Vec sample(RandomStream& rng) const;

  /// Exact marginal variances of N(0, Q^{-1}), one linear solve per column.
  Vec marginal_variances() const;

 private:
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool analyzed_ = false;
  bool ready_ = false;
  int n_ = 0;
};

/// Posterior of the stacked latent vector under a linear Gaussian data model.
struct PosteriorResult {
  Vec mean;
  Vec marginal_sd;
  Mat samples;  // draws x N; empty unless requested
  double log_marginal_likelihood = 0.0;
  std::string sd_method;  // "sampling(k)", "exact", or "none"
  std::shared_ptr<SparseChol> factor;  // posterior precision factor
};

/// Reusable factorisation slots: the fill-reducing ordering is computed once
/// per sparsity pattern and reused across repeated conditioning calls (one
/// hyperparameter sweep = one workspace). Each call re-factorises numerically
/// and invalidates factors handed out by earlier calls.
struct ConditionWorkspace {
  std::shared_ptr<SparseChol> post = std::make_shared<SparseChol>();
  std::shared_ptr<SparseChol> prior = std::make_shared<SparseChol>();
};

struct ConditionOptions {
  int sd_draws = 200;      // sampling-based marginal-sd estimator; 0 skips
  bool exact_sd = false;   // exact column-solve path instead of sampling
  int store_samples = 0;   // retained posterior draws
  std::uint64_t seed = 1;
  std::shared_ptr<ConditionWorkspace> workspace;
};

/// Exact conditioning: posterior precision Q + H' R^{-1} H, mean solving
/// Q_post mu = H' R^{-1} (z - offset) + Q mu_prior, and the log marginal
/// likelihood via the prior and posterior Cholesky log-determinants.
PosteriorResult gaussian_condition(const StackedPrior& prior, const SpMat& H,
                                   const Vec& noise_var, const Vec& z,
                                   const Vec& offset = Vec(),
                                   const ConditionOptions& options = {});

/// Dense conjugate normal-normal update (small problems; the brute-force
/// oracle for the sparse path).
struct DensePosterior {
  Vec mean;
  Mat cov;
};
DensePosterior gaugau_exact(const Vec& mu_prior, const Mat& sigma_prior, const Mat& F,
                            const Mat& sigma_like, const Vec& x);

/// Exact posterior draws from a conditioned result; reproducible under seed.
Mat sample_posterior(const PosteriorResult& result, int n_draws, std::uint64_t seed);

}  // namespace cryobayes
