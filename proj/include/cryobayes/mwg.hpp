#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cryobayes/random.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

/// Sampling transform per hyperparameter: positive parameters move on the
/// log scale, AR coefficients in (-1,1) on the Fisher-z scale.
enum class ParamScale { Linear, Log, FisherZ };

/// Hyperparameter layer of the model. log_posterior receives natural-scale
/// parameters and returns log p(z | theta) + log p(theta); the sampler adds
/// transform Jacobians itself. draw_latent (optional) produces an exact
/// conditional draw of the latent vector given theta.
struct MwgModel {
  Vec theta0;
  std::vector<std::string> names;
  std::vector<ParamScale> scales;
  std::function<double(const Vec&)> log_posterior;
  std::function<Vec(const Vec&, RandomStream&)> draw_latent;
};

struct MwgOptions {
  int n_iter = 2000;       // total sweeps including burn-in
  int burn_in = 500;
  int thin = 1;
  std::uint64_t seed = 1;
  double init_step = 0.25;     // initial proposal scale (transformed space)
  int adapt_window = 50;       // burn-in only; frozen afterwards
  double target_accept_lo = 0.25;
  double target_accept_hi = 0.45;
  bool store_latent_draws = false;
};

struct MwgResult {
  std::vector<std::string> names;
  Mat chain;                   // retained iterations x dim, natural scale
  Vec chain_log_post;          // log p(z|theta) + log p(theta) per retained row
  double accept_rate = 0.0;    // after burn-in
  double proposal_scale = 0.0; // frozen scale
  Vec latent_mean;             // running summaries over retained latent draws
  Vec latent_sd;
  Mat latent_draws;            // only if store_latent_draws
};

/// Metropolis-within-Gibbs: alternates an exact Gaussian latent draw given
/// hyperparameters with a block random-walk Metropolis step on transformed
/// hyperparameters targeting p(theta | z). Proposal scale adapts during
/// burn-in only.
MwgResult mwg_sample(const MwgModel& model, const MwgOptions& options);

/// Split-R-hat convergence diagnostic for one parameter across chains.
double split_rhat(const std::vector<Vec>& chains);

}  // namespace cryobayes
