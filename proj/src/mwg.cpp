#include "cryobayes/mwg.hpp"

#include <cmath>
#include <sstream>

namespace cryobayes {

namespace {

double to_transformed(double theta, ParamScale s) {
  switch (s) {
    case ParamScale::Linear: return theta;
    case ParamScale::Log: return std::log(theta);
    case ParamScale::FisherZ: return std::atanh(theta);
  }
  return theta;
}

double to_natural(double u, ParamScale s) {
  switch (s) {
    case ParamScale::Linear: return u;
    case ParamScale::Log: return std::exp(u);
    case ParamScale::FisherZ: return std::tanh(u);
  }
  return u;
}

// log |d theta / d u|
double log_jacobian(double u, ParamScale s) {
  switch (s) {
    case ParamScale::Linear: return 0.0;
    case ParamScale::Log: return u;
    case ParamScale::FisherZ: {
      const double t = std::tanh(u);
      return std::log1p(-t * t);
    }
  }
  return 0.0;
}

}  // namespace

MwgResult mwg_sample(const MwgModel& model, const MwgOptions& options) {
  const int dim = static_cast<int>(model.theta0.size());
  if (dim < 1) throw InvalidInput("mwg_sample: empty hyperparameter vector");
  if (model.scales.size() != static_cast<std::size_t>(dim))
    throw InvalidInput("mwg_sample: scales must match theta0 length");
  if (!model.log_posterior) throw InvalidInput("mwg_sample: log_posterior not set");
  if (options.burn_in < 0 || options.n_iter <= options.burn_in)
    throw InvalidInput("mwg_sample: need n_iter > burn_in >= 0");
  if (options.thin < 1) throw InvalidInput("mwg_sample: thin must be >= 1");

  RandomStream rng(options.seed);

  Vec u(dim), theta = model.theta0;
  for (int i = 0; i < dim; ++i) u[i] = to_transformed(theta[i], model.scales[i]);

  auto transformed_target = [&](const Vec& ut, Vec& theta_out, double& natural_lp) {
    theta_out.resize(dim);
    double jac = 0.0;
    for (int i = 0; i < dim; ++i) {
      theta_out[i] = to_natural(ut[i], model.scales[i]);
      jac += log_jacobian(ut[i], model.scales[i]);
    }
    natural_lp = model.log_posterior(theta_out);
    return natural_lp + jac;
  };

  double natural_lp = 0.0;
  double lp = transformed_target(u, theta, natural_lp);
  if (!std::isfinite(lp)) {
    std::ostringstream oss;
    oss << "mwg_sample: non-finite log-posterior at initial state; theta = [";
    for (int i = 0; i < dim; ++i) oss << (i ? ", " : "") << theta[i];
    oss << "]";
    throw NumericalError(oss.str());
  }

  const int retained = (options.n_iter - options.burn_in + options.thin - 1) / options.thin;
  MwgResult res;
  res.names = model.names;
  res.chain.resize(retained, dim);
  res.chain_log_post.resize(retained);

  double scale = options.init_step;
  int window_accepts = 0, window_count = 0;
  long post_accepts = 0, post_count = 0;

  Vec latent_sum, latent_sum_sq;
  int n_latent = 0;
  std::vector<Vec> stored_latent;

  int row = 0;
  for (int it = 0; it < options.n_iter; ++it) {
    // (ii) Block random-walk Metropolis on transformed hyperparameters.
    Vec u_prop = u + scale * rng.normal_vector(dim);
    Vec theta_prop;
    double natural_lp_prop = 0.0;
    const double lp_prop = transformed_target(u_prop, theta_prop, natural_lp_prop);
    const bool accept = std::isfinite(lp_prop) && std::log(rng.uniform()) < lp_prop - lp;
    if (accept) {
      u = u_prop;
      theta = theta_prop;
      lp = lp_prop;
      natural_lp = natural_lp_prop;
    }

    const bool in_burn_in = it < options.burn_in;
    if (in_burn_in) {
      window_accepts += accept ? 1 : 0;
      if (++window_count == options.adapt_window) {
        const double rate = static_cast<double>(window_accepts) / window_count;
        if (rate < options.target_accept_lo)
          scale *= 0.8;
        else if (rate > options.target_accept_hi)
          scale *= 1.25;
        window_accepts = 0;
        window_count = 0;
      }
      continue;
    }

    post_accepts += accept ? 1 : 0;
    ++post_count;
    if ((it - options.burn_in) % options.thin != 0) continue;

    res.chain.row(row) = theta.transpose();
    res.chain_log_post[row] = natural_lp;
    ++row;

    // (i) Exact conditional latent draw given the current hyperparameters.
    if (model.draw_latent) {
      const Vec x = model.draw_latent(theta, rng);
      if (latent_sum.size() == 0) {
        latent_sum = Vec::Zero(x.size());
        latent_sum_sq = Vec::Zero(x.size());
      }
      latent_sum += x;
      latent_sum_sq += x.cwiseProduct(x);
      ++n_latent;
      if (options.store_latent_draws) stored_latent.push_back(x);
    }
  }
  res.chain.conservativeResize(row, dim);
  res.chain_log_post.conservativeResize(row);
  res.accept_rate = post_count ? static_cast<double>(post_accepts) / post_count : 0.0;
  res.proposal_scale = scale;

  if (n_latent > 0) {
    res.latent_mean = latent_sum / n_latent;
    Vec var = latent_sum_sq / n_latent - res.latent_mean.cwiseProduct(res.latent_mean);
    res.latent_sd = var.cwiseMax(0.0).cwiseSqrt();
    if (options.store_latent_draws) {
      res.latent_draws.resize(n_latent, res.latent_mean.size());
      for (int i = 0; i < n_latent; ++i) res.latent_draws.row(i) = stored_latent[static_cast<std::size_t>(i)].transpose();
    }
  }
  return res;
}

double split_rhat(const std::vector<Vec>& chains) {
  // Gelman-Rubin with each chain split in half.
  std::vector<Vec> halves;
  for (const auto& c : chains) {
    const Eigen::Index h = c.size() / 2;
    if (h < 2) throw InvalidInput("split_rhat: chains too short");
    halves.push_back(c.head(h));
    halves.push_back(c.tail(h));
  }
  const double m = static_cast<double>(halves.size());
  const double n = static_cast<double>(halves[0].size());
  double grand = 0.0;
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    const double mu = h.mean();
    means.push_back(mu);
    vars.push_back((h.array() - mu).square().sum() / (n - 1.0));
    grand += mu;
  }
  grand /= m;
  double b = 0.0, w = 0.0;
  for (std::size_t k = 0; k < halves.size(); ++k) {
    b += (means[k] - grand) * (means[k] - grand);
    w += vars[k];
  }
  b *= n / (m - 1.0);
  w /= m;
  if (w <= 0.0) return 1.0;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

}  // namespace cryobayes
