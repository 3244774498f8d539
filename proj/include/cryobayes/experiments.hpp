#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cryobayes/io.hpp"
#include "cryobayes/observations.hpp"
#include "cryobayes/transport.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

// ---------------------------------------------------------------------------
// Surface mass balance study: per-year, per-season pointwise regression with
// a latent Matern residual, scored against a synthetic truth on a grid.
// ---------------------------------------------------------------------------

/// Truth generator and fit hyperparameters for one season.
struct SeasonModel {
  // Coefficients of [1, s1, s2, elevation]; each year draws
  // coef ~ N(base, coef_sd^2) independently per coefficient.
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
  double coef_sd = 0.15;
  // Matern residual field of the truth (sigma = 0: purely linear truth).
  // The fit uses the same (sigma, rho) for its latent field.
  MaternParams resid{0.25, 0.35, 1.0};
};

struct SmbStudyConfig {
  Polygon glacier;              // study domain; default: glacier-like blob
  int n_sites = 25;
  int n_years = 19;             // 1997..2015 analogue
  int first_year = 1997;
  double mesh_edge = 0.07;
  double extension_factor = 1.0;
  double truth_mesh_edge = 0.055;  // finer, structurally independent truth mesh
  int grid_nx = 40;                // prediction grid resolution
  double noise_sd = 0.08;
  int holdout_max = 3;             // per epoch, drop 0..holdout_max sites
  SeasonModel winter;
  SeasonModel summer;
  Vec fixed_effect_precisions;     // [intercept, s1, s2, elevation]
  int sd_draws = 200;

  SmbStudyConfig();
};

struct SmbFitRecord {
  int year = 0;
  std::string season;
  bool ok = true;
  std::string error;
  int n_obs = 0;
  int n_holdout = 0;
  int holdout_covered = 0;
  double rmse_grid = 0.0;  // vs truth, grid nodes inside the glacier
};

struct SmbStudyReport {
  std::vector<SmbFitRecord> fits;
  double rmse_overall = 0.0;       // pooled over all successful fits
  int holdout_total = 0;
  int holdout_covered = 0;
  double holdout_coverage = 0.0;   // pooled 95% interval coverage
  double net_gap_max = 0.0;        // max |net - (winter + summer)| from files
  std::vector<std::string> warnings;
};

/// Runs the study; when `out` is non-null all prediction, SD, net and truth
/// grids are written there and grid scores are recomputed by the isolated
/// file-based scorer.
SmbStudyReport run_smb_study(const SmbStudyConfig& config, std::uint64_t seed,
                             OutputDir* out = nullptr);

// ---------------------------------------------------------------------------
// Rates study: four-process separation (GIA, ice dynamics, SMB, firn) from
// GPS + altimetry + gravimetry footprints, with transport-generated ice truth.
// ---------------------------------------------------------------------------

struct RatesFieldConfig {
  double sigma = 0.3;
  double rho = 0.4;
  double ar = 0.0;  // AR(1) coefficient (ignored for GIA)
};

struct RatesStudyConfig {
  int n_epochs = 7;                 // 2003..2009 analogue
  Polygon domain;                   // default: unit square
  int grid_nx = 36;                 // truth/report grid
  double coarse_mesh_edge = 0.20;   // GIA
  double fine_mesh_edge = 0.12;     // ice dynamics, SMB, firn
  double extension_factor = 1.0;

  RatesFieldConfig gia{0.25, 0.6, 0.0};
  RatesFieldConfig smb{0.35, 0.25, 0.4};
  RatesFieldConfig firn{0.12, 0.5, 0.85};

  // Ice dynamics trend regression: prior variance of the linear-trend weight
  // grows monotonically with the local flow speed.
  double ice_beta0_sd = 0.8;
  double ice_beta1_sd_base = 0.02;
  double ice_beta1_sd_speed = 0.10;  // + this * (|v| / max |v|)
  double ice_resid_sd = 0.08;

  // Instruments (footprint averages for GPS/altimetry, integrals with mass
  // weights for gravimetry are still normalised to keep scales comparable).
  int gps_count = 6;
  double gps_size = 0.05;
  double gps_noise_sd = 0.01;
  int altimetry_grid = 7;
  double altimetry_noise_sd = 0.02;
  int gravimetry_grid = 4;
  double gravimetry_noise_sd = 4.0;
  bool with_gravimetry = true;
  bool compare_without_gravimetry = true;
  double rho_ice = 917.0;

  // Transport truth generator.
  double thickness0 = 40.0;
  double flow_speed = 0.004;
  int substeps = 4;
  double epoch_dt = 1.0;

  int posterior_draws = 200;

  RatesStudyConfig();
};

struct RatesProcessScore {
  std::string process;
  Vec err_sq_mean;     // per scored vertex, mean over epochs of (mean-truth)^2
  Vec prior_var_mean;  // per scored vertex, mean over epochs of the prior variance
  double frac_below = 0.0;  // fraction of vertices with rmse < prior sd
  double rmse = 0.0;
};

struct RatesStudyReport {
  std::vector<RatesProcessScore> scores;
  double mean_abs_corr_with_grav = 0.0;     // posterior |corr(SMB, ice)| averaged
  double mean_abs_corr_without_grav = 0.0;  // NaN when not computed
  double gia_sd_at_gps = 0.0;               // posterior GIA sd near GPS sites
  double gia_prior_sd = 0.0;
  int n_obs = 0;
  int stipple_count = 0;  // vertices/epochs with |mean|/sd > 1 across processes
  std::vector<std::string> warnings;
};

RatesStudyReport run_rates_study(const RatesStudyConfig& config, std::uint64_t seed,
                                 OutputDir* out = nullptr);

// ---------------------------------------------------------------------------
// Scoring, isolated from the fitting state.
// ---------------------------------------------------------------------------

struct FieldScore {
  double rmse = 0.0;
  double max_abs_diff = 0.0;
  int n = 0;
};

/// Scores prediction vs truth at grid nodes (restricted to a polygon when
/// given). Grids must be congruent.
FieldScore score_fields(const GridField& truth, const GridField& prediction,
                        const Polygon* within = nullptr);

/// File-based scorer: reads the two grids fresh and delegates to score_fields.
FieldScore score_grid_files(const std::string& truth_path, const std::string& prediction_path,
                            const Polygon* within = nullptr);

}  // namespace cryobayes
