#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cryobayes/config.hpp"
#include "cryobayes/inference.hpp"
#include "cryobayes/io.hpp"
#include "cryobayes/mwg.hpp"
#include "cryobayes/observations.hpp"

namespace cryobayes {

/// Model assembled from a fit/simulate config: one mesh, stacked prior,
/// instrument mask and the linear operator for the observation file
/// (point rows first, then footprint rows, each in file order).
struct FitModel {
  std::unique_ptr<MeshContext> geom;
  StackedPrior prior;
  std::map<std::string, const MeshContext*> geometry;
  InstrumentMask mask;
  std::vector<ObsRecord> records;       // reordered: points, then footprints
  std::vector<PointObs> point_obs;
  std::vector<FootprintObs> footprint_obs;
  LinearObsOp op;
};

FitModel build_fit_model(const FitConfig& config);

/// Hyperparameter layer over a fit model per the sampler config: (sigma, rho)
/// of the listed processes on the log scale, optional AR coefficients on the
/// Fisher-z scale, optional global noise-variance scale.
MwgModel make_fit_mwg_model(const FitConfig& config, const FitModel& model);

// CLI mode runners; each writes its artifacts into `out`.
void run_fit_mode(const RunConfig& config, OutputDir& out);
void run_simulate_mode(const RunConfig& config, OutputDir& out);
void run_transport_mode(const RunConfig& config, OutputDir& out);
void run_smb_mode(const RunConfig& config, OutputDir& out);
void run_rates_mode(const RunConfig& config, OutputDir& out);

}  // namespace cryobayes
