#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "cryobayes/experiments.hpp"
#include "cryobayes/matern.hpp"
#include "cryobayes/processes.hpp"
#include "cryobayes/transport.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

enum class RunMode { SmbStudy, RatesStudy, Fit, Simulate, Transport };

std::string to_string(RunMode mode);

/// Hyperparameters sampled by the fit-mode Metropolis-within-Gibbs layer.
struct SamplerHyper {
  std::string process;  // (sigma, rho) of this process are sampled
  PcPrior pc;
  bool sample_ar = false;  // AR(1) coefficient, uniform prior on (-1, 1)
};

struct SamplerConfig {
  bool enabled = false;
  int iterations = 2000;
  int burn_in = 500;
  int thin = 1;
  int chains = 1;
  double init_step = 0.25;
  bool sample_noise_scale = false;   // global multiplicative noise-variance scale
  double noise_scale_log_sd = 0.5;   // lognormal prior sd of that scale
  std::vector<SamplerHyper> hyper;
};

struct MeshConfig {
  std::string polygon_path;  // polygon + edge, or explicit vertex/triangle files
  std::string vertices_path;
  std::string triangles_path;
  double edge = 0.1;
  double extension_factor = 1.0;
  double range_hint = 0.0;
};

struct MaskEntryConfig {
  std::string instrument;
  std::string process;
  std::string weight;  // "zero" | "one" | "ice-density"
};

struct FitConfig {
  MeshConfig mesh;
  std::vector<ProcessSpec> processes;
  bool with_fixed_effects = false;
  Vec fixed_precisions;
  std::string point_field;  // process read by point observations
  std::string observations_path;
  double footprint_cell = 0.0;  // 0: mesh edge / 4
  double rho_ice = 917.0;
  std::vector<MaskEntryConfig> mask_entries;
  SamplerConfig sampler;
};

struct TransportRunConfig {
  GridSpec grid;
  TransportBc bc = TransportBc::Periodic;
  double thickness0 = 1.0;
  std::string thickness_file;
  double u0 = 0.0, v0 = 0.0;
  std::string u_file, v_file;  // face grids: (nx+1) x ny and nx x (ny+1)
  double source = 0.0;
  std::string source_file;
  double dt = 0.0;
  int steps = 0;
  int output_every = 0;  // 0: final state only
};

struct RunConfig {
  RunMode mode = RunMode::Fit;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int threads = 1;
  int replicates = 1;
  SmbStudyConfig smb;
  RatesStudyConfig rates;
  FitConfig fit;  // shared by fit and simulate modes
  TransportRunConfig transport;
};

/// Strict parse: unknown keys are rejected, every error is reported (not just
/// the first), referenced files must exist, and the seed is mandatory.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_json(const nlohmann::json& j, const std::string& base_dir);

/// Fully-resolved configuration (defaults included) for the run manifest.
nlohmann::json echo_config(const RunConfig& config);

}  // namespace cryobayes
