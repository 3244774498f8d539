#pragma once

#include <map>
#include <string>
#include <vector>

#include "cryobayes/fem.hpp"
#include "cryobayes/inference.hpp"
#include "cryobayes/processes.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

enum class Instrument { Gps, Altimetry, Gravimetry };

std::string to_string(Instrument inst);
Instrument instrument_from_string(const std::string& name);

/// Pointwise observation with regression covariates (beyond 1, s1, s2).
struct PointObs {
  double s1 = 0.0;
  double s2 = 0.0;
  double value = 0.0;
  int epoch = 0;
  Vec covariates;
  double noise_sd = 1.0;
};

/// Footprint-integral observation. When `normalize` is set the row is
/// divided by the footprint area (footprint average instead of integral).
struct FootprintObs {
  Footprint footprint;
  double value = 0.0;
  int epoch = 0;
  Instrument instrument = Instrument::Altimetry;
  double noise_sd = 1.0;
  bool normalize = false;
};

/// Per (instrument, process) weight entering the footprint integrand.
/// The mask must be total over the processes it is applied to.
class InstrumentMask {
 public:
  enum class Weight { Zero, One, IceDensity };

  InstrumentMask() = default;

  void set(Instrument inst, const std::string& process, Weight w);
  double weight(Instrument inst, const std::string& process) const;
  bool defined(Instrument inst, const std::string& process) const;

  double rho_ice() const { return rho_ice_; }
  void set_rho_ice(double value);

  /// Default mask for the four-process separation setup:
  ///   GPS sees only GIA (bedrock);
  ///   altimetry sees every surface process and GIA with weight 1;
  ///   gravimetry sees SMB in water equivalent (1), ice dynamics with the
  ///   ice density, firn with 0 (mass preserving), and GIA with 0 (the
  ///   gravimetry product is assumed solid-earth corrected).
  static InstrumentMask separation_defaults(const std::string& gia, const std::string& ice,
                                            const std::string& smb, const std::string& firn,
                                            double rho_ice = 917.0);

 private:
  std::map<std::pair<Instrument, std::string>, Weight> table_;
  double rho_ice_ = 917.0;
};

/// Sparse linear observation operator with per-datum noise variances and
/// an additive offset (zero for the paper's zero-mean models).
struct LinearObsOp {
  SpMat H;
  Vec noise_var;
  Vec offset;
  Vec values;  // observed z, in row order

  int rows() const { return static_cast<int>(H.rows()); }
};

/// Row-stacks two operators over the same latent layout.
LinearObsOp concat(const LinearObsOp& a, const LinearObsOp& b);

/// Fixed-effect design for pointwise data: columns [1, s1, s2, covariates...]
/// placed at a FixedEffects block, plus barycentric rows on a latent field.
struct PointRegression {
  std::string fixed_effects_id;        // empty: no fixed effects
  std::string field_id;                // empty: no latent field
  const MeshContext* geometry = nullptr;  // required when field_id is set
  int n_covariates = 0;                // covariates beyond (1, s1, s2)
};

LinearObsOp point_operator(const std::vector<PointObs>& obs, const StackedPrior& prior,
                           const PointRegression& regression);

/// Footprint-integral operator over every non-fixed-effects process in the
/// prior. Geometry must be supplied per process (processes may live on
/// different meshes). A row in which no process is visible is an error.
LinearObsOp footprint_operator(const std::vector<FootprintObs>& obs, const InstrumentMask& mask,
                               const StackedPrior& prior,
                               const std::map<std::string, const MeshContext*>& geometry);

struct SimulatedData {
  Vec z;      // H truth + offset + noise
  Vec truth;  // drawn latent vector, kept for scoring
};

/// Draws eta ~ N(mean, Q^{-1}) by sparse Cholesky back-substitution and
/// returns noisy observations; bit-reproducible under seed.
SimulatedData simulate_data(const StackedPrior& prior, const LinearObsOp& op, std::uint64_t seed);

}  // namespace cryobayes
