#pragma once

#include <string>
#include <vector>

#include "cryobayes/matern.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

enum class ProcessKind { SpatialOnly, TrendRegression, Ar1SpatioTemporal, FixedEffects };

std::string to_string(ProcessKind kind);
ProcessKind process_kind_from_string(const std::string& name);

/// Declarative description of one latent process.
struct ProcessSpec {
  std::string id;
  ProcessKind kind = ProcessKind::SpatialOnly;
  int n_epochs = 1;  // T

  MaternParams matern;  // field (SpatialOnly) or innovation (Ar1) parameters

  // Ar1SpatioTemporal: per-vertex AR coefficient a(s) in (-1,1); size 1
  // broadcasts a constant.
  Vec ar_coeff;

  // TrendRegression: per-vertex prior variances of the weight fields for
  // covariates x_t = (1, t); size 1 broadcasts. An all-zero variance drops
  // the corresponding weight field. resid_var is the variance of the
  // iid-per-coefficient residual field w_t (0 drops it).
  Vec beta0_var;
  Vec beta1_var;
  double resid_var = 0.0;

  // FixedEffects: diagonal prior precisions of a small weight block.
  Vec fixed_precisions;
};

/// One contiguous range of the stacked latent vector.
struct LatentBlock {
  std::string process;
  std::string role;  // "field", "beta0", "beta1", "resid", "weights"
  int epoch = -1;    // -1 for time-invariant blocks
  int offset = 0;
  int size = 0;
};

/// Term of the linear read-out of a process value at one epoch:
/// value(s) = sum_terms scale * phi(s)' eta[offset : offset+size].
struct EpochTerm {
  int offset = 0;
  int size = 0;
  double scale = 1.0;
};

/// Single-process prior before stacking; offsets are process-local.
struct ProcessPrior {
  ProcessSpec spec;
  SpMat Q;
  std::vector<LatentBlock> blocks;
  int size() const { return static_cast<int>(Q.rows()); }
};

/// Joint zero-mean Gaussian prior over all process coefficients, with a
/// deterministic layout (stacking order, then epoch, then vertex).
class StackedPrior {
 public:
  StackedPrior() = default;

  const SpMat& precision() const { return Q_; }
  const Vec& mean() const { return mean_; }
  int size() const { return static_cast<int>(Q_.rows()); }
  const std::vector<LatentBlock>& blocks() const { return blocks_; }

  bool has_process(const std::string& process) const;
  const ProcessSpec& spec(const std::string& process) const;

  /// Blocks read by the process value at one epoch. Time-invariant
  /// processes are served at every epoch.
  std::vector<EpochTerm> epoch_view(const std::string& process, int epoch) const;

  const LatentBlock& block(const std::string& process, const std::string& role, int epoch) const;

  /// Reverse lookup: global index -> (block, within-block offset).
  std::pair<const LatentBlock*, int> locate_index(int global_index) const;

  friend StackedPrior stack(const std::vector<ProcessPrior>& parts);

 private:
  SpMat Q_;
  Vec mean_;
  std::vector<LatentBlock> blocks_;
  std::vector<ProcessSpec> specs_;
};

ProcessPrior spatial_only_prior(const ProcessSpec& spec, const FemMatrices& fem);
ProcessPrior ar1_prior(const ProcessSpec& spec, const FemMatrices& fem);
ProcessPrior trend_regression_prior(const ProcessSpec& spec, int n_vertices);
ProcessPrior fixed_effects_prior(const ProcessSpec& spec);

/// Dispatch on spec.kind; fem may be null for kinds that do not need it.
ProcessPrior build_process_prior(const ProcessSpec& spec, const FemMatrices* fem);

/// Block-diagonal join; duplicate process ids are rejected.
StackedPrior stack(const std::vector<ProcessPrior>& parts);

/// Process value at one epoch, read out of a stacked latent vector.
Vec epoch_value(const StackedPrior& prior, const Vec& latent, const std::string& process,
                int epoch);

/// Same for a draws-by-N matrix of latent samples (rows are draws).
Mat epoch_value_rows(const StackedPrior& prior, const Mat& draws, const std::string& process,
                     int epoch);

}  // namespace cryobayes
