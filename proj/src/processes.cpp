#include "cryobayes/processes.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cryobayes {

std::string to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::SpatialOnly: return "spatial-only";
    case ProcessKind::TrendRegression: return "trend-regression";
    case ProcessKind::Ar1SpatioTemporal: return "ar1";
    case ProcessKind::FixedEffects: return "fixed-effects";
  }
  return "?";
}

ProcessKind process_kind_from_string(const std::string& name) {
  if (name == "spatial-only") return ProcessKind::SpatialOnly;
  if (name == "trend-regression") return ProcessKind::TrendRegression;
  if (name == "ar1") return ProcessKind::Ar1SpatioTemporal;
  if (name == "fixed-effects") return ProcessKind::FixedEffects;
  throw InvalidInput("unknown process kind '" + name + "'");
}

namespace {

Vec broadcast(const Vec& v, int n, const std::string& what) {
  if (v.size() == n) return v;
  if (v.size() == 1) return Vec::Constant(n, v[0]);
  throw InvalidInput(what + ": expected size 1 or " + std::to_string(n) + ", got " +
                     std::to_string(v.size()));
}

// Diagonal precision block, clamping non-positive variances to a hard prior.
void append_diag_precision(std::vector<Triplet>& trips, int offset, const Vec& variances) {
  constexpr double kHardPrecision = 1e12;
  for (Eigen::Index i = 0; i < variances.size(); ++i) {
    const double prec = variances[i] > 0.0 ? 1.0 / variances[i] : kHardPrecision;
    trips.emplace_back(offset + static_cast<int>(i), offset + static_cast<int>(i), prec);
  }
}

}  // namespace

ProcessPrior spatial_only_prior(const ProcessSpec& spec, const FemMatrices& fem) {
  if (spec.kind != ProcessKind::SpatialOnly)
    throw InvalidInput("spatial_only_prior: wrong kind for process '" + spec.id + "'");
  if (spec.n_epochs < 1) throw InvalidInput("spatial_only_prior: n_epochs must be >= 1");
  ProcessPrior out;
  out.spec = spec;
  out.Q = build_precision(fem, spec.matern).Q;
  out.blocks.push_back({spec.id, "field", -1, 0, static_cast<int>(out.Q.rows())});
  return out;
}

ProcessPrior ar1_prior(const ProcessSpec& spec, const FemMatrices& fem) {
  if (spec.kind != ProcessKind::Ar1SpatioTemporal)
    throw InvalidInput("ar1_prior: wrong kind for process '" + spec.id + "'");
  const int T = spec.n_epochs;
  if (T < 1) throw InvalidInput("ar1_prior: n_epochs must be >= 1");
  const SpMat q_w = build_precision(fem, spec.matern).Q;
  const int n = static_cast<int>(q_w.rows());
  const Vec a = broadcast(spec.ar_coeff.size() ? spec.ar_coeff : Vec::Zero(1), n,
                          "ar1_prior(" + spec.id + "): ar_coeff");
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!(std::abs(a[i]) < 1.0))
      throw InvalidInput("ar1_prior(" + spec.id + "): |a| >= 1 at vertex " + std::to_string(i));
  Vec d(n);  // sqrt(1 - a^2): scales the t=0 block to the stationary marginal
  for (int i = 0; i < n; ++i) d[i] = std::sqrt(1.0 - a[i] * a[i]);

  // Joint precision of the stationary AR(1):
  //   t = 0:            D Q_w D + A Q_w A   (just D Q_w D when T = 1)
  //   0 < t < T-1:      Q_w + A Q_w A
  //   t = T-1:          Q_w
  //   (t, t+1):        -A Q_w   with transpose pair -Q_w A
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(q_w.nonZeros()) * static_cast<std::size_t>(3 * T));
  for (int col = 0; col < n; ++col) {
    for (SpMat::InnerIterator it(q_w, col); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = col;
      const double q = it.value();
      for (int t = 0; t < T; ++t) {
        double diag_scale;
        if (t == 0)
          diag_scale = d[i] * d[j] + (T > 1 ? a[i] * a[j] : 0.0);
        else if (t < T - 1)
          diag_scale = 1.0 + a[i] * a[j];
        else
          diag_scale = 1.0;
        trips.emplace_back(t * n + i, t * n + j, q * diag_scale);
        if (t + 1 < T) {
          const double off = -a[i] * q;  // block (t, t+1) entry (i, j)
          trips.emplace_back(t * n + i, (t + 1) * n + j, off);
          trips.emplace_back((t + 1) * n + j, t * n + i, off);
        }
      }
    }
  }

  ProcessPrior out;
  out.spec = spec;
  out.spec.ar_coeff = a;
  out.Q.resize(T * n, T * n);
  out.Q.setFromTriplets(trips.begin(), trips.end());
  for (int t = 0; t < T; ++t) out.blocks.push_back({spec.id, "field", t, t * n, n});
  return out;
}

ProcessPrior trend_regression_prior(const ProcessSpec& spec, int n_vertices) {
  if (spec.kind != ProcessKind::TrendRegression)
    throw InvalidInput("trend_regression_prior: wrong kind for process '" + spec.id + "'");
  const int T = spec.n_epochs;
  if (T < 1) throw InvalidInput("trend_regression_prior: n_epochs must be >= 1");
  const int n = n_vertices;
  const Vec v0 = broadcast(spec.beta0_var.size() ? spec.beta0_var : Vec::Zero(1), n,
                           "trend_regression_prior(" + spec.id + "): beta0_var");
  const Vec v1 = broadcast(spec.beta1_var.size() ? spec.beta1_var : Vec::Zero(1), n,
                           "trend_regression_prior(" + spec.id + "): beta1_var");
  if ((v0.array() < 0.0).any() || (v1.array() < 0.0).any() || spec.resid_var < 0.0)
    throw InvalidInput("trend_regression_prior(" + spec.id + "): variances must be >= 0");

  const bool with_beta1 = (v1.array() > 0.0).any();
  const bool with_resid = spec.resid_var > 0.0;

  ProcessPrior out;
  out.spec = spec;
  out.spec.beta0_var = v0;
  out.spec.beta1_var = with_beta1 ? v1 : Vec();
  std::vector<Triplet> trips;
  int offset = 0;
  out.blocks.push_back({spec.id, "beta0", -1, offset, n});
  append_diag_precision(trips, offset, v0);
  offset += n;
  if (with_beta1) {
    out.blocks.push_back({spec.id, "beta1", -1, offset, n});
    append_diag_precision(trips, offset, v1);
    offset += n;
  }
  if (with_resid) {
    const Vec vr = Vec::Constant(n, spec.resid_var);
    for (int t = 0; t < T; ++t) {
      out.blocks.push_back({spec.id, "resid", t, offset, n});
      append_diag_precision(trips, offset, vr);
      offset += n;
    }
  }
  out.Q.resize(offset, offset);
  out.Q.setFromTriplets(trips.begin(), trips.end());
  return out;
}

ProcessPrior fixed_effects_prior(const ProcessSpec& spec) {
  if (spec.kind != ProcessKind::FixedEffects)
    throw InvalidInput("fixed_effects_prior: wrong kind for process '" + spec.id + "'");
  const int k = static_cast<int>(spec.fixed_precisions.size());
  if (k < 1) throw InvalidInput("fixed_effects_prior(" + spec.id + "): no precisions given");
  if ((spec.fixed_precisions.array() <= 0.0).any())
    throw InvalidInput("fixed_effects_prior(" + spec.id + "): precisions must be > 0");
  ProcessPrior out;
  out.spec = spec;
  std::vector<Triplet> trips;
  for (int i = 0; i < k; ++i) trips.emplace_back(i, i, spec.fixed_precisions[i]);
  out.Q.resize(k, k);
  out.Q.setFromTriplets(trips.begin(), trips.end());
  out.blocks.push_back({spec.id, "weights", -1, 0, k});
  return out;
}

ProcessPrior build_process_prior(const ProcessSpec& spec, const FemMatrices* fem) {
  switch (spec.kind) {
    case ProcessKind::SpatialOnly:
      if (!fem) throw InvalidInput("process '" + spec.id + "' needs a mesh");
      return spatial_only_prior(spec, *fem);
    case ProcessKind::Ar1SpatioTemporal:
      if (!fem) throw InvalidInput("process '" + spec.id + "' needs a mesh");
      return ar1_prior(spec, *fem);
    case ProcessKind::TrendRegression:
      if (!fem) throw InvalidInput("process '" + spec.id + "' needs a mesh");
      return trend_regression_prior(spec, static_cast<int>(fem->lumped_mass.size()));
    case ProcessKind::FixedEffects:
      return fixed_effects_prior(spec);
  }
  throw InvalidInput("build_process_prior: unknown kind");
}

StackedPrior stack(const std::vector<ProcessPrior>& parts) {
  std::set<std::string> ids;
  for (const auto& p : parts)
    if (!ids.insert(p.spec.id).second)
      throw InvalidInput("stack: duplicate process id '" + p.spec.id + "'");

  int total = 0;
  for (const auto& p : parts) total += p.size();

  StackedPrior out;
  std::vector<Triplet> trips;
  int offset = 0;
  for (const auto& p : parts) {
    for (int col = 0; col < p.size(); ++col)
      for (SpMat::InnerIterator it(p.Q, col); it; ++it)
        trips.emplace_back(offset + static_cast<int>(it.row()), offset + col, it.value());
    for (auto b : p.blocks) {
      b.offset += offset;
      out.blocks_.push_back(b);
    }
    out.specs_.push_back(p.spec);
    offset += p.size();
  }
  out.Q_.resize(total, total);
  out.Q_.setFromTriplets(trips.begin(), trips.end());
  out.mean_ = Vec::Zero(total);
  return out;
}

bool StackedPrior::has_process(const std::string& process) const {
  return std::any_of(specs_.begin(), specs_.end(),
                     [&](const ProcessSpec& s) { return s.id == process; });
}

const ProcessSpec& StackedPrior::spec(const std::string& process) const {
  for (const auto& s : specs_)
    if (s.id == process) return s;
  throw InvalidInput("stacked prior: unknown process '" + process + "'");
}

std::vector<EpochTerm> StackedPrior::epoch_view(const std::string& process, int epoch) const {
  const ProcessSpec& s = spec(process);
  if (epoch < 0) throw InvalidInput("epoch_view: epoch must be >= 0");
  std::vector<EpochTerm> terms;
  switch (s.kind) {
    case ProcessKind::SpatialOnly: {
      const auto& b = block(process, "field", -1);
      terms.push_back({b.offset, b.size, 1.0});
      break;
    }
    case ProcessKind::Ar1SpatioTemporal: {
      if (epoch >= s.n_epochs)
        throw InvalidInput("epoch_view: epoch " + std::to_string(epoch) + " out of range for '" +
                           process + "'");
      const auto& b = block(process, "field", epoch);
      terms.push_back({b.offset, b.size, 1.0});
      break;
    }
    case ProcessKind::TrendRegression: {
      if (epoch >= s.n_epochs)
        throw InvalidInput("epoch_view: epoch " + std::to_string(epoch) + " out of range for '" +
                           process + "'");
      const auto& b0 = block(process, "beta0", -1);
      terms.push_back({b0.offset, b0.size, 1.0});
      if (s.beta1_var.size() && epoch != 0) {
        const auto& b1 = block(process, "beta1", -1);
        terms.push_back({b1.offset, b1.size, static_cast<double>(epoch)});
      }
      if (s.resid_var > 0.0) {
        const auto& br = block(process, "resid", epoch);
        terms.push_back({br.offset, br.size, 1.0});
      }
      break;
    }
    case ProcessKind::FixedEffects:
      throw InvalidInput("epoch_view: fixed-effects block '" + process +
                         "' has no per-epoch field");
  }
  return terms;
}

const LatentBlock& StackedPrior::block(const std::string& process, const std::string& role,
                                       int epoch) const {
  for (const auto& b : blocks_)
    if (b.process == process && b.role == role && b.epoch == epoch) return b;
  throw InvalidInput("stacked prior: no block (" + process + ", " + role + ", epoch " +
                     std::to_string(epoch) + ")");
}

Vec epoch_value(const StackedPrior& prior, const Vec& latent, const std::string& process,
                int epoch) {
  Vec out;
  for (const EpochTerm& term : prior.epoch_view(process, epoch)) {
    if (out.size() == 0)
      out = term.scale * latent.segment(term.offset, term.size);
    else
      out += term.scale * latent.segment(term.offset, term.size);
  }
  return out;
}

Mat epoch_value_rows(const StackedPrior& prior, const Mat& draws, const std::string& process,
                     int epoch) {
  Mat out;
  for (const EpochTerm& term : prior.epoch_view(process, epoch)) {
    if (out.size() == 0)
      out = term.scale * draws.middleCols(term.offset, term.size);
    else
      out += term.scale * draws.middleCols(term.offset, term.size);
  }
  return out;
}

std::pair<const LatentBlock*, int> StackedPrior::locate_index(int global_index) const {
  if (global_index < 0 || global_index >= size())
    throw InvalidInput("locate_index: index out of range");
  auto it = std::upper_bound(blocks_.begin(), blocks_.end(), global_index,
                             [](int g, const LatentBlock& b) { return g < b.offset; });
  const LatentBlock& b = *(it - 1);
  return {&b, global_index - b.offset};
}

}  // namespace cryobayes
