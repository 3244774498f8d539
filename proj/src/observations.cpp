#include "cryobayes/observations.hpp"

#include <algorithm>
#include <cmath>

namespace cryobayes {

std::string to_string(Instrument inst) {
  switch (inst) {
    case Instrument::Gps: return "gps";
    case Instrument::Altimetry: return "altimetry";
    case Instrument::Gravimetry: return "gravimetry";
  }
  return "?";
}

Instrument instrument_from_string(const std::string& name) {
  if (name == "gps") return Instrument::Gps;
  if (name == "altimetry") return Instrument::Altimetry;
  if (name == "gravimetry") return Instrument::Gravimetry;
  throw InvalidInput("unknown instrument '" + name + "'");
}

void InstrumentMask::set(Instrument inst, const std::string& process, Weight w) {
  table_[{inst, process}] = w;
}

bool InstrumentMask::defined(Instrument inst, const std::string& process) const {
  return table_.count({inst, process}) > 0;
}

double InstrumentMask::weight(Instrument inst, const std::string& process) const {
  auto it = table_.find({inst, process});
  if (it == table_.end())
    throw InvalidInput("instrument mask: no entry for (" + to_string(inst) + ", " + process +
                       "); the mask must be total");
  switch (it->second) {
    case Weight::Zero: return 0.0;
    case Weight::One: return 1.0;
    case Weight::IceDensity: return rho_ice_;
  }
  return 0.0;
}

void InstrumentMask::set_rho_ice(double value) {
  if (!(value > 0.0)) throw InvalidInput("instrument mask: rho_ice must be > 0");
  rho_ice_ = value;
}

InstrumentMask InstrumentMask::separation_defaults(const std::string& gia, const std::string& ice,
                                                   const std::string& smb, const std::string& firn,
                                                   double rho_ice) {
  InstrumentMask m;
  m.set_rho_ice(rho_ice);
  m.set(Instrument::Gps, gia, Weight::One);
  m.set(Instrument::Gps, ice, Weight::Zero);
  m.set(Instrument::Gps, smb, Weight::Zero);
  m.set(Instrument::Gps, firn, Weight::Zero);
  m.set(Instrument::Altimetry, gia, Weight::One);
  m.set(Instrument::Altimetry, ice, Weight::One);
  m.set(Instrument::Altimetry, smb, Weight::One);
  m.set(Instrument::Altimetry, firn, Weight::One);
  m.set(Instrument::Gravimetry, gia, Weight::Zero);
  m.set(Instrument::Gravimetry, ice, Weight::IceDensity);
  m.set(Instrument::Gravimetry, smb, Weight::One);
  m.set(Instrument::Gravimetry, firn, Weight::Zero);
  return m;
}

LinearObsOp concat(const LinearObsOp& a, const LinearObsOp& b) {
  if (a.H.cols() != b.H.cols()) throw InvalidInput("concat: operators have different latent sizes");
  LinearObsOp out;
  out.H.resize(a.H.rows() + b.H.rows(), a.H.cols());
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(a.H.nonZeros() + b.H.nonZeros()));
  for (int col = 0; col < a.H.outerSize(); ++col)
    for (SpMat::InnerIterator it(a.H, col); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), col, it.value());
  for (int col = 0; col < b.H.outerSize(); ++col)
    for (SpMat::InnerIterator it(b.H, col); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()) + static_cast<int>(a.H.rows()), col,
                         it.value());
  out.H.setFromTriplets(trips.begin(), trips.end());
  auto join = [](const Vec& x, const Vec& y) {
    Vec v(x.size() + y.size());
    v << x, y;
    return v;
  };
  out.noise_var = join(a.noise_var, b.noise_var);
  out.offset = join(a.offset, b.offset);
  out.values = join(a.values, b.values);
  return out;
}

LinearObsOp point_operator(const std::vector<PointObs>& obs, const StackedPrior& prior,
                           const PointRegression& regression) {
  const bool with_fixed = !regression.fixed_effects_id.empty();
  const bool with_field = !regression.field_id.empty();
  if (with_field && regression.geometry == nullptr)
    throw InvalidInput("point_operator: field regression needs mesh geometry");

  const LatentBlock* fixed_block = nullptr;
  if (with_fixed) {
    fixed_block = &prior.block(regression.fixed_effects_id, "weights", -1);
    if (fixed_block->size != 3 + regression.n_covariates)
      throw InvalidInput("point_operator: fixed-effects block size " +
                         std::to_string(fixed_block->size) + " does not match design width " +
                         std::to_string(3 + regression.n_covariates));
  }

  std::vector<Triplet> trips;
  Vec noise_var(obs.size()), values(obs.size());
  for (std::size_t r = 0; r < obs.size(); ++r) {
    const PointObs& o = obs[r];
    if (!(o.noise_sd > 0.0))
      throw InvalidInput("point_operator: observation " + std::to_string(r) +
                         " has non-positive noise_sd");
    if (o.covariates.size() != regression.n_covariates)
      throw InvalidInput("point_operator: observation " + std::to_string(r) + " has " +
                         std::to_string(o.covariates.size()) + " covariates, expected " +
                         std::to_string(regression.n_covariates));
    const int row = static_cast<int>(r);
    if (with_fixed) {
      trips.emplace_back(row, fixed_block->offset + 0, 1.0);
      trips.emplace_back(row, fixed_block->offset + 1, o.s1);
      trips.emplace_back(row, fixed_block->offset + 2, o.s2);
      for (int k = 0; k < regression.n_covariates; ++k)
        trips.emplace_back(row, fixed_block->offset + 3 + k, o.covariates[k]);
    }
    if (with_field) {
      std::array<double, 3> bary{};
      const int t = regression.geometry->locator.locate(o.s1, o.s2, bary);
      if (t < 0)
        throw InvalidInput("point_operator: observation " + std::to_string(r) +
                           " lies outside the mesh hull");
      const auto& tri = regression.geometry->mesh.triangles[static_cast<std::size_t>(t)];
      for (const EpochTerm& term : prior.epoch_view(regression.field_id, o.epoch))
        for (int k = 0; k < 3; ++k)
          trips.emplace_back(row, term.offset + tri[static_cast<std::size_t>(k)],
                             term.scale * bary[static_cast<std::size_t>(k)]);
    }
    if (!with_fixed && !with_field)
      throw InvalidInput("point_operator: observation sees no latent block");
    noise_var[row] = o.noise_sd * o.noise_sd;
    values[row] = o.value;
  }

  LinearObsOp op;
  op.H.resize(static_cast<int>(obs.size()), prior.size());
  op.H.setFromTriplets(trips.begin(), trips.end());
  op.noise_var = noise_var;
  op.offset = Vec::Zero(static_cast<Eigen::Index>(obs.size()));
  op.values = values;
  return op;
}

LinearObsOp footprint_operator(const std::vector<FootprintObs>& obs, const InstrumentMask& mask,
                               const StackedPrior& prior,
                               const std::map<std::string, const MeshContext*>& geometry) {
  std::vector<Triplet> trips;
  Vec noise_var(obs.size()), values(obs.size());
  for (std::size_t r = 0; r < obs.size(); ++r) {
    const FootprintObs& o = obs[r];
    if (!(o.noise_sd > 0.0))
      throw InvalidInput("footprint_operator: observation " + std::to_string(r) +
                         " has non-positive noise_sd");
    const int row = static_cast<int>(r);
    const double norm = o.normalize ? 1.0 / o.footprint.weight_sum() : 1.0;
    bool any = false;
    std::vector<std::string> seen;  // visit each process once
    for (const auto& b : prior.blocks()) {
      if (std::find(seen.begin(), seen.end(), b.process) != seen.end()) continue;
      seen.push_back(b.process);
      const ProcessSpec& ps = prior.spec(b.process);
      if (ps.kind == ProcessKind::FixedEffects) continue;
      const double w = mask.weight(o.instrument, b.process);
      if (w == 0.0) continue;
      auto geom_it = geometry.find(b.process);
      if (geom_it == geometry.end() || geom_it->second == nullptr)
        throw InvalidInput("footprint_operator: no mesh geometry for process '" + b.process + "'");
      const Eigen::SparseVector<double> base =
          footprint_matrix(geom_it->second->locator, o.footprint, w * norm);
      for (const EpochTerm& term : prior.epoch_view(b.process, o.epoch)) {
        for (Eigen::SparseVector<double>::InnerIterator it(base); it; ++it) {
          trips.emplace_back(row, term.offset + static_cast<int>(it.index()),
                             term.scale * it.value());
          any = true;
        }
      }
    }
    if (!any)
      throw InvalidInput("footprint_operator: observation " + std::to_string(r) + " (" +
                         to_string(o.instrument) + ", epoch " + std::to_string(o.epoch) +
                         ") sees no process; H would have an all-zero row");
    noise_var[row] = o.noise_sd * o.noise_sd;
    values[row] = o.value;
  }

  LinearObsOp op;
  op.H.resize(static_cast<int>(obs.size()), prior.size());
  op.H.setFromTriplets(trips.begin(), trips.end());
  op.noise_var = noise_var;
  op.offset = Vec::Zero(static_cast<Eigen::Index>(obs.size()));
  op.values = values;
  return op;
}

SimulatedData simulate_data(const StackedPrior& prior, const LinearObsOp& op, std::uint64_t seed) {
  RandomStream rng(seed);
  SparseChol chol(prior.precision());
  SimulatedData out;
  out.truth = prior.mean() + chol.sample(rng);
  out.z = op.H * out.truth + op.offset;
  for (Eigen::Index i = 0; i < out.z.size(); ++i)
    out.z[i] += std::sqrt(op.noise_var[i]) * rng.normal();
  return out;
}

}  // namespace cryobayes
