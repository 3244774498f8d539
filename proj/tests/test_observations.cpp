#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "cryobayes/observations.hpp"
#include "oracles.hpp"

using namespace cryobayes;

namespace {

const Polygon kSquare = Polygon::rectangle(0, 0, 1, 1);

ProcessSpec point_fixed_effects(const std::string& id) {
  // Default prior precisions for [intercept, s1, s2, elevation].
  ProcessSpec s;
  s.id = id;
  s.kind = ProcessKind::FixedEffects;
  s.fixed_precisions = Vec(4);
  s.fixed_precisions << 1e-6, 1.0, 1.0, 0.1;
  return s;
}

struct RatesFixture {
  std::unique_ptr<MeshContext> coarse;
  std::unique_ptr<MeshContext> fine;
  StackedPrior prior;
  std::map<std::string, const MeshContext*> geometry;
  InstrumentMask mask = InstrumentMask::separation_defaults("gia", "ice", "smb", "firn");

  RatesFixture() {
    coarse = std::make_unique<MeshContext>(build_mesh(kSquare, 0.34, 0.5, 0.5));
    fine = std::make_unique<MeshContext>(build_mesh(kSquare, 0.26, 0.5, 0.4));

    ProcessSpec gia;
    gia.id = "gia";
    gia.kind = ProcessKind::SpatialOnly;
    gia.matern = {0.3, 0.5, 1.0};

    ProcessSpec ice;
    ice.id = "ice";
    ice.kind = ProcessKind::TrendRegression;
    ice.n_epochs = 3;
    ice.beta0_var = Vec::Constant(1, 0.25);
    ice.beta1_var = Vec::Constant(1, 0.01);
    ice.resid_var = 0.01;

    ProcessSpec smb;
    smb.id = "smb";
    smb.kind = ProcessKind::Ar1SpatioTemporal;
    smb.n_epochs = 3;
    smb.matern = {0.4, 0.3, 1.0};
    smb.ar_coeff = Vec::Constant(1, 0.4);

    ProcessSpec firn;
    firn.id = "firn";
    firn.kind = ProcessKind::Ar1SpatioTemporal;
    firn.n_epochs = 3;
    firn.matern = {0.15, 0.5, 1.0};
    firn.ar_coeff = Vec::Constant(1, 0.8);

    prior = stack({spatial_only_prior(gia, coarse->fem), ar1_prior(smb, fine->fem),
                   ar1_prior(firn, fine->fem),
                   trend_regression_prior(ice, fine->n_vertices())});
    geometry = {{"gia", coarse.get()}, {"smb", fine.get()}, {"firn", fine.get()},
                {"ice", fine.get()}};
  }
};

}  // namespace

TEST_CASE("point_operator: row layout [1, s1, s2, z, barycentric]") {
  auto geom = std::make_unique<MeshContext>(build_mesh(kSquare, 0.3, 0.0));
  ProcessSpec field;
  field.id = "u";
  field.kind = ProcessKind::SpatialOnly;
  field.matern = {0.5, 0.4, 1.0};
  const StackedPrior prior =
      stack({fixed_effects_prior(point_fixed_effects("beta")), spatial_only_prior(field, geom->fem)});

  PointObs o;
  o.s1 = 0.31;
  o.s2 = 0.62;
  o.value = 1.0;
  o.epoch = 0;
  o.covariates = Vec::Constant(1, 0.77);  // elevation
  o.noise_sd = 0.1;

  PointRegression reg;
  reg.fixed_effects_id = "beta";
  reg.field_id = "u";
  reg.geometry = geom.get();
  reg.n_covariates = 1;

  const LinearObsOp op = point_operator({o}, prior, reg);
  const auto& beta = prior.block("beta", "weights", -1);
  CHECK(op.H.coeff(0, beta.offset + 0) == doctest::Approx(1.0));
  CHECK(op.H.coeff(0, beta.offset + 1) == doctest::Approx(0.31));
  CHECK(op.H.coeff(0, beta.offset + 2) == doctest::Approx(0.62));
  CHECK(op.H.coeff(0, beta.offset + 3) == doctest::Approx(0.77));
  // barycentric part sums to 1
  const auto& f = prior.block("u", "field", -1);
  double bary_sum = 0.0;
  for (int k = 0; k < f.size; ++k) bary_sum += op.H.coeff(0, f.offset + k);
  CHECK(bary_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(op.noise_var[0] == doctest::Approx(0.01));
}

TEST_CASE("point_operator: missing covariates are an error") {
  auto geom = std::make_unique<MeshContext>(build_mesh(kSquare, 0.3, 0.0));
  const StackedPrior prior = stack({fixed_effects_prior(point_fixed_effects("beta"))});
  PointObs o;
  o.s1 = 0.5;
  o.s2 = 0.5;
  o.noise_sd = 0.1;  // no covariates supplied
  PointRegression reg;
  reg.fixed_effects_id = "beta";
  reg.n_covariates = 1;
  CHECK_THROWS_AS(point_operator({o}, prior, reg), InvalidInput);
}

TEST_CASE("point zero-noise datum at a vertex is reproduced by the posterior mean") {
  auto geom = std::make_unique<MeshContext>(build_mesh(kSquare, 0.3, 0.0));
  ProcessSpec field;
  field.id = "u";
  field.kind = ProcessKind::SpatialOnly;
  field.matern = {0.8, 0.5, 1.0};
  const StackedPrior prior = stack({spatial_only_prior(field, geom->fem)});

  const Point2 vert = geom->mesh.vertices[7];
  PointObs o;
  o.s1 = vert.x;
  o.s2 = vert.y;
  o.value = 1.234;
  o.noise_sd = 1e-7;
  PointRegression reg;
  reg.field_id = "u";
  reg.geometry = geom.get();
  const LinearObsOp op = point_operator({o}, prior, reg);
  const PosteriorResult res =
      gaussian_condition(prior, op.H, op.noise_var, op.values, op.offset, {0, false, 0, 1});
  CHECK(std::abs((op.H * res.mean)[0] - 1.234) < 1e-6);
}

TEST_CASE("footprint_operator: GPS rows are zero on every ice-process column") {
  RatesFixture fx;
  FootprintObs gps;
  gps.footprint = make_footprint(Polygon::rectangle(0.4, 0.4, 0.5, 0.5), 0.02);
  gps.instrument = Instrument::Gps;
  gps.epoch = 1;
  gps.noise_sd = 0.05;
  const LinearObsOp op = footprint_operator({gps}, fx.mask, fx.prior, fx.geometry);

  for (const auto& b : fx.prior.blocks()) {
    if (b.process == "gia") continue;
    for (int k = 0; k < b.size; ++k) CHECK(op.H.coeff(0, b.offset + k) == 0.0);
  }
  // and it does see GIA
  double gia_sum = 0.0;
  const auto& g = fx.prior.block("gia", "field", -1);
  for (int k = 0; k < g.size; ++k) gia_sum += op.H.coeff(0, g.offset + k);
  CHECK(gia_sum == doctest::Approx(gps.footprint.weight_sum()).epsilon(1e-9));
}

TEST_CASE("footprint_operator: gravimetry over a constant thickness-change field") {
  RatesFixture fx;
  const Polygon box = Polygon::rectangle(0.2, 0.3, 0.7, 0.8);
  FootprintObs grav;
  grav.footprint = make_footprint(box, 0.02);
  grav.instrument = Instrument::Gravimetry;
  grav.epoch = 0;
  grav.noise_sd = 1.0;
  const LinearObsOp op = footprint_operator({grav}, fx.mask, fx.prior, fx.geometry);

  // latent: ice dynamics constant h via beta0, everything else zero
  const double h = 0.21;
  Vec eta = Vec::Zero(fx.prior.size());
  const auto& b0 = fx.prior.block("ice", "beta0", -1);
  for (int k = 0; k < b0.size; ++k) eta[b0.offset + k] = h;
  CHECK((op.H * eta)[0] == doctest::Approx(917.0 * h * box.area()).epsilon(1e-6));

  // smb enters in water equivalent (weight 1)
  Vec eta_smb = Vec::Zero(fx.prior.size());
  const auto& s0 = fx.prior.block("smb", "field", 0);
  for (int k = 0; k < s0.size; ++k) eta_smb[s0.offset + k] = h;
  CHECK((op.H * eta_smb)[0] == doctest::Approx(h * box.area()).epsilon(1e-6));

  // firn is mass preserving: no contribution
  Vec eta_firn = Vec::Zero(fx.prior.size());
  const auto& f0 = fx.prior.block("firn", "field", 0);
  for (int k = 0; k < f0.size; ++k) eta_firn[f0.offset + k] = h;
  CHECK((op.H * eta_firn)[0] == 0.0);
}

TEST_CASE("footprint_operator: altimetry over the whole domain adds all processes") {
  RatesFixture fx;
  FootprintObs alt;
  alt.footprint = make_footprint(kSquare, 0.05);
  alt.instrument = Instrument::Altimetry;
  alt.epoch = 2;
  alt.noise_sd = 0.1;
  const LinearObsOp op = footprint_operator({alt}, fx.mask, fx.prior, fx.geometry);

  const double s = 0.2, f = -0.05, gia = 0.02;
  // ice value at epoch 2 = beta0 + 2 beta1 + resid_2; set beta0 = 0.3 only
  const double ice = 0.3;
  Vec eta = Vec::Zero(fx.prior.size());
  auto fill = [&](const LatentBlock& b, double v) {
    for (int k = 0; k < b.size; ++k) eta[b.offset + k] = v;
  };
  fill(fx.prior.block("smb", "field", 2), s);
  fill(fx.prior.block("firn", "field", 2), f);
  fill(fx.prior.block("gia", "field", -1), gia);
  fill(fx.prior.block("ice", "beta0", -1), ice);
  CHECK((op.H * eta)[0] == doctest::Approx((s + f + gia + ice) * kSquare.area()).epsilon(1e-6));
}

TEST_CASE("footprint_operator: normalized footprints average instead of integrate") {
  RatesFixture fx;
  const Polygon box = Polygon::rectangle(0.1, 0.1, 0.6, 0.4);
  FootprintObs alt;
  alt.footprint = make_footprint(box, 0.02);
  alt.instrument = Instrument::Altimetry;
  alt.normalize = true;
  alt.noise_sd = 0.1;
  const LinearObsOp op = footprint_operator({alt}, fx.mask, fx.prior, fx.geometry);
  Vec eta = Vec::Zero(fx.prior.size());
  const auto& g = fx.prior.block("gia", "field", -1);
  for (int k = 0; k < g.size; ++k) eta[g.offset + k] = 0.5;
  CHECK((op.H * eta)[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("mask totality and unknown instruments are enforced") {
  RatesFixture fx;
  InstrumentMask incomplete;
  incomplete.set(Instrument::Gps, "gia", InstrumentMask::Weight::One);
  FootprintObs gps;
  gps.footprint = make_footprint(Polygon::rectangle(0.4, 0.4, 0.5, 0.5), 0.02);
  gps.instrument = Instrument::Gps;
  gps.noise_sd = 0.1;
  CHECK_THROWS_AS(footprint_operator({gps}, incomplete, fx.prior, fx.geometry), InvalidInput);
  CHECK_THROWS_AS(instrument_from_string("sonar"), InvalidInput);
}

TEST_CASE("an observation seeing no process is an all-zero row error") {
  RatesFixture fx;
  InstrumentMask blind = fx.mask;
  blind.set(Instrument::Gps, "gia", InstrumentMask::Weight::Zero);
  FootprintObs gps;
  gps.footprint = make_footprint(Polygon::rectangle(0.4, 0.4, 0.5, 0.5), 0.02);
  gps.instrument = Instrument::Gps;
  gps.noise_sd = 0.1;
  CHECK_THROWS_AS(footprint_operator({gps}, blind, fx.prior, fx.geometry), InvalidInput);
}

TEST_CASE("operator assembly is linear: concatenation stacks rows") {
  RatesFixture fx;
  FootprintObs a;
  a.footprint = make_footprint(Polygon::rectangle(0.1, 0.1, 0.3, 0.3), 0.02);
  a.instrument = Instrument::Altimetry;
  a.noise_sd = 0.1;
  FootprintObs b = a;
  b.instrument = Instrument::Gravimetry;
  b.noise_sd = 2.0;

  const LinearObsOp sep_a = footprint_operator({a}, fx.mask, fx.prior, fx.geometry);
  const LinearObsOp sep_b = footprint_operator({b}, fx.mask, fx.prior, fx.geometry);
  const LinearObsOp both = footprint_operator({a, b}, fx.mask, fx.prior, fx.geometry);
  const LinearObsOp glued = concat(sep_a, sep_b);
  CHECK((oracle::dense(both.H) - oracle::dense(glued.H)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((both.noise_var - glued.noise_var).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulate_data: determinism and the zero-noise identity limit") {
  ProcessSpec fxspec;
  fxspec.id = "w";
  fxspec.kind = ProcessKind::FixedEffects;
  fxspec.fixed_precisions = Vec::Constant(3, 2.0);
  const StackedPrior prior = stack({fixed_effects_prior(fxspec)});

  LinearObsOp op;
  op.H = SpMat(3, 3);
  op.H.setIdentity();
  op.noise_var = Vec::Zero(3);
  op.offset = Vec::Zero(3);
  op.values = Vec::Zero(3);

  const SimulatedData d1 = simulate_data(prior, op, 31337);
  const SimulatedData d2 = simulate_data(prior, op, 31337);
  CHECK((d1.z - d2.z).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d1.truth - d2.truth).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d1.z - d1.truth).cwiseAbs().maxCoeff() == 0.0);  // noise_var = 0, H = I

  const SimulatedData d3 = simulate_data(prior, op, 31338);
  CHECK((d3.truth - d1.truth).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("simulate_data: replicate moments match the dense inverse") {
  ProcessSpec fxspec;
  fxspec.id = "w";
  fxspec.kind = ProcessKind::FixedEffects;
  fxspec.fixed_precisions = Vec(3);
  fxspec.fixed_precisions << 2.0, 0.5, 1.25;
  const StackedPrior prior = stack({fixed_effects_prior(fxspec)});
  LinearObsOp op;
  op.H = SpMat(1, 3);
  op.H.insert(0, 0) = 1.0;
  op.noise_var = Vec::Constant(1, 0.01);
  op.offset = Vec::Zero(1);
  op.values = Vec::Zero(1);

  const int reps = 20000;
  Mat acc = Mat::Zero(3, 3);
  for (int k = 0; k < reps; ++k) {
    const SimulatedData d = simulate_data(prior, op, RandomStream::derive_seed(5, (std::uint64_t)k));
    acc += d.truth * d.truth.transpose();
  }
  acc /= reps;
  const Mat cov = oracle::dense_inverse(prior.precision());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / reps);
      CHECK(std::abs(acc(i, j) - cov(i, j)) <= 3.5 * se);
    }
}
