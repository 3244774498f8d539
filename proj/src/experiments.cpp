#include "cryobayes/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "cryobayes/inference.hpp"
#include "cryobayes/random.hpp"

namespace cryobayes {

namespace {

// Synthetic elevation over the study domain: a smooth dome, high in the
// interior and falling off toward the margin (scaled units).
double dome_elevation(double s1, double s2) {
  const double dx = s1 - 0.47, dy = s2 - 0.52;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * 0.22 * 0.22));
}

Polygon glacier_blob() {
  std::vector<Point2> v;
  const int n = 48;
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * M_PI * k / n;
    const double r = 0.40 + 0.05 * std::sin(3 * a) + 0.03 * std::cos(5 * a + 1.1);
    v.push_back({0.5 + 1.02 * r * std::cos(a), 0.5 + 0.85 * r * std::sin(a)});
  }
  return Polygon(std::move(v));
}

GridSpec report_grid(const Polygon& domain, int nx) {
  const BBox box = domain.bbox();
  GridSpec g;
  g.nx = nx;
  g.dx = box.width() / nx;
  g.ny = std::max(1, static_cast<int>(std::floor(box.height() / g.dx)));
  g.ox = box.xmin;
  g.oy = box.ymin;
  return g;
}

std::vector<Point2> grid_centers(const GridSpec& g) {
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(g.cells()));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) pts.push_back({g.cell_x(i), g.cell_y(j)});
  return pts;
}

double bilinear(const GridField& f, double x, double y) {
  const GridSpec& g = f.grid;
  double fx = std::clamp((x - g.ox) / g.dx - 0.5, 0.0, static_cast<double>(g.nx - 1));
  double fy = std::clamp((y - g.oy) / g.dx - 0.5, 0.0, static_cast<double>(g.ny - 1));
  const int i0 = std::min(static_cast<int>(fx), std::max(g.nx - 2, 0));
  const int j0 = std::min(static_cast<int>(fy), std::max(g.ny - 2, 0));
  const int i1 = std::min(i0 + 1, g.nx - 1), j1 = std::min(j0 + 1, g.ny - 1);
  const double ax = fx - i0, ay = fy - j0;
  return (1 - ax) * (1 - ay) * f.at(i0, j0) + ax * (1 - ay) * f.at(i1, j0) +
         (1 - ax) * ay * f.at(i0, j1) + ax * ay * f.at(i1, j1);
}

// Column-wise sd of projected posterior draws around the exact mean.
Vec sd_around(const Mat& value_draws, const Vec& mean) {
  Vec out(mean.size());
  for (Eigen::Index c = 0; c < mean.size(); ++c)
    out[c] = std::sqrt((value_draws.col(c).array() - mean[c]).square().mean());
  return out;
}

std::vector<Point2> sample_sites(const Polygon& poly, int count, double margin, RandomStream& rng) {
  const BBox box = poly.bbox();
  std::vector<Point2> sites;
  int guard = 0;
  while (static_cast<int>(sites.size()) < count) {
    if (++guard > 100000) throw NumericalError("site sampling failed; polygon too thin?");
    const Point2 p{rng.uniform(box.xmin + margin, box.xmax - margin),
                   rng.uniform(box.ymin + margin, box.ymax - margin)};
    if (poly.contains(p.x, p.y)) sites.push_back(p);
  }
  return sites;
}

// Rows [1, s1, s2, elev | A] over the stacked latent [fixed(4), field(n)].
SpMat point_design(const std::vector<Point2>& pts, const Vec& elev, const SpMat* a_field,
                   int n_latent) {
  std::vector<Triplet> trips;
  trips.reserve(pts.size() * 7);
  for (std::size_t r = 0; r < pts.size(); ++r) {
    const int row = static_cast<int>(r);
    trips.emplace_back(row, 0, 1.0);
    trips.emplace_back(row, 1, pts[r].x);
    trips.emplace_back(row, 2, pts[r].y);
    trips.emplace_back(row, 3, elev[row]);
  }
  if (a_field) {
    for (int col = 0; col < a_field->outerSize(); ++col)
      for (SpMat::InnerIterator it(*a_field, col); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), 4 + col, it.value());
  }
  SpMat d(static_cast<int>(pts.size()), n_latent);
  d.setFromTriplets(trips.begin(), trips.end());
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// SMB study
// ---------------------------------------------------------------------------

SmbStudyConfig::SmbStudyConfig() {
  glacier = glacier_blob();
  winter = SeasonModel{0.8, 0.2, -0.1, 1.2, 0.15, {0.25, 0.35, 1.0}};
  summer = SeasonModel{-2.4, 0.1, 0.15, 1.8, 0.20, {0.30, 0.30, 1.0}};
  fixed_effect_precisions = Vec(4);
  fixed_effect_precisions << 1e-6, 1.0, 1.0, 0.1;
}

namespace {

struct SeasonContext {
  bool with_field = false;
  StackedPrior prior;
  std::shared_ptr<SparseChol> truth_chol;  // truth-mesh SPDE factor
  SpMat pred_design;                       // grid rows [X | A_grid]
  SpMat site_design;                       // all-site rows [X | A_sites]
};

}  // namespace

SmbStudyReport run_smb_study(const SmbStudyConfig& cfg, std::uint64_t seed, OutputDir* out) {
  if (cfg.n_sites < 3) throw InvalidInput("smb study: n_sites must be >= 3");
  if (cfg.n_years < 1) throw InvalidInput("smb study: n_years must be >= 1");
  if (cfg.holdout_max >= cfg.n_sites - 4)
    throw InvalidInput("smb study: holdout_max leaves too few observed sites");

  SmbStudyReport report;
  const double range_hint = std::max(cfg.winter.resid.rho, cfg.summer.resid.rho);
  const TriMesh fit_mesh = build_mesh(cfg.glacier, cfg.mesh_edge, cfg.extension_factor, range_hint);
  const TriMesh truth_mesh =
      build_mesh(cfg.glacier, cfg.truth_mesh_edge, cfg.extension_factor, range_hint);
  const FemMatrices fit_fem = assemble_fem(fit_mesh);
  const FemMatrices truth_fem = assemble_fem(truth_mesh);
  const TriangleLocator fit_loc(fit_mesh), truth_loc(truth_mesh);

  RandomStream site_rng(RandomStream::derive_seed(seed, 1));
  const std::vector<Point2> sites = sample_sites(cfg.glacier, cfg.n_sites, 0.02, site_rng);
  Vec site_elev(cfg.n_sites);
  for (int i = 0; i < cfg.n_sites; ++i)
    site_elev[i] = dome_elevation(sites[(std::size_t)i].x, sites[(std::size_t)i].y);

  const GridSpec grid = report_grid(cfg.glacier, cfg.grid_nx);
  const std::vector<Point2> gpts = grid_centers(grid);
  Vec grid_elev(grid.cells());
  for (int k = 0; k < grid.cells(); ++k)
    grid_elev[k] = dome_elevation(gpts[(std::size_t)k].x, gpts[(std::size_t)k].y);

  const SpMat a_sites_fit = point_eval_matrix(fit_loc, sites);
  const SpMat a_grid_fit = point_eval_matrix(fit_loc, gpts);
  const SpMat a_sites_truth = point_eval_matrix(truth_loc, sites);
  const SpMat a_grid_truth = point_eval_matrix(truth_loc, gpts);

  auto make_season = [&](const SeasonModel& m) {
    SeasonContext ctx;
    ctx.with_field = m.resid.sigma > 0.0;
    ProcessSpec fx;
    fx.id = "beta";
    fx.kind = ProcessKind::FixedEffects;
    fx.fixed_precisions = cfg.fixed_effect_precisions;
    std::vector<ProcessPrior> parts{fixed_effects_prior(fx)};
    if (ctx.with_field) {
      ProcessSpec u;
      u.id = "u";
      u.kind = ProcessKind::SpatialOnly;
      u.matern = m.resid;
      parts.push_back(spatial_only_prior(u, fit_fem));
      ctx.truth_chol = std::make_shared<SparseChol>(build_precision(truth_fem, m.resid).Q);
    }
    ctx.prior = stack(parts);
    ctx.pred_design =
        point_design(gpts, grid_elev, ctx.with_field ? &a_grid_fit : nullptr, ctx.prior.size());
    ctx.site_design =
        point_design(sites, site_elev, ctx.with_field ? &a_sites_fit : nullptr, ctx.prior.size());
    return ctx;
  };
  SeasonContext season_ctx[2] = {make_season(cfg.winter), make_season(cfg.summer)};
  std::unique_ptr<MeshContext> fit_geom;  // only needed when a field is present
  if (season_ctx[0].with_field || season_ctx[1].with_field)
    fit_geom = std::make_unique<MeshContext>(fit_mesh);

  double err_sq_sum = 0.0;
  long err_n = 0;

  for (int yi = 0; yi < cfg.n_years; ++yi) {
    const int year = cfg.first_year + yi;
    GridField net_pred{grid, Vec::Zero(grid.cells())};
    bool net_ok = true;
    for (int si = 0; si < 2; ++si) {
      const std::string season = si == 0 ? "winter" : "summer";
      const SeasonModel& model = si == 0 ? cfg.winter : cfg.summer;
      SeasonContext& ctx = season_ctx[si];
      RandomStream rng(RandomStream::derive_seed(
          seed, 100 + 4 * static_cast<std::uint64_t>(yi) + static_cast<std::uint64_t>(si)));

      SmbFitRecord rec;
      rec.year = year;
      rec.season = season;
      try {
        // truth: linear-in-covariates coefficients plus a Matern residual
        // drawn on the independent (finer) truth mesh
        Vec b(4);
        b << model.b0 + model.coef_sd * rng.normal(), model.b1 + model.coef_sd * rng.normal(),
            model.b2 + model.coef_sd * rng.normal(), model.b3 + model.coef_sd * rng.normal();
        Vec truth_sites(cfg.n_sites), truth_grid(grid.cells());
        for (int i = 0; i < cfg.n_sites; ++i)
          truth_sites[i] =
              b[0] + b[1] * sites[(std::size_t)i].x + b[2] * sites[(std::size_t)i].y + b[3] * site_elev[i];
        for (int k = 0; k < grid.cells(); ++k)
          truth_grid[k] =
              b[0] + b[1] * gpts[(std::size_t)k].x + b[2] * gpts[(std::size_t)k].y + b[3] * grid_elev[k];
        if (ctx.with_field) {
          const Vec eta_truth = ctx.truth_chol->sample(rng);
          truth_sites += a_sites_truth * eta_truth;
          truth_grid += a_grid_truth * eta_truth;
        }

        // epoch site set: drop 0..holdout_max sites at random
        std::vector<int> order(static_cast<std::size_t>(cfg.n_sites));
        std::iota(order.begin(), order.end(), 0);
        for (int i = cfg.n_sites - 1; i > 0; --i)
          std::swap(order[(std::size_t)i],
                    order[rng.uniform_index(static_cast<std::uint64_t>(i + 1))]);
        const int n_drop =
            static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cfg.holdout_max + 1)));
        std::vector<int> held(order.begin(), order.begin() + n_drop);
        std::vector<int> observed(order.begin() + n_drop, order.end());
        std::sort(held.begin(), held.end());
        std::sort(observed.begin(), observed.end());

        std::vector<PointObs> obs;
        for (int i : observed) {
          PointObs o;
          o.s1 = sites[(std::size_t)i].x;
          o.s2 = sites[(std::size_t)i].y;
          o.epoch = 0;
          o.covariates = Vec::Constant(1, site_elev[i]);
          o.noise_sd = cfg.noise_sd;
          o.value = truth_sites[i] + cfg.noise_sd * rng.normal();
          obs.push_back(o);
        }
        rec.n_obs = static_cast<int>(obs.size());

        PointRegression reg;
        reg.fixed_effects_id = "beta";
        reg.field_id = ctx.with_field ? "u" : "";
        reg.geometry = fit_geom.get();
        reg.n_covariates = 1;
        const LinearObsOp op = point_operator(obs, ctx.prior, reg);

        ConditionOptions copt;
        copt.sd_draws = 0;
        copt.store_samples = cfg.sd_draws;
        copt.seed = RandomStream::derive_seed(
            seed, 5000 + 4 * static_cast<std::uint64_t>(yi) + static_cast<std::uint64_t>(si));
        const PosteriorResult post =
            gaussian_condition(ctx.prior, op.H, op.noise_var, op.values, op.offset, copt);

        const Vec pred_mean = ctx.pred_design * post.mean;
        const Mat pred_draws = post.samples * ctx.pred_design.transpose();
        const Vec pred_sd = sd_around(pred_draws, pred_mean);

        // holdout coverage of the latent SMB value at the dropped sites
        const Vec site_mean = ctx.site_design * post.mean;
        const Mat site_draws = post.samples * ctx.site_design.transpose();
        const Vec site_sd = sd_around(site_draws, site_mean);
        for (int i : held) {
          ++rec.n_holdout;
          if (std::abs(truth_sites[i] - site_mean[i]) <= 1.959964 * site_sd[i])
            ++rec.holdout_covered;
        }

        const GridField truth_f{grid, truth_grid};
        const GridField pred_f{grid, pred_mean};
        net_pred.values += pred_mean;

        FieldScore score;
        if (out) {
          const std::string stem = season + "_" + std::to_string(year);
          write_grid_field(out->file(stem + "_truth.csv"), truth_f);
          write_grid_field(out->file(stem + "_pred.csv"), pred_f);
          write_grid_field(out->file(stem + "_sd.csv"), GridField{grid, pred_sd});
          out->add_artifact(stem + "_truth.csv");
          out->add_artifact(stem + "_pred.csv");
          out->add_artifact(stem + "_sd.csv");
          score = score_grid_files(out->file(stem + "_truth.csv"), out->file(stem + "_pred.csv"),
                                   &cfg.glacier);
        } else {
          score = score_fields(truth_f, pred_f, &cfg.glacier);
        }
        rec.rmse_grid = score.rmse;
        err_sq_sum += score.rmse * score.rmse * score.n;
        err_n += score.n;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
        net_ok = false;
        report.warnings.push_back(season + " " + std::to_string(year) + " failed: " + e.what());
      }
      report.holdout_total += rec.n_holdout;
      report.holdout_covered += rec.holdout_covered;
      report.fits.push_back(std::move(rec));
    }

    if (out && net_ok) {
      const std::string net_name = "net_" + std::to_string(year) + ".csv";
      write_grid_field(out->file(net_name), net_pred);
      out->add_artifact(net_name);
      // verify from the emitted files that net = winter + summer pointwise
      const GridField w = read_grid_field(out->file("winter_" + std::to_string(year) + "_pred.csv"));
      const GridField s = read_grid_field(out->file("summer_" + std::to_string(year) + "_pred.csv"));
      const GridField n = read_grid_field(out->file(net_name));
      const double gap = (n.values - (w.values + s.values)).cwiseAbs().maxCoeff();
      report.net_gap_max = std::max(report.net_gap_max, gap);
    }
  }

  report.rmse_overall = err_n ? std::sqrt(err_sq_sum / static_cast<double>(err_n)) : 0.0;
  report.holdout_coverage =
      report.holdout_total ? static_cast<double>(report.holdout_covered) / report.holdout_total
                           : 0.0;

  if (out) {
    {
      std::ofstream scores(out->file("scores.csv"));
      scores << "year,season,ok,n_obs,n_holdout,holdout_covered,rmse_grid\n";
      for (const auto& r : report.fits)
        scores << r.year << "," << r.season << "," << (r.ok ? 1 : 0) << "," << r.n_obs << ","
               << r.n_holdout << "," << r.holdout_covered << "," << format_double(r.rmse_grid)
               << "\n";
    }
    out->add_artifact("scores.csv");
    {
      std::ofstream summary(out->file("summary.txt"));
      summary << "smb study\n";
      summary << "fits: " << report.fits.size() << "\n";
      summary << "rmse_overall: " << format_double(report.rmse_overall) << "\n";
      summary << "holdout_coverage: " << format_double(report.holdout_coverage) << " ("
              << report.holdout_covered << "/" << report.holdout_total << ")\n";
      summary << "net_gap_max: " << format_double(report.net_gap_max) << "\n";
      for (const auto& w : report.warnings) summary << "warning: " << w << "\n";
    }
    out->add_artifact("summary.txt");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Rates study
// ---------------------------------------------------------------------------

RatesStudyConfig::RatesStudyConfig() { domain = Polygon::rectangle(0, 0, 1, 1); }

namespace {

struct RatesModel {
  std::unique_ptr<MeshContext> coarse;
  std::unique_ptr<MeshContext> fine;
  StackedPrior prior;
  std::map<std::string, const MeshContext*> geometry;
  Vec speed_norm;  // |v| at fine vertices, normalised to max 1
};

Vec face_u(const GridSpec& g, double speed, double cx) {
  Vec u((g.nx + 1) * g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) u[j * (g.nx + 1) + i] = speed * 2.0 * (g.ox + i * g.dx - cx);
  return u;
}

Vec face_v(const GridSpec& g, double speed, double cy) {
  Vec v(g.nx * (g.ny + 1));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) v[j * g.nx + i] = speed * 2.0 * (g.oy + j * g.dx - cy);
  return v;
}

RatesModel build_rates_model(const RatesStudyConfig& cfg) {
  RatesModel m;
  const double fine_hint = std::max(cfg.smb.rho, cfg.firn.rho);
  m.coarse = std::make_unique<MeshContext>(
      build_mesh(cfg.domain, cfg.coarse_mesh_edge, cfg.extension_factor, cfg.gia.rho));
  m.fine = std::make_unique<MeshContext>(
      build_mesh(cfg.domain, cfg.fine_mesh_edge, cfg.extension_factor, fine_hint));

  const BBox box = cfg.domain.bbox();
  const double cx = 0.5 * (box.xmin + box.xmax), cy = 0.5 * (box.ymin + box.ymax);
  const int nf = m.fine->n_vertices();
  m.speed_norm.resize(nf);
  double vmax = 0.0;
  for (int i = 0; i < nf; ++i) {
    const Point2& p = m.fine->mesh.vertices[(std::size_t)i];
    const double sp =
        std::hypot(cfg.flow_speed * 2.0 * (p.x - cx), cfg.flow_speed * 2.0 * (p.y - cy));
    m.speed_norm[i] = sp;
    vmax = std::max(vmax, sp);
  }
  if (vmax > 0) m.speed_norm /= vmax;

  ProcessSpec gia;
  gia.id = "gia";
  gia.kind = ProcessKind::SpatialOnly;
  gia.matern = {cfg.gia.sigma, cfg.gia.rho, 1.0};
  gia.n_epochs = cfg.n_epochs;

  ProcessSpec smb;
  smb.id = "smb";
  smb.kind = ProcessKind::Ar1SpatioTemporal;
  smb.n_epochs = cfg.n_epochs;
  smb.matern = {cfg.smb.sigma, cfg.smb.rho, 1.0};
  smb.ar_coeff = Vec::Constant(1, cfg.smb.ar);

  ProcessSpec firn;
  firn.id = "firn";
  firn.kind = ProcessKind::Ar1SpatioTemporal;
  firn.n_epochs = cfg.n_epochs;
  firn.matern = {cfg.firn.sigma, cfg.firn.rho, 1.0};
  firn.ar_coeff = Vec::Constant(1, cfg.firn.ar);

  ProcessSpec ice;
  ice.id = "ice";
  ice.kind = ProcessKind::TrendRegression;
  ice.n_epochs = cfg.n_epochs;
  ice.beta0_var = Vec::Constant(1, cfg.ice_beta0_sd * cfg.ice_beta0_sd);
  const Vec b1sd =
      (cfg.ice_beta1_sd_base + cfg.ice_beta1_sd_speed * m.speed_norm.array()).matrix();
  ice.beta1_var = b1sd.cwiseProduct(b1sd);
  ice.resid_var = cfg.ice_resid_sd * cfg.ice_resid_sd;

  m.prior = stack({spatial_only_prior(gia, m.coarse->fem), ar1_prior(smb, m.fine->fem),
                   ar1_prior(firn, m.fine->fem), trend_regression_prior(ice, nf)});
  m.geometry = {{"gia", m.coarse.get()},
                {"smb", m.fine.get()},
                {"firn", m.fine.get()},
                {"ice", m.fine.get()}};
  return m;
}

}  // namespace

FieldScore score_fields(const GridField& truth, const GridField& prediction,
                        const Polygon* within) {
  if (truth.grid.nx != prediction.grid.nx || truth.grid.ny != prediction.grid.ny)
    throw InvalidInput("score_fields: grids are not congruent");
  FieldScore s;
  double acc = 0.0;
  for (int j = 0; j < truth.grid.ny; ++j)
    for (int i = 0; i < truth.grid.nx; ++i) {
      if (within && !within->contains(truth.grid.cell_x(i), truth.grid.cell_y(j))) continue;
      const double d = prediction.at(i, j) - truth.at(i, j);
      acc += d * d;
      s.max_abs_diff = std::max(s.max_abs_diff, std::abs(d));
      ++s.n;
    }
  s.rmse = s.n ? std::sqrt(acc / s.n) : 0.0;
  return s;
}

FieldScore score_grid_files(const std::string& truth_path, const std::string& prediction_path,
                            const Polygon* within) {
  return score_fields(read_grid_field(truth_path), read_grid_field(prediction_path), within);
}

RatesStudyReport run_rates_study(const RatesStudyConfig& cfg, std::uint64_t seed, OutputDir* out) {
  if (cfg.n_epochs < 2) throw InvalidInput("rates study: need at least 2 epochs");
  RatesStudyReport report;
  RatesModel model = build_rates_model(cfg);
  const int T = cfg.n_epochs;
  const int nf = model.fine->n_vertices();
  const int nc = model.coarse->n_vertices();

  // ---- synthetic truth ----
  RandomStream truth_rng(RandomStream::derive_seed(seed, 11));
  Vec eta_smb, eta_firn, eta_gia;
  {
    SparseChol smb_chol(ar1_prior(model.prior.spec("smb"), model.fine->fem).Q);
    SparseChol firn_chol(ar1_prior(model.prior.spec("firn"), model.fine->fem).Q);
    SparseChol gia_chol(spatial_only_prior(model.prior.spec("gia"), model.coarse->fem).Q);
    eta_smb = smb_chol.sample(truth_rng);
    eta_firn = firn_chol.sample(truth_rng);
    eta_gia = gia_chol.sample(truth_rng);
  }

  const GridSpec grid = report_grid(cfg.domain, cfg.grid_nx);
  const std::vector<Point2> gpts = grid_centers(grid);
  const SpMat a_grid_fine = point_eval_matrix(model.fine->locator, gpts);
  const SpMat a_grid_coarse = point_eval_matrix(model.coarse->locator, gpts);

  SyntheticTruthConfig tcfg;
  tcfg.grid = grid;
  tcfg.n_epochs = T;
  tcfg.epoch_dt = cfg.epoch_dt;
  tcfg.substeps = cfg.substeps;
  for (int t = 0; t < T; ++t) {
    tcfg.smb_rate.push_back(a_grid_fine * eta_smb.segment(t * nf, nf));
    tcfg.firn_rate.push_back(a_grid_fine * eta_firn.segment(t * nf, nf));
  }
  tcfg.gia_rate = a_grid_coarse * eta_gia;
  const BBox dbox = cfg.domain.bbox();
  const double ccx = 0.5 * (dbox.xmin + dbox.xmax), ccy = 0.5 * (dbox.ymin + dbox.ymax);
  tcfg.initial_thickness.resize(grid.cells());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double dx = grid.cell_x(i) - ccx, dy = grid.cell_y(j) - ccy;
      tcfg.initial_thickness[j * grid.nx + i] =
          cfg.thickness0 * std::exp(-(dx * dx + dy * dy) / (2.0 * 0.35 * 0.35));
    }
  tcfg.u = face_u(grid, cfg.flow_speed, ccx);
  tcfg.v = face_v(grid, cfg.flow_speed, ccy);
  tcfg.bc = TransportBc::FreeFlux;
  const SyntheticTruth truth = generate_synthetic_truth(tcfg);

  // ice truth at fine vertices per epoch, sampled off the transport grid
  Mat ice_truth(T, nf);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < nf; ++i) {
      const Point2& p = model.fine->mesh.vertices[(std::size_t)i];
      ice_truth(t, i) = bilinear(truth.dynamics[(std::size_t)t], p.x, p.y);
    }

  // full truth vector in the stacked layout; the transport-generated ice
  // signal enters through the per-epoch residual blocks
  Vec truth_vec = Vec::Zero(model.prior.size());
  truth_vec.segment(model.prior.block("gia", "field", -1).offset, nc) = eta_gia;
  for (int t = 0; t < T; ++t) {
    truth_vec.segment(model.prior.block("smb", "field", t).offset, nf) =
        eta_smb.segment(t * nf, nf);
    truth_vec.segment(model.prior.block("firn", "field", t).offset, nf) =
        eta_firn.segment(t * nf, nf);
    truth_vec.segment(model.prior.block("ice", "resid", t).offset, nf) =
        ice_truth.row(t).transpose();
  }

  // ---- observations ----
  const InstrumentMask mask =
      InstrumentMask::separation_defaults("gia", "ice", "smb", "firn", cfg.rho_ice);
  RandomStream obs_rng(RandomStream::derive_seed(seed, 21));
  const double quad_cell = cfg.fine_mesh_edge / 4.0;

  std::vector<FootprintObs> obs;
  std::vector<int> grav_rows;
  const std::vector<Point2> gps_sites =
      sample_sites(cfg.domain, cfg.gps_count, cfg.gps_size, obs_rng);
  for (int t = 0; t < T; ++t) {
    for (const Point2& p : gps_sites) {
      FootprintObs o;
      o.footprint =
          make_footprint(Polygon::rectangle(p.x - cfg.gps_size / 2, p.y - cfg.gps_size / 2,
                                            p.x + cfg.gps_size / 2, p.y + cfg.gps_size / 2),
                         quad_cell);
      o.instrument = Instrument::Gps;
      o.epoch = t;
      o.noise_sd = cfg.gps_noise_sd;
      o.normalize = true;
      obs.push_back(std::move(o));
    }
    auto tile_obs = [&](int n_tiles, Instrument inst, double noise) {
      const double w = dbox.width() / n_tiles, h = dbox.height() / n_tiles;
      for (int j = 0; j < n_tiles; ++j)
        for (int i = 0; i < n_tiles; ++i) {
          FootprintObs o;
          o.footprint = make_footprint(
              Polygon::rectangle(dbox.xmin + i * w, dbox.ymin + j * h, dbox.xmin + (i + 1) * w,
                                 dbox.ymin + (j + 1) * h),
              quad_cell);
          o.instrument = inst;
          o.epoch = t;
          o.noise_sd = noise;
          o.normalize = true;
          if (inst == Instrument::Gravimetry) grav_rows.push_back(static_cast<int>(obs.size()));
          obs.push_back(std::move(o));
        }
    };
    tile_obs(cfg.altimetry_grid, Instrument::Altimetry, cfg.altimetry_noise_sd);
    if (cfg.with_gravimetry)
      tile_obs(cfg.gravimetry_grid, Instrument::Gravimetry, cfg.gravimetry_noise_sd);
  }

  LinearObsOp op = footprint_operator(obs, mask, model.prior, model.geometry);
  RandomStream noise_rng(RandomStream::derive_seed(seed, 31));
  op.values = op.H * truth_vec;
  for (Eigen::Index i = 0; i < op.values.size(); ++i)
    op.values[i] += std::sqrt(op.noise_var[i]) * noise_rng.normal();
  report.n_obs = op.rows();

  {
    std::set<Instrument> kinds;
    for (const auto& o : obs) kinds.insert(o.instrument);
    if (kinds.size() < 2)
      report.warnings.push_back(
          "single instrument type: process sums are observed but the split is weakly identified; "
          "posterior correlations will be inflated");
  }

  // ---- fit ----
  ConditionOptions copt;
  copt.sd_draws = 0;
  copt.store_samples = cfg.posterior_draws;
  copt.seed = RandomStream::derive_seed(seed, 41);
  const PosteriorResult post =
      gaussian_condition(model.prior, op.H, op.noise_var, op.values, op.offset, copt);

  // ---- scoring at mesh vertices inside the domain ----
  std::vector<int> fine_inside, coarse_inside;
  for (int i = 0; i < nf; ++i) {
    const Point2& p = model.fine->mesh.vertices[(std::size_t)i];
    if (cfg.domain.contains(p.x, p.y)) fine_inside.push_back(i);
  }
  for (int i = 0; i < nc; ++i) {
    const Point2& p = model.coarse->mesh.vertices[(std::size_t)i];
    if (cfg.domain.contains(p.x, p.y)) coarse_inside.push_back(i);
  }

  const ProcessSpec& ice_spec = model.prior.spec("ice");
  auto prior_var = [&](const std::string& process, int epoch, int vertex) {
    if (process == "gia") return cfg.gia.sigma * cfg.gia.sigma;
    if (process == "smb") return cfg.smb.sigma * cfg.smb.sigma / (1.0 - cfg.smb.ar * cfg.smb.ar);
    if (process == "firn")
      return cfg.firn.sigma * cfg.firn.sigma / (1.0 - cfg.firn.ar * cfg.firn.ar);
    const double t = static_cast<double>(epoch);
    return ice_spec.beta0_var[vertex] + t * t * ice_spec.beta1_var[vertex] + ice_spec.resid_var;
  };
  auto truth_value = [&](const std::string& process, int epoch, int vertex) {
    if (process == "gia") return eta_gia[vertex];
    if (process == "smb") return eta_smb[epoch * nf + vertex];
    if (process == "firn") return eta_firn[epoch * nf + vertex];
    return ice_truth(epoch, vertex);
  };

  for (const std::string process : {"gia", "smb", "firn", "ice"}) {
    const bool is_gia = process == "gia";
    const std::vector<int>& idx = is_gia ? coarse_inside : fine_inside;
    const int n_scored_epochs = is_gia ? 1 : T;
    RatesProcessScore score;
    score.process = process;
    score.err_sq_mean = Vec::Zero(static_cast<Eigen::Index>(idx.size()));
    score.prior_var_mean = Vec::Zero(static_cast<Eigen::Index>(idx.size()));
    for (int t = 0; t < n_scored_epochs; ++t) {
      const Vec mean_t = epoch_value(model.prior, post.mean, process, t);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const int v = idx[k];
        const double err = mean_t[v] - truth_value(process, t, v);
        score.err_sq_mean[(Eigen::Index)k] += err * err / n_scored_epochs;
        score.prior_var_mean[(Eigen::Index)k] += prior_var(process, t, v) / n_scored_epochs;
      }
    }
    int below = 0;
    double rmse_acc = 0.0;
    for (Eigen::Index k = 0; k < score.err_sq_mean.size(); ++k) {
      if (score.err_sq_mean[k] < score.prior_var_mean[k]) ++below;
      rmse_acc += score.err_sq_mean[k];
    }
    const double nv = static_cast<double>(score.err_sq_mean.size());
    score.frac_below = nv > 0 ? below / nv : 0.0;
    score.rmse = nv > 0 ? std::sqrt(rmse_acc / nv) : 0.0;
    report.scores.push_back(std::move(score));
  }

  // posterior |corr(smb_t, ice_t)| at shared fine vertices inside the domain
  auto mean_abs_corr = [&](const PosteriorResult& p) {
    double acc = 0.0;
    long count = 0;
    for (int t = 0; t < T; ++t) {
      const Mat smb_draws = epoch_value_rows(model.prior, p.samples, "smb", t);
      const Mat ice_draws = epoch_value_rows(model.prior, p.samples, "ice", t);
      const Vec smb_mean = smb_draws.colwise().mean();
      const Vec ice_mean = ice_draws.colwise().mean();
      for (int v : fine_inside) {
        const auto a = smb_draws.col(v).array() - smb_mean[v];
        const auto b = ice_draws.col(v).array() - ice_mean[v];
        const double denom = std::sqrt(a.square().sum() * b.square().sum());
        if (denom > 0) {
          acc += std::abs((a * b).sum() / denom);
          ++count;
        }
      }
    }
    return count ? acc / static_cast<double>(count) : 0.0;
  };
  report.mean_abs_corr_with_grav = mean_abs_corr(post);

  report.mean_abs_corr_without_grav = std::numeric_limits<double>::quiet_NaN();
  if (cfg.with_gravimetry && cfg.compare_without_gravimetry && !grav_rows.empty()) {
    std::vector<FootprintObs> reduced;
    Vec values_reduced(op.rows() - static_cast<Eigen::Index>(grav_rows.size()));
    std::vector<char> is_grav(static_cast<std::size_t>(op.rows()), 0);
    for (int r : grav_rows) is_grav[(std::size_t)r] = 1;
    Eigen::Index rr = 0;
    for (int r = 0; r < op.rows(); ++r)
      if (!is_grav[(std::size_t)r]) {
        reduced.push_back(obs[(std::size_t)r]);
        values_reduced[rr++] = op.values[r];
      }
    LinearObsOp op2 = footprint_operator(reduced, mask, model.prior, model.geometry);
    op2.values = values_reduced;
    ConditionOptions copt2 = copt;
    copt2.seed = RandomStream::derive_seed(seed, 42);
    const PosteriorResult post2 =
        gaussian_condition(model.prior, op2.H, op2.noise_var, op2.values, op2.offset, copt2);
    report.mean_abs_corr_without_grav = mean_abs_corr(post2);
  }

  // posterior GIA sd at the GPS sites vs its prior sd
  {
    const Mat gia_draws = epoch_value_rows(model.prior, post.samples, "gia", 0);
    const Vec gia_mean = epoch_value(model.prior, post.mean, "gia", 0);
    const Vec gia_sd = sd_around(gia_draws, gia_mean);
    double acc = 0.0;
    for (const Point2& p : gps_sites) {
      int best = 0;
      double best_d = 1e300;
      for (int i = 0; i < nc; ++i) {
        const double d = std::hypot(model.coarse->mesh.vertices[(std::size_t)i].x - p.x,
                                    model.coarse->mesh.vertices[(std::size_t)i].y - p.y);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      acc += gia_sd[best];
    }
    report.gia_sd_at_gps = acc / static_cast<double>(gps_sites.size());
    report.gia_prior_sd = cfg.gia.sigma;
  }

  // ---- emission ----
  if (out) {
    auto emit_process = [&](const std::string& process, const SpMat& a_grid) {
      const int n_emit = process == "gia" ? 1 : T;
      for (int t = 0; t < n_emit; ++t) {
        const Vec mean_v = epoch_value(model.prior, post.mean, process, t);
        const Mat draws_v = epoch_value_rows(model.prior, post.samples, process, t);
        const Vec mean_g = a_grid * mean_v;
        const Mat draws_g = draws_v * a_grid.transpose();
        const Vec sd_g = sd_around(draws_g, mean_g);
        GridField stipple{grid, Vec::Zero(grid.cells())};
        for (int k = 0; k < grid.cells(); ++k)
          stipple.values[k] = (sd_g[k] > 0 && std::abs(mean_g[k]) / sd_g[k] > 1.0) ? 1.0 : 0.0;
        report.stipple_count += static_cast<int>(stipple.values.sum());
        const std::string stem = process + "_t" + std::to_string(t);
        write_grid_field(out->file(stem + "_mean.csv"), GridField{grid, mean_g});
        write_grid_field(out->file(stem + "_sd.csv"), GridField{grid, sd_g});
        write_grid_field(out->file(stem + "_stipple.csv"), stipple);
        out->add_artifact(stem + "_mean.csv");
        out->add_artifact(stem + "_sd.csv");
        out->add_artifact(stem + "_stipple.csv");
      }
    };
    emit_process("gia", a_grid_coarse);
    emit_process("smb", a_grid_fine);
    emit_process("firn", a_grid_fine);
    emit_process("ice", a_grid_fine);
    for (int t = 0; t < T; ++t) {
      const std::string ts = std::to_string(t);
      write_grid_field(out->file("smb_t" + ts + "_truth.csv"), truth.smb[(std::size_t)t]);
      write_grid_field(out->file("ice_t" + ts + "_truth.csv"), truth.dynamics[(std::size_t)t]);
      write_grid_field(out->file("firn_t" + ts + "_truth.csv"), truth.firn[(std::size_t)t]);
      write_grid_field(out->file("total_t" + ts + "_truth.csv"), truth.total[(std::size_t)t]);
      out->add_artifact("smb_t" + ts + "_truth.csv");
      out->add_artifact("ice_t" + ts + "_truth.csv");
      out->add_artifact("firn_t" + ts + "_truth.csv");
      out->add_artifact("total_t" + ts + "_truth.csv");
    }
    write_grid_field(out->file("gia_truth.csv"), truth.gia);
    out->add_artifact("gia_truth.csv");

    {
      std::ofstream scores(out->file("scores.csv"));
      scores << "process,frac_below_prior_sd,rmse\n";
      for (const auto& s : report.scores)
        scores << s.process << "," << format_double(s.frac_below) << "," << format_double(s.rmse)
               << "\n";
    }
    out->add_artifact("scores.csv");
    {
      std::ofstream summary(out->file("summary.txt"));
      summary << "rates study\n";
      summary << "observations: " << report.n_obs << "\n";
      for (const auto& s : report.scores)
        summary << s.process << ": frac_below_prior_sd=" << format_double(s.frac_below)
                << " rmse=" << format_double(s.rmse) << "\n";
      summary << "mean_abs_corr_smb_ice (with gravimetry): "
              << format_double(report.mean_abs_corr_with_grav) << "\n";
      summary << "mean_abs_corr_smb_ice (without gravimetry): "
              << format_double(report.mean_abs_corr_without_grav) << "\n";
      summary << "gia_sd_at_gps: " << format_double(report.gia_sd_at_gps) << " (prior "
              << format_double(report.gia_prior_sd) << ")\n";
      summary << "stipple_count: " << report.stipple_count << "\n";
      for (const auto& w : report.warnings) summary << "warning: " << w << "\n";
    }
    out->add_artifact("summary.txt");
  }
  return report;
}

}  // namespace cryobayes
