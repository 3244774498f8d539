#include "cryobayes/driver.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "cryobayes/random.hpp"

namespace cryobayes {

namespace {

InstrumentMask mask_from_config(const FitConfig& cfg) {
  InstrumentMask mask;
  mask.set_rho_ice(cfg.rho_ice);
  for (const auto& e : cfg.mask_entries) {
    InstrumentMask::Weight w = InstrumentMask::Weight::Zero;
    if (e.weight == "one") w = InstrumentMask::Weight::One;
    if (e.weight == "ice-density") w = InstrumentMask::Weight::IceDensity;
    mask.set(instrument_from_string(e.instrument), e.process, w);
  }
  return mask;
}

}  // namespace

FitModel build_fit_model(const FitConfig& cfg) {
  FitModel model;
  TriMesh mesh;
  if (!cfg.mesh.polygon_path.empty()) {
    const Polygon poly = read_polygon(cfg.mesh.polygon_path);
    mesh = build_mesh(poly, cfg.mesh.edge, cfg.mesh.extension_factor, cfg.mesh.range_hint);
  } else {
    mesh = read_mesh(cfg.mesh.vertices_path, cfg.mesh.triangles_path);
  }
  model.geom = std::make_unique<MeshContext>(std::move(mesh));

  std::vector<ProcessPrior> parts;
  if (cfg.with_fixed_effects) {
    ProcessSpec fx;
    fx.id = "beta";
    fx.kind = ProcessKind::FixedEffects;
    fx.fixed_precisions = cfg.fixed_precisions;
    parts.push_back(fixed_effects_prior(fx));
  }
  for (const auto& spec : cfg.processes) {
    parts.push_back(build_process_prior(spec, &model.geom->fem));
    if (spec.kind != ProcessKind::FixedEffects)
      model.geometry[spec.id] = model.geom.get();
  }
  model.prior = stack(parts);
  model.mask = mask_from_config(cfg);

  const auto records = read_observations(cfg.observations_path);
  const double cell = cfg.footprint_cell > 0 ? cfg.footprint_cell : cfg.mesh.edge / 4.0;
  std::map<std::string, Polygon> polygon_cache;
  for (const auto& r : records) {
    if (r.type == ObsRecord::Type::Point) {
      PointObs o;
      o.s1 = r.s1;
      o.s2 = r.s2;
      o.value = r.value;
      o.epoch = r.epoch;
      o.noise_sd = r.noise_sd;
      o.covariates = Eigen::Map<const Vec>(r.covariates.data(),
                                           static_cast<Eigen::Index>(r.covariates.size()));
      model.point_obs.push_back(std::move(o));
      model.records.push_back(r);
    }
  }
  for (const auto& r : records) {
    if (r.type == ObsRecord::Type::Footprint) {
      auto it = polygon_cache.find(r.polygon_path);
      if (it == polygon_cache.end())
        it = polygon_cache.emplace(r.polygon_path, read_polygon(r.polygon_path)).first;
      FootprintObs o;
      o.footprint = make_footprint(it->second, cell);
      o.value = r.value;
      o.epoch = r.epoch;
      o.instrument = instrument_from_string(r.instrument);
      o.noise_sd = r.noise_sd;
      o.normalize = r.normalize;
      model.footprint_obs.push_back(std::move(o));
      model.records.push_back(r);
    }
  }

  std::vector<LinearObsOp> ops;
  if (!model.point_obs.empty()) {
    PointRegression reg;
    reg.fixed_effects_id = cfg.with_fixed_effects ? "beta" : "";
    reg.field_id = cfg.point_field;
    reg.geometry = model.geom.get();
    reg.n_covariates =
        model.point_obs.empty() ? 0 : static_cast<int>(model.point_obs.front().covariates.size());
    ops.push_back(point_operator(model.point_obs, model.prior, reg));
  }
  if (!model.footprint_obs.empty())
    ops.push_back(footprint_operator(model.footprint_obs, model.mask, model.prior, model.geometry));
  if (ops.empty()) {
    model.op.H = SpMat(0, model.prior.size());
    model.op.noise_var = Vec();
    model.op.offset = Vec();
    model.op.values = Vec();
  } else if (ops.size() == 1) {
    model.op = std::move(ops[0]);
  } else {
    model.op = concat(ops[0], ops[1]);
  }
  return model;
}

namespace {

struct MwgWiring {
  std::vector<ProcessPrior> base_parts;       // in stack order
  std::vector<std::string> part_ids;
  const FitConfig* cfg = nullptr;
  const FitModel* model = nullptr;
  std::shared_ptr<ConditionWorkspace> workspace = std::make_shared<ConditionWorkspace>();

  struct Slot {
    std::string process;
    int part_index = -1;
    PcPrior pc;
    bool sample_ar = false;
    int theta_sigma = -1, theta_rho = -1, theta_ar = -1;
  };
  std::vector<Slot> slots;
  int theta_noise = -1;
  double noise_scale_log_sd = 0.5;

  StackedPrior rebuild(const Vec& theta) const {
    std::vector<ProcessPrior> parts = base_parts;
    for (const auto& slot : slots) {
      ProcessSpec spec = parts[(std::size_t)slot.part_index].spec;
      spec.matern.sigma = theta[slot.theta_sigma];
      spec.matern.rho = theta[slot.theta_rho];
      if (slot.theta_ar >= 0) spec.ar_coeff = Vec::Constant(1, theta[slot.theta_ar]);
      parts[(std::size_t)slot.part_index] = build_process_prior(spec, &model->geom->fem);
    }
    return stack(parts);
  }

  Vec scaled_noise(const Vec& theta) const {
    if (theta_noise < 0) return model->op.noise_var;
    return model->op.noise_var * theta[theta_noise];
  }

  double log_prior(const Vec& theta) const {
    double lp = 0.0;
    for (const auto& slot : slots) {
      lp += pc_log_density(slot.pc, {theta[slot.theta_sigma], theta[slot.theta_rho], 1.0});
      if (slot.theta_ar >= 0) lp += -std::log(2.0);  // uniform on (-1, 1)
    }
    if (theta_noise >= 0) {
      const double l = std::log(theta[theta_noise]);
      lp += -std::log(theta[theta_noise]) - 0.5 * l * l / (noise_scale_log_sd * noise_scale_log_sd);
    }
    return lp;
  }
};

}  // namespace

MwgModel make_fit_mwg_model(const FitConfig& cfg, const FitModel& model) {
  if (!cfg.sampler.enabled) throw InvalidInput("make_fit_mwg_model: sampler not enabled");
  auto wiring = std::make_shared<MwgWiring>();
  wiring->cfg = &cfg;
  wiring->model = &model;
  wiring->noise_scale_log_sd = cfg.sampler.noise_scale_log_sd;

  // reconstruct the stacking order used by build_fit_model
  if (cfg.with_fixed_effects) {
    ProcessSpec fx;
    fx.id = "beta";
    fx.kind = ProcessKind::FixedEffects;
    fx.fixed_precisions = cfg.fixed_precisions;
    wiring->base_parts.push_back(fixed_effects_prior(fx));
    wiring->part_ids.push_back("beta");
  }
  for (const auto& spec : cfg.processes) {
    wiring->base_parts.push_back(build_process_prior(spec, &model.geom->fem));
    wiring->part_ids.push_back(spec.id);
  }

  MwgModel mwg;
  std::vector<double> theta0;
  for (const auto& h : cfg.sampler.hyper) {
    MwgWiring::Slot slot;
    slot.process = h.process;
    slot.pc = h.pc;
    slot.pc.validate();
    slot.sample_ar = h.sample_ar;
    for (std::size_t i = 0; i < wiring->part_ids.size(); ++i)
      if (wiring->part_ids[i] == h.process) slot.part_index = static_cast<int>(i);
    if (slot.part_index < 0)
      throw InvalidInput("sampler.hyper: unknown process '" + h.process + "'");
    const ProcessSpec& spec = wiring->base_parts[(std::size_t)slot.part_index].spec;
    if (spec.kind != ProcessKind::SpatialOnly && spec.kind != ProcessKind::Ar1SpatioTemporal)
      throw InvalidInput("sampler.hyper: process '" + h.process +
                         "' has no (sigma, rho) hyperparameters");
    if (h.sample_ar && spec.kind != ProcessKind::Ar1SpatioTemporal)
      throw InvalidInput("sampler.hyper: sample_ar requires an ar1 process");

    slot.theta_sigma = static_cast<int>(theta0.size());
    theta0.push_back(spec.matern.sigma);
    mwg.names.push_back(h.process + ".sigma");
    mwg.scales.push_back(ParamScale::Log);
    slot.theta_rho = static_cast<int>(theta0.size());
    theta0.push_back(spec.matern.rho);
    mwg.names.push_back(h.process + ".rho");
    mwg.scales.push_back(ParamScale::Log);
    if (h.sample_ar) {
      slot.theta_ar = static_cast<int>(theta0.size());
      theta0.push_back(spec.ar_coeff.size() ? spec.ar_coeff[0] : 0.0);
      mwg.names.push_back(h.process + ".ar");
      mwg.scales.push_back(ParamScale::FisherZ);
    }
    wiring->slots.push_back(slot);
  }
  if (cfg.sampler.sample_noise_scale) {
    wiring->theta_noise = static_cast<int>(theta0.size());
    theta0.push_back(1.0);
    mwg.names.push_back("noise_scale");
    mwg.scales.push_back(ParamScale::Log);
  }
  mwg.theta0 = Eigen::Map<const Vec>(theta0.data(), static_cast<Eigen::Index>(theta0.size()));

  mwg.log_posterior = [wiring](const Vec& theta) {
    const StackedPrior prior = wiring->rebuild(theta);
    ConditionOptions opt;
    opt.sd_draws = 0;
    opt.workspace = wiring->workspace;
    const PosteriorResult res = gaussian_condition(
        prior, wiring->model->op.H, wiring->scaled_noise(theta), wiring->model->op.values,
        wiring->model->op.offset, opt);
    return res.log_marginal_likelihood + wiring->log_prior(theta);
  };
  mwg.draw_latent = [wiring](const Vec& theta, RandomStream& rng) {
    const StackedPrior prior = wiring->rebuild(theta);
    ConditionOptions opt;
    opt.sd_draws = 0;
    opt.workspace = wiring->workspace;
    const PosteriorResult res = gaussian_condition(
        prior, wiring->model->op.H, wiring->scaled_noise(theta), wiring->model->op.values,
        wiring->model->op.offset, opt);
    return Vec(res.mean + res.factor->sample(rng));
  };
  return mwg;
}

namespace {

void emit_process_values(OutputDir& out, const FitModel& model, const Vec& mean,
                         const Mat& draws) {
  for (const auto& spec_id : [&] {
         std::vector<std::string> ids;
         for (const auto& b : model.prior.blocks())
           if (std::find(ids.begin(), ids.end(), b.process) == ids.end())
             ids.push_back(b.process);
         return ids;
       }()) {
    const ProcessSpec& spec = model.prior.spec(spec_id);
    if (spec.kind == ProcessKind::FixedEffects) {
      const auto& b = model.prior.block(spec_id, "weights", -1);
      std::ofstream f(out.file("fixed_effects_" + spec_id + ".csv"));
      f << "index,mean,sd\n";
      for (int k = 0; k < b.size; ++k) {
        const double sd =
            std::sqrt((draws.col(b.offset + k).array() - mean[b.offset + k]).square().mean());
        f << k << "," << format_double(mean[b.offset + k]) << "," << format_double(sd) << "\n";
      }
      out.add_artifact("fixed_effects_" + spec_id + ".csv");
      continue;
    }
    const int T = spec.kind == ProcessKind::SpatialOnly ? 1 : spec.n_epochs;
    for (int t = 0; t < T; ++t) {
      const Vec value_mean = epoch_value(model.prior, mean, spec_id, t);
      const Mat value_draws = epoch_value_rows(model.prior, draws, spec_id, t);
      const std::string name = "process_" + spec_id + "_t" + std::to_string(t) + ".csv";
      std::ofstream f(out.file(name));
      f << "vertex,s1,s2,mean,sd\n";
      for (Eigen::Index v = 0; v < value_mean.size(); ++v) {
        const double sd =
            std::sqrt((value_draws.col(v).array() - value_mean[v]).square().mean());
        f << v << "," << format_double(model.geom->mesh.vertices[(std::size_t)v].x) << ","
          << format_double(model.geom->mesh.vertices[(std::size_t)v].y) << ","
          << format_double(value_mean[v]) << "," << format_double(sd) << "\n";
      }
      out.add_artifact(name);
    }
  }
}

}  // namespace

void run_fit_mode(const RunConfig& config, OutputDir& out) {
  const FitModel model = build_fit_model(config.fit);
  std::ofstream summary(out.file("summary.txt"));
  summary << "fit\nobservations: " << model.op.rows() << "\nlatent size: " << model.prior.size()
          << "\n";

  if (!config.fit.sampler.enabled) {
    ConditionOptions opt;
    opt.sd_draws = 0;
    opt.store_samples = 200;
    opt.seed = RandomStream::derive_seed(config.seed, 7);
    const PosteriorResult post = gaussian_condition(model.prior, model.op.H, model.op.noise_var,
                                                    model.op.values, model.op.offset, opt);
    emit_process_values(out, model, post.mean, post.samples);
    summary << "log_marginal_likelihood: " << format_double(post.log_marginal_likelihood) << "\n";
    summary << "marginal_sd_method: sampling(200)\n";
  } else {
    const MwgModel mwg = make_fit_mwg_model(config.fit, model);
    const int chains = std::max(1, config.fit.sampler.chains);
    MwgOptions mopt;
    mopt.n_iter = config.fit.sampler.iterations;
    mopt.burn_in = config.fit.sampler.burn_in;
    mopt.thin = config.fit.sampler.thin;
    mopt.init_step = config.fit.sampler.init_step;
    mopt.store_latent_draws = true;

    std::vector<MwgResult> results;
    Mat all_latent;
    for (int c = 0; c < chains; ++c) {
      MwgOptions opt_c = mopt;
      opt_c.seed = RandomStream::derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(c));
      MwgResult res = mwg_sample(mwg, opt_c);
      write_chain(out.file("chain_" + std::to_string(c) + ".csv"), res);
      out.add_artifact("chain_" + std::to_string(c) + ".csv");
      summary << "chain " << c << ": accept_rate=" << format_double(res.accept_rate)
              << " proposal_scale=" << format_double(res.proposal_scale) << "\n";
      if (res.latent_draws.size()) {
        if (all_latent.size() == 0) {
          all_latent = res.latent_draws;
        } else {
          Mat merged(all_latent.rows() + res.latent_draws.rows(), all_latent.cols());
          merged << all_latent, res.latent_draws;
          all_latent = std::move(merged);
        }
      }
      results.push_back(std::move(res));
    }
    if (chains >= 2) {
      for (std::size_t p = 0; p < mwg.names.size(); ++p) {
        std::vector<Vec> cols;
        for (const auto& r : results) cols.push_back(r.chain.col(static_cast<Eigen::Index>(p)));
        summary << "split_rhat " << mwg.names[p] << ": " << format_double(split_rhat(cols))
                << "\n";
      }
    }
    const Vec latent_mean = all_latent.colwise().mean();
    emit_process_values(out, model, latent_mean, all_latent);
  }
  summary.close();
  out.add_artifact("summary.txt");
}

void run_simulate_mode(const RunConfig& config, OutputDir& out) {
  const FitModel model = build_fit_model(config.fit);
  if (model.op.rows() == 0)
    throw InvalidInput("simulate: the observation template has no rows");
  const SimulatedData sim = simulate_data(model.prior, model.op, config.seed);

  std::vector<ObsRecord> records = model.records;
  for (std::size_t r = 0; r < records.size(); ++r) records[r].value = sim.z[(Eigen::Index)r];
  write_observations(out.file("observations.csv"), records);
  out.add_artifact("observations.csv");

  {
    std::ofstream f(out.file("truth.csv"));
    f << "global_index,process,role,epoch,local_index,value\n";
    for (int g = 0; g < model.prior.size(); ++g) {
      const auto [blk, local] = model.prior.locate_index(g);
      f << g << "," << blk->process << "," << blk->role << "," << blk->epoch << "," << local
        << "," << format_double(sim.truth[g]) << "\n";
    }
  }
  out.add_artifact("truth.csv");

  std::ofstream summary(out.file("summary.txt"));
  summary << "simulate\nobservations: " << model.op.rows()
          << "\nlatent size: " << model.prior.size() << "\n";
  summary.close();
  out.add_artifact("summary.txt");
}

void run_transport_mode(const RunConfig& config, OutputDir& out) {
  const TransportRunConfig& t = config.transport;
  TransportState state;
  state.grid = t.grid;
  state.bc = t.bc;
  const int n = t.grid.cells();
  if (!t.thickness_file.empty()) {
    const GridField f = read_grid_field(t.thickness_file);
    if (f.grid.nx != t.grid.nx || f.grid.ny != t.grid.ny)
      throw InvalidInput("transport: thickness_file grid does not match the configured grid");
    state.thickness = f.values;
  } else {
    state.thickness = Vec::Constant(n, t.thickness0);
  }
  if (!t.u_file.empty()) {
    const GridField f = read_grid_field(t.u_file);
    if (f.grid.nx != t.grid.nx + 1 || f.grid.ny != t.grid.ny)
      throw InvalidInput("transport: u_file must be an (nx+1) x ny face grid");
    state.u = f.values;
  } else {
    state.u = Vec::Constant((t.grid.nx + 1) * t.grid.ny, t.u0);
  }
  if (!t.v_file.empty()) {
    const GridField f = read_grid_field(t.v_file);
    if (f.grid.nx != t.grid.nx || f.grid.ny != t.grid.ny + 1)
      throw InvalidInput("transport: v_file must be an nx x (ny+1) face grid");
    state.v = f.values;
  } else {
    state.v = Vec::Constant(t.grid.nx * (t.grid.ny + 1), t.v0);
  }
  if (!t.source_file.empty()) {
    const GridField f = read_grid_field(t.source_file);
    if (f.grid.nx != t.grid.nx || f.grid.ny != t.grid.ny)
      throw InvalidInput("transport: source_file grid does not match the configured grid");
    state.surface_mb = f.values;
  } else {
    state.surface_mb = Vec::Constant(n, t.source);
  }
  state.basal_mb = Vec::Zero(n);
  state.validate();

  MassBudget budget;
  budget.initial_mass = state.total_mass();
  for (int k = 0; k < t.steps; ++k) {
    transport_step(state, t.dt);
    budget.source_integral +=
        (state.surface_mb.sum() + state.basal_mb.sum()) * t.grid.dx * t.grid.dx * t.dt;
    if (t.output_every > 0 && (k + 1) % t.output_every == 0 && k + 1 < t.steps) {
      const std::string name = "thickness_" + std::to_string(k + 1) + ".csv";
      write_grid_field(out.file(name), GridField{t.grid, state.thickness});
      out.add_artifact(name);
    }
  }
  write_grid_field(out.file("thickness_final.csv"), GridField{t.grid, state.thickness});
  out.add_artifact("thickness_final.csv");

  std::ofstream budget_file(out.file("budget.txt"));
  budget_file << "initial_mass: " << format_double(budget.initial_mass) << "\n";
  budget_file << "final_mass: " << format_double(state.total_mass()) << "\n";
  budget_file << "source_integral: " << format_double(budget.source_integral) << "\n";
  budget_file << "boundary_outflux: " << format_double(state.boundary_outflux) << "\n";
  budget_file << "clipped_mass: " << format_double(state.clipped_mass) << "\n";
  budget_file << "budget_residual: " << format_double(budget.residual(state)) << "\n";
  budget_file.close();
  out.add_artifact("budget.txt");
}

namespace {

// Replicates run as independent jobs; reports land in replicate order so the
// aggregation is deterministic for any thread count.
template <typename Fn>
void parallel_replicates(int replicates, int threads, Fn&& fn) {
  if (threads <= 1 || replicates == 1) {
    for (int k = 0; k < replicates; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int n_threads = std::min(threads, replicates);
  for (int w = 0; w < n_threads; ++w)
    pool.emplace_back([&] {
      for (int k = next.fetch_add(1); k < replicates; k = next.fetch_add(1)) fn(k);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

void run_smb_mode(const RunConfig& config, OutputDir& out) {
  if (config.replicates == 1) {
    const SmbStudyReport report = run_smb_study(config.smb, config.seed, &out);
    if (!report.warnings.empty() && report.holdout_total == 0)
      throw NumericalError("smb study: every fit failed");
    return;
  }
  std::vector<SmbStudyReport> reports(static_cast<std::size_t>(config.replicates));
  std::vector<std::string> failures(static_cast<std::size_t>(config.replicates));
  parallel_replicates(config.replicates, config.threads, [&](int k) {
    try {
      OutputDir rep(out.path() + "/rep_" + std::to_string(k));
      reports[(std::size_t)k] =
          run_smb_study(config.smb, config.seed + static_cast<std::uint64_t>(k), &rep);
      rep.write_manifest(echo_config(config), config.seed + static_cast<std::uint64_t>(k), 0.0, 1);
    } catch (const std::exception& e) {
      failures[(std::size_t)k] = e.what();
    }
  });
  long covered = 0, total = 0;
  double err_sq = 0.0;
  long n_fits = 0;
  double net_gap = 0.0;
  for (const auto& r : reports) {
    covered += r.holdout_covered;
    total += r.holdout_total;
    err_sq += r.rmse_overall * r.rmse_overall;
    net_gap = std::max(net_gap, r.net_gap_max);
    n_fits += static_cast<long>(r.fits.size());
  }
  std::ofstream agg(out.file("aggregate_summary.txt"));
  agg << "smb study aggregate over " << config.replicates << " replicates\n";
  agg << "fits: " << n_fits << "\n";
  agg << "rmse_rms: " << format_double(std::sqrt(err_sq / static_cast<double>(config.replicates)))
      << "\n";
  agg << "holdout_coverage: "
      << format_double(total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0)
      << " (" << covered << "/" << total << ")\n";
  agg << "net_gap_max: " << format_double(net_gap) << "\n";
  for (int k = 0; k < config.replicates; ++k)
    if (!failures[(std::size_t)k].empty())
      agg << "replicate " << k << " failed: " << failures[(std::size_t)k] << "\n";
  agg.close();
  out.add_artifact("aggregate_summary.txt");
}

void run_rates_mode(const RunConfig& config, OutputDir& out) {
  if (config.replicates == 1) {
    run_rates_study(config.rates, config.seed, &out);
    return;
  }
  std::vector<RatesStudyReport> reports(static_cast<std::size_t>(config.replicates));
  std::vector<std::string> failures(static_cast<std::size_t>(config.replicates));
  parallel_replicates(config.replicates, config.threads, [&](int k) {
    try {
      OutputDir rep(out.path() + "/rep_" + std::to_string(k));
      reports[(std::size_t)k] =
          run_rates_study(config.rates, config.seed + static_cast<std::uint64_t>(k), &rep);
      rep.write_manifest(echo_config(config), config.seed + static_cast<std::uint64_t>(k), 0.0, 1);
    } catch (const std::exception& e) {
      failures[(std::size_t)k] = e.what();
    }
  });
  std::ofstream agg(out.file("aggregate_summary.txt"));
  agg << "rates study aggregate over " << config.replicates << " replicates\n";
  // pool err^2 and prior var per vertex across replicates, then re-threshold
  for (std::size_t p = 0; p < reports[0].scores.size(); ++p) {
    Vec err = Vec::Zero(reports[0].scores[p].err_sq_mean.size());
    Vec pv = Vec::Zero(err.size());
    int used = 0;
    for (const auto& r : reports) {
      if (r.scores.size() != reports[0].scores.size() || r.scores[p].err_sq_mean.size() != err.size())
        continue;
      err += r.scores[p].err_sq_mean;
      pv += r.scores[p].prior_var_mean;
      ++used;
    }
    int below = 0;
    for (Eigen::Index v = 0; v < err.size(); ++v)
      if (err[v] < pv[v]) ++below;
    agg << reports[0].scores[p].process << ": pooled_frac_below_prior_sd="
        << format_double(err.size() ? static_cast<double>(below) / static_cast<double>(err.size())
                                    : 0.0)
        << " (replicates used: " << used << ")\n";
  }
  double corr_with = 0.0, corr_without = 0.0;
  int n_corr = 0;
  for (const auto& r : reports) {
    if (std::isfinite(r.mean_abs_corr_without_grav)) {
      corr_with += r.mean_abs_corr_with_grav;
      corr_without += r.mean_abs_corr_without_grav;
      ++n_corr;
    }
  }
  if (n_corr) {
    agg << "mean_abs_corr_with_gravimetry: " << format_double(corr_with / n_corr) << "\n";
    agg << "mean_abs_corr_without_gravimetry: " << format_double(corr_without / n_corr) << "\n";
  }
  for (int k = 0; k < config.replicates; ++k)
    if (!failures[(std::size_t)k].empty())
      agg << "replicate " << k << " failed: " << failures[(std::size_t)k] << "\n";
  agg.close();
  out.add_artifact("aggregate_summary.txt");
}

}  // namespace cryobayes
