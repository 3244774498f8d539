#include "cryobayes/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "cryobayes/io.hpp"

namespace fs = std::filesystem;

namespace cryobayes {

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::SmbStudy: return "smb-study";
    case RunMode::RatesStudy: return "rates-study";
    case RunMode::Fit: return "fit";
    case RunMode::Simulate: return "simulate";
    case RunMode::Transport: return "transport";
  }
  return "?";
}

namespace {

using nlohmann::json;

/// Strict-key JSON object view accumulating all schema errors.
class Section {
 public:
  Section(const json* obj, std::string path, std::vector<std::string>* errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {}

  bool present(const std::string& key) const { return obj_ && obj_->contains(key); }

  double number(const std::string& key, double def) {
    if (!take(key)) return def;
    return as_number(key, def);
  }
  double require_number(const std::string& key) {
    if (!take(key)) {
      fail("missing required key '" + at(key) + "'");
      return 0.0;
    }
    return as_number(key, 0.0);
  }
  int integer(const std::string& key, int def) {
    return static_cast<int>(number(key, static_cast<double>(def)));
  }
  std::uint64_t require_u64(const std::string& key) {
    if (!take(key)) {
      fail("missing required key '" + at(key) + "'");
      return 0;
    }
    const json& v = (*obj_)[key];
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      fail("key '" + at(key) + "' must be a non-negative integer");
      return 0;
    }
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool def) {
    if (!take(key)) return def;
    const json& v = (*obj_)[key];
    if (!v.is_boolean()) {
      fail("key '" + at(key) + "' must be a boolean");
      return def;
    }
    return v.get<bool>();
  }
  std::string str(const std::string& key, const std::string& def) {
    if (!take(key)) return def;
    const json& v = (*obj_)[key];
    if (!v.is_string()) {
      fail("key '" + at(key) + "' must be a string");
      return def;
    }
    return v.get<std::string>();
  }
  std::string require_str(const std::string& key) {
    if (!take(key)) {
      fail("missing required key '" + at(key) + "'");
      return "";
    }
    return str_value(key);
  }
  std::vector<double> number_list(const std::string& key) {
    std::vector<double> out;
    if (!take(key)) return out;
    const json& v = (*obj_)[key];
    if (!v.is_array()) {
      fail("key '" + at(key) + "' must be an array of numbers");
      return out;
    }
    for (const auto& item : v) {
      if (!item.is_number()) {
        fail("key '" + at(key) + "' must contain only numbers");
        return {};
      }
      out.push_back(item.get<double>());
    }
    return out;
  }
  const json* object(const std::string& key) {
    if (!take(key)) return nullptr;
    const json& v = (*obj_)[key];
    if (!v.is_object()) {
      fail("key '" + at(key) + "' must be an object");
      return nullptr;
    }
    return &v;
  }
  const json* array(const std::string& key) {
    if (!take(key)) return nullptr;
    const json& v = (*obj_)[key];
    if (!v.is_array()) {
      fail("key '" + at(key) + "' must be an array");
      return nullptr;
    }
    return &v;
  }

  /// Report unknown keys; call once all expected keys were consumed.
  void done() {
    if (!obj_) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it)
      if (!consumed_.count(it.key())) fail("unknown key '" + at(it.key()) + "'");
  }

  void fail(const std::string& msg) { errors_->push_back(msg); }
  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  bool take(const std::string& key) {
    if (!present(key)) return false;
    consumed_.insert(key);
    return true;
  }
  double as_number(const std::string& key, double fallback) {
    const json& v = (*obj_)[key];
    if (!v.is_number()) {
      fail("key '" + at(key) + "' must be a number");
      return fallback;
    }
    return v.get<double>();
  }
  std::string str_value(const std::string& key) {
    const json& v = (*obj_)[key];
    if (!v.is_string()) {
      fail("key '" + at(key) + "' must be a string");
      return "";
    }
    return v.get<std::string>();
  }

  const json* obj_;
  std::string path_;
  std::vector<std::string>* errors_;
  std::set<std::string> consumed_;
};

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / p).string();
}

void check_file(const std::string& path, const std::string& key,
                std::vector<std::string>* errors) {
  if (!path.empty() && !fs::exists(path))
    errors->push_back("key '" + key + "': file '" + path + "' does not exist");
}

void parse_season(const json* obj, const std::string& path, SeasonModel* season,
                  std::vector<std::string>* errors) {
  if (!obj) return;
  Section s(obj, path, errors);
  season->b0 = s.number("b0", season->b0);
  season->b1 = s.number("b1", season->b1);
  season->b2 = s.number("b2", season->b2);
  season->b3 = s.number("b3", season->b3);
  season->coef_sd = s.number("coef_sd", season->coef_sd);
  season->resid.sigma = s.number("sigma", season->resid.sigma);
  season->resid.rho = s.number("rho", season->resid.rho);
  s.done();
}

void parse_smb(const json* obj, const std::string& base_dir, SmbStudyConfig* cfg,
               std::vector<std::string>* errors) {
  if (!obj) return;
  Section s(obj, "smb_study", errors);
  const std::string poly = resolve(base_dir, s.str("polygon", ""));
  check_file(poly, "smb_study.polygon", errors);
  if (!poly.empty() && fs::exists(poly)) cfg->glacier = read_polygon(poly);
  cfg->n_sites = s.integer("n_sites", cfg->n_sites);
  cfg->n_years = s.integer("n_years", cfg->n_years);
  cfg->first_year = s.integer("first_year", cfg->first_year);
  cfg->mesh_edge = s.number("mesh_edge", cfg->mesh_edge);
  cfg->extension_factor = s.number("extension_factor", cfg->extension_factor);
  cfg->truth_mesh_edge = s.number("truth_mesh_edge", cfg->truth_mesh_edge);
  cfg->grid_nx = s.integer("grid_nx", cfg->grid_nx);
  cfg->noise_sd = s.number("noise_sd", cfg->noise_sd);
  cfg->holdout_max = s.integer("holdout_max", cfg->holdout_max);
  cfg->sd_draws = s.integer("sd_draws", cfg->sd_draws);
  const auto prec = s.number_list("fixed_effect_precisions");
  if (!prec.empty()) {
    if (prec.size() != 4) {
      s.fail("smb_study.fixed_effect_precisions must have 4 entries");
    } else {
      cfg->fixed_effect_precisions = Eigen::Map<const Vec>(prec.data(), 4);
    }
  }
  parse_season(s.object("winter"), "smb_study.winter", &cfg->winter, errors);
  parse_season(s.object("summer"), "smb_study.summer", &cfg->summer, errors);
  s.done();
}

void parse_rates_field(const json* obj, const std::string& path, RatesFieldConfig* f,
                       std::vector<std::string>* errors) {
  if (!obj) return;
  Section s(obj, path, errors);
  f->sigma = s.number("sigma", f->sigma);
  f->rho = s.number("rho", f->rho);
  f->ar = s.number("ar", f->ar);
  s.done();
}

void parse_rates(const json* obj, const std::string& base_dir, RatesStudyConfig* cfg,
                 std::vector<std::string>* errors) {
  if (!obj) return;
  Section s(obj, "rates_study", errors);
  cfg->n_epochs = s.integer("epochs", cfg->n_epochs);
  const std::string poly = resolve(base_dir, s.str("domain", ""));
  check_file(poly, "rates_study.domain", errors);
  if (!poly.empty() && fs::exists(poly)) cfg->domain = read_polygon(poly);
  cfg->grid_nx = s.integer("grid_nx", cfg->grid_nx);
  cfg->coarse_mesh_edge = s.number("coarse_mesh_edge", cfg->coarse_mesh_edge);
  cfg->fine_mesh_edge = s.number("fine_mesh_edge", cfg->fine_mesh_edge);
  cfg->extension_factor = s.number("extension_factor", cfg->extension_factor);
  parse_rates_field(s.object("gia"), "rates_study.gia", &cfg->gia, errors);
  parse_rates_field(s.object("smb"), "rates_study.smb", &cfg->smb, errors);
  parse_rates_field(s.object("firn"), "rates_study.firn", &cfg->firn, errors);
  if (const json* ice = s.object("ice")) {
    Section si(ice, "rates_study.ice", errors);
    cfg->ice_beta0_sd = si.number("beta0_sd", cfg->ice_beta0_sd);
    cfg->ice_beta1_sd_base = si.number("beta1_sd_base", cfg->ice_beta1_sd_base);
    cfg->ice_beta1_sd_speed = si.number("beta1_sd_speed", cfg->ice_beta1_sd_speed);
    cfg->ice_resid_sd = si.number("resid_sd", cfg->ice_resid_sd);
    si.done();
  }
  if (const json* gps = s.object("gps")) {
    Section sg(gps, "rates_study.gps", errors);
    cfg->gps_count = sg.integer("count", cfg->gps_count);
    cfg->gps_size = sg.number("size", cfg->gps_size);
    cfg->gps_noise_sd = sg.number("noise_sd", cfg->gps_noise_sd);
    sg.done();
  }
  if (const json* alt = s.object("altimetry")) {
    Section sa(alt, "rates_study.altimetry", errors);
    cfg->altimetry_grid = sa.integer("grid", cfg->altimetry_grid);
    cfg->altimetry_noise_sd = sa.number("noise_sd", cfg->altimetry_noise_sd);
    sa.done();
  }
  if (const json* grav = s.object("gravimetry")) {
    Section sg(grav, "rates_study.gravimetry", errors);
    cfg->gravimetry_grid = sg.integer("grid", cfg->gravimetry_grid);
    cfg->gravimetry_noise_sd = sg.number("noise_sd", cfg->gravimetry_noise_sd);
    cfg->with_gravimetry = sg.boolean("enabled", cfg->with_gravimetry);
    sg.done();
  }
  cfg->compare_without_gravimetry =
      s.boolean("compare_without_gravimetry", cfg->compare_without_gravimetry);
  cfg->rho_ice = s.number("rho_ice", cfg->rho_ice);
  cfg->thickness0 = s.number("thickness0", cfg->thickness0);
  cfg->flow_speed = s.number("flow_speed", cfg->flow_speed);
  cfg->substeps = s.integer("substeps", cfg->substeps);
  cfg->epoch_dt = s.number("epoch_dt", cfg->epoch_dt);
  cfg->posterior_draws = s.integer("posterior_draws", cfg->posterior_draws);
  s.done();
}

void parse_mesh(const json* obj, const std::string& base_dir, MeshConfig* cfg,
                std::vector<std::string>* errors) {
  if (!obj) {
    errors->push_back("missing required section 'mesh'");
    return;
  }
  Section s(obj, "mesh", errors);
  cfg->polygon_path = resolve(base_dir, s.str("polygon", ""));
  cfg->vertices_path = resolve(base_dir, s.str("vertices", ""));
  cfg->triangles_path = resolve(base_dir, s.str("triangles", ""));
  cfg->edge = s.number("edge", cfg->edge);
  cfg->extension_factor = s.number("extension_factor", cfg->extension_factor);
  cfg->range_hint = s.number("range_hint", cfg->range_hint);
  s.done();
  check_file(cfg->polygon_path, "mesh.polygon", errors);
  check_file(cfg->vertices_path, "mesh.vertices", errors);
  check_file(cfg->triangles_path, "mesh.triangles", errors);
  const bool from_polygon = !cfg->polygon_path.empty();
  const bool from_files = !cfg->vertices_path.empty() || !cfg->triangles_path.empty();
  if (from_polygon == from_files)
    errors->push_back("mesh: give either 'polygon' or both 'vertices' and 'triangles'");
  if (from_files && (cfg->vertices_path.empty() || cfg->triangles_path.empty()))
    errors->push_back("mesh: 'vertices' and 'triangles' must be given together");
}

ProcessSpec parse_process(const json& obj, int index, std::vector<std::string>* errors) {
  const std::string path = "processes[" + std::to_string(index) + "]";
  Section s(&obj, path, errors);
  ProcessSpec spec;
  spec.id = s.require_str("id");
  const std::string kind = s.require_str("kind");
  try {
    spec.kind = process_kind_from_string(kind);
  } catch (const InvalidInput& e) {
    s.fail(path + ": " + e.what());
  }
  spec.n_epochs = s.integer("epochs", 1);
  spec.matern.sigma = s.number("sigma", 1.0);
  spec.matern.rho = s.number("rho", 0.3);
  if (s.present("ar")) spec.ar_coeff = Vec::Constant(1, s.number("ar", 0.0));
  if (s.present("beta0_var")) spec.beta0_var = Vec::Constant(1, s.number("beta0_var", 0.0));
  if (s.present("beta1_var")) spec.beta1_var = Vec::Constant(1, s.number("beta1_var", 0.0));
  spec.resid_var = s.number("resid_var", 0.0);
  const auto prec = s.number_list("precisions");
  if (!prec.empty())
    spec.fixed_precisions = Eigen::Map<const Vec>(prec.data(), static_cast<Eigen::Index>(prec.size()));
  s.done();
  return spec;
}

void parse_sampler(const json* obj, SamplerConfig* cfg, std::vector<std::string>* errors) {
  if (!obj) return;
  Section s(obj, "sampler", errors);
  cfg->enabled = s.boolean("enabled", cfg->enabled);
  cfg->iterations = s.integer("iterations", cfg->iterations);
  cfg->burn_in = s.integer("burn_in", cfg->burn_in);
  cfg->thin = s.integer("thin", cfg->thin);
  cfg->chains = s.integer("chains", cfg->chains);
  cfg->init_step = s.number("init_step", cfg->init_step);
  cfg->sample_noise_scale = s.boolean("sample_noise_scale", cfg->sample_noise_scale);
  cfg->noise_scale_log_sd = s.number("noise_scale_log_sd", cfg->noise_scale_log_sd);
  if (const json* arr = s.array("hyper")) {
    int idx = 0;
    for (const auto& item : *arr) {
      const std::string path = "sampler.hyper[" + std::to_string(idx) + "]";
      Section sh(&item, path, errors);
      SamplerHyper h;
      h.process = sh.require_str("process");
      h.pc.rho0 = sh.number("rho0", 1.0);
      h.pc.alpha_rho = sh.number("alpha_rho", 0.5);
      h.pc.sigma0 = sh.number("sigma0", 1.0);
      h.pc.alpha_sigma = sh.number("alpha_sigma", 0.5);
      h.sample_ar = sh.boolean("sample_ar", false);
      sh.done();
      cfg->hyper.push_back(std::move(h));
      ++idx;
    }
  }
  s.done();
  if (cfg->enabled && cfg->hyper.empty())
    errors->push_back("sampler.enabled requires at least one sampler.hyper entry");
  if (cfg->iterations <= cfg->burn_in)
    errors->push_back("sampler.iterations must exceed sampler.burn_in");
}

void parse_fit(const json* obj, const std::string& base_dir, FitConfig* cfg,
               std::vector<std::string>* errors, const std::string& section) {
  if (!obj) {
    errors->push_back("missing required section '" + section + "'");
    return;
  }
  Section s(obj, section, errors);
  parse_mesh(s.object("mesh"), base_dir, &cfg->mesh, errors);
  if (const json* arr = s.array("processes")) {
    int idx = 0;
    for (const auto& item : *arr) cfg->processes.push_back(parse_process(item, idx++, errors));
  }
  if (cfg->processes.empty()) errors->push_back(section + ": at least one process is required");
  if (const json* fx = s.object("fixed_effects")) {
    Section sf(fx, section + ".fixed_effects", errors);
    const auto prec = sf.number_list("precisions");
    if (prec.empty()) {
      sf.fail(section + ".fixed_effects.precisions is required");
    } else {
      cfg->fixed_precisions = Eigen::Map<const Vec>(prec.data(), static_cast<Eigen::Index>(prec.size()));
      cfg->with_fixed_effects = true;
    }
    sf.done();
  }
  cfg->point_field = s.str("point_field", "");
  cfg->observations_path = resolve(base_dir, s.require_str("observations"));
  check_file(cfg->observations_path, section + ".observations", errors);
  cfg->footprint_cell = s.number("footprint_cell", 0.0);
  cfg->rho_ice = s.number("rho_ice", cfg->rho_ice);
  if (const json* arr = s.array("mask")) {
    int idx = 0;
    for (const auto& item : *arr) {
      const std::string path = section + ".mask[" + std::to_string(idx++) + "]";
      Section sm(&item, path, errors);
      MaskEntryConfig m;
      m.instrument = sm.require_str("instrument");
      m.process = sm.require_str("process");
      m.weight = sm.require_str("weight");
      sm.done();
      if (m.weight != "zero" && m.weight != "one" && m.weight != "ice-density")
        errors->push_back(path + ".weight must be zero|one|ice-density");
      cfg->mask_entries.push_back(std::move(m));
    }
  }
  parse_sampler(s.object("sampler"), &cfg->sampler, errors);
  s.done();
}

void parse_transport(const json* obj, const std::string& base_dir, TransportRunConfig* cfg,
                     std::vector<std::string>* errors) {
  if (!obj) {
    errors->push_back("missing required section 'transport'");
    return;
  }
  Section s(obj, "transport", errors);
  cfg->grid.nx = s.integer("nx", 32);
  cfg->grid.ny = s.integer("ny", 32);
  cfg->grid.dx = s.number("dx", 1.0 / 32);
  cfg->grid.ox = s.number("ox", 0.0);
  cfg->grid.oy = s.number("oy", 0.0);
  const std::string bc = s.str("bc", "periodic");
  if (bc == "periodic")
    cfg->bc = TransportBc::Periodic;
  else if (bc == "free-flux")
    cfg->bc = TransportBc::FreeFlux;
  else
    errors->push_back("transport.bc must be periodic|free-flux");
  cfg->thickness0 = s.number("thickness0", cfg->thickness0);
  cfg->thickness_file = resolve(base_dir, s.str("thickness_file", ""));
  cfg->u0 = s.number("u0", 0.0);
  cfg->v0 = s.number("v0", 0.0);
  cfg->u_file = resolve(base_dir, s.str("u_file", ""));
  cfg->v_file = resolve(base_dir, s.str("v_file", ""));
  cfg->source = s.number("source", 0.0);
  cfg->source_file = resolve(base_dir, s.str("source_file", ""));
  cfg->dt = s.require_number("dt");
  cfg->steps = s.integer("steps", 1);
  cfg->output_every = s.integer("output_every", 0);
  s.done();
  check_file(cfg->thickness_file, "transport.thickness_file", errors);
  check_file(cfg->u_file, "transport.u_file", errors);
  check_file(cfg->v_file, "transport.v_file", errors);
  check_file(cfg->source_file, "transport.source_file", errors);
  if (cfg->grid.nx < 1 || cfg->grid.ny < 1 || cfg->grid.dx <= 0)
    errors->push_back("transport: grid must have nx,ny >= 1 and dx > 0");
  if (cfg->dt <= 0) errors->push_back("transport.dt must be > 0");
  if (cfg->steps < 1) errors->push_back("transport.steps must be >= 1");
}

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);  // allow comments
  } catch (const json::parse_error& e) {
    throw InvalidInput("config '" + path + "': " + e.what());
  }
  return parse_config_json(j, fs::path(path).parent_path().string());
}

RunConfig parse_config_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw InvalidInput("config: top level must be an object");
  std::vector<std::string> errors;
  RunConfig cfg;
  Section s(&j, "", &errors);

  const std::string mode = s.require_str("mode");
  bool mode_ok = true;
  if (mode == "smb-study")
    cfg.mode = RunMode::SmbStudy;
  else if (mode == "rates-study")
    cfg.mode = RunMode::RatesStudy;
  else if (mode == "fit")
    cfg.mode = RunMode::Fit;
  else if (mode == "simulate")
    cfg.mode = RunMode::Simulate;
  else if (mode == "transport")
    cfg.mode = RunMode::Transport;
  else {
    if (!mode.empty()) errors.push_back("unknown mode '" + mode + "'");
    mode_ok = false;
  }

  if (!s.present("seed"))
    errors.push_back("missing required key 'seed' (runs must be explicitly seeded)");
  else
    cfg.seed = s.require_u64("seed");
  cfg.output_dir = resolve(base_dir, s.str("output_dir", cfg.output_dir));
  cfg.threads = s.integer("threads", cfg.threads);
  cfg.replicates = s.integer("replicates", cfg.replicates);
  if (cfg.threads < 1) errors.push_back("threads must be >= 1");
  if (cfg.replicates < 1) errors.push_back("replicates must be >= 1");

  if (mode_ok) {
    switch (cfg.mode) {
      case RunMode::SmbStudy:
        parse_smb(s.object("smb_study"), base_dir, &cfg.smb, &errors);
        break;
      case RunMode::RatesStudy:
        parse_rates(s.object("rates_study"), base_dir, &cfg.rates, &errors);
        break;
      case RunMode::Fit:
        parse_fit(s.object("fit"), base_dir, &cfg.fit, &errors, "fit");
        break;
      case RunMode::Simulate:
        parse_fit(s.object("simulate"), base_dir, &cfg.fit, &errors, "simulate");
        break;
      case RunMode::Transport:
        parse_transport(s.object("transport"), base_dir, &cfg.transport, &errors);
        break;
    }
  }
  s.done();

  if (!errors.empty()) {
    std::string msg = "config validation failed with " + std::to_string(errors.size()) +
                      " error(s):";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw InvalidInput(msg);
  }
  return cfg;
}

nlohmann::json echo_config(const RunConfig& cfg) {
  json j;
  j["mode"] = to_string(cfg.mode);
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["threads"] = cfg.threads;
  j["replicates"] = cfg.replicates;
  switch (cfg.mode) {
    case RunMode::SmbStudy: {
      json s;
      s["n_sites"] = cfg.smb.n_sites;
      s["n_years"] = cfg.smb.n_years;
      s["first_year"] = cfg.smb.first_year;
      s["mesh_edge"] = cfg.smb.mesh_edge;
      s["extension_factor"] = cfg.smb.extension_factor;
      s["truth_mesh_edge"] = cfg.smb.truth_mesh_edge;
      s["grid_nx"] = cfg.smb.grid_nx;
      s["noise_sd"] = cfg.smb.noise_sd;
      s["holdout_max"] = cfg.smb.holdout_max;
      s["sd_draws"] = cfg.smb.sd_draws;
      s["fixed_effect_precisions"] = {cfg.smb.fixed_effect_precisions[0],
                                      cfg.smb.fixed_effect_precisions[1],
                                      cfg.smb.fixed_effect_precisions[2],
                                      cfg.smb.fixed_effect_precisions[3]};
      auto season = [](const SeasonModel& m) {
        json v;
        v["b0"] = m.b0;
        v["b1"] = m.b1;
        v["b2"] = m.b2;
        v["b3"] = m.b3;
        v["coef_sd"] = m.coef_sd;
        v["sigma"] = m.resid.sigma;
        v["rho"] = m.resid.rho;
        return v;
      };
      s["winter"] = season(cfg.smb.winter);
      s["summer"] = season(cfg.smb.summer);
      s["polygon_vertices"] = cfg.smb.glacier.size();
      j["smb_study"] = s;
      break;
    }
    case RunMode::RatesStudy: {
      json r;
      r["epochs"] = cfg.rates.n_epochs;
      r["grid_nx"] = cfg.rates.grid_nx;
      r["coarse_mesh_edge"] = cfg.rates.coarse_mesh_edge;
      r["fine_mesh_edge"] = cfg.rates.fine_mesh_edge;
      r["extension_factor"] = cfg.rates.extension_factor;
      auto field = [](const RatesFieldConfig& f) {
        json v;
        v["sigma"] = f.sigma;
        v["rho"] = f.rho;
        v["ar"] = f.ar;
        return v;
      };
      r["gia"] = field(cfg.rates.gia);
      r["smb"] = field(cfg.rates.smb);
      r["firn"] = field(cfg.rates.firn);
      r["ice"] = {{"beta0_sd", cfg.rates.ice_beta0_sd},
                  {"beta1_sd_base", cfg.rates.ice_beta1_sd_base},
                  {"beta1_sd_speed", cfg.rates.ice_beta1_sd_speed},
                  {"resid_sd", cfg.rates.ice_resid_sd}};
      r["gps"] = {{"count", cfg.rates.gps_count},
                  {"size", cfg.rates.gps_size},
                  {"noise_sd", cfg.rates.gps_noise_sd}};
      r["altimetry"] = {{"grid", cfg.rates.altimetry_grid},
                        {"noise_sd", cfg.rates.altimetry_noise_sd}};
      r["gravimetry"] = {{"grid", cfg.rates.gravimetry_grid},
                         {"noise_sd", cfg.rates.gravimetry_noise_sd},
                         {"enabled", cfg.rates.with_gravimetry}};
      r["compare_without_gravimetry"] = cfg.rates.compare_without_gravimetry;
      r["rho_ice"] = cfg.rates.rho_ice;
      r["thickness0"] = cfg.rates.thickness0;
      r["flow_speed"] = cfg.rates.flow_speed;
      r["substeps"] = cfg.rates.substeps;
      r["epoch_dt"] = cfg.rates.epoch_dt;
      r["posterior_draws"] = cfg.rates.posterior_draws;
      j["rates_study"] = r;
      break;
    }
    case RunMode::Fit:
    case RunMode::Simulate: {
      json f;
      json mesh;
      mesh["polygon"] = cfg.fit.mesh.polygon_path;
      mesh["vertices"] = cfg.fit.mesh.vertices_path;
      mesh["triangles"] = cfg.fit.mesh.triangles_path;
      mesh["edge"] = cfg.fit.mesh.edge;
      mesh["extension_factor"] = cfg.fit.mesh.extension_factor;
      mesh["range_hint"] = cfg.fit.mesh.range_hint;
      f["mesh"] = mesh;
      json procs = json::array();
      for (const auto& p : cfg.fit.processes) {
        json v;
        v["id"] = p.id;
        v["kind"] = to_string(p.kind);
        v["epochs"] = p.n_epochs;
        v["sigma"] = p.matern.sigma;
        v["rho"] = p.matern.rho;
        if (p.ar_coeff.size()) v["ar"] = p.ar_coeff[0];
        if (p.beta0_var.size()) v["beta0_var"] = p.beta0_var[0];
        if (p.beta1_var.size()) v["beta1_var"] = p.beta1_var[0];
        v["resid_var"] = p.resid_var;
        procs.push_back(v);
      }
      f["processes"] = procs;
      f["point_field"] = cfg.fit.point_field;
      f["observations"] = cfg.fit.observations_path;
      f["footprint_cell"] = cfg.fit.footprint_cell;
      f["rho_ice"] = cfg.fit.rho_ice;
      if (cfg.fit.with_fixed_effects) {
        json prec = json::array();
        for (Eigen::Index i = 0; i < cfg.fit.fixed_precisions.size(); ++i)
          prec.push_back(cfg.fit.fixed_precisions[i]);
        f["fixed_effects"] = {{"precisions", prec}};
      }
      json mask = json::array();
      for (const auto& m : cfg.fit.mask_entries)
        mask.push_back({{"instrument", m.instrument}, {"process", m.process}, {"weight", m.weight}});
      f["mask"] = mask;
      json sampler;
      sampler["enabled"] = cfg.fit.sampler.enabled;
      sampler["iterations"] = cfg.fit.sampler.iterations;
      sampler["burn_in"] = cfg.fit.sampler.burn_in;
      sampler["thin"] = cfg.fit.sampler.thin;
      sampler["chains"] = cfg.fit.sampler.chains;
      sampler["init_step"] = cfg.fit.sampler.init_step;
      sampler["sample_noise_scale"] = cfg.fit.sampler.sample_noise_scale;
      sampler["noise_scale_log_sd"] = cfg.fit.sampler.noise_scale_log_sd;
      json hyper = json::array();
      for (const auto& h : cfg.fit.sampler.hyper)
        hyper.push_back({{"process", h.process},
                         {"rho0", h.pc.rho0},
                         {"alpha_rho", h.pc.alpha_rho},
                         {"sigma0", h.pc.sigma0},
                         {"alpha_sigma", h.pc.alpha_sigma},
                         {"sample_ar", h.sample_ar}});
      sampler["hyper"] = hyper;
      f["sampler"] = sampler;
      j[to_string(cfg.mode)] = f;
      break;
    }
    case RunMode::Transport: {
      json t;
      t["nx"] = cfg.transport.grid.nx;
      t["ny"] = cfg.transport.grid.ny;
      t["dx"] = cfg.transport.grid.dx;
      t["ox"] = cfg.transport.grid.ox;
      t["oy"] = cfg.transport.grid.oy;
      t["bc"] = cfg.transport.bc == TransportBc::Periodic ? "periodic" : "free-flux";
      t["thickness0"] = cfg.transport.thickness0;
      t["thickness_file"] = cfg.transport.thickness_file;
      t["u0"] = cfg.transport.u0;
      t["v0"] = cfg.transport.v0;
      t["u_file"] = cfg.transport.u_file;
      t["v_file"] = cfg.transport.v_file;
      t["source"] = cfg.transport.source;
      t["source_file"] = cfg.transport.source_file;
      t["dt"] = cfg.transport.dt;
      t["steps"] = cfg.transport.steps;
      t["output_every"] = cfg.transport.output_every;
      j["transport"] = t;
      break;
    }
  }
  return j;
}

}  // namespace cryobayes
