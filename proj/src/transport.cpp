#include "cryobayes/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cryobayes {

double TransportState::max_speed() const {
  double m = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) m = std::max(m, std::abs(u[k]));
  for (Eigen::Index k = 0; k < v.size(); ++k) m = std::max(m, std::abs(v[k]));
  return m;
}

void TransportState::validate() const {
  if (grid.nx < 1 || grid.ny < 1 || !(grid.dx > 0.0))
    throw InvalidInput("transport: invalid grid");
  const int n = grid.cells();
  if (thickness.size() != n || surface_mb.size() != n || basal_mb.size() != n)
    throw InvalidInput("transport: cell field size mismatch");
  if (u.size() != static_cast<Eigen::Index>((grid.nx + 1) * grid.ny) ||
      v.size() != static_cast<Eigen::Index>(grid.nx * (grid.ny + 1)))
    throw InvalidInput("transport: face velocity size mismatch");
  if ((thickness.array() < 0.0).any()) throw InvalidInput("transport: thickness must be >= 0");
}

void transport_step(TransportState& s, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("transport_step: dt must be > 0");
  const int nx = s.grid.nx, ny = s.grid.ny;
  const double dx = s.grid.dx;

  const double cfl = s.max_speed() * dt / dx;
  if (cfl > 0.9)
    throw NumericalError("transport_step: CFL number " + std::to_string(cfl) +
                         " exceeds 0.9; use dt <= " + std::to_string(0.9 * dx / s.max_speed()));

  const bool periodic = s.bc == TransportBc::Periodic;
  const Vec& h = s.thickness;
  auto cell = [nx](int i, int j) { return j * nx + i; };

  // Upwind donor value at each face; ghost cells copy the edge cell under
  // free-flux boundaries.
  auto h_at = [&](int i, int j) -> double {
    if (periodic) {
      i = (i + nx) % nx;
      j = (j + ny) % ny;
    } else {
      i = std::clamp(i, 0, nx - 1);
      j = std::clamp(j, 0, ny - 1);
    }
    return h[cell(i, j)];
  };

  // Face fluxes (mass per unit face length per unit time).
  Vec fx((nx + 1) * ny), fy(nx * (ny + 1));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double vel = s.u[j * (nx + 1) + i];
      const double donor = vel >= 0.0 ? h_at(i - 1, j) : h_at(i, j);
      fx[j * (nx + 1) + i] = vel * donor;
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double vel = s.v[j * nx + i];
      const double donor = vel >= 0.0 ? h_at(i, j - 1) : h_at(i, j);
      fy[j * nx + i] = vel * donor;
    }

  if (periodic) {
    // Identify wrapped faces so the telescoping flux sum cancels exactly.
    for (int j = 0; j < ny; ++j) fx[j * (nx + 1) + nx] = fx[j * (nx + 1)];
    for (int i = 0; i < nx; ++i) fy[ny * nx + i] = fy[i];
  }

  Vec h_new(nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double div = (fx[j * (nx + 1) + i + 1] - fx[j * (nx + 1) + i] +
                          fy[(j + 1) * nx + i] - fy[j * nx + i]) / dx;
      h_new[cell(i, j)] =
          h[cell(i, j)] + dt * (-div + s.surface_mb[cell(i, j)] + s.basal_mb[cell(i, j)]);
    }

  if (!periodic) {
    double out = 0.0;
    for (int j = 0; j < ny; ++j) {
      out += dt * dx * (fx[j * (nx + 1) + nx] - fx[j * (nx + 1)]);
    }
    for (int i = 0; i < nx; ++i) {
      out += dt * dx * (fy[ny * nx + i] - fy[i]);
    }
    s.boundary_outflux += out;
  }

  for (int k = 0; k < nx * ny; ++k) {
    if (h_new[k] < 0.0) {
      s.clipped_mass += -h_new[k] * dx * dx;
      h_new[k] = 0.0;
    }
  }
  s.thickness = h_new;
}

SyntheticTruth generate_synthetic_truth(const SyntheticTruthConfig& cfg) {
  const int n = cfg.grid.cells();
  const int T = cfg.n_epochs;
  if (T < 1) throw InvalidInput("generate_synthetic_truth: n_epochs must be >= 1");
  if (static_cast<int>(cfg.smb_rate.size()) != T ||
      static_cast<int>(cfg.firn_rate.size()) != T)
    throw InvalidInput("generate_synthetic_truth: need one SMB and firn field per epoch");
  if (cfg.gia_rate.size() != n || cfg.initial_thickness.size() != n)
    throw InvalidInput("generate_synthetic_truth: grid field size mismatch");

  TransportState state;
  state.grid = cfg.grid;
  state.thickness = cfg.initial_thickness;
  state.u = cfg.u;
  state.v = cfg.v;
  state.basal_mb = Vec::Zero(n);
  state.bc = cfg.bc;
  state.surface_mb = Vec::Zero(n);
  state.validate();

  SyntheticTruth truth;
  truth.gia = {cfg.grid, cfg.gia_rate};
  const double dt = cfg.epoch_dt / std::max(1, cfg.substeps);
  for (int t = 0; t < T; ++t) {
    if (cfg.smb_rate[static_cast<std::size_t>(t)].size() != n ||
        cfg.firn_rate[static_cast<std::size_t>(t)].size() != n)
      throw InvalidInput("generate_synthetic_truth: epoch field size mismatch");
    state.surface_mb = cfg.smb_rate[static_cast<std::size_t>(t)];
    const Vec h_before = state.thickness;
    for (int k = 0; k < std::max(1, cfg.substeps); ++k) transport_step(state, dt);
    const Vec rate = (state.thickness - h_before) / cfg.epoch_dt;

    truth.smb.push_back({cfg.grid, cfg.smb_rate[static_cast<std::size_t>(t)]});
    truth.dynamics.push_back({cfg.grid, rate - cfg.smb_rate[static_cast<std::size_t>(t)]});
    truth.firn.push_back({cfg.grid, cfg.firn_rate[static_cast<std::size_t>(t)]});
    truth.total.push_back(
        {cfg.grid, cfg.smb_rate[static_cast<std::size_t>(t)] +
                       truth.dynamics.back().values + cfg.firn_rate[static_cast<std::size_t>(t)] +
                       cfg.gia_rate});
  }
  return truth;
}

}  // namespace cryobayes
