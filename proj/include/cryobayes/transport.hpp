#pragma once

#include <vector>

#include "cryobayes/types.hpp"

namespace cryobayes {

/// Regular cell-centered grid; values are row-major with index j*nx + i.
struct GridSpec {
  int nx = 0, ny = 0;
  double dx = 0.0;
  double ox = 0.0, oy = 0.0;  // lower-left corner of cell (0,0)

  int cells() const { return nx * ny; }
  double cell_x(int i) const { return ox + (i + 0.5) * dx; }
  double cell_y(int j) const { return oy + (j + 0.5) * dx; }
};

/// Scalar field on a grid (import/export format lives in io.hpp).
struct GridField {
  GridSpec grid;
  Vec values;

  double& at(int i, int j) { return values[j * grid.nx + i]; }
  double at(int i, int j) const { return values[j * grid.nx + i]; }
};

enum class TransportBc { Periodic, FreeFlux };

/// State of the mass-transport equation dH/dt + div(H v) = M_s + M_b with
/// face-centered velocities: u on x-faces ((nx+1) x ny), v on y-faces
/// (nx x (ny+1)).
struct TransportState {
  GridSpec grid;
  Vec thickness;  // H >= 0, per cell
  Vec u;          // x-face velocity, index j*(nx+1) + i, i in [0, nx]
  Vec v;          // y-face velocity, index j*nx + i, j in [0, ny]
  Vec surface_mb; // M_s per cell
  Vec basal_mb;   // M_b per cell
  TransportBc bc = TransportBc::Periodic;

  // Cumulative accounting for the mass budget.
  double boundary_outflux = 0.0;  // net mass leaving through the boundary
  double clipped_mass = 0.0;      // mass added by clipping H at zero

  double total_mass() const { return thickness.sum() * grid.dx * grid.dx; }
  double max_speed() const;
  void validate() const;
};

/// One first-order upwind step. Throws NumericalError when the CFL number
/// max|v| dt / dx exceeds 0.9, proposing a smaller dt.
void transport_step(TransportState& state, double dt);

/// Mass budget residual over an interval: change in total mass minus
/// (integrated sources - boundary outflux + clipped mass). The caller
/// snapshots total_mass / accounting before stepping.
struct MassBudget {
  double initial_mass = 0.0;
  double source_integral = 0.0;  // accumulate sum(Ms+Mb)*dx^2*dt per step
  double initial_outflux = 0.0;
  double initial_clipped = 0.0;

  double residual(const TransportState& s) const {
    return s.total_mass() - initial_mass - source_integral +
           (s.boundary_outflux - initial_outflux) - (s.clipped_mass - initial_clipped);
  }
};

/// Configuration of the synthetic truth generator for the separation study:
/// SMB fields drive the transport solver, ice-dynamic elevation change is
/// what transport adds on top, GIA and firn are independent draws.
struct SyntheticTruthConfig {
  GridSpec grid;
  int n_epochs = 7;
  double epoch_dt = 1.0;
  int substeps = 4;

  // Per-epoch SMB rate fields on the grid (from an SPDE/AR1 prior draw).
  std::vector<Vec> smb_rate;
  // Time-invariant GIA rate field and per-epoch firn rate fields.
  Vec gia_rate;
  std::vector<Vec> firn_rate;

  Vec initial_thickness;
  Vec u, v;  // face velocities, constant in time
  TransportBc bc = TransportBc::FreeFlux;
};

struct SyntheticTruth {
  std::vector<GridField> smb;       // S_t
  std::vector<GridField> dynamics;  // I_t = (dH/dt averaged over epoch) - S_t
  std::vector<GridField> firn;      // F_t
  GridField gia;                    // time-invariant
  std::vector<GridField> total;     // S + I + F + GIA per epoch
};

SyntheticTruth generate_synthetic_truth(const SyntheticTruthConfig& config);

}  // namespace cryobayes
