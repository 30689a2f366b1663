#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "kinrescale/rescaling.hpp"
#include "kinrescale/spatial_grid.hpp"

namespace kinrescale {

// Compressible Euler moments (rho, rho u, E) of a gas with dv translational
// degrees of freedom; the effective adiabatic index is 1 + 2/dv.
struct HydroState {
  HydroState(const SpatialGrid& grid, int dv);

  const SpatialGrid& grid() const { return grid_; }
  int dv() const { return dv_; }

  std::vector<double> rho;  // cells
  std::vector<double> m;    // cells * dv, cell-major momentum density
  std::vector<double> E;    // cells, total energy density

  double velocity(std::size_t cell, int c) const {
    return m[cell * static_cast<std::size_t>(dv_) + static_cast<std::size_t>(c)] /
           rho[cell];
  }
  // T = (2E - |m|^2/rho) / (dv rho); pressure p = rho T.
  double temperature(std::size_t cell) const;
  double pressure(std::size_t cell) const { return rho[cell] * temperature(cell); }

 private:
  SpatialGrid grid_;
  int dv_;
};

// Energy sink of the homogeneous cooling closure: dE/dt = -K rho^2 T^(3/2).
struct SourceSpec {
  enum class Kind { none, granular };
  Kind kind = Kind::none;
  double K = 0.0;
};

enum class HydroBc { periodic, slip, thermal, zero_gradient };

struct HydroWall {
  HydroBc bc = HydroBc::periodic;
  double T_w = 1.0;  // thermal walls only
};

// Moment-level counterpart of a kinetic wall: specular -> slip,
// diffusive -> thermal at the wall temperature, absorbing -> zero gradient.
HydroWall hydro_wall_from(BoundaryKind kind, double T_w);

// One cell state, used by the ghost rules and their tests.
struct HydroCellState {
  double rho = 0.0;
  std::array<double, 3> m{0.0, 0.0, 0.0};
  double E = 0.0;
};

// Ghost state built from the mirrored interior state. slip reverses the
// normal momentum; thermal reverses the full momentum and rebuilds the
// energy from the wall temperature plus the reflected kinetic part;
// zero_gradient passes the state through (caller hands in the boundary
// cell). Periodic wrap never reaches this function.
HydroCellState hydro_ghost_state(const HydroCellState& mirror, HydroBc bc,
                                 double T_w, int axis, int dv);

// Per-cell rates of the completed step: state_new = state_old + dt * rate
// exactly, assembled from the three stage right-hand sides (L0 + L1 + 4 L2)/6
// including sources. Feeds the scale-derivative chain rule.
struct HydroRates {
  std::vector<double> drho_dt;
  std::vector<double> dE_dt;
};

// Largest |u_a| + sqrt((1 + 2/dv) T) over cells and axes, for dt selection.
double hydro_max_speed(const HydroState& s);

// One SSP-RK3 step with fifth-order WENO-Z reconstruction of the global
// Lax-Friedrichs flux split, unsplit across axes. Walls are indexed
// axis * 2 + side. Throws PositivityError when any stage or the final state
// loses positive density or internal energy; the caller may retry with a
// smaller dt.
HydroState weno5_step(const HydroState& s, double dt, const SourceSpec& src,
                      const std::array<HydroWall, 4>& walls,
                      HydroRates* rates = nullptr);

// omega = sqrt(2E / (dv rho)) per cell, floored at 1e-6. Writes field.omega.
void compute_omega(const HydroState& s, ScalingField& field);

// domega_dt by the chain rule at the pre-step state with the effective rates
//   d omega/dt = (dE/dt - (omega^2 dv / 2) drho/dt) / (dv rho omega),
// and grad omega from the current field.omega values: fourth-order central
// stencils inside, matching one-sided stencils at non-periodic boundaries.
// Cells clamped at the omega floor get a zero time derivative.
void omega_derivatives(ScalingField& field, const HydroState& old_state,
                       const HydroRates& rates);

}  // namespace kinrescale
