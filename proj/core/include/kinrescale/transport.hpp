#pragma once

#include <array>
#include <span>
#include <vector>

#include "kinrescale/distribution_field.hpp"
#include "kinrescale/parallel.hpp"
#include "kinrescale/rescaling.hpp"

namespace kinrescale {

// Wall data for specular/diffusive/Maxwell boundaries.
// alpha is the diffusive (thermalized) fraction; 1-alpha reflects specularly.
struct WallSpec {
  double alpha = 1.0;
  std::array<double, 3> u_w{0.0, 0.0, 0.0};
  double T_w = 1.0;
};

// Numerical fluxes on the faces of one advected line; interior faces are
// shared by adjacent cells, so the update telescopes (mass conservation).
struct FaceFluxField {
  int axis = 0;
  std::vector<double> flux;  // n + 1 values
};

// How the two boundary faces of a line are treated.
//   limited: full limited stencil (ghost depth 2 must be filled)
//   wall_first_order: first-order upwind at the boundary face (ghost depth 1)
//   zero_flux: boundary face flux forced to zero (velocity box faces)
enum class LineEnd { limited, wall_first_order, zero_flux };

// Second-order limited upwind update of one line (Van Leer limiter).
// fext holds ghost|ghost|f_0..f_{n-1}|ghost|ghost; speed holds the n+1 face
// speeds. Requires max |speed| dt/dx <= 1 (checked by callers, hard error
// here). Writes the n updated values to out (may alias fext interior? no:
// out must not alias fext).
void advect_line(std::span<const double> fext, std::span<const double> speed,
                 double dt_over_dx, std::span<double> out, LineEnd left,
                 LineEnd right);

// Same, but also returns the face fluxes actually used.
void advect_line(std::span<const double> fext, std::span<const double> speed,
                 double dt_over_dx, std::span<double> out, LineEnd left,
                 LineEnd right, FaceFluxField* fluxes);

// Ghost-cell populations for kinetic wall conditions. `axis` is the wall
// normal (a spatial axis index, matched to the same velocity component),
// side 0 for the lower face and 1 for the upper face. `interior` is the
// velocity slice of the wall-adjacent cell, `ghost` receives the incoming
// population (outgoing ghost nodes mirror the interior convention used by
// the sweep and are filled too).

// Specular reflection: ghost(xi) = interior(xi - 2 (n.xi) n); on this grid
// the flip is an exact node permutation along `axis`.
void apply_specular(std::span<const double> interior, const VelocityGrid& grid,
                    int axis, std::span<double> ghost);

// Diffusive re-emission at wall temperature: ghost = mu M_{1, u_w/omega,
// T_w/omega^2}. mu balances the discrete half-fluxes
//   sum_out speed * g = -mu sum_in speed * M
// with the same first-order quadrature the wall face uses, so the net wall
// mass flux is exactly zero. Returns mu. Throws SolverError when the
// incoming Maxwellian carries no flux (wall temperature unresolved).
double apply_diffusive(std::span<const double> interior,
                       const VelocityGrid& grid, int axis, int side,
                       const WallSpec& wall, double omega,
                       std::span<double> ghost);

// Maxwell condition: alpha * diffusive + (1-alpha) * specular.
// Returns the mu of the diffusive part (0 when alpha = 0).
double apply_maxwell(std::span<const double> interior, const VelocityGrid& grid,
                     int axis, int side, const WallSpec& wall, double omega,
                     std::span<double> ghost);

// One forward-Euler transport step of the rescaled equation's spatial term
// div_x(omega xi g), swept axis by axis (reverse_axes flips the sweep order;
// callers alternate it so the splitting error carries no fixed orientation).
// Wall ghosts follow the boundary kind on each face; `walls` is indexed
// face = 2*axis + side.
void transport_spatial(DistributionField& g, const ScalingField& omega,
                       const std::array<WallSpec, 4>& walls, double dt,
                       bool reverse_axes = false, const ThreadPool* pool = nullptr);

// One forward-Euler step of the velocity drift term -div_xi(a g) with
// a = drift_coefficient(omega), zero-flux box faces, swept axis by axis.
void transport_drift(DistributionField& g, const ScalingField& omega,
                     double dt, const ThreadPool* pool = nullptr);

// Largest |a| component over cells/nodes/axes divided by the matching
// grid spacing; dt * this bound must stay below 1 for transport_drift.
double drift_cfl_rate(const ScalingField& omega, const VelocityGrid& grid);

// max_x omega * V / dx, the spatial-sweep CFL rate for transport_spatial.
double spatial_cfl_rate(const ScalingField& omega, const VelocityGrid& grid);

}  // namespace kinrescale
