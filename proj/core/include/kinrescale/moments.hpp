#pragma once

#include <array>
#include <span>

#include "kinrescale/velocity_grid.hpp"

namespace kinrescale {

// Velocity moments of one distribution slice, midpoint quadrature.
//   rho = sum g h^d,  u = sum v g h^d / rho,  Theta = sum (v-u)(x)(v-u) g h^d / rho,
//   T = tr(Theta)/d,  E = sum |v|^2/2 g h^d,  P = rho T.
// Identity 2E = d rho T + rho |u|^2 holds exactly in the discrete sums.
struct MomentSet {
  double rho = 0.0;
  std::array<double, 3> u{0.0, 0.0, 0.0};
  std::array<std::array<double, 3>, 3> theta{};  // pressure tensor / rho
  double T = 0.0;
  double E = 0.0;
  bool degenerate = false;  // rho under the floor; u and T forced to zero

  double pressure() const { return rho * T; }
};

MomentSet moments(std::span<const double> slice, const VelocityGrid& grid,
                  double rho_floor = 1e-12);

// Writes rho * (2 pi T)^(-d/2) exp(-|v-u|^2 / (2T)) on the grid nodes.
// Throws SolverError for T <= 0.
void eval_maxwellian(std::span<double> out, const VelocityGrid& grid, double rho,
                     const std::array<double, 3>& u, double T);

}  // namespace kinrescale
