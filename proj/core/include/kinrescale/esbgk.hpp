#pragma once

#include <array>
#include <span>

#include "kinrescale/moments.hpp"
#include "kinrescale/velocity_grid.hpp"

namespace kinrescale {

// Relaxation model parameters. tau is affine in its argument: either the
// kinetic pressure P (tau_on_density = false) or the density rho.
struct EsbgkParams {
  double nu = 0.0;      // Prandtl parameter, < 1; Pr = 1/(1-nu)
  double tau_a = 1.0;   // tau(x) = tau_a * x + tau_c
  double tau_c = 0.0;
  bool tau_on_density = false;
  double e = 1.0;       // restitution
  double C = 0.0;       // drag coefficient, (1-e) K_dv / dv
  double eps = 1.0;     // Knudsen number (driver divides by it)

  double tau(double x) const { return tau_a * x + tau_c; }
  double prandtl() const { return 1.0 / (1.0 - nu); }
  void validate() const;
};

// T_cal = (1-nu) T I + nu Theta, the covariance of the anisotropic Gaussian.
std::array<std::array<double, 3>, 3> corrected_tensor(const MomentSet& m, double nu, int dv);

// Smallest eigenvalue of a symmetric dv x dv block (cyclic Jacobi sweep).
double symmetric_min_eigenvalue(const std::array<std::array<double, 3>, 3>& a, int dv);

// Anisotropic Gaussian rho exp(-d' Tcal^-1 d / 2) / sqrt(det(2 pi Tcal)).
// The discrete output is rescaled to carry exactly the moment rho and tilted
// by 1 + delta.(v - ubar) to carry exactly the moment u, so the relaxation
// term conserves discrete mass and momentum identically. A corrected tensor
// with smallest eigenvalue <= 1e-12 T falls back to nu = 0 with a warning on
// stderr (first occurrence only).
void gaussian_G(std::span<double> out, const MomentSet& m, double nu,
                const VelocityGrid& grid);

// Q_S(f) = tau(P) (G - f) + C rho sqrt(T) div_v((v - u) f), without the 1/eps.
// The drag divergence uses fourth-order symmetric face interpolation
// (-1, 9, 9, -1)/16 with zero-flux box faces: its discrete mass, momentum,
// and energy moments reproduce the analytic identities exactly up to the
// two tail cells at each box edge.
void apply_esbgk(std::span<const double> f, const MomentSet& m, const EsbgkParams& p,
                 const VelocityGrid& grid, std::span<double> out);

// Rescaled form: relaxation rate tau(omega^2 P_g) (pressure-based tau; the
// density-based rate is omega-free), drag coefficient C omega rho_g sqrt(T_g).
// m holds the moments of g on the xi grid.
void apply_esbgk_rescaled(std::span<const double> g, double omega, const MomentSet& m,
                          const EsbgkParams& p, const VelocityGrid& grid,
                          std::span<double> out);

}  // namespace kinrescale
