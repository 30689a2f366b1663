#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kinrescale/rescaling.hpp"
#include "kinrescale/velocity_grid.hpp"

namespace kinrescale {

// Surface area of the unit sphere S^(dv-1): 2, 2*pi, 4*pi.
double sphere_area(int dv);

// Angular cross-section normalized so b * |S^(dv-1)| = 1 (Maxwell-molecule
// loss rate equals rho). The chosen value goes into the config echo.
double default_cross_section(int dv);

// Parameters of the binary collision operator. The impact parametrization
// v' = v - gamma (u.sigma) sigma with gamma = (1+e)/2 covers both kinds:
// elastic is e = 1.
struct CollisionParams {
  OperatorKind kind = OperatorKind::elastic;
  double lambda = 1.0;  // VHS exponent, |u|^lambda
  double b = 0.0;       // angular cross-section; <= 0 means default for dv
  double e = 1.0;       // restitution (inelastic only)
  double eps = 1.0;     // Knudsen number (used by the driver, not the kernel)

  // Restitution actually entering the kernel: elastic pins e = 1.
  double effective_e() const { return kind == OperatorKind::elastic ? 1.0 : e; }
  double gamma() const { return 0.5 * (1.0 + effective_e()); }

  // Throws on out-of-range values; inelastic requires hard spheres.
  void validate(int dv) const;
  double cross_section(int dv) const { return b > 0.0 ? b : default_cross_section(dv); }
};

// Precomputed Galerkin weights of the truncated, periodized operator on an
// isotropic velocity grid. gain[k][m] = A(m, k) and loss[m] = A(m, 0) with
//   A(m,k) = b Int_{|u|<=2R} Int_{S^{dv-1}} |u|^lambda
//            exp(-i zeta m.u) exp(i zeta gamma (u.sigma)(k.sigma)) dsigma du,
// zeta = pi/V. Modes run over {-N/2..N/2-1}^dv in row-major natural order;
// the weights are real for dv <= 2 (full-sphere angular symmetry).
class SpectralKernel {
 public:
  SpectralKernel() = default;

  const VelocityGrid& grid() const { return grid_; }
  double truncation_radius() const { return R_; }
  double lambda() const { return lambda_; }
  double restitution() const { return e_; }

  // Natural-order gain matrix, k-major / m-minor, size (N^dv)^2.
  const std::vector<double>& gain() const { return gain_; }
  const std::vector<double>& loss() const { return loss_; }

 private:
  friend SpectralKernel precompute_kernel(const VelocityGrid&, const CollisionParams&, int);
  friend SpectralKernel load_kernel(const std::string&);
  friend void apply(const SpectralKernel&, std::span<const double>, std::span<double>);

  void finalize();  // builds FFT plans and phase tables from grid_

  VelocityGrid grid_{1, 1.0, 4};
  double R_ = 0.0, lambda_ = 1.0, e_ = 1.0;
  std::vector<double> gain_, loss_;
  std::vector<std::vector<std::complex<double>>> phase_;  // per axis, natural order
  struct Plans;
  std::shared_ptr<Plans> plans_;
};

// Truncation radius keeping post-collisional velocities of supported pairs
// inside the box: R = 2V/(3+sqrt(2)).
double truncation_radius(double extent);

// Computes all mode weights by quadrature (closed forms where exact).
// quad_order is the radial Gauss-Legendre node count, >= 4. Emits a warning
// on stderr when refining the quadrature still moves the weights by > 1e-8.
// dv = 3 is outside the envelope of this operator (UnsupportedError).
SpectralKernel precompute_kernel(const VelocityGrid& grid, const CollisionParams& params,
                                 int quad_order);

// Q(g,g) for one velocity slice: forward transform, fused truncated double
// sum over gain and loss weights, inverse transform, real part. Throws
// BreakdownError when the imaginary residue is out of proportion.
void apply(const SpectralKernel& kernel, std::span<const double> g, std::span<double> out);

// Same truncated periodized operator by direct summation: direct transforms
// (no FFT) and independently quadratured weights. Cost guard: N <= 16.
std::vector<double> direct_sum_oracle(std::span<const double> g, const CollisionParams& params,
                                      const VelocityGrid& grid);

// D(g) = C (1-e^2) sum_ij g_i g_j |xi_i - xi_j|^3 dxi^(2dv), C = 1/(8 dv),
// normalized to unit total cross-section b |S^(dv-1)| = 1.
double dissipation_functional(std::span<const double> g, double e, const VelocityGrid& grid);

// K_dv: quasi-elastic energy-dissipation constant, 2 b |S^(dv-1)| times the
// dissipation functional of M(1,0,1) in the elastic normalization e = 0.
// Evaluated once per dv by quadrature on an internal reference grid, cached.
double haff_constant(int dv, double b);

// Kernel cache files, magic "KRSK": u32 dv, u32 N, f64 V, f64 lambda, f64 e,
// then gain and loss as interleaved complex f64 (imaginary parts zero here).
// The cross-section is baked into the weights and not recorded.
void save_kernel(const std::string& path, const SpectralKernel& kernel);
SpectralKernel load_kernel(const std::string& path);

}  // namespace kinrescale
