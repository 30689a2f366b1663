#include "kinrescale/esbgk.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <vector>

#include "kinrescale/errors.hpp"

namespace kinrescale {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

using Mat3 = std::array<std::array<double, 3>, 3>;

// Determinant and inverse of the leading dv x dv block, by adjugate.
// The callers guarantee positive definiteness, so det > 0.
double sym_inverse(const Mat3& a, int dv, Mat3& inv) {
  double det = 0.0;
  if (dv == 1) {
    det = a[0][0];
    inv[0][0] = 1.0 / det;
  } else if (dv == 2) {
    det = a[0][0] * a[1][1] - a[0][1] * a[0][1];
    const double s = 1.0 / det;
    inv[0][0] = a[1][1] * s;
    inv[1][1] = a[0][0] * s;
    inv[0][1] = inv[1][0] = -a[0][1] * s;
  } else {
    const double c00 = a[1][1] * a[2][2] - a[1][2] * a[1][2];
    const double c01 = a[0][2] * a[1][2] - a[0][1] * a[2][2];
    const double c02 = a[0][1] * a[1][2] - a[0][2] * a[1][1];
    det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
    const double s = 1.0 / det;
    inv[0][0] = c00 * s;
    inv[0][1] = inv[1][0] = c01 * s;
    inv[0][2] = inv[2][0] = c02 * s;
    inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[0][2]) * s;
    inv[1][2] = inv[2][1] = (a[0][1] * a[0][2] - a[0][0] * a[1][2]) * s;
    inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[0][1]) * s;
  }
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw SolverError("anisotropic Gaussian covariance is singular");
  }
  return det;
}

void warn_pd_fallback() {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true)) {
    std::fprintf(stderr,
                 "kinrescale: corrected tensor not positive definite, using "
                 "nu = 0 for the affected cells (warning shown once)\n");
  }
}

// Accumulates coef * div_v((v - u) f) onto out. Face values come from the
// fourth-order symmetric interpolant (-1, 9, 9, -1)/16 with zero extension
// past the box, and the two box faces carry zero flux. The interpolant
// reproduces any quadratic's cell average exactly, so the discrete mass,
// momentum, and energy moments of the divergence match the analytic ones
// up to the zero-extension defect in the outermost two cells.
void add_drag_divergence(std::span<const double> f, const std::array<double, 3>& u,
                         double coef, const VelocityGrid& grid, std::span<double> out) {
  const int dv = grid.dim();
  const std::size_t size = grid.size();
  thread_local std::vector<double> line;
  thread_local std::vector<double> flux;

  for (int a = 0; a < dv; ++a) {
    const std::size_t n = static_cast<std::size_t>(grid.n(a));
    if (n < 2) continue;
    const std::size_t stride = grid.stride(a);
    const double h = grid.spacing(a);
    const double inv_h = 1.0 / h;
    line.resize(n);
    flux.resize(n + 1);

    const std::size_t block = n * stride;
    for (std::size_t outer = 0; outer < size; outer += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        const std::size_t base = outer + inner;
        for (std::size_t k = 0; k < n; ++k) line[k] = f[base + k * stride];

        flux[0] = 0.0;
        flux[n] = 0.0;
        for (std::size_t j = 1; j < n; ++j) {
          const double fm2 = (j >= 2) ? line[j - 2] : 0.0;
          const double fp1 = (j + 1 < n) ? line[j + 1] : 0.0;
          const double ftilde = (-fm2 + 9.0 * line[j - 1] + 9.0 * line[j] - fp1) / 16.0;
          const double w = -grid.extent() + static_cast<double>(j) * h - u[a];
          flux[j] = w * ftilde;
        }
        for (std::size_t k = 0; k < n; ++k) {
          out[base + k * stride] += coef * (flux[k + 1] - flux[k]) * inv_h;
        }
      }
    }
  }
}

// Shared body of the classical and rescaled forms: out = tau_val (G - f)
// plus drag_coef * div((v - u) f), with G the exact-moment Gaussian.
void apply_core(std::span<const double> f, const MomentSet& m, double nu,
                double tau_val, double drag_coef, const VelocityGrid& grid,
                std::span<double> out) {
  const std::size_t size = grid.size();
  if (f.size() != size || out.size() != size) {
    throw SolverError("relaxation operator slice size mismatch");
  }

  if (m.degenerate || m.T <= 0.0) {
    // Vacuum cell: the attractor is zero and the drag velocity is undefined.
    for (std::size_t j = 0; j < size; ++j) out[j] = -tau_val * f[j];
    return;
  }

  thread_local std::vector<double> gbuf;
  gbuf.resize(size);
  gaussian_G(gbuf, m, nu, grid);

  for (std::size_t j = 0; j < size; ++j) out[j] = tau_val * (gbuf[j] - f[j]);
  if (drag_coef != 0.0) add_drag_divergence(f, m.u, drag_coef, grid, out);
}

}  // namespace

void EsbgkParams::validate() const {
  if (!(nu < 1.0)) throw ConfigError("esbgk.nu must be < 1");
  if (!(tau_a >= 0.0) || !(tau_c >= 0.0)) {
    throw ConfigError("esbgk.tau coefficients must be non-negative");
  }
  if (tau_a == 0.0 && tau_c == 0.0) {
    throw ConfigError("esbgk.tau is identically zero");
  }
  if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("esbgk.e outside [0,1]");
  if (!(C >= 0.0)) throw ConfigError("esbgk drag coefficient must be non-negative");
  if (!(eps > 0.0)) throw ConfigError("collision.eps must be positive");
}

std::array<std::array<double, 3>, 3> corrected_tensor(const MomentSet& m, double nu,
                                                      int dv) {
  Mat3 t{};
  for (int i = 0; i < dv; ++i) {
    for (int j = 0; j < dv; ++j) {
      t[i][j] = nu * m.theta[i][j];
    }
    t[i][i] += (1.0 - nu) * m.T;
  }
  return t;
}

double symmetric_min_eigenvalue(const std::array<std::array<double, 3>, 3>& a, int dv) {
  if (dv == 1) return a[0][0];
  if (dv == 2) {
    const double mean = 0.5 * (a[0][0] + a[1][1]);
    const double d = 0.5 * (a[0][0] - a[1][1]);
    return mean - std::sqrt(d * d + a[0][1] * a[0][1]);
  }
  // Cyclic Jacobi on a local copy; a handful of sweeps reaches roundoff.
  Mat3 w = a;
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = std::abs(w[0][1]) + std::abs(w[0][2]) + std::abs(w[1][2]);
    double scale = std::abs(w[0][0]) + std::abs(w[1][1]) + std::abs(w[2][2]);
    if (off <= 1e-15 * (scale + 1e-300)) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (w[p][q] == 0.0) continue;
        const double theta = (w[q][q] - w[p][p]) / (2.0 * w[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double wkp = w[k][p], wkq = w[k][q];
          w[k][p] = c * wkp - s * wkq;
          w[k][q] = s * wkp + c * wkq;
        }
        for (int k = 0; k < 3; ++k) {
          const double wpk = w[p][k], wqk = w[q][k];
          w[p][k] = c * wpk - s * wqk;
          w[q][k] = s * wpk + c * wqk;
        }
      }
    }
  }
  double mn = w[0][0];
  for (int i = 1; i < 3; ++i) mn = std::min(mn, w[i][i]);
  return mn;
}

void gaussian_G(std::span<double> out, const MomentSet& m, double nu,
                const VelocityGrid& grid) {
  const int dv = grid.dim();
  const std::size_t size = grid.size();
  if (out.size() != size) throw SolverError("gaussian_G output size mismatch");
  if (!(m.T > 0.0) || !(m.rho > 0.0)) {
    throw SolverError("gaussian_G requires positive density and temperature");
  }

  Mat3 tcal = corrected_tensor(m, nu, dv);
  if (nu != 0.0 && symmetric_min_eigenvalue(tcal, dv) <= 1e-12 * m.T) {
    warn_pd_fallback();
    tcal = corrected_tensor(m, 0.0, dv);
  }

  Mat3 inv{};
  const double det = sym_inverse(tcal, dv, inv);
  const double norm = m.rho / std::sqrt(std::pow(kTwoPi, dv) * det);

  for (std::size_t j = 0; j < size; ++j) {
    const std::array<double, 3> v = grid.coords(j);
    double q = 0.0;
    for (int r = 0; r < dv; ++r) {
      const double dr = v[r] - m.u[r];
      for (int c = 0; c < dv; ++c) q += dr * inv[r][c] * (v[c] - m.u[c]);
    }
    out[j] = norm * std::exp(-0.5 * q);
  }

  // Exact discrete mass, then an exact discrete momentum tilt. The tilt
  // 1 + delta.(v - ubar) leaves the mass invariant because the first central
  // moment about ubar vanishes by construction of ubar.
  const double vol = grid.cell_volume();
  double mass = 0.0;
  for (std::size_t j = 0; j < size; ++j) mass += out[j];
  mass *= vol;
  if (!(mass > 0.0)) throw SolverError("anisotropic Gaussian lost all discrete mass");
  const double mass_fix = m.rho / mass;
  for (std::size_t j = 0; j < size; ++j) out[j] *= mass_fix;

  std::array<double, 3> ubar{0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < size; ++j) {
    const std::array<double, 3> v = grid.coords(j);
    for (int r = 0; r < dv; ++r) ubar[r] += v[r] * out[j];
  }
  for (int r = 0; r < dv; ++r) ubar[r] *= vol / m.rho;

  Mat3 cov{};
  for (std::size_t j = 0; j < size; ++j) {
    const std::array<double, 3> v = grid.coords(j);
    for (int r = 0; r < dv; ++r) {
      for (int c = r; c < dv; ++c) {
        cov[r][c] += (v[r] - ubar[r]) * (v[c] - ubar[c]) * out[j];
      }
    }
  }
  for (int r = 0; r < dv; ++r) {
    for (int c = r; c < dv; ++c) {
      cov[r][c] *= vol / m.rho;
      cov[c][r] = cov[r][c];
    }
  }
  Mat3 cov_inv{};
  sym_inverse(cov, dv, cov_inv);
  std::array<double, 3> delta{0.0, 0.0, 0.0};
  for (int r = 0; r < dv; ++r) {
    for (int c = 0; c < dv; ++c) delta[r] += cov_inv[r][c] * (m.u[c] - ubar[c]);
  }
  for (std::size_t j = 0; j < size; ++j) {
    const std::array<double, 3> v = grid.coords(j);
    double tilt = 1.0;
    for (int r = 0; r < dv; ++r) tilt += delta[r] * (v[r] - ubar[r]);
    out[j] *= tilt;
  }
}

void apply_esbgk(std::span<const double> f, const MomentSet& m, const EsbgkParams& p,
                 const VelocityGrid& grid, std::span<double> out) {
  const double x = p.tau_on_density ? m.rho : m.pressure();
  const double tau_val = p.tau(x);
  const double drag = (m.degenerate || m.T <= 0.0)
                          ? 0.0
                          : p.C * m.rho * std::sqrt(m.T);
  apply_core(f, m, p.nu, tau_val, drag, grid, out);
}

void apply_esbgk_rescaled(std::span<const double> g, double omega, const MomentSet& m,
                          const EsbgkParams& p, const VelocityGrid& grid,
                          std::span<double> out) {
  // rho_g = rho_f, so the density-based rate needs no omega factor; the
  // pressure-based rate sees the classical pressure omega^2 P_g.
  const double x = p.tau_on_density ? m.rho : omega * omega * m.pressure();
  const double tau_val = p.tau(x);
  const double drag = (m.degenerate || m.T <= 0.0)
                          ? 0.0
                          : p.C * omega * m.rho * std::sqrt(m.T);
  apply_core(g, m, p.nu, tau_val, drag, grid, out);
}

}  // namespace kinrescale
