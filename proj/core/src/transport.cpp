#include "kinrescale/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "kinrescale/errors.hpp"
#include "kinrescale/moments.hpp"

namespace kinrescale {

namespace {

// Van Leer limited slope contribution: phi(r) * d with r = a/d, written in
// the symmetric harmonic form. Zero at extrema (a*d <= 0), which is what
// makes the update TVD and positivity-preserving under CFL <= 1.
inline double van_leer(double a, double d) {
  return (a * d > 0.0) ? 2.0 * a * d / (a + d) : 0.0;
}

inline double face_flux(const double* fe, std::size_t i, double s,
                        double dt_over_dx) {
  // fe points at the extended line; face i sits between fe[i+1] and fe[i+2].
  // The limited correction always enters with +|s|, whichever side is upwind.
  const double nu = std::abs(s) * dt_over_dx;
  const double corr = 0.5 * std::abs(s) * (1.0 - nu);
  const double d = fe[i + 2] - fe[i + 1];
  if (s >= 0.0) {
    return s * fe[i + 1] + corr * van_leer(fe[i + 1] - fe[i], d);
  }
  return s * fe[i + 2] + corr * van_leer(fe[i + 3] - fe[i + 2], d);
}

}  // namespace

void advect_line(std::span<const double> fext, std::span<const double> speed,
                 double dt_over_dx, std::span<double> out, LineEnd left,
                 LineEnd right, FaceFluxField* fluxes) {
  const std::size_t n = out.size();
  if (fext.size() != n + 4 || speed.size() != n + 1)
    throw SolverError("advect_line: inconsistent sizes");
  std::vector<double> flux(n + 1);
  for (std::size_t f = 0; f <= n; ++f) {
    const double s = speed[f];
    if (std::abs(s) * dt_over_dx > 1.0 + 1e-12)
      throw CflError("advect_line: |speed| dt/dx exceeds 1");
    const bool boundary = (f == 0 || f == n);
    const LineEnd end = (f == 0) ? left : right;
    if (boundary && end == LineEnd::zero_flux) {
      flux[f] = 0.0;
    } else if (boundary && end == LineEnd::wall_first_order) {
      flux[f] = s * (s >= 0.0 ? fext[f + 1] : fext[f + 2]);
    } else {
      flux[f] = face_flux(fext.data(), f, s, dt_over_dx);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    out[i] = fext[i + 2] - dt_over_dx * (flux[i + 1] - flux[i]);
  if (fluxes) fluxes->flux = std::move(flux);
}

void advect_line(std::span<const double> fext, std::span<const double> speed,
                 double dt_over_dx, std::span<double> out, LineEnd left,
                 LineEnd right) {
  advect_line(fext, speed, dt_over_dx, out, left, right, nullptr);
}

void apply_specular(std::span<const double> interior, const VelocityGrid& grid,
                    int axis, std::span<double> ghost) {
  // Node flip along `axis` is exact: -xi_k = xi_{N-1-k}.
  const int na = grid.n(axis);
  const std::size_t stride = grid.stride(axis);
  const std::size_t nv = grid.size();
  for (std::size_t k = 0; k < nv; ++k) {
    const std::size_t ka = (k / stride) % static_cast<std::size_t>(na);
    const std::size_t flipped =
        k + (static_cast<std::size_t>(na) - 1 - 2 * ka) * stride;
    ghost[k] = interior[flipped];
  }
}

double apply_diffusive(std::span<const double> interior,
                       const VelocityGrid& grid, int axis, int side,
                       const WallSpec& wall, double omega,
                       std::span<double> ghost) {
  if (!(wall.T_w > 0.0)) throw SolverError("diffusive wall: T_w must be > 0");
  if (!(omega > 0.0)) throw SolverError("diffusive wall: omega must be > 0");
  // Wall Maxwellian in rescaled variables: u_w/omega, T_w/omega^2.
  std::array<double, 3> uw = wall.u_w;
  for (double& c : uw) c /= omega;
  eval_maxwellian(ghost, grid, 1.0, uw, wall.T_w / (omega * omega));
  // Half-flux balance with the first-order wall quadrature. Outgoing nodes
  // leave through the face (xi_axis < 0 on side 0, > 0 on side 1).
  const std::size_t nv = grid.size();
  double phi_out = 0.0, denom = 0.0;
  for (std::size_t k = 0; k < nv; ++k) {
    const double xi_a = grid.coords(k)[static_cast<std::size_t>(axis)];
    const double outward = (side == 0) ? -xi_a : xi_a;
    if (outward > 0.0) {
      phi_out += outward * interior[k];
    } else {
      denom += -outward * ghost[k];
    }
  }
  if (phi_out < 0.0) phi_out = 0.0;  // negative undershoots carry no outflux
  if (!(denom > 1e-300))
    throw SolverError(
        "diffusive wall: incoming wall-Maxwellian flux vanishes "
        "(T_w unresolved on this velocity grid)");
  const double mu = phi_out / denom;
  for (std::size_t k = 0; k < nv; ++k) ghost[k] *= mu;
  return mu;
}

double apply_maxwell(std::span<const double> interior, const VelocityGrid& grid,
                     int axis, int side, const WallSpec& wall, double omega,
                     std::span<double> ghost) {
  if (wall.alpha < 0.0 || wall.alpha > 1.0)
    throw SolverError("maxwell wall: alpha outside [0,1]");
  if (wall.alpha == 0.0) {
    apply_specular(interior, grid, axis, ghost);
    return 0.0;
  }
  if (wall.alpha == 1.0)
    return apply_diffusive(interior, grid, axis, side, wall, omega, ghost);
  std::vector<double> spec(grid.size());
  apply_specular(interior, grid, axis, {spec.data(), spec.size()});
  const double mu =
      apply_diffusive(interior, grid, axis, side, wall, omega, ghost);
  for (std::size_t k = 0; k < grid.size(); ++k)
    ghost[k] = wall.alpha * ghost[k] + (1.0 - wall.alpha) * spec[k];
  return mu;
}

namespace {

// Fills the two ghost rows of one spatial line end. `cell0`/`cell1` are the
// two wall-adjacent interior slices (cell0 touching the wall).
void fill_wall_ghosts(BoundaryKind kind, std::span<const double> cell0,
                      std::span<const double> cell1, const VelocityGrid& grid,
                      int axis, int side, const WallSpec& wall, double omega,
                      double* ghost_near, double* ghost_far) {
  const std::size_t nv = grid.size();
  switch (kind) {
    case BoundaryKind::specular:
      apply_specular(cell0, grid, axis, {ghost_near, nv});
      apply_specular(cell1, grid, axis, {ghost_far, nv});
      return;
    case BoundaryKind::diffusive: {
      if (wall.alpha == 0.0) {
        apply_specular(cell0, grid, axis, {ghost_near, nv});
        apply_specular(cell1, grid, axis, {ghost_far, nv});
        return;
      }
      std::vector<double> diff(nv);
      apply_diffusive(cell0, grid, axis, side, wall, omega, {diff.data(), nv});
      if (wall.alpha == 1.0) {
        std::memcpy(ghost_near, diff.data(), nv * sizeof(double));
        std::memcpy(ghost_far, diff.data(), nv * sizeof(double));
        return;
      }
      // Accommodation blend: both ghost rows share the diffusive population,
      // each keeps its own specular image.
      apply_specular(cell0, grid, axis, {ghost_near, nv});
      apply_specular(cell1, grid, axis, {ghost_far, nv});
      for (std::size_t k = 0; k < nv; ++k) {
        ghost_near[k] = wall.alpha * diff[k] + (1.0 - wall.alpha) * ghost_near[k];
        ghost_far[k] = wall.alpha * diff[k] + (1.0 - wall.alpha) * ghost_far[k];
      }
      return;
    }
    case BoundaryKind::absorbing:
      std::fill(ghost_near, ghost_near + nv, 0.0);
      std::fill(ghost_far, ghost_far + nv, 0.0);
      return;
    case BoundaryKind::periodic:
      throw SolverError("fill_wall_ghosts: periodic handled by the sweep");
  }
}

}  // namespace

void transport_spatial(DistributionField& g, const ScalingField& omega,
                       const std::array<WallSpec, 4>& walls, double dt,
                       bool reverse_axes, const ThreadPool* pool) {
  const SpatialGrid& xg = g.xgrid();
  const VelocityGrid& vg = g.vgrid();
  const int dx = xg.dim();
  const std::size_t nv = vg.size();
  for (int sweep = 0; sweep < dx; ++sweep) {
    const int axis = reverse_axes ? dx - 1 - sweep : sweep;
    const int n = xg.cells(axis);
    if (n == 1) continue;  // homogeneous direction carries no transport
    const double dti = dt / xg.spacing(axis);
    // Hard CFL guard for the whole sweep.
    double om_max = 0.0;
    for (double w : omega.omega) om_max = std::max(om_max, w);
    if (om_max * vg.extent() * dti > 1.0 + 1e-12)
      throw CflError("transport_spatial: omega*V*dt/dx exceeds 1");

    const int n_lines = (dx == 2) ? xg.cells(1 - axis) : 1;
    // Per-node velocity component along the sweep axis.
    std::vector<double> xi_a(nv);
    for (std::size_t k = 0; k < nv; ++k)
      xi_a[k] = vg.coords(k)[static_cast<std::size_t>(axis)];

    const BoundaryKind bc_lo = xg.bc(axis, 0);
    const BoundaryKind bc_hi = xg.bc(axis, 1);
    const LineEnd end_lo =
        bc_lo == BoundaryKind::periodic ? LineEnd::limited
                                        : LineEnd::wall_first_order;
    const LineEnd end_hi =
        bc_hi == BoundaryKind::periodic ? LineEnd::limited
                                        : LineEnd::wall_first_order;

    auto body = [&](std::size_t lo, std::size_t hi) {
      std::vector<double> block(static_cast<std::size_t>(n + 4) * nv);
      std::vector<double> flux(static_cast<std::size_t>(n + 1) * nv);
      std::vector<double> om_face(static_cast<std::size_t>(n + 1));
      std::vector<std::size_t> cells(static_cast<std::size_t>(n));
      for (std::size_t line = lo; line < hi; ++line) {
        for (int i = 0; i < n; ++i) {
          const int other = static_cast<int>(line);
          cells[static_cast<std::size_t>(i)] =
              (dx == 1) ? xg.flat(i)
                        : (axis == 0 ? xg.flat(i, other) : xg.flat(other, i));
        }
        // Step 1: gather interior rows and fill ghosts.
        for (int i = 0; i < n; ++i)
          std::memcpy(&block[static_cast<std::size_t>(i + 2) * nv],
                      g.slice(cells[static_cast<std::size_t>(i)]).data(),
                      nv * sizeof(double));
        if (bc_lo == BoundaryKind::periodic) {
          std::memcpy(&block[0],
                      &block[static_cast<std::size_t>(n) * nv],
                      nv * sizeof(double));
          std::memcpy(&block[nv],
                      &block[static_cast<std::size_t>(n + 1) * nv],
                      nv * sizeof(double));
        } else {
          fill_wall_ghosts(bc_lo, g.slice(cells[0]), g.slice(cells[1]), vg,
                           axis, 0, walls[static_cast<std::size_t>(2 * axis)],
                           omega.omega[cells[0]], &block[nv], &block[0]);
        }
        if (bc_hi == BoundaryKind::periodic) {
          std::memcpy(&block[static_cast<std::size_t>(n + 2) * nv],
                      &block[2 * nv], nv * sizeof(double));
          std::memcpy(&block[static_cast<std::size_t>(n + 3) * nv],
                      &block[3 * nv], nv * sizeof(double));
        } else {
          fill_wall_ghosts(
              bc_hi, g.slice(cells[static_cast<std::size_t>(n - 1)]),
              g.slice(cells[static_cast<std::size_t>(n - 2)]), vg, axis, 1,
              walls[static_cast<std::size_t>(2 * axis + 1)],
              omega.omega[cells[static_cast<std::size_t>(n - 1)]],
              &block[static_cast<std::size_t>(n + 2) * nv],
              &block[static_cast<std::size_t>(n + 3) * nv]);
        }
        // Step 2: face speeds omega_face * xi_a.
        for (int f = 0; f <= n; ++f) {
          double w;
          if (f == 0) {
            w = (bc_lo == BoundaryKind::periodic)
                    ? 0.5 * (omega.omega[cells[static_cast<std::size_t>(n - 1)]] +
                             omega.omega[cells[0]])
                    : omega.omega[cells[0]];
          } else if (f == n) {
            w = (bc_hi == BoundaryKind::periodic)
                    ? 0.5 * (omega.omega[cells[static_cast<std::size_t>(n - 1)]] +
                             omega.omega[cells[0]])
                    : omega.omega[cells[static_cast<std::size_t>(n - 1)]];
          } else {
            w = 0.5 * (omega.omega[cells[static_cast<std::size_t>(f - 1)]] +
                       omega.omega[cells[static_cast<std::size_t>(f)]]);
          }
          om_face[static_cast<std::size_t>(f)] = w;
        }
        // Step 3: fluxes, then the conservative update.
        for (int f = 0; f <= n; ++f) {
          const double w = om_face[static_cast<std::size_t>(f)];
          double* Fr = &flux[static_cast<std::size_t>(f) * nv];
          const bool boundary = (f == 0 || f == n);
          const LineEnd end = (f == 0) ? end_lo : end_hi;
          if (boundary && end == LineEnd::wall_first_order) {
            const double* up_lo = &block[static_cast<std::size_t>(f + 1) * nv];
            const double* up_hi = &block[static_cast<std::size_t>(f + 2) * nv];
            for (std::size_t k = 0; k < nv; ++k) {
              const double s = w * xi_a[k];
              Fr[k] = s * (s >= 0.0 ? up_lo[k] : up_hi[k]);
            }
          } else {
            for (std::size_t k = 0; k < nv; ++k) {
              const double s = w * xi_a[k];
              const double nu = std::abs(s) * dti;
              const double corr = 0.5 * std::abs(s) * (1.0 - nu);
              const double* fm1 = &block[static_cast<std::size_t>(f) * nv];
              const double* f0 = fm1 + nv;
              const double* f1 = f0 + nv;
              const double* f2 = f1 + nv;
              const double d = f1[k] - f0[k];
              Fr[k] = (s >= 0.0)
                          ? s * f0[k] + corr * van_leer(f0[k] - fm1[k], d)
                          : s * f1[k] + corr * van_leer(f2[k] - f1[k], d);
            }
          }
        }
        for (int i = 0; i < n; ++i) {
          double* dst = g.slice(cells[static_cast<std::size_t>(i)]).data();
          const double* Flo = &flux[static_cast<std::size_t>(i) * nv];
          const double* Fhi = Flo + nv;
          for (std::size_t k = 0; k < nv; ++k)
            dst[k] -= dti * (Fhi[k] - Flo[k]);
        }
      }
    };
    parallel_for(pool, static_cast<std::size_t>(n_lines), body);
  }
}

void transport_drift(DistributionField& g, const ScalingField& omega,
                     double dt, const ThreadPool* pool) {
  const SpatialGrid& xg = g.xgrid();
  const VelocityGrid& vg = g.vgrid();
  const int dx = xg.dim();
  const int dv = vg.dim();
  const std::size_t cells = xg.size();

  auto body = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> fext, speed, out;
    for (std::size_t c = lo; c < hi; ++c) {
      const double rate = omega.domega_dt[c] / omega.omega[c];
      double* S = g.slice(c).data();
      for (int axis = 0; axis < dv; ++axis) {
        const int n = vg.n(axis);
        const std::size_t stride = vg.stride(axis);
        const double dxi = vg.spacing(axis);
        const double dti = dt / dxi;
        fext.assign(static_cast<std::size_t>(n) + 4, 0.0);
        speed.assign(static_cast<std::size_t>(n) + 1, 0.0);
        out.resize(static_cast<std::size_t>(n));
        const std::size_t n_lines = vg.size() / static_cast<std::size_t>(n);
        for (std::size_t line = 0; line < n_lines; ++line) {
          // Flat offset of the line's first element: expand `line` into the
          // other-axes odometer around `axis`.
          std::size_t rem = line;
          std::size_t base = 0;
          std::array<double, 3> xi{0.0, 0.0, 0.0};
          for (int b = dv - 1; b >= 0; --b) {
            if (b == axis) continue;
            const std::size_t nb = static_cast<std::size_t>(vg.n(b));
            const std::size_t ib = rem % nb;
            rem /= nb;
            base += ib * vg.stride(b);
            xi[static_cast<std::size_t>(b)] = vg.node(b, static_cast<int>(ib));
          }
          // mu without the sweep-axis contribution of xi . grad omega.
          double mu0 = rate;
          for (int b = 0; b < dx; ++b)
            if (b != axis)
              mu0 += xi[static_cast<std::size_t>(b)] * omega.grad_at(c, b);
          const double ga =
              (axis < dx) ? omega.grad_at(c, axis) : 0.0;
          for (int f = 0; f <= n; ++f) {
            const double xi_face = -vg.extent() + f * dxi;
            const double mu = mu0 + ga * xi_face;
            speed[static_cast<std::size_t>(f)] = -mu * xi_face;
          }
          for (int i = 0; i < n; ++i)
            fext[static_cast<std::size_t>(i) + 2] =
                S[base + static_cast<std::size_t>(i) * stride];
          advect_line(fext, speed, dti, out, LineEnd::zero_flux,
                      LineEnd::zero_flux);
          for (int i = 0; i < n; ++i)
            S[base + static_cast<std::size_t>(i) * stride] =
                out[static_cast<std::size_t>(i)];
        }
      }
    }
  };
  parallel_for(pool, cells, body);
}

double drift_cfl_rate(const ScalingField& omega, const VelocityGrid& grid) {
  const int dx = omega.grid().dim();
  const double V = grid.extent();
  double rate = 0.0;
  for (std::size_t c = 0; c < omega.grid().size(); ++c) {
    double mu = std::abs(omega.domega_dt[c] / omega.omega[c]);
    for (int b = 0; b < dx; ++b) mu += V * std::abs(omega.grad_at(c, b));
    rate = std::max(rate, mu);
  }
  double inv_dxi = 0.0;
  for (int a = 0; a < grid.dim(); ++a)
    inv_dxi = std::max(inv_dxi, 1.0 / grid.spacing(a));
  return rate * V * inv_dxi;
}

double spatial_cfl_rate(const ScalingField& omega, const VelocityGrid& grid) {
  double om_max = 0.0;
  for (double w : omega.omega) om_max = std::max(om_max, w);
  double inv_dx = 0.0;
  const SpatialGrid& xg = omega.grid();
  for (int a = 0; a < xg.dim(); ++a)
    if (xg.cells(a) > 1) inv_dx = std::max(inv_dx, 1.0 / xg.spacing(a));
  return om_max * grid.extent() * inv_dx;
}

}  // namespace kinrescale
