#include "kinrescale/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kinrescale/errors.hpp"

namespace kinrescale {

namespace {

constexpr double kOmegaFloor = 1e-6;

// Per-cell rates of change for every conserved component.
struct Rhs {
  std::vector<double> rho;
  std::vector<double> m;
  std::vector<double> E;

  void reset(std::size_t cells, int dv) {
    rho.assign(cells, 0.0);
    m.assign(cells * static_cast<std::size_t>(dv), 0.0);
    E.assign(cells, 0.0);
  }
};

// Fifth-order WENO-Z face value from the left-biased quintet
// (i-2, i-1, i, i+1, i+2) at the face i+1/2.
double weno_face(double f0, double f1, double f2, double f3, double f4) {
  const double d0 = f0 - 2.0 * f1 + f2;
  const double d1 = f1 - 2.0 * f2 + f3;
  const double d2 = f2 - 2.0 * f3 + f4;
  const double b0 = (13.0 / 12.0) * d0 * d0 + 0.25 * std::pow(f0 - 4.0 * f1 + 3.0 * f2, 2);
  const double b1 = (13.0 / 12.0) * d1 * d1 + 0.25 * std::pow(f1 - f3, 2);
  const double b2 = (13.0 / 12.0) * d2 * d2 + 0.25 * std::pow(3.0 * f2 - 4.0 * f3 + f4, 2);
  const double tau = std::abs(b0 - b2);
  const double r0 = tau / (b0 + 1e-40);
  const double r1 = tau / (b1 + 1e-40);
  const double r2 = tau / (b2 + 1e-40);
  const double a0 = 0.1 * (1.0 + r0 * r0);
  const double a1 = 0.6 * (1.0 + r1 * r1);
  const double a2 = 0.3 * (1.0 + r2 * r2);
  const double q0 = (2.0 * f0 - 7.0 * f1 + 11.0 * f2) / 6.0;
  const double q1 = (-f1 + 5.0 * f2 + 2.0 * f3) / 6.0;
  const double q2 = (2.0 * f2 + 5.0 * f3 - f4) / 6.0;
  return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2);
}

void check_state(const HydroState& s, const char* where) {
  const int dv = s.dv();
  const std::size_t cells = s.rho.size();
  for (std::size_t c = 0; c < cells; ++c) {
    double ke = 0.0;
    for (int k = 0; k < dv; ++k) {
      const double mc = s.m[c * static_cast<std::size_t>(dv) + k];
      ke += mc * mc;
    }
    const double eint = s.E[c] - 0.5 * ke / s.rho[c];
    if (!(s.rho[c] > 0.0) || !(eint >= 0.0) || !std::isfinite(s.E[c])) {
      throw PositivityError(std::string("hydro ") + where +
                            " lost positive density or internal energy");
    }
  }
}

// Accumulates -div F (all axes) plus the source into `out`; the state must
// already be physical. Global Lax-Friedrichs splitting per axis.
void eval_rhs(const HydroState& s, const SourceSpec& src,
              const std::array<HydroWall, 4>& walls, Rhs& out) {
  const SpatialGrid& grid = s.grid();
  const int dx = grid.dim();
  const int dv = s.dv();
  const int ncomp = dv + 2;
  const std::size_t cells = grid.size();
  const double gamma_eff = 1.0 + 2.0 / dv;
  out.reset(cells, dv);

  thread_local std::vector<double> gr, gm, gE, fp, fm, fhat;

  for (int a = 0; a < dx; ++a) {
    const int n = grid.cells(a);
    if (n < 2) continue;
    const double inv_dx = 1.0 / grid.spacing(a);
    const HydroWall lo = walls[static_cast<std::size_t>(a) * 2];
    const HydroWall hi = walls[static_cast<std::size_t>(a) * 2 + 1];

    // Axis-global wave speed bound for the flux split.
    double alpha = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const double T = s.temperature(c);
      if (!(s.rho[c] > 0.0) || !(T >= 0.0) || !std::isfinite(T)) {
        throw PositivityError("hydro flux evaluation on an unphysical state");
      }
      alpha = std::max(alpha, std::abs(s.velocity(c, a)) + std::sqrt(gamma_eff * T));
    }

    const std::size_t ng = static_cast<std::size_t>(n) + 6;
    gr.resize(ng);
    gm.resize(ng * static_cast<std::size_t>(dv));
    gE.resize(ng);
    fp.resize(ng * static_cast<std::size_t>(ncomp));
    fm.resize(ng * static_cast<std::size_t>(ncomp));
    fhat.resize(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(ncomp));

    const int nlines = (dx == 2) ? grid.cells(1 - a) : 1;
    const std::size_t stride = (a == 0 && dx == 2) ? static_cast<std::size_t>(grid.cells(1)) : 1;

    for (int line = 0; line < nlines; ++line) {
      const std::size_t base =
          (a == 0) ? static_cast<std::size_t>(line)
                   : static_cast<std::size_t>(line) * static_cast<std::size_t>(grid.cells(1));

      auto load = [&](int cell) {
        HydroCellState st;
        const std::size_t c = base + static_cast<std::size_t>(cell) * stride;
        st.rho = s.rho[c];
        for (int k = 0; k < dv; ++k) st.m[k] = s.m[c * static_cast<std::size_t>(dv) + k];
        st.E = s.E[c];
        return st;
      };
      auto store_ghost = [&](std::size_t t, const HydroCellState& st) {
        gr[t] = st.rho;
        for (int k = 0; k < dv; ++k) gm[t * static_cast<std::size_t>(dv) + k] = st.m[k];
        gE[t] = st.E;
      };

      for (int k = 0; k < n; ++k) store_ghost(static_cast<std::size_t>(k) + 3, load(k));
      for (int d = 1; d <= 3; ++d) {
        // Lower ghosts occupy indices 2, 1, 0 for depths 1, 2, 3.
        if (lo.bc == HydroBc::periodic) {
          store_ghost(static_cast<std::size_t>(3 - d), load(n - std::min(d, n)));
        } else {
          const int mc = (lo.bc == HydroBc::zero_gradient) ? 0 : std::min(d - 1, n - 1);
          store_ghost(static_cast<std::size_t>(3 - d),
                      hydro_ghost_state(load(mc), lo.bc, lo.T_w, a, dv));
        }
        if (hi.bc == HydroBc::periodic) {
          store_ghost(static_cast<std::size_t>(n + 2 + d), load(std::min(d, n) - 1));
        } else {
          const int mc = (hi.bc == HydroBc::zero_gradient) ? n - 1 : std::max(n - d, 0);
          store_ghost(static_cast<std::size_t>(n + 2 + d),
                      hydro_ghost_state(load(mc), hi.bc, hi.T_w, a, dv));
        }
      }

      // Split fluxes at every ghosted point, component-major layout.
      for (std::size_t t = 0; t < ng; ++t) {
        const double rho = gr[t];
        const double* mv = &gm[t * static_cast<std::size_t>(dv)];
        double ke = 0.0;
        for (int k = 0; k < dv; ++k) ke += mv[k] * mv[k];
        const double p = (2.0 * gE[t] - ke / rho) / dv;
        const double ua = mv[a] / rho;

        double U[5], F[5];
        U[0] = rho;
        F[0] = mv[a];
        for (int k = 0; k < dv; ++k) {
          U[1 + k] = mv[k];
          F[1 + k] = mv[k] * ua + ((k == a) ? p : 0.0);
        }
        U[1 + dv] = gE[t];
        F[1 + dv] = (gE[t] + p) * ua;
        for (int q = 0; q < ncomp; ++q) {
          fp[static_cast<std::size_t>(q) * ng + t] = 0.5 * (F[q] + alpha * U[q]);
          fm[static_cast<std::size_t>(q) * ng + t] = 0.5 * (F[q] - alpha * U[q]);
        }
      }

      for (int q = 0; q < ncomp; ++q) {
        const double* p5 = &fp[static_cast<std::size_t>(q) * ng];
        const double* m5 = &fm[static_cast<std::size_t>(q) * ng];
        double* fh = &fhat[static_cast<std::size_t>(q) * static_cast<std::size_t>(n + 1)];
        for (int fi = 0; fi <= n; ++fi) {
          // Left-biased quintet for f+, mirrored quintet for f-.
          fh[fi] = weno_face(p5[fi], p5[fi + 1], p5[fi + 2], p5[fi + 3], p5[fi + 4]) +
                   weno_face(m5[fi + 5], m5[fi + 4], m5[fi + 3], m5[fi + 2], m5[fi + 1]);
        }
      }

      const double* fh_rho = &fhat[0];
      const double* fh_E = &fhat[static_cast<std::size_t>(1 + dv) * static_cast<std::size_t>(n + 1)];
      for (int k = 0; k < n; ++k) {
        const std::size_t c = base + static_cast<std::size_t>(k) * stride;
        out.rho[c] -= (fh_rho[k + 1] - fh_rho[k]) * inv_dx;
        out.E[c] -= (fh_E[k + 1] - fh_E[k]) * inv_dx;
        for (int q = 0; q < dv; ++q) {
          const double* fh_m = &fhat[static_cast<std::size_t>(1 + q) * static_cast<std::size_t>(n + 1)];
          out.m[c * static_cast<std::size_t>(dv) + q] -= (fh_m[k + 1] - fh_m[k]) * inv_dx;
        }
      }
    }
  }

  if (src.kind == SourceSpec::Kind::granular && src.K != 0.0) {
    for (std::size_t c = 0; c < cells; ++c) {
      const double T = std::max(s.temperature(c), 0.0);
      out.E[c] -= src.K * s.rho[c] * s.rho[c] * T * std::sqrt(T);
    }
  }
}

}  // namespace

HydroState::HydroState(const SpatialGrid& grid, int dv) : grid_(grid), dv_(dv) {
  if (dv < 1 || dv > 3) throw ConfigError("hydro dv outside [1,3]");
  rho.assign(grid_.size(), 0.0);
  m.assign(grid_.size() * static_cast<std::size_t>(dv), 0.0);
  E.assign(grid_.size(), 0.0);
}

double HydroState::temperature(std::size_t cell) const {
  double ke = 0.0;
  for (int k = 0; k < dv_; ++k) {
    const double mc = m[cell * static_cast<std::size_t>(dv_) + k];
    ke += mc * mc;
  }
  return (2.0 * E[cell] - ke / rho[cell]) / (dv_ * rho[cell]);
}

HydroWall hydro_wall_from(BoundaryKind kind, double T_w) {
  switch (kind) {
    case BoundaryKind::periodic:
      return {HydroBc::periodic, T_w};
    case BoundaryKind::specular:
      return {HydroBc::slip, T_w};
    case BoundaryKind::diffusive:
      return {HydroBc::thermal, T_w};
    case BoundaryKind::absorbing:
      return {HydroBc::zero_gradient, T_w};
  }
  throw ConfigError("unknown boundary kind");
}

HydroCellState hydro_ghost_state(const HydroCellState& mirror, HydroBc bc, double T_w,
                                 int axis, int dv) {
  HydroCellState g = mirror;
  switch (bc) {
    case HydroBc::periodic:
    case HydroBc::zero_gradient:
      return g;
    case HydroBc::slip:
      g.m[axis] = -g.m[axis];
      return g;
    case HydroBc::thermal: {
      double ke = 0.0;
      for (int k = 0; k < dv; ++k) {
        g.m[k] = -g.m[k];
        ke += g.m[k] * g.m[k];
      }
      g.E = 0.5 * dv * g.rho * T_w + 0.5 * ke / g.rho;
      return g;
    }
  }
  throw ConfigError("unknown hydro boundary kind");
}

double hydro_max_speed(const HydroState& s) {
  const SpatialGrid& grid = s.grid();
  const double gamma_eff = 1.0 + 2.0 / s.dv();
  double sp = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const double cs = std::sqrt(gamma_eff * std::max(s.temperature(c), 0.0));
    for (int a = 0; a < grid.dim(); ++a) {
      sp = std::max(sp, std::abs(s.velocity(c, a)) + cs);
    }
  }
  return sp;
}

HydroState weno5_step(const HydroState& s, double dt, const SourceSpec& src,
                      const std::array<HydroWall, 4>& walls, HydroRates* rates) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw SolverError("hydro step needs dt > 0");
  const std::size_t cells = s.rho.size();
  const std::size_t mcount = s.m.size();

  Rhs l0, l1, l2;
  eval_rhs(s, src, walls, l0);

  HydroState u1 = s;
  for (std::size_t c = 0; c < cells; ++c) u1.rho[c] += dt * l0.rho[c];
  for (std::size_t c = 0; c < mcount; ++c) u1.m[c] += dt * l0.m[c];
  for (std::size_t c = 0; c < cells; ++c) u1.E[c] += dt * l0.E[c];
  check_state(u1, "stage 1");
  eval_rhs(u1, src, walls, l1);

  HydroState u2 = s;
  for (std::size_t c = 0; c < cells; ++c) {
    u2.rho[c] = 0.75 * s.rho[c] + 0.25 * (u1.rho[c] + dt * l1.rho[c]);
  }
  for (std::size_t c = 0; c < mcount; ++c) {
    u2.m[c] = 0.75 * s.m[c] + 0.25 * (u1.m[c] + dt * l1.m[c]);
  }
  for (std::size_t c = 0; c < cells; ++c) {
    u2.E[c] = 0.75 * s.E[c] + 0.25 * (u1.E[c] + dt * l1.E[c]);
  }
  check_state(u2, "stage 2");
  eval_rhs(u2, src, walls, l2);

  // Assemble the state from the effective rates so that
  // state_new = state_old + dt * rate holds bit-exactly.
  HydroState out = s;
  HydroRates eff;
  eff.drho_dt.resize(cells);
  eff.dE_dt.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    eff.drho_dt[c] = (l0.rho[c] + l1.rho[c] + 4.0 * l2.rho[c]) / 6.0;
    out.rho[c] = s.rho[c] + dt * eff.drho_dt[c];
  }
  for (std::size_t c = 0; c < mcount; ++c) {
    out.m[c] = s.m[c] + dt * (l0.m[c] + l1.m[c] + 4.0 * l2.m[c]) / 6.0;
  }
  for (std::size_t c = 0; c < cells; ++c) {
    eff.dE_dt[c] = (l0.E[c] + l1.E[c] + 4.0 * l2.E[c]) / 6.0;
    out.E[c] = s.E[c] + dt * eff.dE_dt[c];
  }
  check_state(out, "step");
  if (rates != nullptr) *rates = std::move(eff);
  return out;
}

void compute_omega(const HydroState& s, ScalingField& field) {
  const std::size_t cells = s.rho.size();
  const int dv = s.dv();
  for (std::size_t c = 0; c < cells; ++c) {
    double w = std::sqrt(2.0 * s.E[c] / (dv * s.rho[c]));
    if (!(w > kOmegaFloor)) w = kOmegaFloor;
    field.omega[c] = w;
  }
}

void omega_derivatives(ScalingField& field, const HydroState& old_state,
                       const HydroRates& rates) {
  const SpatialGrid& grid = field.grid();
  const int dx = grid.dim();
  const int dv = old_state.dv();
  const std::size_t cells = grid.size();

  for (std::size_t c = 0; c < cells; ++c) {
    const double rho = old_state.rho[c];
    const double om2 = 2.0 * old_state.E[c] / (dv * rho);
    const double om = std::sqrt(om2);
    if (!(om > kOmegaFloor) || !std::isfinite(om)) {
      field.domega_dt[c] = 0.0;
    } else {
      field.domega_dt[c] =
          (rates.dE_dt[c] - 0.5 * om2 * dv * rates.drho_dt[c]) / (dv * rho * om);
    }
  }

  for (int a = 0; a < dx; ++a) {
    const int n = grid.cells(a);
    const double inv_h = 1.0 / grid.spacing(a);
    const bool wrap = grid.bc(a, 0) == BoundaryKind::periodic &&
                      grid.bc(a, 1) == BoundaryKind::periodic;
    const int nlines = (dx == 2) ? grid.cells(1 - a) : 1;
    const std::size_t stride = (a == 0 && dx == 2) ? static_cast<std::size_t>(grid.cells(1)) : 1;

    for (int line = 0; line < nlines; ++line) {
      const std::size_t base =
          (a == 0) ? static_cast<std::size_t>(line)
                   : static_cast<std::size_t>(line) * static_cast<std::size_t>(grid.cells(1));
      auto om = [&](int i) { return field.omega[base + static_cast<std::size_t>(i) * stride]; };
      auto put = [&](int i, double v) {
        field.grad[(base + static_cast<std::size_t>(i) * stride) * static_cast<std::size_t>(dx) +
                   static_cast<std::size_t>(a)] = v;
      };

      if (n == 1) {
        put(0, 0.0);
        continue;
      }
      if (wrap) {
        auto omw = [&](int i) { return om(((i % n) + n) % n); };
        for (int i = 0; i < n; ++i) {
          double d;
          if (n >= 5) {
            d = (omw(i - 2) - 8.0 * omw(i - 1) + 8.0 * omw(i + 1) - omw(i + 2)) / 12.0;
          } else {
            d = 0.5 * (omw(i + 1) - omw(i - 1));
          }
          put(i, d * inv_h);
        }
        continue;
      }
      if (n >= 5) {
        put(0, (-25.0 * om(0) + 48.0 * om(1) - 36.0 * om(2) + 16.0 * om(3) - 3.0 * om(4)) /
                   12.0 * inv_h);
        put(1, (-3.0 * om(0) - 10.0 * om(1) + 18.0 * om(2) - 6.0 * om(3) + om(4)) / 12.0 *
                   inv_h);
        for (int i = 2; i <= n - 3; ++i) {
          put(i, (om(i - 2) - 8.0 * om(i - 1) + 8.0 * om(i + 1) - om(i + 2)) / 12.0 * inv_h);
        }
        put(n - 2, (3.0 * om(n - 1) + 10.0 * om(n - 2) - 18.0 * om(n - 3) + 6.0 * om(n - 4) -
                    om(n - 5)) /
                       12.0 * inv_h);
        put(n - 1, (25.0 * om(n - 1) - 48.0 * om(n - 2) + 36.0 * om(n - 3) -
                    16.0 * om(n - 4) + 3.0 * om(n - 5)) /
                       12.0 * inv_h);
      } else {
        for (int i = 0; i < n; ++i) {
          double d;
          if (i == 0) {
            d = (n >= 3) ? (-3.0 * om(0) + 4.0 * om(1) - om(2)) * 0.5 : om(1) - om(0);
          } else if (i == n - 1) {
            d = (n >= 3) ? (3.0 * om(n - 1) - 4.0 * om(n - 2) + om(n - 3)) * 0.5
                         : om(n - 1) - om(n - 2);
          } else {
            d = 0.5 * (om(i + 1) - om(i - 1));
          }
          put(i, d * inv_h);
        }
      }
    }
  }
}

}  // namespace kinrescale
