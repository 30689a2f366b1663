#include "kinrescale/driver.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kinrescale/errors.hpp"
#include "kinrescale/moments.hpp"

namespace kinrescale {

namespace {

// Upper bound on the per-node update rate of the collision or relaxation
// stage in one cell, used both for sub-cycling and for dt suggestion.
double stiffness_rate(const SimState& state, const KineticSetup& setup,
                      std::size_t cell, const MomentSet& m) {
  const VelocityGrid& vg = state.g.vgrid();
  const double om = state.omega.omega[cell];
  switch (setup.kind) {
    case OperatorKind::none:
      return 0.0;
    case OperatorKind::elastic:
    case OperatorKind::inelastic: {
      const double scale =
          collision_scale(om, setup.kind, setup.collision.lambda) / setup.eps;
      const double bs = setup.collision.cross_section(vg.dim()) * sphere_area(vg.dim());
      const double two_r = 2.0 * truncation_radius(vg.extent());
      return scale * bs * std::max(m.rho, 0.0) * std::pow(two_r, setup.collision.lambda);
    }
    case OperatorKind::esbgk: {
      if (m.degenerate || m.T <= 0.0) {
        return setup.esbgk.tau(setup.esbgk.tau_on_density ? m.rho : 0.0) / setup.eps;
      }
      const double x = setup.esbgk.tau_on_density ? m.rho : om * om * m.pressure();
      const double tau_val = setup.esbgk.tau(x);
      // Drag advection rate: coefficient times the largest face speed over
      // the node spacing.
      double h_min = vg.spacing(0);
      for (int a = 1; a < vg.dim(); ++a) h_min = std::min(h_min, vg.spacing(a));
      double u_max = 0.0;
      for (int a = 0; a < vg.dim(); ++a) u_max = std::max(u_max, std::abs(m.u[a]));
      const double coef = setup.esbgk.C * om * m.rho * std::sqrt(m.T);
      const double drag_rate = coef * (vg.extent() + u_max) / h_min;
      return (tau_val + drag_rate) / setup.eps;
    }
  }
  return 0.0;
}

void collision_stage(SimState& state, const KineticSetup& setup, double dt,
                     const ThreadPool* pool) {
  if (setup.kind == OperatorKind::none) return;
  const VelocityGrid& vg = state.g.vgrid();
  const std::size_t cells = state.g.xgrid().size();
  const std::size_t nv = vg.size();

  if (setup.kind == OperatorKind::elastic || setup.kind == OperatorKind::inelastic) {
    if (!setup.kernel) throw SolverError("spectral kernel missing from the setup");
    if (!(setup.kernel->grid() == vg)) {
      throw SolverError("spectral kernel grid does not match the state");
    }
  }

  parallel_for(pool, cells, [&](std::size_t begin, std::size_t end) {
    thread_local std::vector<double> qbuf;
    qbuf.resize(nv);
    for (std::size_t cell = begin; cell < end; ++cell) {
      auto slice = state.g.slice(cell);
      const double om = state.omega.omega[cell];
      MomentSet m = moments(slice, vg);
      const double rate = stiffness_rate(state, setup, cell, m);
      const int nsub = (dt * rate > 0.5)
                           ? static_cast<int>(std::ceil(dt * rate / 0.5))
                           : 1;
      const double dts = dt / nsub;

      if (setup.kind == OperatorKind::esbgk) {
        for (int s = 0; s < nsub; ++s) {
          if (s > 0) m = moments(slice, vg);
          apply_esbgk_rescaled(slice, om, m, setup.esbgk, vg, qbuf);
          const double w = dts / setup.eps;
          for (std::size_t j = 0; j < nv; ++j) slice[j] += w * qbuf[j];
        }
      } else {
        const double scale =
            collision_scale(om, setup.kind, setup.collision.lambda) / setup.eps;
        for (int s = 0; s < nsub; ++s) {
          apply(*setup.kernel, slice, qbuf);
          const double w = dts * scale;
          for (std::size_t j = 0; j < nv; ++j) slice[j] += w * qbuf[j];
        }
      }
    }
  });
}

std::array<HydroWall, 4> moment_walls(const SimState& state, const KineticSetup& setup) {
  const SpatialGrid& xg = state.g.xgrid();
  std::array<HydroWall, 4> hw{};
  for (int a = 0; a < 2; ++a) {
    for (int side = 0; side < 2; ++side) {
      const std::size_t idx = static_cast<std::size_t>(a) * 2 + static_cast<std::size_t>(side);
      const BoundaryKind bk = (a < xg.dim()) ? xg.bc(a, side) : BoundaryKind::periodic;
      hw[idx] = hydro_wall_from(bk, setup.walls[idx].T_w);
    }
  }
  return hw;
}

}  // namespace

SimState::SimState(const SpatialGrid& xgrid, const VelocityGrid& vgrid)
    : g(xgrid, vgrid, Variable::rescaled),
      hydro(xgrid, vgrid.dim()),
      omega(xgrid) {}

void sync_hydro_from_kinetic(SimState& state) {
  const VelocityGrid& vg = state.g.vgrid();
  const int dv = vg.dim();
  const std::size_t cells = state.g.xgrid().size();
  for (std::size_t c = 0; c < cells; ++c) {
    const MomentSet m = moments(state.g.slice(c), vg);
    const double om = state.omega.omega[c];
    state.hydro.rho[c] = m.rho;
    for (int k = 0; k < dv; ++k) {
      state.hydro.m[c * static_cast<std::size_t>(dv) + k] = om * m.rho * m.u[k];
    }
    state.hydro.E[c] = om * om * m.E;
  }
}

DiagnosticsRecord diagnose(const SimState& state) {
  const VelocityGrid& vg = state.g.vgrid();
  const SpatialGrid& xg = state.g.xgrid();
  const int dv = vg.dim();
  const std::size_t cells = xg.size();
  const double vol_x = xg.cell_volume();

  DiagnosticsRecord r;
  r.t = state.t;
  std::vector<double> rho_cells(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const MomentSet m = moments(state.g.slice(c), vg);
    const double om = state.omega.omega[c];
    rho_cells[c] = m.rho;
    r.mass += m.rho * vol_x;
    for (int k = 0; k < dv; ++k) r.momentum[k] += om * m.rho * m.u[k] * vol_x;
    r.energy += om * om * m.E * vol_x;
  }
  const double mean = r.mass / (vol_x * static_cast<double>(cells));
  for (std::size_t c = 0; c < cells; ++c) {
    r.l1_density_dev += std::abs(rho_cells[c] - mean) * vol_x;
  }
  return r;
}

double suggest_dt(const SimState& state, const KineticSetup& setup, double max_dt) {
  const VelocityGrid& vg = state.g.vgrid();
  const SpatialGrid& xg = state.g.xgrid();
  double dt = max_dt;

  bool has_space = false;
  double dx_min = 0.0;
  for (int a = 0; a < xg.dim(); ++a) {
    if (xg.cells(a) > 1) {
      dx_min = has_space ? std::min(dx_min, xg.spacing(a)) : xg.spacing(a);
      has_space = true;
    }
  }
  if (has_space) {
    const double sp = hydro_max_speed(state.hydro);
    if (sp > 0.0) dt = std::min(dt, 0.45 * dx_min / sp);
    const double srate = spatial_cfl_rate(state.omega, vg);
    if (srate > 0.0) dt = std::min(dt, 0.9 / srate);
  }
  const double drate = drift_cfl_rate(state.omega, vg);
  if (drate > 0.0) dt = std::min(dt, 0.9 / drate);

  if (setup.kind != OperatorKind::none) {
    double crate = 0.0;
    const std::size_t cells = xg.size();
    for (std::size_t c = 0; c < cells; ++c) {
      const MomentSet m = moments(state.g.slice(c), vg);
      crate = std::max(crate, stiffness_rate(state, setup, c, m));
    }
    if (crate > 0.0) dt = std::min(dt, 0.5 / crate);
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw SolverError("no stable time step at the current state");
  }
  return dt;
}

void step(SimState& state, const KineticSetup& setup, double dt, const ThreadPool* pool) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw SolverError("step needs dt > 0");

  // Stage 1: moment system and scale derivatives. Positivity failures retry
  // with halved sub-steps; the effective rates stay exact for the full dt.
  const std::array<HydroWall, 4> hw = moment_walls(state, setup);
  HydroState hnew = state.hydro;
  HydroRates rates;
  int halvings = 0;
  for (;;) {
    try {
      const int nsub = 1 << halvings;
      const double dts = dt / nsub;
      HydroState h = state.hydro;
      HydroRates acc;
      acc.drho_dt.assign(state.hydro.rho.size(), 0.0);
      acc.dE_dt.assign(state.hydro.rho.size(), 0.0);
      for (int s = 0; s < nsub; ++s) {
        HydroRates r;
        h = weno5_step(h, dts, setup.source, hw, &r);
        for (std::size_t c = 0; c < acc.drho_dt.size(); ++c) {
          acc.drho_dt[c] += r.drho_dt[c] / nsub;
          acc.dE_dt[c] += r.dE_dt[c] / nsub;
        }
      }
      hnew = std::move(h);
      rates = std::move(acc);
      break;
    } catch (const PositivityError&) {
      if (++halvings > 5) throw;
    }
  }
  compute_omega(hnew, state.omega);
  omega_derivatives(state.omega, state.hydro, rates);
  state.hydro = std::move(hnew);

  // Stage 2: spatial transport at speed omega xi.
  transport_spatial(state.g, state.omega, setup.walls, dt,
                    state.step_count % 2 == 1, pool);

  // Stage 3: velocity drift from the scale derivatives.
  transport_drift(state.g, state.omega, dt, pool);

  // Stage 4: collision or relaxation.
  collision_stage(state, setup, dt, pool);

  state.t += dt;
  state.step_count += 1;
}

}  // namespace kinrescale
