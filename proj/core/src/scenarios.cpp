#include "kinrescale/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "kinrescale/errors.hpp"
#include "kinrescale/io.hpp"
#include "kinrescale/moments.hpp"
#include "kinrescale/rng.hpp"

namespace kinrescale {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Record boundaries: multiples of record_dt, the mark times, and t_end,
// sorted and deduplicated. Every boundary is landed on exactly.
std::vector<double> record_boundaries(double t_end, double record_dt,
                                      std::span<const double> marks, double growth = 1.0) {
  std::vector<double> b;
  const double tol = 1e-9 * std::max(record_dt, 1.0);
  if (growth > 1.0) {
    double t = 0.0, d = record_dt;
    while (t + d < t_end + tol) {
      t += d;
      b.push_back(t);
      d *= growth;
    }
  } else {
    for (int k = 1; k * record_dt < t_end + tol; ++k) b.push_back(k * record_dt);
  }
  for (double m : marks)
    if (m > tol && m < t_end + tol) b.push_back(m);
  b.push_back(t_end);
  std::sort(b.begin(), b.end());
  std::vector<double> out;
  for (double v : b)
    if (out.empty() || v - out.back() > tol) out.push_back(std::min(v, t_end));
  return out;
}

int mark_index(double t, std::span<const double> marks) {
  for (std::size_t i = 0; i < marks.size(); ++i)
    if (std::abs(t - marks[i]) <= 1e-9 * std::max(1.0, marks[i])) return static_cast<int>(i);
  return -1;
}

OperatorKind kind_from_string(const std::string& s) {
  if (s == "none") return OperatorKind::none;
  if (s == "elastic") return OperatorKind::elastic;
  if (s == "inelastic") return OperatorKind::inelastic;
  if (s == "esbgk") return OperatorKind::esbgk;
  throw ConfigError("unknown collision kind '" + s + "'");
}

void fill_uniform_maxwellian(SimState& state, std::span<const double> rho_cells, double T) {
  const VelocityGrid& vg = state.g.vgrid();
  const int dv = vg.dim();
  std::vector<double> base(vg.size());
  eval_maxwellian(base, vg, 1.0, {0.0, 0.0, 0.0}, T);
  for (std::size_t c = 0; c < state.g.xgrid().size(); ++c) {
    auto slice = state.g.slice(c);
    const double rho = rho_cells[c];
    for (std::size_t i = 0; i < slice.size(); ++i) slice[i] = rho * base[i];
    state.hydro.rho[c] = rho;
    for (int a = 0; a < dv; ++a) state.hydro.m[c * dv + a] = 0.0;
    state.hydro.E[c] = 0.5 * dv * rho * T;
  }
  compute_omega(state.hydro, state.omega);
}

std::vector<double> axis0_marginal(std::span<const double> g, const VelocityGrid& vg) {
  const int n0 = vg.n(0);
  const std::size_t block = vg.size() / n0;
  double w = 1.0;
  for (int a = 1; a < vg.dim(); ++a) w *= vg.spacing(a);
  std::vector<double> marg(n0, 0.0);
  for (int k = 0; k < n0; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < block; ++i) s += g[k * block + i];
    marg[k] = s * w;
  }
  return marg;
}

void dump_state(const SimState& state, const std::string& dir) {
  try {
    std::filesystem::create_directories(dir);
    write_snapshot(dir + "/dump_distribution.krsn", state.g);
    write_snapshot(dir + "/dump_hydro.krsn", state.hydro);
    write_snapshot(dir + "/dump_scaling.krsn", state.omega);
  } catch (const std::exception&) {
    // The dump is best-effort; the original failure is the one to report.
  }
}

std::string format_time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

}  // namespace

std::vector<DiagnosticsRecord> march(SimState& state, const KineticSetup& setup,
                                     const MarchOptions& opt, const ThreadPool* pool) {
  const std::vector<double> bounds =
      record_boundaries(opt.t_end, opt.record_dt, opt.mark_times, opt.record_growth);
  std::vector<DiagnosticsRecord> records;
  records.reserve(bounds.size() + 1);
  records.push_back(diagnose(state));
  if (opt.on_record) opt.on_record(state, records.back());

  try {
    for (double b : bounds) {
      while (state.t < b) {
        const double remain = b - state.t;
        double cap = remain;
        if (opt.dt_max > 0.0) cap = std::min(cap, opt.dt_max);
        double dt = suggest_dt(state, setup, cap);
        if (dt + 1e-12 * std::max(1.0, b) >= remain) dt = remain;
        if (!(dt > 1e-13 * std::max(1.0, b)))
          throw SolverError("time step collapsed while marching");
        step(state, setup, dt, pool);
      }
      state.t = b;
      records.push_back(diagnose(state));
      if (opt.on_record) opt.on_record(state, records.back());
      const int mi = opt.on_mark ? mark_index(b, opt.mark_times) : -1;
      if (mi >= 0) opt.on_mark(state, static_cast<std::size_t>(mi));
    }
  } catch (const SolverError&) {
    if (!opt.dump_dir.empty()) dump_state(state, opt.dump_dir);
    throw;
  }
  return records;
}

double closure_sink_constant(OperatorKind kind, int dv, double b, double e, double eps) {
  if (e >= 1.0) return 0.0;
  if (kind != OperatorKind::inelastic && kind != OperatorKind::esbgk) return 0.0;
  const double b_eff = b > 0.0 ? b : default_cross_section(dv);
  const double kdv = haff_constant(dv, b_eff);
  if (kind == OperatorKind::inelastic) return (1.0 - e * e) * kdv / (2.0 * eps);
  return (1.0 - e) * kdv / eps;
}

std::string kernel_cache_name(const VelocityGrid& grid, const CollisionParams& params) {
  char buf[128];
  if (params.b > 0.0)
    std::snprintf(buf, sizeof buf, "kernel_dv%d_n%d_V%g_lam%g_e%g_b%g.krsk", grid.dim(),
                  grid.n(0), grid.extent(), params.lambda, params.effective_e(), params.b);
  else
    std::snprintf(buf, sizeof buf, "kernel_dv%d_n%d_V%g_lam%g_e%g.krsk", grid.dim(), grid.n(0),
                  grid.extent(), params.lambda, params.effective_e());
  return buf;
}

std::shared_ptr<const SpectralKernel> obtain_kernel(const VelocityGrid& grid,
                                                    const CollisionParams& params, int quad_order,
                                                    const std::string& cache_dir) {
  std::string path;
  if (!cache_dir.empty()) path = cache_dir + "/" + kernel_cache_name(grid, params);
  if (!path.empty() && std::filesystem::exists(path)) {
    try {
      auto k = std::make_shared<SpectralKernel>(load_kernel(path));
      if (k->grid() == grid && k->lambda() == params.lambda &&
          k->restitution() == params.effective_e())
        return k;
    } catch (const std::exception&) {
      // Unreadable or mismatched cache: fall through and recompute.
    }
  }
  auto k = std::make_shared<SpectralKernel>(precompute_kernel(grid, params, quad_order));
  if (!path.empty()) {
    std::filesystem::create_directories(cache_dir);
    save_kernel(path, *k);
  }
  return k;
}

Simulation make_simulation(const RunConfig& cfg, const std::string& cache_dir) {
  validate_config(cfg);
  SpatialGrid xg(cfg.dx, {cfg.nx[0], cfg.dx == 2 ? cfg.nx[1] : 1},
                 {{{cfg.x_lo[0], cfg.x_hi[0]}, {cfg.x_lo[1], cfg.x_hi[1]}}});
  for (int a = 0; a < cfg.dx; ++a)
    for (int s = 0; s < 2; ++s) xg.set_bc(a, s, boundary_kind_from_string(cfg.bc[2 * a + s]));
  VelocityGrid vg(cfg.dv, cfg.extent, cfg.nv);

  Simulation sim{SimState(xg, vg), KineticSetup{}};
  std::vector<double> rho(xg.size(), 1.0);
  fill_uniform_maxwellian(sim.state, rho, 1.0);

  KineticSetup& setup = sim.setup;
  setup.kind = kind_from_string(cfg.kind);
  setup.eps = cfg.eps;
  if (setup.kind == OperatorKind::elastic || setup.kind == OperatorKind::inelastic) {
    CollisionParams cp;
    cp.kind = setup.kind;
    cp.lambda = cfg.lambda;
    cp.b = cfg.b;
    cp.e = cfg.e;
    cp.eps = cfg.eps;
    cp.validate(cfg.dv);
    setup.collision = cp;
    setup.kernel = obtain_kernel(vg, cp, cfg.quad_order, cache_dir);
  }
  if (setup.kind == OperatorKind::esbgk) {
    EsbgkParams ep;
    ep.nu = cfg.nu;
    ep.tau_a = cfg.tau_a;
    ep.tau_c = cfg.tau_c;
    ep.tau_on_density = cfg.tau_on == "density";
    ep.e = cfg.e;
    ep.C = cfg.e < 1.0
               ? (1.0 - cfg.e) * haff_constant(cfg.dv, default_cross_section(cfg.dv)) / cfg.dv
               : 0.0;
    ep.eps = cfg.eps;
    ep.validate();
    setup.esbgk = ep;
  }
  for (auto& w : setup.walls) w = WallSpec{cfg.alpha, {cfg.u_w, 0.0, 0.0}, cfg.T_w};
  const double K = closure_sink_constant(setup.kind, cfg.dv, cfg.b, cfg.e, cfg.eps);
  if (K > 0.0) setup.source = SourceSpec{SourceSpec::Kind::granular, K};
  return sim;
}

// ---------------------------------------------------------------------------

Test1Result run_test1(const Test1Params& p, const ThreadPool* pool) {
  if (p.mode != "coupled" && p.mode != "uncoupled")
    throw ConfigError("scenario.mode must be coupled or uncoupled");
  const bool coupled = p.mode == "coupled";
  const int dv = p.dv;
  VelocityGrid vg(dv, p.V, p.nv);
  CollisionParams cp;
  cp.kind = p.e < 1.0 ? OperatorKind::inelastic : OperatorKind::elastic;
  cp.e = p.e;
  cp.eps = p.eps;
  cp.validate(dv);
  auto kernel = obtain_kernel(vg, cp, p.quad_order, p.cache_dir);
  const double bS = cp.cross_section(dv) * sphere_area(dv);
  const double kdv = haff_constant(dv, cp.cross_section(dv));
  const double two_r = 2.0 * truncation_radius(p.V);

  SpatialGrid xg = SpatialGrid::homogeneous();
  DistributionField g(xg, vg, Variable::rescaled);
  ScalingField sf(xg);
  {
    // Two half-mass Maxwellians at +-c0 along axis 0, width 1/2: rho = 1,
    // T = 1, strongly non-equilibrium datum.
    const double c0 = std::sqrt(0.5 * dv);
    std::vector<double> bump(vg.size());
    eval_maxwellian(bump, vg, 0.5, {c0, 0.0, 0.0}, 0.5);
    std::copy(bump.begin(), bump.end(), g.slice(0).begin());
    eval_maxwellian(bump, vg, 0.5, {-c0, 0.0, 0.0}, 0.5);
    auto slice = g.slice(0);
    for (std::size_t i = 0; i < bump.size(); ++i) slice[i] += bump[i];
  }

  const MomentSet m0 = moments(g.slice(0), vg);
  const double rho0 = m0.rho;
  const double E0 = m0.E;
  const double T0 = 2.0 * E0 / (dv * rho0);
  // Closed-form quasi-elastic decay from the discrete initial energy.
  const double cdec = (1.0 - p.e * p.e) * kdv * rho0 * std::sqrt(T0) / (2.0 * dv * p.eps);
  const auto closed_energy = [&](double t) { return E0 * std::pow(1.0 + cdec * t, -2.0); };
  // Closure ODE in the classical energy, dE/dt = -(1-e^2) K_dv rho^2 T^(3/2) / (2 eps).
  const auto ode_rate = [&](double E) {
    const double T = std::max(2.0 * E / (dv * rho0), 0.0);
    return -(1.0 - p.e * p.e) * kdv * rho0 * rho0 * std::pow(T, 1.5) / (2.0 * p.eps);
  };

  // |xi|^2/2 node weights for the energy moment of Q.
  std::vector<double> wsq(vg.size());
  for (std::size_t i = 0; i < vg.size(); ++i) {
    const auto c = vg.coords(i);
    wsq[i] = 0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
  }
  const double vol = vg.cell_volume();

  std::vector<double> snap_times;
  for (double t : p.snap_times)
    if (t < p.t_end + 1e-9) snap_times.push_back(t);
  const std::vector<double> bounds = record_boundaries(p.t_end, p.record_dt, snap_times);

  Test1Result r;
  r.dv = dv;
  r.nv = p.nv;
  r.V = p.V;
  r.snap_times = snap_times;
  for (int k = 0; k < vg.n(0); ++k) r.xi.push_back(vg.node(0, k));

  double omega = 1.0, e_ode = E0, t = 0.0;
  std::vector<double> qbuf(vg.size());
  const double hmin = vg.spacing(0);

  const auto record = [&]() {
    const MomentSet mm = moments(g.slice(0), vg);
    r.t.push_back(t);
    r.energy.push_back(omega * omega * mm.E);
    r.omega.push_back(omega);
    if (!coupled) r.energy_ode.push_back(e_ode);
    r.energy_closed.push_back(closed_energy(t));
    DiagnosticsRecord d;
    d.t = t;
    d.mass = mm.rho;
    for (int a = 0; a < dv; ++a) d.momentum[a] = omega * mm.rho * mm.u[a];
    d.energy = omega * omega * mm.E;
    r.series.push_back(d);
    const int si = mark_index(t, snap_times);
    if (si >= 0) {
      r.snaps.emplace_back(g.slice(0).begin(), g.slice(0).end());
      r.marginals.push_back(axis0_marginal(g.slice(0), vg));
    }
  };
  record();

  for (double b : bounds) {
    while (t < b) {
      const MomentSet mm = moments(g.slice(0), vg);
      double c;  // scale rate omega_dot / omega over the step
      if (coupled) {
        apply(*kernel, g.slice(0), qbuf);
        double edot = 0.0;
        for (std::size_t i = 0; i < qbuf.size(); ++i) edot += qbuf[i] * wsq[i];
        edot *= vol * collision_scale(omega, cp.kind, cp.lambda) / p.eps;
        c = edot / (2.0 * mm.E);
      } else {
        c = ode_rate(e_ode) / (2.0 * e_ode);
      }

      double dt = b - t;
      if (p.dt_max > 0.0) dt = std::min(dt, p.dt_max);
      if (c != 0.0) dt = std::min(dt, 0.9 * hmin / (std::abs(c) * p.V));
      if (dt + 1e-12 * std::max(1.0, b) >= b - t) dt = b - t;

      double omega_new;
      if (coupled) {
        omega_new = omega * std::exp(c * dt);  // exact for a frozen rate
      } else {
        const double k1 = ode_rate(e_ode);
        const double k2 = ode_rate(e_ode + 0.5 * dt * k1);
        const double k3 = ode_rate(e_ode + 0.5 * dt * k2);
        const double k4 = ode_rate(e_ode + dt * k3);
        e_ode += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        omega_new = std::sqrt(2.0 * e_ode / (dv * rho0));
      }

      sf.omega[0] = omega;
      sf.domega_dt[0] = c * omega;
      transport_drift(g, sf, dt, pool);

      const double scale = collision_scale(omega_new, cp.kind, cp.lambda) / p.eps;
      const double crate = scale * bS * mm.rho * std::pow(two_r, cp.lambda);
      const int nsub = std::max(1, static_cast<int>(std::ceil(dt * crate / 0.5)));
      const double h = dt / nsub;
      auto slice = g.slice(0);
      for (int s = 0; s < nsub; ++s) {
        apply(*kernel, slice, qbuf);
        for (std::size_t i = 0; i < slice.size(); ++i) slice[i] += h * scale * qbuf[i];
      }
      omega = omega_new;
      t += dt;
    }
    t = b;
    record();
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Mean gap of a monotone position sequence plus its worst relative deviation.
struct GapStats {
  double mean = 0.0;
  double spread = 0.0;
  int gaps = 0;
};

GapStats gap_stats(const std::vector<double>& pos) {
  GapStats g;
  if (pos.size() < 2) return g;
  g.gaps = static_cast<int>(pos.size()) - 1;
  g.mean = (pos.back() - pos.front()) / g.gaps;
  for (std::size_t k = 1; k < pos.size(); ++k)
    g.spread = std::max(g.spread, std::abs(pos[k] - pos[k - 1] - g.mean));
  g.spread = g.mean > 0.0 ? g.spread / g.mean : 0.0;
  return g;
}

}  // namespace

OscillationFit extract_oscillation(std::span<const DiagnosticsRecord> series, double e, int dv,
                                   const OscillationFitOptions& opt) {
  OscillationFit fit;
  // The roundoff plateau truncates the usable window.
  std::size_t n = series.size();
  for (std::size_t i = 1; i < series.size(); ++i)
    if (series[i].l1_density_dev < opt.floor) {
      n = i;
      break;
    }
  if (n < 8) return fit;

  // Cooling log-time from the recorded energy: du = sqrt(T) dt with
  // T = 2 E / (dv mass), so the acoustic phase advances linearly in u.
  std::vector<double> u(n), s(n), logl(n);
  const auto speed = [&](const DiagnosticsRecord& r) {
    return std::sqrt(std::max(0.0, 2.0 * r.energy / (dv * r.mass)));
  };
  u[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0)
      u[i] = u[i - 1] +
             0.5 * (speed(series[i - 1]) + speed(series[i])) * (series[i].t - series[i - 1].t);
    s[i] = e < 1.0 ? std::log1p((1.0 - e) * series[i].t) / (1.0 - e) : series[i].t;
    logl[i] = std::log(std::max(series[i].l1_density_dev, 1e-300));
  }

  std::size_t lo = n, hi = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (lo == n && u[i] >= opt.u_min) lo = i;
    if (u[i] <= opt.u_max) hi = i;
  }
  if (lo == n || hi <= lo || hi - lo < 6) return fit;

  // Record spacing carries the time-step jitter; a short box smooth keeps
  // single-sample wiggles out of the extrema lists.
  std::vector<double> sm(logl);
  for (std::size_t i = 1; i + 1 < n; ++i)
    sm[i] = (logl[i - 1] + logl[i] + logl[i + 1]) / 3.0;

  std::vector<std::size_t> pk, mn;
  for (std::size_t i = std::max<std::size_t>(lo, 2); i + 2 <= hi; ++i) {
    if (sm[i] >= sm[i - 1] && sm[i] > sm[i + 1] && sm[i] >= sm[i - 2] && sm[i] > sm[i + 2]) {
      // Merge with the previous peak unless a trough at least `prominence`
      // below the lower of the two separates them.
      if (!pk.empty()) {
        double trough = sm[pk.back()];
        for (std::size_t j = pk.back(); j <= i; ++j) trough = std::min(trough, sm[j]);
        if (trough > std::min(sm[pk.back()], sm[i]) - opt.prominence) {
          if (sm[i] > sm[pk.back()]) pk.back() = i;
          continue;
        }
      }
      pk.push_back(i);
    } else if (sm[i] <= sm[i - 1] && sm[i] < sm[i + 1] && sm[i] <= sm[i - 2] && sm[i] < sm[i + 2]) {
      mn.push_back(i);
    }
  }
  fit.peaks = static_cast<int>(pk.size());

  // Sub-sample extremum positions from the parabola through three samples.
  const auto refine = [&](const std::vector<std::size_t>& idx, const std::vector<double>& coord) {
    std::vector<double> out(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      const double y0 = logl[i - 1], y1 = logl[i], y2 = logl[i + 1];
      const double a = 0.5 * (y0 - 2.0 * y1 + y2);
      double d = 0.0;
      if (a != 0.0) d = std::clamp(-0.5 * (y2 - y0) / (2.0 * a), -1.0, 1.0);
      out[k] = d >= 0.0 ? coord[i] + (coord[i + 1] - coord[i]) * d
                        : coord[i] + (coord[i] - coord[i - 1]) * d;
    }
    return out;
  };

  // L repeats every half mode period. Peaks carry the period for interior
  // waves; against a boundary-layer pedestal the rectified peaks smear while
  // the nodes stay sharp, so whichever extrema family yields the more regular
  // train wins.
  const GapStats gp = gap_stats(refine(pk, u));
  const GapStats gm = gap_stats(refine(mn, u));
  GapStats best = gp;
  if (gm.gaps > 0 && (gp.gaps == 0 || (gm.gaps > gp.gaps && gm.spread <= gp.spread) ||
                      (gm.gaps >= gp.gaps && gm.spread < gp.spread)))
    best = gm;
  if (best.gaps > 0) {
    fit.period = best.mean;
    fit.period_spread = best.spread;
    fit.frequency = kPi / best.mean;
  }

  // Envelope: least squares of log L against s, through the peaks when the
  // train is long enough to define one and through every sample otherwise.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  if (pk.size() >= 3) {
    const std::vector<double> ps = refine(pk, s);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      sx += ps[k];
      sy += logl[pk[k]];
      sxx += ps[k] * ps[k];
      sxy += ps[k] * logl[pk[k]];
      m += 1.0;
    }
  } else {
    for (std::size_t i = lo; i <= hi; ++i) {
      sx += s[i];
      sy += logl[i];
      sxx += s[i] * s[i];
      sxy += s[i] * logl[i];
      m += 1.0;
    }
  }
  const double den = m * sxx - sx * sx;
  if (den > 0.0) {
    fit.slope = -(m * sxy - sx * sy) / den;
    fit.beta = e < 1.0 ? fit.slope / (1.0 - e) : fit.slope;
  }
  return fit;
}

Test2Result run_test2(const Test2Params& p, const ThreadPool* pool) {
  const int dv = 1;
  SpatialGrid xg(1, {p.nx, 1}, {{{0.0, p.L}, {0.0, 1.0}}});
  xg.set_bc(0, 0, p.bc);
  xg.set_bc(0, 1, p.bc);
  VelocityGrid vg(dv, p.V, p.nv);
  SimState state(xg, vg);

  // Half-cosine density datum. Between specular walls this is the slip mode
  // of the box, equivalently the fundamental of the unfolded torus of length
  // 2L. Under periodic conditions the seam jump spreads over the harmonics
  // of 2 pi / L; the k >= 2 components damp fastest and the surviving
  // fundamental oscillates at twice the specular frequency.
  std::vector<double> rho(xg.size());
  for (int i = 0; i < p.nx; ++i)
    rho[i] = 1.0 + p.amp * std::cos(kPi * xg.center(0, i) / p.L);
  fill_uniform_maxwellian(state, rho, 1.0);

  KineticSetup setup;
  setup.kind = p.e < 1.0 ? OperatorKind::inelastic : OperatorKind::elastic;
  CollisionParams cp;
  cp.kind = setup.kind;
  cp.e = p.e;
  cp.eps = p.eps;
  cp.validate(dv);
  setup.collision = cp;
  setup.kernel = obtain_kernel(vg, cp, p.quad_order, p.cache_dir);
  setup.eps = p.eps;
  const double K =
      p.K > 0.0 ? p.K : closure_sink_constant(setup.kind, dv, 0.0, p.e, p.eps);
  if (K > 0.0) setup.source = SourceSpec{SourceSpec::Kind::granular, K};

  MarchOptions opt;
  opt.t_end = p.t_end;
  opt.record_dt = p.record_dt;
  opt.record_growth = p.record_growth;
  Test2Result r;
  r.series = march(state, setup, opt, pool);
  const bool periodic = p.bc == BoundaryKind::periodic;
  r.eta = (periodic ? 2.0 : 1.0) * kPi / p.L;
  r.predicted_frequency = r.eta * std::sqrt(1.0 + 2.0 / dv);
  r.cool_rate = K / dv;  // mean density and initial temperature are 1
  r.fit = extract_oscillation(r.series, p.e, dv, p.fit);
  return r;
}

// ---------------------------------------------------------------------------

Test3Result run_test3(const Test3Params& p, const ThreadPool* pool) {
  const int dv = 1;
  SpatialGrid xg(1, {p.nx, 1}, {{{-0.5, 0.5}, {0.0, 1.0}}});
  xg.set_bc(0, 0, BoundaryKind::diffusive);
  xg.set_bc(0, 1, BoundaryKind::diffusive);
  VelocityGrid vg(dv, p.V, p.nv);
  SimState state(xg, vg);
  std::vector<double> rho(xg.size(), 1.0);
  fill_uniform_maxwellian(state, rho, 1.0);

  KineticSetup setup;
  setup.kind = OperatorKind::inelastic;
  CollisionParams cp;
  cp.kind = setup.kind;
  cp.e = p.e;
  cp.eps = p.eps;
  cp.validate(dv);
  setup.collision = cp;
  setup.kernel = obtain_kernel(vg, cp, p.quad_order, p.cache_dir);
  setup.eps = p.eps;
  for (auto& w : setup.walls) w = WallSpec{p.alpha, {0.0, 0.0, 0.0}, p.T_w};
  const double K = closure_sink_constant(setup.kind, dv, 0.0, p.e, p.eps);
  if (K > 0.0) setup.source = SourceSpec{SourceSpec::Kind::granular, K};

  Test3Result r;
  MarchOptions opt;
  opt.t_end = p.t_end;
  opt.record_dt = p.record_dt;
  opt.mark_times = p.profile_times;
  opt.on_mark = [&](const SimState& s, std::size_t) {
    ProfileSnapshot prof;
    prof.t = s.t;
    std::vector<double> rho_c(xg.size()), T_c(xg.size());
    for (std::size_t c = 0; c < xg.size(); ++c) {
      const MomentSet m = moments(s.g.slice(c), vg);
      rho_c[c] = m.rho;
      T_c[c] = s.omega.omega[c] * s.omega.omega[c] * m.T;
    }
    double rho_mean = 0.0, t_mean = 0.0;
    for (std::size_t c = 0; c < xg.size(); ++c) {
      rho_mean += rho_c[c];
      t_mean += T_c[c];
    }
    rho_mean /= xg.size();
    t_mean /= xg.size();
    for (std::size_t c = 0; c < xg.size(); ++c) {
      prof.x.push_back(xg.center(0, static_cast<int>(c)));
      prof.rho_norm.push_back(rho_c[c] / rho_mean);
      prof.T_norm.push_back(T_c[c] / t_mean);
    }
    r.profiles.push_back(std::move(prof));
  };
  r.series = march(state, setup, opt, pool);
  return r;
}

// ---------------------------------------------------------------------------

double test4_density(std::uint64_t seed, std::uint64_t cell) {
  return 0.01 + 0.99 * u01(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (cell + 1))));
}

Test4Result run_test4(const Test4Params& p, const ThreadPool* pool) {
  const double eps = p.eps > 0.0 ? p.eps : 1.0 - p.e;
  const int dv = 3;
  SpatialGrid xg(2, {p.nx, p.nx}, {{{0.0, 1.0}, {0.0, 1.0}}});
  VelocityGrid vg(dv, p.V, p.nv);
  SimState state(xg, vg);
  std::vector<double> rho(xg.size());
  for (std::size_t c = 0; c < xg.size(); ++c) rho[c] = test4_density(p.seed, c);
  fill_uniform_maxwellian(state, rho, 1.0);

  const double kdv = haff_constant(dv, default_cross_section(dv));
  KineticSetup setup;
  setup.kind = OperatorKind::esbgk;
  setup.eps = eps;
  EsbgkParams ep;
  ep.nu = p.nu;
  ep.tau_a = 1.0;
  ep.tau_c = 0.0;
  ep.tau_on_density = false;
  ep.e = p.e;
  ep.C = p.e < 1.0 ? (1.0 - p.e) * kdv / dv : 0.0;
  ep.eps = eps;
  ep.validate();
  setup.esbgk = ep;
  const double K = closure_sink_constant(OperatorKind::esbgk, dv, 0.0, p.e, eps);
  if (K > 0.0) setup.source = SourceSpec{SourceSpec::Kind::granular, K};

  Test4Result r;
  MarchOptions opt;
  opt.t_end = p.t_end;
  opt.record_dt = p.record_dt;
  opt.on_record = [&](const SimState& s, const DiagnosticsRecord& rec) {
    Test4Stats st;
    st.t = rec.t;
    double sum = 0.0, sum2 = 0.0, l1 = 0.0, lh = 0.0, tk = 0.0, th = 0.0;
    for (std::size_t c = 0; c < xg.size(); ++c) {
      const MomentSet m = moments(s.g.slice(c), vg);
      const double om = s.omega.omega[c];
      sum += m.rho;
      sum2 += m.rho * m.rho;
      st.max_rho = std::max(st.max_rho, m.rho);
      l1 += std::abs(m.rho - s.hydro.rho[c]);
      lh += std::abs(s.hydro.rho[c]);
      tk += om * om * m.T;
      th += s.hydro.temperature(c);
    }
    const double mean = sum / xg.size();
    st.variance = sum2 / xg.size() - mean * mean;
    st.mean_T_kin = tk / xg.size();
    st.mean_T_hydro = th / xg.size();
    st.rel_l1_rho = l1 / lh;
    r.stats.push_back(st);
  };
  r.series = march(state, setup, opt, pool);

  r.rho_kin.resize(xg.size());
  r.rho_hydro = state.hydro.rho;
  for (std::size_t c = 0; c < xg.size(); ++c) r.rho_kin[c] = moments(state.g.slice(c), vg).rho;
  return r;
}

// ---------------------------------------------------------------------------

Test5Result run_test5(const Test5Params& p, const ThreadPool* pool) {
  const int dv = 3;
  SpatialGrid xg(2, {p.nx, p.nx}, {{{-2.0, 2.0}, {-2.0, 2.0}}});
  xg.set_bc_all(BoundaryKind::absorbing);
  VelocityGrid vg(dv, p.V, p.nv);
  SimState state(xg, vg);

  // Cold disc in a hot background; the rescaled datum is the unit Maxwellian
  // everywhere, the temperature jump lives entirely in the scale field.
  std::vector<double> base(vg.size());
  eval_maxwellian(base, vg, 1.0, {0.0, 0.0, 0.0}, 1.0);
  for (int i = 0; i < p.nx; ++i)
    for (int j = 0; j < p.nx; ++j) {
      const std::size_t c = xg.flat(i, j);
      const double x = xg.center(0, i), y = xg.center(1, j);
      const double T0 = std::hypot(x, y) <= 0.5 ? 1.0 : 100.0;
      std::copy(base.begin(), base.end(), state.g.slice(c).begin());
      state.hydro.rho[c] = 1.0;
      for (int a = 0; a < dv; ++a) state.hydro.m[c * dv + a] = 0.0;
      state.hydro.E[c] = 0.5 * dv * T0;
    }
  compute_omega(state.hydro, state.omega);

  KineticSetup setup;
  setup.kind = OperatorKind::esbgk;
  setup.eps = p.eps;
  EsbgkParams ep;
  ep.nu = p.nu;
  ep.tau_a = p.tau_a;
  ep.tau_c = 0.0;
  ep.tau_on_density = true;
  ep.e = 1.0;
  ep.C = 0.0;
  ep.eps = p.eps;
  ep.validate();
  setup.esbgk = ep;

  MarchOptions opt;
  opt.t_end = p.t_end;
  opt.record_dt = p.record_dt;
  Test5Result r;
  r.series = march(state, setup, opt, pool);

  const std::size_t n = xg.size();
  r.rho_kin.resize(n);
  r.T_kin.resize(n);
  r.ux_kin.resize(n);
  r.uy_kin.resize(n);
  r.rho_hyd.resize(n);
  r.T_hyd.resize(n);
  r.ux_hyd.resize(n);
  r.uy_hyd.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const MomentSet m = moments(state.g.slice(c), vg);
    const double om = state.omega.omega[c];
    r.rho_kin[c] = m.rho;
    r.T_kin[c] = om * om * m.T;
    r.ux_kin[c] = om * m.u[0];
    r.uy_kin[c] = om * m.u[1];
    r.rho_hyd[c] = state.hydro.rho[c];
    r.T_hyd[c] = state.hydro.temperature(c);
    r.ux_hyd[c] = state.hydro.velocity(c, 0);
    r.uy_hyd[c] = state.hydro.velocity(c, 1);
  }

  const auto rel_l1 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      num += std::abs(a[c] - b[c]);
      den += std::abs(b[c]);
    }
    return num / den;
  };
  r.rel_l1_rho = rel_l1(r.rho_kin, r.rho_hyd);
  r.rel_l1_T = rel_l1(r.T_kin, r.T_hyd);
  {
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      num += std::abs(r.ux_kin[c] - r.ux_hyd[c]) + std::abs(r.uy_kin[c] - r.uy_hyd[c]);
      den += std::abs(r.ux_hyd[c]) + std::abs(r.uy_hyd[c]);
    }
    r.rel_l1_u = num / den;
  }

  // Exchange symmetry of the datum: scalar fields transpose into themselves,
  // the velocity components swap.
  double sym = 0.0;
  const auto scalar_sym = [&](const std::vector<double>& f) {
    double mx = 0.0, dev = 0.0;
    for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, std::abs(f[c]));
    for (int i = 0; i < p.nx; ++i)
      for (int j = 0; j < p.nx; ++j)
        dev = std::max(dev, std::abs(f[xg.flat(i, j)] - f[xg.flat(j, i)]));
    return dev / std::max(mx, 1e-300);
  };
  sym = std::max(sym, scalar_sym(r.rho_kin));
  sym = std::max(sym, scalar_sym(r.T_kin));
  {
    double mx = 0.0, dev = 0.0;
    for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, std::abs(r.ux_kin[c]));
    for (int i = 0; i < p.nx; ++i)
      for (int j = 0; j < p.nx; ++j)
        dev = std::max(dev, std::abs(r.ux_kin[xg.flat(i, j)] - r.uy_kin[xg.flat(j, i)]));
    sym = std::max(sym, dev / std::max(mx, 1e-300));
  }
  r.symmetry_err = sym;
  return r;
}

// ---------------------------------------------------------------------------

std::vector<DiagnosticsRecord> run_esbgk_cooling(double e, double eps, double nu, int dv, int nv,
                                                 double V, double t_end, double record_dt,
                                                 const ThreadPool* pool) {
  SpatialGrid xg = SpatialGrid::homogeneous();
  VelocityGrid vg(dv, V, nv);
  SimState state(xg, vg);
  std::vector<double> rho(1, 1.0);
  fill_uniform_maxwellian(state, rho, 1.0);

  const double kdv = haff_constant(dv, default_cross_section(dv));
  KineticSetup setup;
  setup.kind = OperatorKind::esbgk;
  setup.eps = eps;
  EsbgkParams ep;
  ep.nu = nu;
  ep.e = e;
  ep.C = e < 1.0 ? (1.0 - e) * kdv / dv : 0.0;
  ep.eps = eps;
  ep.validate();
  setup.esbgk = ep;
  const double K = closure_sink_constant(OperatorKind::esbgk, dv, 0.0, e, eps);
  if (K > 0.0) setup.source = SourceSpec{SourceSpec::Kind::granular, K};

  MarchOptions opt;
  opt.t_end = t_end;
  opt.record_dt = record_dt;
  return march(state, setup, opt, pool);
}

// ---------------------------------------------------------------------------

void run_scenario(const RunConfig& cfg, const ThreadPool* pool) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream echo(cfg.out_dir + "/effective.ini", std::ios::binary);
    if (!echo) throw SolverError("cannot write '" + cfg.out_dir + "/effective.ini'");
    echo << render_config(cfg);
  }
  const std::string csv = cfg.out_dir + "/diagnostics.csv";

  if (cfg.scenario == "test1") {
    Test1Params p;
    p.mode = cfg.mode;
    p.e = cfg.e;
    p.dv = cfg.dv;
    p.nv = cfg.nv;
    p.V = cfg.extent;
    p.eps = cfg.eps;
    p.t_end = cfg.t_end;
    p.record_dt = cfg.record_dt;
    p.quad_order = cfg.quad_order;
    p.cache_dir = cfg.out_dir;
    if (cfg.dt_max > 0.0) p.dt_max = cfg.dt_max;
    const Test1Result r = run_test1(p, pool);
    write_timeseries(csv, r.series, cfg.dv);
    std::vector<std::vector<double>> energy_cols = {r.t, r.energy, r.omega, r.energy_closed};
    std::vector<std::string> energy_names = {"t", "energy", "omega", "energy_closed"};
    if (!r.energy_ode.empty()) {
      energy_cols.push_back(r.energy_ode);
      energy_names.push_back("energy_ode");
    }
    write_table(cfg.out_dir + "/energy.dat", energy_names, energy_cols);
    for (std::size_t i = 0; i < r.snap_times.size(); ++i)
      write_table(cfg.out_dir + "/marginal_t" + format_time_tag(r.snap_times[i]) + ".dat",
                  {"xi", "marginal"}, {r.xi, r.marginals[i]});
  } else if (cfg.scenario == "test2") {
    Test2Params p;
    p.e = cfg.e;
    p.eps = cfg.eps;
    p.L = cfg.x_hi[0] - cfg.x_lo[0];
    p.bc = boundary_kind_from_string(cfg.bc[0]);
    p.nx = cfg.nx[0];
    p.nv = cfg.nv;
    p.V = cfg.extent;
    p.t_end = cfg.t_end;
    p.record_dt = cfg.record_dt;
    p.record_growth = cfg.record_growth;
    p.fit.u_min = cfg.fit_u_min;
    p.fit.u_max = cfg.fit_u_max;
    p.fit.floor = cfg.fit_floor;
    p.fit.prominence = cfg.fit_prominence;
    p.quad_order = cfg.quad_order;
    p.cache_dir = cfg.out_dir;
    const Test2Result r = run_test2(p, pool);
    write_timeseries(csv, r.series, cfg.dv);
    write_table(cfg.out_dir + "/oscillation.dat",
                {"slope", "beta", "period", "period_spread", "frequency",
                 "predicted_frequency", "cool_rate", "peaks"},
                {{r.fit.slope},
                 {r.fit.beta},
                 {r.fit.period},
                 {r.fit.period_spread},
                 {r.fit.frequency},
                 {r.predicted_frequency},
                 {r.cool_rate},
                 {static_cast<double>(r.fit.peaks)}});
  } else if (cfg.scenario == "test3") {
    Test3Params p;
    p.e = cfg.e;
    p.eps = cfg.eps;
    p.T_w = cfg.T_w;
    p.alpha = cfg.alpha;
    p.nx = cfg.nx[0];
    p.nv = cfg.nv;
    p.V = cfg.extent;
    p.t_end = cfg.t_end;
    p.record_dt = cfg.record_dt;
    p.quad_order = cfg.quad_order;
    p.cache_dir = cfg.out_dir;
    const Test3Result r = run_test3(p, pool);
    write_timeseries(csv, r.series, cfg.dv);
    for (const ProfileSnapshot& prof : r.profiles)
      write_table(cfg.out_dir + "/profile_t" + format_time_tag(prof.t) + ".dat",
                  {"x", "rho_norm", "T_norm"}, {prof.x, prof.rho_norm, prof.T_norm});
  } else if (cfg.scenario == "test4") {
    Test4Params p;
    p.e = cfg.e;
    p.eps = cfg.eps;
    p.seed = cfg.seed;
    p.nu = cfg.nu;
    p.nx = cfg.nx[0];
    p.nv = cfg.nv;
    p.V = cfg.extent;
    p.t_end = cfg.t_end;
    p.record_dt = cfg.record_dt;
    const Test4Result r = run_test4(p, pool);
    write_timeseries(csv, r.series, cfg.dv);
    std::vector<std::vector<double>> cols(6);
    for (const Test4Stats& st : r.stats) {
      cols[0].push_back(st.t);
      cols[1].push_back(st.variance);
      cols[2].push_back(st.max_rho);
      cols[3].push_back(st.mean_T_kin);
      cols[4].push_back(st.mean_T_hydro);
      cols[5].push_back(st.rel_l1_rho);
    }
    write_table(cfg.out_dir + "/cluster_stats.dat",
                {"t", "variance", "max_rho", "mean_T_kin", "mean_T_hydro", "rel_l1_rho"}, cols);
    if (cfg.ascii) {
      SpatialGrid xg(2, {cfg.nx[0], cfg.nx[0]}, {{{0.0, 1.0}, {0.0, 1.0}}});
      write_field_ascii(cfg.out_dir + "/rho_kinetic.dat", xg, r.rho_kin);
      write_field_ascii(cfg.out_dir + "/rho_hydro.dat", xg, r.rho_hydro);
    }
  } else if (cfg.scenario == "test5") {
    Test5Params p;
    p.eps = cfg.eps;
    p.nu = cfg.nu;
    p.tau_a = cfg.tau_a;
    p.nx = cfg.nx[0];
    p.nv = cfg.nv;
    p.V = cfg.extent;
    p.t_end = cfg.t_end;
    p.record_dt = cfg.record_dt;
    const Test5Result r = run_test5(p, pool);
    write_timeseries(csv, r.series, cfg.dv);
    write_table(cfg.out_dir + "/compare.dat",
                {"rel_l1_rho", "rel_l1_T", "rel_l1_u", "symmetry_err"},
                {{r.rel_l1_rho}, {r.rel_l1_T}, {r.rel_l1_u}, {r.symmetry_err}});
    if (cfg.ascii) {
      SpatialGrid xg(2, {cfg.nx[0], cfg.nx[0]}, {{{-2.0, 2.0}, {-2.0, 2.0}}});
      write_field_ascii(cfg.out_dir + "/rho_kinetic.dat", xg, r.rho_kin);
      write_field_ascii(cfg.out_dir + "/rho_hydro.dat", xg, r.rho_hyd);
      write_field_ascii(cfg.out_dir + "/T_kinetic.dat", xg, r.T_kin);
      write_field_ascii(cfg.out_dir + "/T_hydro.dat", xg, r.T_hyd);
    }
  } else {
    Simulation sim = make_simulation(cfg, cfg.out_dir);
    MarchOptions opt;
    opt.t_end = cfg.t_end;
    opt.record_dt = cfg.record_dt;
    if (cfg.dt_max > 0.0) opt.dt_max = cfg.dt_max;
    opt.dump_dir = cfg.out_dir;
    const std::vector<DiagnosticsRecord> series = march(sim.state, sim.setup, opt, pool);
    write_timeseries(csv, series, cfg.dv);
    if (cfg.snapshots) {
      write_snapshot(cfg.out_dir + "/final_distribution.krsn", sim.state.g);
      write_snapshot(cfg.out_dir + "/final_hydro.krsn", sim.state.hydro);
      write_snapshot(cfg.out_dir + "/final_scaling.krsn", sim.state.omega);
    }
    if (cfg.ascii) {
      std::vector<double> rho_c(sim.state.g.xgrid().size());
      for (std::size_t c = 0; c < rho_c.size(); ++c)
        rho_c[c] = moments(sim.state.g.slice(c), sim.state.g.vgrid()).rho;
      write_field_ascii(cfg.out_dir + "/rho_kinetic.dat", sim.state.g.xgrid(), rho_c);
    }
  }
}

}  // namespace kinrescale
