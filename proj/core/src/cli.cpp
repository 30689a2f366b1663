#include "kinrescale/cli.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "kinrescale/collision.hpp"
#include "kinrescale/config.hpp"
#include "kinrescale/errors.hpp"
#include "kinrescale/io.hpp"
#include "kinrescale/moments.hpp"
#include "kinrescale/scenarios.hpp"

namespace kinrescale {

namespace {

int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("KINRESCALE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// ---------------------------------------------------------------------------
// verify: self-contained oracle and property battery. Each check reports one
// line; any failure flips the exit code to 2.

using CheckResult = std::pair<bool, std::string>;

double rel_linf(std::span<const double> a, std::span<const double> b, double floor) {
  double mx = 0.0, dev = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mx = std::max(mx, std::abs(b[i]));
    dev = std::max(dev, std::abs(a[i] - b[i]));
  }
  return dev / std::max(mx, floor);
}

std::vector<double> mixture_datum(const VelocityGrid& vg) {
  std::vector<double> g(vg.size()), tmp(vg.size());
  eval_maxwellian(g, vg, 0.7, {0.8, -0.5, 0.3}, 1.1);
  eval_maxwellian(tmp, vg, 0.3, {-1.0, 0.4, -0.2}, 0.6);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += tmp[i];
  return g;
}

CheckResult check_haff_constants() {
  const double pi = 3.14159265358979323846;
  const double k1 = haff_constant(1, default_cross_section(1));
  const double k2 = haff_constant(2, default_cross_section(2));
  const double k3 = haff_constant(3, default_cross_section(3));
  const double r1 = std::abs(k1 - 2.0 / std::sqrt(pi));
  const double r2 = std::abs(k2 - 3.0 * std::sqrt(pi) / 4.0);
  const double r3 = std::abs(k3 - 8.0 / (3.0 * std::sqrt(pi)));
  char buf[128];
  std::snprintf(buf, sizeof buf, "errors %.2e %.2e %.2e", r1, r2, r3);
  return {r1 <= 1e-11 && r2 <= 2e-8 && r3 <= 2e-6, buf};
}

CheckResult check_apply_oracle(int dv, int n, double e) {
  VelocityGrid vg(dv, 6.0, n);
  CollisionParams cp;
  cp.kind = e < 1.0 ? OperatorKind::inelastic : OperatorKind::elastic;
  cp.e = e;
  const std::vector<double> g = mixture_datum(vg);
  const SpectralKernel kernel = precompute_kernel(vg, cp, 48);
  std::vector<double> qa(vg.size());
  apply(kernel, g, qa);
  const std::vector<double> qo = direct_sum_oracle(g, cp, vg);
  // The absolute floor covers the identically-zero 1d elastic operator.
  const double dev = rel_linf(qa, qo, 1e-2);
  char buf[64];
  std::snprintf(buf, sizeof buf, "rel Linf %.2e", dev);
  return {dev <= 1e-10, buf};
}

CheckResult check_apply_mass(int dv, int n, double e) {
  VelocityGrid vg(dv, 6.0, n);
  CollisionParams cp;
  cp.kind = OperatorKind::inelastic;
  cp.e = e;
  const std::vector<double> g = mixture_datum(vg);
  const SpectralKernel kernel = precompute_kernel(vg, cp, 48);
  std::vector<double> q(vg.size());
  apply(kernel, g, q);
  double mass = 0.0;
  for (double v : q) mass += v;
  mass *= vg.cell_volume();
  char buf[64];
  std::snprintf(buf, sizeof buf, "|mass moment| %.2e", std::abs(mass));
  return {std::abs(mass) <= 1e-12, buf};
}

CheckResult check_driver_battery(const std::string& bc) {
  RunConfig cfg;
  cfg.dx = 1;
  cfg.nx = {16, 1};
  cfg.x_lo = {0.0, 0.0};
  cfg.x_hi = {1.0, 1.0};
  cfg.dv = 1;
  cfg.nv = 16;
  cfg.extent = 6.0;
  cfg.kind = "inelastic";
  cfg.e = 0.9;
  cfg.eps = 0.5;
  cfg.bc = {bc, bc, "periodic", "periodic"};
  Simulation sim = make_simulation(cfg, "");
  // Density wave, even about the box center so the total momentum is zero.
  const double pi = 3.14159265358979323846;
  for (std::size_t c = 0; c < sim.state.g.xgrid().size(); ++c) {
    const double x = sim.state.g.xgrid().center(0, static_cast<int>(c));
    const double rho = 1.0 + 0.3 * std::cos(2.0 * pi * x);
    auto slice = sim.state.g.slice(c);
    for (double& v : slice) v *= rho;
    sim.state.hydro.rho[c] = rho;
    sim.state.hydro.E[c] = 0.5 * rho;
  }
  const DiagnosticsRecord before = diagnose(sim.state);
  for (int s = 0; s < 50; ++s) {
    const double dt = suggest_dt(sim.state, sim.setup, 0.05);
    step(sim.state, sim.setup, dt);
  }
  const DiagnosticsRecord after = diagnose(sim.state);
  const double mass_drift = std::abs(after.mass - before.mass) / std::abs(before.mass);
  const double momentum = std::abs(after.momentum[0]);
  char buf[96];
  std::snprintf(buf, sizeof buf, "mass drift %.2e, momentum %.2e", mass_drift, momentum);
  return {mass_drift <= 1e-10 && momentum <= 1e-8, buf};
}

CheckResult check_drift_mass() {
  SpatialGrid xg = SpatialGrid::homogeneous();
  VelocityGrid vg(2, 6.0, 16);
  DistributionField g(xg, vg, Variable::rescaled);
  eval_maxwellian(g.slice(0), vg, 1.0, {0.3, -0.2, 0.0}, 0.9);
  ScalingField sf(xg);
  sf.omega[0] = 1.2;
  sf.domega_dt[0] = -0.4;
  const double m0 = g.total_mass();
  transport_drift(g, sf, 0.01);
  const double drift = std::abs(g.total_mass() - m0) / m0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "mass drift %.2e", drift);
  return {drift <= 1e-12, buf};
}

CheckResult check_gaussian_moments() {
  VelocityGrid vg(3, 6.0, 16);
  const std::vector<double> f = mixture_datum(vg);
  const MomentSet m = moments(f, vg);
  std::vector<double> G(vg.size());
  gaussian_G(G, m, -0.4, vg);
  const MomentSet mg = moments(G, vg);
  double dev = std::abs(mg.rho - m.rho) / m.rho;
  for (int a = 0; a < 3; ++a) dev = std::max(dev, std::abs(mg.u[a] - m.u[a]));
  char buf[64];
  std::snprintf(buf, sizeof buf, "moment error %.2e", dev);
  return {dev <= 1e-12, buf};
}

CheckResult check_config_round_trip() {
  for (const char* name : {"test1", "test2", "test3", "test4", "test5", "custom"}) {
    RunConfig c;
    scenario_defaults(c, name);
    validate_config(c);
    const RunConfig back = parse_config(render_config(c));
    if (!(back == c)) return {false, std::string("mismatch for ") + name};
  }
  try {
    parse_config("[grid]\nnx = 4\nbogus = 1\n");
    return {false, "unknown key accepted"};
  } catch (const ConfigError& err) {
    if (std::string(err.what()).find("bogus") == std::string::npos)
      return {false, "unknown-key error does not name the key"};
  }
  try {
    parse_config("[collision]\ne = 1.2\n");
    return {false, "out-of-range restitution accepted"};
  } catch (const ConfigError& err) {
    if (std::string(err.what()).find("collision.e") == std::string::npos)
      return {false, "range error does not name collision.e"};
  }
  return {true, "defaults, echo, rejection"};
}

CheckResult check_io_round_trip(const std::filesystem::path& dir) {
  // CSV
  std::vector<DiagnosticsRecord> recs(3);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].t = 0.1 * static_cast<double>(i) + std::sqrt(2.0) * 1e-3;
    recs[i].mass = 1.0 + 1e-13 * static_cast<double>(i);
    recs[i].momentum = {std::exp(-static_cast<double>(i)), -0.25, 0.0};
    recs[i].energy = 1.5 / (1.0 + static_cast<double>(i));
    recs[i].l1_density_dev = 1e-4 * std::sqrt(static_cast<double>(i) + 1.0);
  }
  const std::string csv = (dir / "roundtrip.csv").string();
  write_timeseries(csv, recs, 2);
  int dv = 0;
  const std::vector<DiagnosticsRecord> back = read_timeseries(csv, &dv);
  if (dv != 2 || back.size() != recs.size()) return {false, "csv shape mismatch"};
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (std::memcmp(&back[i].t, &recs[i].t, sizeof(double)) != 0 ||
        std::memcmp(&back[i].energy, &recs[i].energy, sizeof(double)) != 0 ||
        std::memcmp(&back[i].momentum, &recs[i].momentum, 2 * sizeof(double)) != 0)
      return {false, "csv values not bit-identical"};
  }

  // KRSN
  SpatialGrid xg(1, {3, 1}, {{{-0.5, 0.5}, {0.0, 1.0}}});
  VelocityGrid vg(2, 4.5, 4);
  DistributionField f(xg, vg, Variable::rescaled);
  for (std::size_t i = 0; i < f.data().size(); ++i)
    f.data()[i] = std::sin(0.37 * static_cast<double>(i) + 0.11);
  const std::string snap = (dir / "roundtrip.krsn").string();
  write_snapshot(snap, f);
  const DistributionField g = read_distribution_snapshot(snap);
  if (!(g.vgrid() == f.vgrid()) || g.xgrid().size() != f.xgrid().size() ||
      g.xgrid().lo(0) != f.xgrid().lo(0) || g.xgrid().hi(0) != f.xgrid().hi(0))
    return {false, "krsn grid mismatch"};
  if (std::memcmp(g.data().data(), f.data().data(), f.data().size() * sizeof(double)) != 0)
    return {false, "krsn payload not bit-identical"};
  return {true, "csv and krsn bit-identical"};
}

int run_verify() {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / ("kinrescale-verify-" + std::to_string(::getpid()));
  fs::create_directories(dir);

  std::vector<std::pair<std::string, std::function<CheckResult()>>> checks;
  checks.emplace_back("dissipation constants K_1, K_2, K_3", check_haff_constants);
  checks.emplace_back("spectral apply vs direct sum (1d, N=16, e=0.8)",
                      [] { return check_apply_oracle(1, 16, 0.8); });
  checks.emplace_back("spectral apply vs direct sum (1d, N=16, elastic)",
                      [] { return check_apply_oracle(1, 16, 1.0); });
  checks.emplace_back("spectral apply vs direct sum (2d, N=8, e=0.8)",
                      [] { return check_apply_oracle(2, 8, 0.8); });
  checks.emplace_back("spectral apply vs direct sum (2d, N=8, elastic)",
                      [] { return check_apply_oracle(2, 8, 1.0); });
  checks.emplace_back("collision mass moment", [] { return check_apply_mass(2, 16, 0.8); });
  checks.emplace_back("driver battery, periodic", [] { return check_driver_battery("periodic"); });
  checks.emplace_back("driver battery, specular", [] { return check_driver_battery("specular"); });
  checks.emplace_back("drift velocity-divergence mass", check_drift_mass);
  checks.emplace_back("anisotropic Gaussian moments", check_gaussian_moments);
  checks.emplace_back("config defaults and round trip", check_config_round_trip);
  checks.emplace_back("timeseries and snapshot round trip",
                      [&] { return check_io_round_trip(dir); });

  int failures = 0;
  for (const auto& [name, fn] : checks) {
    CheckResult res;
    try {
      res = fn();
    } catch (const std::exception& err) {
      res = {false, err.what()};
    }
    std::printf("%s %s (%s)\n", res.first ? "ok  " : "FAIL", name.c_str(), res.second.c_str());
    std::fflush(stdout);
    if (!res.first) ++failures;
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  if (failures > 0) std::printf("%d check(s) failed\n", failures);
  return failures == 0 ? 0 : 2;
}

int run_kernel_cache(const RunConfig& cfg) {
  if (cfg.kind != "elastic" && cfg.kind != "inelastic" && cfg.scenario != "test1" &&
      cfg.scenario != "test2" && cfg.scenario != "test3") {
    std::printf("no spectral kernel required by this configuration\n");
    return 0;
  }
  CollisionParams cp;
  cp.kind = cfg.kind == "elastic" || cfg.e >= 1.0 ? OperatorKind::elastic
                                                  : OperatorKind::inelastic;
  cp.lambda = cfg.lambda;
  cp.b = cfg.b;
  cp.e = cfg.e;
  cp.eps = cfg.eps;
  cp.validate(cfg.dv);
  VelocityGrid vg(cfg.dv, cfg.extent, cfg.nv);
  obtain_kernel(vg, cp, cfg.quad_order, cfg.out_dir);
  std::printf("%s\n", (cfg.out_dir + "/" + kernel_cache_name(vg, cp)).c_str());
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"deterministic phase-space solver for collisional kinetic equations"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;

  CLI::App* run = app.add_subcommand("run", "integrate the configured scenario");
  run->add_option("config", config_path, "configuration file")->required();
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->add_option("--seed", seed, "random seed (overrides scenario.seed)")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--threads", threads, "worker thread count");

  CLI::App* verify = app.add_subcommand("verify", "run the oracle/property battery");
  (void)verify;

  std::string cache_config;
  CLI::App* cache = app.add_subcommand("kernel-cache", "precompute spectral kernel files");
  cache->add_option("config", cache_config, "configuration file")->required();
  cache->add_option("--out", out_dir, "cache directory (overrides output.dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      RunConfig cfg = parse_config_file(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (seed_set) cfg.seed = seed;
      validate_config(cfg);
      const int n = resolve_threads(threads);
      std::optional<ThreadPool> pool;
      if (n > 1) pool.emplace(n);
      run_scenario(cfg, pool ? &*pool : nullptr);
      return 0;
    }
    if (cache->parsed()) {
      RunConfig cfg = parse_config_file(cache_config);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      return run_kernel_cache(cfg);
    }
    return run_verify();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const UnsupportedError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace kinrescale
