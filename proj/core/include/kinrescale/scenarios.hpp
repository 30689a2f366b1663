#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kinrescale/config.hpp"
#include "kinrescale/driver.hpp"

namespace kinrescale {

// Shared time loop: steps to every record boundary exactly (records land on
// multiples of record_dt plus the mark times), appends a diagnostics record
// at each, and calls on_mark at the requested times. On a solver failure the
// current state is dumped to dump_dir (when set) before rethrowing.
struct MarchOptions {
  double t_end = 1.0;
  double record_dt = 0.1;
  double record_growth = 1.0;  // multiplies the record spacing after each record
  double dt_max = 0.0;         // 0 = no explicit cap
  std::vector<double> mark_times;
  std::function<void(const SimState&, std::size_t)> on_mark;  // index into mark_times
  std::function<void(const SimState&, const DiagnosticsRecord&)> on_record;
  std::string dump_dir;
};

std::vector<DiagnosticsRecord> march(SimState& state, const KineticSetup& setup,
                                     const MarchOptions& opt, const ThreadPool* pool = nullptr);

// Energy sink constant of the moment-system closure, dE/dt = -K rho^2 T^(3/2):
// (1-e^2) K_dv / (2 eps) for the spectral granular operator, (1-e) K_dv / eps
// for ES-BGK drag. Zero for elastic kinds.
double closure_sink_constant(OperatorKind kind, int dv, double b, double e, double eps);

// Kernel cache: deterministic file name, probe-or-precompute. A hit must
// match grid, lambda and restitution exactly; otherwise the kernel is
// recomputed (and written back when cache_dir is nonempty).
std::string kernel_cache_name(const VelocityGrid& grid, const CollisionParams& params);
std::shared_ptr<const SpectralKernel> obtain_kernel(const VelocityGrid& grid,
                                                    const CollisionParams& params, int quad_order,
                                                    const std::string& cache_dir);

// State + setup assembled from a config: grids, boundary conditions, kernel
// (spectral kinds), relaxation parameters and the closure sink. The datum is
// the uniform Maxwellian rho = 1, u = 0, T = 1 unless a scenario replaces it.
struct Simulation {
  SimState state;
  KineticSetup setup;
};
Simulation make_simulation(const RunConfig& cfg, const std::string& cache_dir = "");

// ---------------------------------------------------------------------------
// Space-homogeneous cooling: rescaled distribution under the spectral
// operator, scale factor from either the kinetic energy production (coupled)
// or the quasi-elastic closure ODE (uncoupled). The closure ODE integrates
// with classical RK4 and is compared against the closed-form decay
//   T(t) = T0 (1 + c t)^(-2),  c = (1-e^2) K_dv rho sqrt(T0) / (2 dv eps).
struct Test1Params {
  std::string mode = "uncoupled";  // coupled | uncoupled
  double e = 0.8;
  int dv = 2;
  int nv = 48;
  double V = 9.0;
  double eps = 1.0;
  double t_end = 50.0;
  double record_dt = 0.5;
  double dt_max = 0.05;
  std::vector<double> snap_times{0.5, 10.0, 50.0};
  int quad_order = 64;
  std::string cache_dir;
};

struct Test1Result {
  int dv = 0, nv = 0;
  double V = 0.0;
  std::vector<double> t;           // record times
  std::vector<double> energy;      // classical kinetic energy omega^2 E_g
  std::vector<double> omega;
  std::vector<double> energy_ode;     // RK4 closure energy (uncoupled; else empty)
  std::vector<double> energy_closed;  // closed-form decay from the discrete E(0)
  std::vector<double> snap_times;
  std::vector<std::vector<double>> snaps;      // g node values at snap_times
  std::vector<std::vector<double>> marginals;  // axis-0 marginal of g at snap_times
  std::vector<double> xi;                      // marginal abscissae
  std::vector<DiagnosticsRecord> series;
};

Test1Result run_test1(const Test1Params& p, const ThreadPool* pool = nullptr);

// ---------------------------------------------------------------------------
struct OscillationFitOptions {
  double u_min = 0.3;          // fit window in the cooling log-time u
  double u_max = 1.35;         // default window ends before the velocity-grid
                               // recurrence of the 32-point lattice fires
  double floor = 1e-12;        // L below this truncates the window
  double prominence = 0.08;    // required log L dip between adjacent peaks
};

// Damped acoustic oscillation of a small density wave over the cooling
// background. The sound speed tracks sqrt(T), so the acoustic phase is
// linear in the cooling log-time u(t) = integral of sqrt(T/T0): there the
// wave has fixed period 2 pi / (eta sqrt(1 + 2/dv)). The envelope of
// L(t) = ||rho - mean||_1 decays algebraically in t; against the log-time
// s = log(1 + (1-e) t) / (1-e) its late-time log envelope is a straight
// line of slope (1-e) beta.
struct Test2Params {
  double e = 0.9;
  double eps = 0.05;
  double L = 1.0;  // box length; the spatial domain is [0, L]
  BoundaryKind bc = BoundaryKind::periodic;
  int nx = 25;
  int nv = 32;
  double V = 8.0;
  double amp = 0.1;
  double t_end = 300.0;
  double record_dt = 0.01;
  double record_growth = 1.02;  // keeps samples per cycle fixed as the period stretches
  double K = 0.0;               // closure sink; 0 = derived from e and eps
  OscillationFitOptions fit;
  int quad_order = 64;
  std::string cache_dir;
};

struct OscillationFit {
  double slope = 0.0;          // envelope decay rate of log L versus s over the window
  double beta = 0.0;           // algebraic exponent slope / (1-e)
  double period = 0.0;         // spacing of successive L extrema in u; L repeats
                               // twice per acoustic cycle, so this is half the
                               // mode period
  double period_spread = 0.0;  // max relative deviation of the extrema spacings
  double frequency = 0.0;      // pi / period: the mode frequency in u,
                               // comparable to eta sqrt(1 + 2/dv)
  int peaks = 0;               // accepted peaks inside the window
};

// Peak detection on log L over the window u in [u_min, u_max]: strict
// smoothed maxima, merged unless separated by a dip of at least `prominence`.
// u accumulates sqrt(T) dt from the recorded energy, T = 2 E / (dv mass),
// so the acoustic phase advances linearly in it. The period comes from the
// extrema spacings in u, taking minima instead when they give the more
// regular train (near a wall the rectified peaks sit on the boundary-layer
// pedestal while the nodes stay sharp). The envelope slope is a least-squares
// line of log L against s through the peaks when at least three survive and
// through every window sample otherwise. Records after L first drops below
// `floor` are discarded.
OscillationFit extract_oscillation(std::span<const DiagnosticsRecord> series, double e, int dv,
                                   const OscillationFitOptions& opt = {});

struct Test2Result {
  std::vector<DiagnosticsRecord> series;
  OscillationFit fit;
  double eta = 0.0;                  // wavenumber of the surviving density mode
  double predicted_frequency = 0.0;  // eta sqrt(1 + 2/dv) at T = 1
  double cool_rate = 0.0;            // c in T = T0 / (1 + c t)^2 from the closure
};

Test2Result run_test2(const Test2Params& p, const ThreadPool* pool = nullptr);

// ---------------------------------------------------------------------------
// Granular slab between diffusive walls: cooling interior versus heated
// boundary layers. Profiles are normalized by instantaneous spatial means.
struct Test3Params {
  double e = 0.9;
  double eps = 0.1;
  double T_w = 1.0;
  double alpha = 1.0;
  int nx = 32;
  int nv = 32;
  double V = 8.0;
  double t_end = 2.0;
  double record_dt = 0.05;
  std::vector<double> profile_times{0.25, 0.75, 2.0};
  int quad_order = 64;
  std::string cache_dir;
};

struct ProfileSnapshot {
  double t = 0.0;
  std::vector<double> x, rho_norm, T_norm;
};

struct Test3Result {
  std::vector<DiagnosticsRecord> series;
  std::vector<ProfileSnapshot> profiles;
};

Test3Result run_test3(const Test3Params& p, const ThreadPool* pool = nullptr);

// ---------------------------------------------------------------------------
// Clustering on the 2d torus with the granular ES-BGK operator, random
// density datum (counter-based generator, reproducible from the seed).
struct Test4Params {
  double e = 0.99;
  double eps = 0.01;  // <= 0 = 1 - e
  std::uint64_t seed = 1234;
  double nu = -0.5;
  int nx = 32;
  int nv = 16;
  double V = 6.0;
  double t_end = 5.0;
  double record_dt = 0.05;
};

struct Test4Stats {
  double t = 0.0;
  double variance = 0.0;  // spatial variance of the kinetic density
  double max_rho = 0.0;
  double mean_T_kin = 0.0;
  double mean_T_hydro = 0.0;
  double rel_l1_rho = 0.0;  // kinetic vs moment-system density
};

struct Test4Result {
  std::vector<DiagnosticsRecord> series;
  std::vector<Test4Stats> stats;
  std::vector<double> rho_kin, rho_hydro;  // final fields
};

Test4Result run_test4(const Test4Params& p, const ThreadPool* pool = nullptr);

// Random density datum of the clustering run: 0.01 + 0.99 u(seed, cell).
double test4_density(std::uint64_t seed, std::uint64_t cell);

// ---------------------------------------------------------------------------
// Elastic blast wave: hot annulus datum, kinetic solution versus the
// internal moment system in the stiff-relaxation regime, open boundaries.
struct Test5Params {
  double eps = 0.05;
  double nu = 0.0;
  double tau_a = 0.925 * 3.14159265358979323846 / 2.0;
  int nx = 32;
  int nv = 16;
  double V = 6.0;
  double t_end = 0.1;
  double record_dt = 0.02;
};

struct Test5Result {
  std::vector<DiagnosticsRecord> series;
  std::vector<double> rho_kin, T_kin, ux_kin, uy_kin;  // classical moments at t_end
  std::vector<double> rho_hyd, T_hyd, ux_hyd, uy_hyd;
  double rel_l1_rho = 0.0, rel_l1_T = 0.0, rel_l1_u = 0.0;
  double symmetry_err = 0.0;  // x <-> y asymmetry relative to the field scale
};

Test5Result run_test5(const Test5Params& p, const ThreadPool* pool = nullptr);

// ---------------------------------------------------------------------------
// Space-homogeneous ES-BGK cooling helper (granular drag): diagnostics of
// the relaxation-only evolution, for decay-rate checks.
std::vector<DiagnosticsRecord> run_esbgk_cooling(double e, double eps, double nu, int dv, int nv,
                                                 double V, double t_end, double record_dt,
                                                 const ThreadPool* pool = nullptr);

// Runs the configured scenario, writing the diagnostics CSV, the effective
// config echo, and the per-scenario exports into cfg.out_dir.
void run_scenario(const RunConfig& cfg, const ThreadPool* pool = nullptr);

}  // namespace kinrescale
