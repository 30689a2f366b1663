#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "kinrescale/collision.hpp"
#include "kinrescale/distribution_field.hpp"
#include "kinrescale/esbgk.hpp"
#include "kinrescale/hydro.hpp"
#include "kinrescale/parallel.hpp"
#include "kinrescale/transport.hpp"

namespace kinrescale {

// Everything the splitting loop needs besides the evolving state.
struct KineticSetup {
  OperatorKind kind = OperatorKind::none;
  CollisionParams collision;                     // spectral operators
  std::shared_ptr<const SpectralKernel> kernel;  // required for spectral kinds
  EsbgkParams esbgk;                             // relaxation operator
  std::array<WallSpec, 4> walls{};               // axis * 2 + side
  SourceSpec source;                             // moment-system closure source
  double eps = 1.0;                              // Knudsen number
};

struct SimState {
  SimState(const SpatialGrid& xgrid, const VelocityGrid& vgrid);

  DistributionField g;  // rescaled distribution on the xi grid
  HydroState hydro;     // uncoupled moment system driving the scale
  ScalingField omega;
  double t = 0.0;
  std::uint64_t step_count = 0;
};

// Overwrites the moment system with the classical-variable moments of g,
// using the current omega. Used at initialization and for cross-checks.
void sync_hydro_from_kinetic(SimState& state);

struct DiagnosticsRecord {
  double t = 0.0;
  double mass = 0.0;
  std::array<double, 3> momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
  double l1_density_dev = 0.0;  // vs the instantaneous spatial mean density
};

// Classical-variable invariants of g, accumulated in a fixed cell order so
// the result does not depend on the thread count.
DiagnosticsRecord diagnose(const SimState& state);

// Largest stable dt at the current state: hydro CFL 0.45, transport CFL 0.9,
// collision/relaxation explicit-update budget 0.5, capped by max_dt.
double suggest_dt(const SimState& state, const KineticSetup& setup, double max_dt);

// One splitting step of size dt:
//   1. moment system (WENO5 + SSP-RK3, halving retries on positivity loss)
//      and the scale field derivatives,
//   2. spatial transport at speed omega xi,
//   3. velocity drift from the scale derivatives,
//   4. collision or relaxation update, sub-cycled where stiff.
// The spatial sweep order alternates with step parity so the axis-splitting
// error does not accumulate with a fixed orientation.
void step(SimState& state, const KineticSetup& setup, double dt,
          const ThreadPool* pool = nullptr);

}  // namespace kinrescale
