#pragma once

#include <span>
#include <string>
#include <vector>

#include "kinrescale/driver.hpp"

namespace kinrescale {

// Diagnostics time series as CSV. Header names the momentum components up to
// dv: "t,mass,momentum_x[,momentum_y[,momentum_z]],energy,L1_density_dev".
// Values print at 17 significant digits so a read-back is bit-identical.
void write_timeseries(const std::string& path, std::span<const DiagnosticsRecord> records,
                      int dv);
std::vector<DiagnosticsRecord> read_timeseries(const std::string& path, int* dv_out = nullptr);

// Binary snapshots, magic "KRSN", little-endian:
//   u32 version (1), u32 kind (0 distribution, 1 hydro, 2 scaling),
//   u32 dx, u32 dv, u32 sizes (dx spatial, plus dv velocity for kind 0),
//   f64 bounds (lo:hi per spatial axis; velocity extent appended for kind 0),
//   f64 payload, row-major in the in-memory layout:
//     distribution  cell-major node values,
//     hydro         rho, m[0..dv-1], E per cell,
//     scaling       omega, domega_dt, grad[0..dx-1] per cell.
// Boundary kinds are not recorded; readers default every face to periodic.
void write_snapshot(const std::string& path, const DistributionField& f);
void write_snapshot(const std::string& path, const HydroState& h);
void write_snapshot(const std::string& path, const ScalingField& s);

DistributionField read_distribution_snapshot(const std::string& path);
HydroState read_hydro_snapshot(const std::string& path);
ScalingField read_scaling_snapshot(const std::string& path);

// Plain-text field export: one row per cell, "x value" (1d) or
// "x y value" (2d), 17 significant digits, for plotting.
void write_field_ascii(const std::string& path, const SpatialGrid& grid,
                       std::span<const double> cell_values);

// Generic whitespace table with a '#'-prefixed header line; used for
// profiles, marginals and fit summaries.
void write_table(const std::string& path, const std::vector<std::string>& names,
                 const std::vector<std::vector<double>>& columns);

}  // namespace kinrescale
