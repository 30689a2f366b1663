#include "kinrescale/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kinrescale/errors.hpp"

namespace kinrescale {

static_assert(std::endian::native == std::endian::little,
              "snapshot format is little-endian; this build targets a little-endian host");

namespace {

constexpr char kMagic[4] = {'K', 'R', 'S', 'N'};
constexpr std::uint32_t kVersion = 1;
enum : std::uint32_t { kKindDistribution = 0, kKindHydro = 1, kKindScaling = 2 };

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SolverError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SolverError("cannot open '" + path + "' for reading");
  return in;
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ofstream& out, const double* v, std::size_t n) {
  out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * sizeof(double)));
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw SolverError("truncated snapshot '" + path + "'");
  return v;
}

void get_f64(std::ifstream& in, double* v, std::size_t n, const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(n * sizeof(double))))
    throw SolverError("truncated snapshot '" + path + "'");
}

struct Header {
  std::uint32_t kind = 0, dx = 0, dv = 0;
};

void write_header(std::ofstream& out, std::uint32_t kind, int dx, int dv) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, kind);
  put_u32(out, static_cast<std::uint32_t>(dx));
  put_u32(out, static_cast<std::uint32_t>(dv));
}

Header read_header(std::ifstream& in, const std::string& path, std::uint32_t want_kind) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw SolverError("'" + path + "' is not a KRSN snapshot");
  if (get_u32(in, path) != kVersion) throw SolverError("unsupported snapshot version in '" + path + "'");
  Header h;
  h.kind = get_u32(in, path);
  if (h.kind != want_kind) throw SolverError("snapshot kind mismatch in '" + path + "'");
  h.dx = get_u32(in, path);
  h.dv = get_u32(in, path);
  if (h.dx < 1 || h.dx > 2 || h.dv < 1 || h.dv > 3)
    throw SolverError("snapshot dimensions out of range in '" + path + "'");
  return h;
}

SpatialGrid read_spatial_grid(std::ifstream& in, const std::string& path, int dx,
                              const std::array<int, 2>& n) {
  std::array<std::array<double, 2>, 2> bounds{{{0.0, 1.0}, {0.0, 1.0}}};
  for (int a = 0; a < dx; ++a) get_f64(in, bounds[a].data(), 2, path);
  return SpatialGrid(dx, n, bounds);
}

}  // namespace

void write_timeseries(const std::string& path, std::span<const DiagnosticsRecord> records,
                      int dv) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw SolverError("cannot open '" + path + "' for writing");
  static const char* comp[3] = {"momentum_x", "momentum_y", "momentum_z"};
  std::fputs("t,mass", f);
  for (int a = 0; a < dv; ++a) std::fprintf(f, ",%s", comp[a]);
  std::fputs(",energy,L1_density_dev\n", f);
  for (const DiagnosticsRecord& r : records) {
    std::fprintf(f, "%.17g,%.17g", r.t, r.mass);
    for (int a = 0; a < dv; ++a) std::fprintf(f, ",%.17g", r.momentum[a]);
    std::fprintf(f, ",%.17g,%.17g\n", r.energy, r.l1_density_dev);
  }
  if (std::fclose(f) != 0) throw SolverError("write failure on '" + path + "'");
}

std::vector<DiagnosticsRecord> read_timeseries(const std::string& path, int* dv_out) {
  std::ifstream in(path);
  if (!in) throw SolverError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw SolverError("empty timeseries '" + path + "'");
  int dv = 0;
  {
    std::istringstream hs(line);
    std::string name;
    while (std::getline(hs, name, ','))
      if (name.rfind("momentum_", 0) == 0) ++dv;
  }
  if (dv < 1 || dv > 3) throw SolverError("bad timeseries header in '" + path + "'");
  if (dv_out) *dv_out = dv;

  std::vector<DiagnosticsRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ls, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() != static_cast<std::size_t>(4 + dv))
      throw SolverError("bad timeseries row in '" + path + "'");
    DiagnosticsRecord r;
    r.t = vals[0];
    r.mass = vals[1];
    for (int a = 0; a < dv; ++a) r.momentum[a] = vals[2 + a];
    r.energy = vals[2 + dv];
    r.l1_density_dev = vals[3 + dv];
    records.push_back(r);
  }
  return records;
}

void write_snapshot(const std::string& path, const DistributionField& f) {
  const SpatialGrid& xg = f.xgrid();
  const VelocityGrid& vg = f.vgrid();
  std::ofstream out = open_out(path);
  write_header(out, kKindDistribution, xg.dim(), vg.dim());
  for (int a = 0; a < xg.dim(); ++a) put_u32(out, static_cast<std::uint32_t>(xg.cells(a)));
  for (int a = 0; a < vg.dim(); ++a) put_u32(out, static_cast<std::uint32_t>(vg.n(a)));
  for (int a = 0; a < xg.dim(); ++a) {
    const double b[2] = {xg.lo(a), xg.hi(a)};
    put_f64(out, b, 2);
  }
  const double ext = vg.extent();
  put_f64(out, &ext, 1);
  put_f64(out, f.data().data(), f.data().size());
  if (!out) throw SolverError("write failure on '" + path + "'");
}

void write_snapshot(const std::string& path, const HydroState& h) {
  const SpatialGrid& xg = h.grid();
  const int dv = h.dv();
  std::ofstream out = open_out(path);
  write_header(out, kKindHydro, xg.dim(), dv);
  for (int a = 0; a < xg.dim(); ++a) put_u32(out, static_cast<std::uint32_t>(xg.cells(a)));
  for (int a = 0; a < xg.dim(); ++a) {
    const double b[2] = {xg.lo(a), xg.hi(a)};
    put_f64(out, b, 2);
  }
  for (std::size_t c = 0; c < xg.size(); ++c) {
    put_f64(out, &h.rho[c], 1);
    put_f64(out, &h.m[c * dv], static_cast<std::size_t>(dv));
    put_f64(out, &h.E[c], 1);
  }
  if (!out) throw SolverError("write failure on '" + path + "'");
}

void write_snapshot(const std::string& path, const ScalingField& s) {
  const SpatialGrid& xg = s.grid();
  const int dx = xg.dim();
  std::ofstream out = open_out(path);
  write_header(out, kKindScaling, dx, dx);
  for (int a = 0; a < dx; ++a) put_u32(out, static_cast<std::uint32_t>(xg.cells(a)));
  for (int a = 0; a < dx; ++a) {
    const double b[2] = {xg.lo(a), xg.hi(a)};
    put_f64(out, b, 2);
  }
  for (std::size_t c = 0; c < xg.size(); ++c) {
    put_f64(out, &s.omega[c], 1);
    put_f64(out, &s.domega_dt[c], 1);
    put_f64(out, &s.grad[c * dx], static_cast<std::size_t>(dx));
  }
  if (!out) throw SolverError("write failure on '" + path + "'");
}

DistributionField read_distribution_snapshot(const std::string& path) {
  std::ifstream in = open_in(path);
  const Header h = read_header(in, path, kKindDistribution);
  std::array<int, 2> nx{1, 1};
  for (std::uint32_t a = 0; a < h.dx; ++a) nx[a] = static_cast<int>(get_u32(in, path));
  std::array<int, 3> nv{1, 1, 1};
  for (std::uint32_t a = 0; a < h.dv; ++a) nv[a] = static_cast<int>(get_u32(in, path));
  const SpatialGrid xg = read_spatial_grid(in, path, static_cast<int>(h.dx), nx);
  double ext = 0.0;
  get_f64(in, &ext, 1, path);
  DistributionField f(xg, VelocityGrid(static_cast<int>(h.dv), ext, nv), Variable::rescaled);
  get_f64(in, f.data().data(), f.data().size(), path);
  return f;
}

HydroState read_hydro_snapshot(const std::string& path) {
  std::ifstream in = open_in(path);
  const Header h = read_header(in, path, kKindHydro);
  std::array<int, 2> nx{1, 1};
  for (std::uint32_t a = 0; a < h.dx; ++a) nx[a] = static_cast<int>(get_u32(in, path));
  const SpatialGrid xg = read_spatial_grid(in, path, static_cast<int>(h.dx), nx);
  HydroState s(xg, static_cast<int>(h.dv));
  const int dv = s.dv();
  for (std::size_t c = 0; c < xg.size(); ++c) {
    get_f64(in, &s.rho[c], 1, path);
    get_f64(in, &s.m[c * dv], static_cast<std::size_t>(dv), path);
    get_f64(in, &s.E[c], 1, path);
  }
  return s;
}

ScalingField read_scaling_snapshot(const std::string& path) {
  std::ifstream in = open_in(path);
  const Header h = read_header(in, path, kKindScaling);
  std::array<int, 2> nx{1, 1};
  for (std::uint32_t a = 0; a < h.dx; ++a) nx[a] = static_cast<int>(get_u32(in, path));
  const SpatialGrid xg = read_spatial_grid(in, path, static_cast<int>(h.dx), nx);
  ScalingField s(xg);
  const int dx = xg.dim();
  for (std::size_t c = 0; c < xg.size(); ++c) {
    get_f64(in, &s.omega[c], 1, path);
    get_f64(in, &s.domega_dt[c], 1, path);
    get_f64(in, &s.grad[c * dx], static_cast<std::size_t>(dx), path);
  }
  return s;
}

void write_field_ascii(const std::string& path, const SpatialGrid& grid,
                       std::span<const double> cell_values) {
  if (cell_values.size() != grid.size())
    throw SolverError("field export size mismatch for '" + path + "'");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw SolverError("cannot open '" + path + "' for writing");
  if (grid.dim() == 1) {
    for (int i = 0; i < grid.cells(0); ++i)
      std::fprintf(f, "%.17g %.17g\n", grid.center(0, i), cell_values[grid.flat(i)]);
  } else {
    for (int i = 0; i < grid.cells(0); ++i)
      for (int j = 0; j < grid.cells(1); ++j)
        std::fprintf(f, "%.17g %.17g %.17g\n", grid.center(0, i), grid.center(1, j),
                     cell_values[grid.flat(i, j)]);
  }
  if (std::fclose(f) != 0) throw SolverError("write failure on '" + path + "'");
}

void write_table(const std::string& path, const std::vector<std::string>& names,
                 const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) throw SolverError("table export: name/column mismatch");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw SolverError("cannot open '" + path + "' for writing");
  std::fputc('#', f);
  for (const std::string& n : names) std::fprintf(f, " %s", n.c_str());
  std::fputc('\n', f);
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& col : columns)
    if (col.size() != rows) {
      std::fclose(f);
      throw SolverError("table export: ragged columns");
    }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      std::fprintf(f, c ? " %.17g" : "%.17g", columns[c][r]);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw SolverError("write failure on '" + path + "'");
}

}  // namespace kinrescale
