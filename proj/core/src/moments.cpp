#include "kinrescale/moments.hpp"

#include <cmath>
#include <vector>

#include "kinrescale/errors.hpp"

namespace kinrescale {

MomentSet moments(std::span<const double> slice, const VelocityGrid& grid, double rho_floor) {
  const int d = grid.dim();
  const double w = grid.cell_volume();
  MomentSet m;

  // One pass for rho, momentum and energy; node coordinates via per-axis
  // counters, cheaper than unflat per node.
  std::array<int, 3> idx{0, 0, 0};
  std::array<double, 3> v{0.0, 0.0, 0.0};
  for (int a = 0; a < d; ++a) v[a] = grid.node(a, 0);
  double mom[3] = {0.0, 0.0, 0.0};
  double e2 = 0.0;

  const std::size_t n = grid.size();
  for (std::size_t f = 0; f < n; ++f) {
    const double g = slice[f];
    m.rho += g;
    double v2 = 0.0;
    for (int a = 0; a < d; ++a) {
      mom[a] += v[a] * g;
      v2 += v[a] * v[a];
    }
    e2 += v2 * g;
    // advance odometer (last axis fastest)
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < grid.n(a)) {
        v[a] = grid.node(a, idx[a]);
        break;
      }
      idx[a] = 0;
      v[a] = grid.node(a, 0);
    }
  }

  m.rho *= w;
  m.E = 0.5 * e2 * w;

  if (m.rho < rho_floor) {
    m.degenerate = true;
    return m;  // u, theta, T stay zero
  }

  for (int a = 0; a < d; ++a) m.u[a] = mom[a] * w / m.rho;

  // Second pass for the centered pressure tensor.
  for (int a = 0; a < d; ++a) idx[a] = 0, v[a] = grid.node(a, 0);
  std::array<std::array<double, 3>, 3> th{};
  for (std::size_t f = 0; f < n; ++f) {
    const double g = slice[f];
    double c[3];
    for (int a = 0; a < d; ++a) c[a] = v[a] - m.u[a];
    for (int a = 0; a < d; ++a)
      for (int bb = a; bb < d; ++bb) th[a][bb] += c[a] * c[bb] * g;
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < grid.n(a)) {
        v[a] = grid.node(a, idx[a]);
        break;
      }
      idx[a] = 0;
      v[a] = grid.node(a, 0);
    }
  }
  double tr = 0.0;
  for (int a = 0; a < d; ++a) {
    for (int bb = a; bb < d; ++bb) {
      const double t = th[a][bb] * w / m.rho;
      m.theta[a][bb] = t;
      m.theta[bb][a] = t;
    }
    tr += m.theta[a][a];
  }
  m.T = tr / d;
  return m;
}

void eval_maxwellian(std::span<double> out, const VelocityGrid& grid, double rho,
                     const std::array<double, 3>& u, double T) {
  if (!(T > 0.0)) throw SolverError("eval_maxwellian: temperature must be positive");
  const int d = grid.dim();
  const double norm = rho / std::pow(2.0 * M_PI * T, 0.5 * d);
  const double inv2T = 0.5 / T;

  // Separable exponential: per-axis factor tables, then the product.
  std::array<std::vector<double>, 3> fac;
  for (int a = 0; a < d; ++a) {
    fac[a].resize(grid.n(a));
    for (int k = 0; k < grid.n(a); ++k) {
      const double c = grid.node(a, k) - u[a];
      fac[a][k] = std::exp(-c * c * inv2T);
    }
  }

  std::array<int, 3> idx{0, 0, 0};
  const std::size_t n = grid.size();
  for (std::size_t f = 0; f < n; ++f) {
    double p = norm;
    for (int a = 0; a < d; ++a) p *= fac[a][idx[a]];
    out[f] = p;
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < grid.n(a)) break;
      idx[a] = 0;
    }
  }
}

}  // namespace kinrescale
