#include "kinrescale/rescaling.hpp"

#include <cmath>
#include <cstdio>

#include "kinrescale/errors.hpp"

namespace kinrescale {

ScalingField::ScalingField(const SpatialGrid& grid) : grid_(grid) {
  const std::size_t n = grid_.size();
  omega.assign(n, 1.0);
  domega_dt.assign(n, 0.0);
  grad.assign(n * static_cast<std::size_t>(grid_.dim()), 0.0);
}

namespace {

// Samples one velocity slice at the scaled point w = scale * xi_target by
// multilinear interpolation; points outside the node hull return 0.
double sample_scaled(const double* slice, const VelocityGrid& grid,
                     const std::array<double, 3>& w) {
  const int dv = grid.dim();
  int base[3] = {0, 0, 0};
  double frac[3] = {0.0, 0.0, 0.0};
  for (int a = 0; a < dv; ++a) {
    // Node coordinates: xi_k = -V + (k + 1/2) dxi.
    const double p = (w[static_cast<std::size_t>(a)] + grid.extent()) /
                         grid.spacing(a) - 0.5;
    const double fl = std::floor(p);
    base[a] = static_cast<int>(fl);
    frac[a] = p - fl;
    if (base[a] < -1 || base[a] > grid.n(a) - 1) return 0.0;
  }
  double acc = 0.0;
  const int corners = 1 << dv;
  for (int c = 0; c < corners; ++c) {
    double wgt = 1.0;
    std::size_t flat = 0;
    bool inside = true;
    for (int a = 0; a < dv; ++a) {
      const int off = (c >> a) & 1;
      const int idx = base[a] + off;
      if (idx < 0 || idx >= grid.n(a)) {
        inside = false;
        break;
      }
      wgt *= off ? frac[a] : 1.0 - frac[a];
      flat = flat * static_cast<std::size_t>(grid.n(a)) +
             static_cast<std::size_t>(idx);
    }
    // flat accumulated in axis order matches the row-major node layout.
    if (inside) acc += wgt * slice[flat];
  }
  return acc;
}

DistributionField remap(const DistributionField& in, const ScalingField& om,
                        bool forward) {
  const VelocityGrid& vg = in.vgrid();
  const int dv = vg.dim();
  DistributionField out(in.xgrid(), vg,
                        forward ? Variable::rescaled : Variable::classical);
  const std::size_t cells = in.xgrid().size();
  const std::size_t nv = vg.size();
  for (std::size_t c = 0; c < cells; ++c) {
    const double w = om.omega[c];
    if (!(w > 0.0)) throw SolverError("rescaling: omega must be positive");
    // forward: g(xi) = w^dv f(w xi); inverse: f(v) = w^-dv g(v / w).
    const double scale = forward ? w : 1.0 / w;
    const double amp = std::pow(scale, dv);
    const double* src = in.slice(c).data();
    double* dst = out.slice(c).data();
    for (std::size_t k = 0; k < nv; ++k) {
      std::array<double, 3> xi = vg.coords(k);
      for (int a = 0; a < dv; ++a) xi[static_cast<std::size_t>(a)] *= scale;
      dst[k] = amp * sample_scaled(src, vg, xi);
    }
  }
  // Mass audit of the interpolation: the remap should preserve the discrete
  // mass up to interpolation and box-clipping error.
  const double m_in = in.total_mass();
  const double m_out = out.total_mass();
  if (m_in > 0.0 && m_out < 0.999 * m_in) {
    std::fprintf(stderr,
                 "warning: velocity rescaling remap kept %.4f%% of the mass\n",
                 100.0 * m_out / m_in);
  }
  return out;
}

}  // namespace

DistributionField to_rescaled(const DistributionField& f,
                              const ScalingField& omega) {
  return remap(f, omega, true);
}

DistributionField from_rescaled(const DistributionField& g,
                                const ScalingField& omega) {
  return remap(g, omega, false);
}

std::vector<double> drift_coefficient(const ScalingField& omega,
                                      const VelocityGrid& grid) {
  const int dx = omega.grid().dim();
  const int dv = grid.dim();
  const std::size_t cells = omega.grid().size();
  const std::size_t nv = grid.size();
  std::vector<double> a(cells * nv * static_cast<std::size_t>(dv), 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    const double rate = omega.domega_dt[c] / omega.omega[c];
    double* ac = &a[c * nv * static_cast<std::size_t>(dv)];
    for (std::size_t k = 0; k < nv; ++k) {
      const std::array<double, 3> xi = grid.coords(k);
      double mu = rate;
      for (int b = 0; b < dx; ++b)
        mu += xi[static_cast<std::size_t>(b)] * omega.grad_at(c, b);
      for (int comp = 0; comp < dv; ++comp)
        ac[k * static_cast<std::size_t>(dv) + static_cast<std::size_t>(comp)] =
            mu * xi[static_cast<std::size_t>(comp)];
    }
  }
  return a;
}

double collision_scale(double omega, OperatorKind kind, double lambda) {
  switch (kind) {
    case OperatorKind::elastic:
      return std::pow(omega, lambda);
    case OperatorKind::inelastic:
      return omega;  // hard spheres, lambda = 1
    case OperatorKind::esbgk:
    case OperatorKind::none:
      return 1.0;
  }
  return 1.0;
}

}  // namespace kinrescale
