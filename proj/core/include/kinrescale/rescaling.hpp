#pragma once

#include <vector>

#include "kinrescale/distribution_field.hpp"

namespace kinrescale {

// Velocity-scale tracker omega(t,x) with the derivatives the rescaled
// transport terms need. Invariant: omega > 0 everywhere; grad is stored
// per cell with dx components (cell-major).
struct ScalingField {
  explicit ScalingField(const SpatialGrid& grid);

  const SpatialGrid& grid() const { return grid_; }
  std::vector<double> omega;
  std::vector<double> domega_dt;
  std::vector<double> grad;  // cells * dx, row-major

  double grad_at(std::size_t cell, int axis) const {
    return grad[cell * static_cast<std::size_t>(grid_.dim()) +
                static_cast<std::size_t>(axis)];
  }

 private:
  SpatialGrid grid_;
};

// g(x, xi) = omega(x)^dv f(x, omega(x) xi), multilinear interpolation at the
// off-node points v = omega xi. Nodes mapping outside the classical box
// contribute zero. The remap is used for initialization and cross-checks
// only; the production loop stays in rescaled variables.
DistributionField to_rescaled(const DistributionField& f,
                              const ScalingField& omega);

// Inverse map, same interpolation contract: f(x, v) = omega^-dv g(x, v/omega).
DistributionField from_rescaled(const DistributionField& g,
                                const ScalingField& omega);

// Coefficient a(x, xi) multiplying g inside the velocity divergence of the
// rescaled equation:
//   a = (domega_dt/omega) xi + (xi . grad omega) xi
// The tensor contraction (xi (x) xi grad omega) is applied analytically.
// Only the first dx velocity components enter the dot product with grad.
// Returned layout: per cell, per velocity node, dv components (node-major).
std::vector<double> drift_coefficient(const ScalingField& omega,
                                      const VelocityGrid& grid);

enum class OperatorKind { none, elastic, inelastic, esbgk };

// Prefactor scaling the collision operator in rescaled variables:
// omega^lambda for the elastic VHS operator, omega for granular hard
// spheres. ES-BGK carries its own omega dependence and takes 1 here.
double collision_scale(double omega, OperatorKind kind, double lambda);

}  // namespace kinrescale
