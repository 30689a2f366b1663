#include "kinrescale/distribution_field.hpp"

namespace kinrescale {

DistributionField::DistributionField(SpatialGrid x, VelocityGrid v, Variable var)
    : x_(x), v_(v), var_(var), data_(x.size() * v.size(), 0.0) {}

double DistributionField::total_mass() const {
  // Fixed-order accumulation: diagnostics must not depend on thread count.
  double s = 0.0;
  for (double w : data_) s += w;
  return s * x_.cell_volume() * v_.cell_volume();
}

}  // namespace kinrescale
