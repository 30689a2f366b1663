#pragma once

#include <span>
#include <vector>

#include "kinrescale/spatial_grid.hpp"
#include "kinrescale/velocity_grid.hpp"

namespace kinrescale {

// Tags whether node values sample f(t,x,v) or the rescaled g(t,x,xi), xi = v/omega.
enum class Variable { classical, rescaled };

// Phase-space node values, spatial-major / velocity-minor, both row-major.
// This layout is what the binary snapshot format stores, so it is part of the
// external contract and must not change.
class DistributionField {
 public:
  DistributionField(SpatialGrid x, VelocityGrid v, Variable var);

  const SpatialGrid& xgrid() const { return x_; }
  const VelocityGrid& vgrid() const { return v_; }
  Variable variable() const { return var_; }
  void set_variable(Variable v) { var_ = v; }

  std::span<double> slice(std::size_t cell) {
    return {data_.data() + cell * v_.size(), v_.size()};
  }
  std::span<const double> slice(std::size_t cell) const {
    return {data_.data() + cell * v_.size(), v_.size()};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double total_mass() const;  // sum over all nodes * dx^dx * dxi^dv

 private:
  SpatialGrid x_;
  VelocityGrid v_;
  Variable var_;
  std::vector<double> data_;
};

}  // namespace kinrescale
