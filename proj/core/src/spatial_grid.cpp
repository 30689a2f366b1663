#include "kinrescale/spatial_grid.hpp"

#include "kinrescale/errors.hpp"

namespace kinrescale {

std::string to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::periodic: return "periodic";
    case BoundaryKind::specular: return "specular";
    case BoundaryKind::diffusive: return "diffusive";
    case BoundaryKind::absorbing: return "absorbing";
  }
  return "?";
}

BoundaryKind boundary_kind_from_string(const std::string& s) {
  if (s == "periodic") return BoundaryKind::periodic;
  if (s == "specular") return BoundaryKind::specular;
  if (s == "diffusive") return BoundaryKind::diffusive;
  if (s == "absorbing") return BoundaryKind::absorbing;
  throw ConfigError("unknown boundary kind '" + s + "'");
}

SpatialGrid::SpatialGrid(int dim, const std::array<int, 2>& cells,
                         const std::array<std::array<double, 2>, 2>& bounds)
    : dim_(dim), n_{1, 1}, bounds_(bounds) {
  if (dim < 1 || dim > 2) throw ConfigError("spatial dimension must be 1 or 2");
  for (int a = 0; a < dim; ++a) {
    if (cells[a] < 1) throw ConfigError("spatial cell count must be >= 1");
    if (!(bounds[a][1] > bounds[a][0])) throw ConfigError("spatial bounds must be increasing");
    n_[a] = cells[a];
  }
  size_ = static_cast<std::size_t>(n_[0]) * n_[1];
  for (auto& ax : bc_) ax = {BoundaryKind::periodic, BoundaryKind::periodic};
}

SpatialGrid SpatialGrid::homogeneous() {
  return SpatialGrid(1, {1, 1}, {{{0.0, 1.0}, {0.0, 1.0}}});
}

double SpatialGrid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= spacing(a);
  return v;
}

void SpatialGrid::set_bc_all(BoundaryKind k) {
  for (int a = 0; a < dim_; ++a) bc_[a] = {k, k};
}

std::array<int, 2> SpatialGrid::unflat(std::size_t f) const {
  if (dim_ == 1) return {static_cast<int>(f), 0};
  return {static_cast<int>(f / n_[1]), static_cast<int>(f % n_[1])};
}

}  // namespace kinrescale
