#include "kinrescale/velocity_grid.hpp"

#include <stdexcept>
#include <string>

#include "kinrescale/errors.hpp"

namespace kinrescale {

namespace {
void validate(int dim, double extent, const std::array<int, 3>& n) {
  if (dim < 1 || dim > 3) throw ConfigError("velocity dimension must be 1, 2 or 3");
  if (!(extent > 0.0)) throw ConfigError("velocity box half-width must be positive");
  for (int a = 0; a < dim; ++a) {
    if (n[a] < 4 || n[a] % 2 != 0)
      throw ConfigError("velocity points per axis must be even and >= 4, got " +
                        std::to_string(n[a]));
  }
}
}  // namespace

VelocityGrid::VelocityGrid(int dim, double extent, int n_per_axis)
    : VelocityGrid(dim, extent, std::array<int, 3>{n_per_axis, n_per_axis, n_per_axis}) {}

VelocityGrid::VelocityGrid(int dim, double extent, const std::array<int, 3>& n_per_axis)
    : dim_(dim), extent_(extent), n_{1, 1, 1} {
  validate(dim, extent, n_per_axis);
  for (int a = 0; a < dim; ++a) n_[a] = n_per_axis[a];
  size_ = 1;
  for (int a = 0; a < dim_; ++a) size_ *= static_cast<std::size_t>(n_[a]);
}

bool VelocityGrid::isotropic() const {
  for (int a = 1; a < dim_; ++a)
    if (n_[a] != n_[0]) return false;
  return true;
}

double VelocityGrid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= spacing(a);
  return v;
}

std::size_t VelocityGrid::flat(const std::array<int, 3>& idx) const {
  std::size_t f = 0;
  for (int a = 0; a < dim_; ++a) f = f * n_[a] + idx[a];
  return f;
}

std::array<int, 3> VelocityGrid::unflat(std::size_t f) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(f % n_[a]);
    f /= n_[a];
  }
  return idx;
}

std::array<double, 3> VelocityGrid::coords(std::size_t f) const {
  const auto idx = unflat(f);
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) c[a] = node(a, idx[a]);
  return c;
}

std::size_t VelocityGrid::stride(int axis) const {
  std::size_t s = 1;
  for (int a = dim_ - 1; a > axis; --a) s *= n_[a];
  return s;
}

}  // namespace kinrescale
