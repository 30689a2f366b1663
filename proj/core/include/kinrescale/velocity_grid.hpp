#pragma once

#include <array>
#include <cstddef>

namespace kinrescale {

// Uniform cell-centered velocity grid on the box [-V,V]^dim.
// Nodes along an axis sit at xi_k = -V + (k + 1/2) * h with h = 2V/N, so the
// node set is symmetric under xi -> -xi (node k maps to node N-1-k) and xi = 0
// is never a node. Per-axis counts may differ (anisotropic resolution); the box
// half-width V is shared by all axes.
class VelocityGrid {
 public:
  VelocityGrid(int dim, double extent, int n_per_axis);
  VelocityGrid(int dim, double extent, const std::array<int, 3>& n_per_axis);

  int dim() const { return dim_; }
  double extent() const { return extent_; }
  int n(int axis) const { return n_[axis]; }
  bool isotropic() const;

  std::size_t size() const { return size_; }                    // total node count
  double spacing(int axis) const { return 2.0 * extent_ / n_[axis]; }
  double node(int axis, int k) const { return -extent_ + (k + 0.5) * spacing(axis); }
  double cell_volume() const;                                   // prod_axis spacing

  // Row-major flattening, last axis fastest.
  std::size_t flat(const std::array<int, 3>& idx) const;
  std::array<int, 3> unflat(std::size_t f) const;

  // Full coordinates of a flat node index (unused trailing components zero).
  std::array<double, 3> coords(std::size_t f) const;

  // Stride of one step along `axis` in the flat ordering.
  std::size_t stride(int axis) const;

  bool operator==(const VelocityGrid& o) const {
    return dim_ == o.dim_ && extent_ == o.extent_ && n_ == o.n_;
  }

 private:
  int dim_;
  double extent_;
  std::array<int, 3> n_;
  std::size_t size_;
};

}  // namespace kinrescale
