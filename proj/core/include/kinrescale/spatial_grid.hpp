#pragma once

#include <array>
#include <cstddef>
#include <string>

namespace kinrescale {

enum class BoundaryKind { periodic, specular, diffusive, absorbing };

std::string to_string(BoundaryKind k);
BoundaryKind boundary_kind_from_string(const std::string& s);

// Uniform cell-centered spatial mesh in 1 or 2 dimensions with a boundary kind
// attached to each face. A single-cell periodic grid stands in for the
// space-homogeneous setting.
class SpatialGrid {
 public:
  SpatialGrid(int dim, const std::array<int, 2>& cells,
              const std::array<std::array<double, 2>, 2>& bounds);

  static SpatialGrid homogeneous();

  int dim() const { return dim_; }
  int cells(int axis) const { return n_[axis]; }
  std::size_t size() const { return size_; }
  double lo(int axis) const { return bounds_[axis][0]; }
  double hi(int axis) const { return bounds_[axis][1]; }
  double spacing(int axis) const { return (bounds_[axis][1] - bounds_[axis][0]) / n_[axis]; }
  double center(int axis, int i) const { return bounds_[axis][0] + (i + 0.5) * spacing(axis); }
  double cell_volume() const;

  BoundaryKind bc(int axis, int side) const { return bc_[axis][side]; }
  void set_bc(int axis, int side, BoundaryKind k) { bc_[axis][side] = k; }
  void set_bc_all(BoundaryKind k);

  std::size_t flat(int i, int j = 0) const { return static_cast<std::size_t>(i) * (dim_ == 2 ? n_[1] : 1) + j; }
  std::array<int, 2> unflat(std::size_t f) const;

 private:
  int dim_;
  std::array<int, 2> n_;
  std::array<std::array<double, 2>, 2> bounds_;
  std::array<std::array<BoundaryKind, 2>, 2> bc_;
  std::size_t size_;
};

}  // namespace kinrescale
