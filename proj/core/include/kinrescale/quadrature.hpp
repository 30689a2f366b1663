#pragma once

#include <vector>

namespace kinrescale {

// Gauss-Legendre nodes/weights on [a, b]. Newton iteration on P_n, good to
// machine precision for n up to a few hundred.
struct GaussRule {
  std::vector<double> x, w;
};
GaussRule gauss_legendre(int n, double a, double b);

// Piecewise-Chebyshev evaluator for the Bessel function J0 on [0, z_max].
// Built once from the integral representation
//   J0(z) = (1/pi) int_0^pi cos(z sin t) dt
// with a trapezoid rule (spectrally convergent for this integrand), then
// evaluated by Clenshaw recurrence. Absolute error ~1e-14, roughly 100x faster
// than std::cyl_bessel_j on this toolchain.
class FastJ0 {
 public:
  explicit FastJ0(double z_max);
  double operator()(double z) const;
  double z_max() const { return panel_width_ * static_cast<double>(n_panels_); }

 private:
  static constexpr int kDegree = 20;
  double panel_width_;
  int n_panels_;
  std::vector<double> coef_;  // n_panels_ * (kDegree+1)
};

// Reference J0 by the same integral representation, trapezoid with enough
// points for full accuracy at the given argument. Slow; used to build FastJ0
// panels and in tests.
double bessel_j0_reference(double z);

}  // namespace kinrescale
