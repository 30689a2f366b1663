#include "kinrescale/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace kinrescale {

GaussRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussRule rule;
  rule.x.resize(static_cast<std::size_t>(n));
  rule.w.resize(static_cast<std::size_t>(n));
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi initial guess for the i-th root of P_n on (-1, 1).
    double z = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Recurrence for P_n(z); p1 = P_n, p2 = P_{n-1}.
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    rule.x[static_cast<std::size_t>(i)] = mid - half * z;
    rule.x[static_cast<std::size_t>(n - 1 - i)] = mid + half * z;
    const double w = 2.0 * half / ((1.0 - z * z) * pp * pp);
    rule.w[static_cast<std::size_t>(i)] = w;
    rule.w[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return rule;
}

double bessel_j0_reference(double z) {
  // Trapezoid on [0, pi] for a periodic-extension-smooth integrand converges
  // spectrally; 64 + |z| points is far past convergence for double precision.
  const int m = 64 + static_cast<int>(std::abs(z));
  const double h = M_PI / m;
  double sum = 0.5 * (std::cos(0.0) + std::cos(z * std::sin(M_PI)));
  for (int j = 1; j < m; ++j) sum += std::cos(z * std::sin(h * j));
  return sum * h / M_PI;
}

FastJ0::FastJ0(double z_max) {
  if (!(z_max > 0.0)) throw std::invalid_argument("FastJ0: z_max must be > 0");
  // Panels of width ~2 resolve the oscillation of J0 with a degree-20 fit.
  n_panels_ = static_cast<int>(std::ceil(z_max / 2.0));
  panel_width_ = z_max / n_panels_;
  const int np = kDegree + 1;
  coef_.assign(static_cast<std::size_t>(n_panels_) * np, 0.0);
  // Chebyshev nodes and the discrete cosine transform per panel.
  std::vector<double> fx(static_cast<std::size_t>(np));
  for (int p = 0; p < n_panels_; ++p) {
    const double lo = p * panel_width_;
    const double hi = lo + panel_width_;
    for (int k = 0; k < np; ++k) {
      const double theta = M_PI * (k + 0.5) / np;
      const double t = std::cos(theta);
      const double z = 0.5 * (hi + lo) + 0.5 * (hi - lo) * t;
      fx[static_cast<std::size_t>(k)] = bessel_j0_reference(z);
    }
    double* c = &coef_[static_cast<std::size_t>(p) * np];
    for (int j = 0; j < np; ++j) {
      double s = 0.0;
      for (int k = 0; k < np; ++k)
        s += fx[static_cast<std::size_t>(k)] *
             std::cos(M_PI * j * (k + 0.5) / np);
      c[j] = 2.0 * s / np;
    }
  }
}

double FastJ0::operator()(double z) const {
  z = std::abs(z);
  int p = static_cast<int>(z / panel_width_);
  if (p >= n_panels_) p = n_panels_ - 1;
  const double lo = p * panel_width_;
  // Map to [-1, 1] within the panel and run Clenshaw.
  const double t = 2.0 * (z - lo) / panel_width_ - 1.0;
  const double* c = &coef_[static_cast<std::size_t>(p) * (kDegree + 1)];
  double b1 = 0.0, b2 = 0.0;
  for (int j = kDegree; j >= 1; --j) {
    const double b0 = 2.0 * t * b1 - b2 + c[j];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + 0.5 * c[0];
}

}  // namespace kinrescale
