#include "kinrescale/collision.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <unordered_map>

#include "kinrescale/errors.hpp"
#include "kinrescale/moments.hpp"
#include "kinrescale/quadrature.hpp"

namespace kinrescale {

namespace {
constexpr double kPi = std::numbers::pi;
std::mutex fftw_planner_mutex;  // the FFTW planner is not thread-safe
}  // namespace

double sphere_area(int dv) {
  switch (dv) {
    case 1: return 2.0;
    case 2: return 2.0 * kPi;
    case 3: return 4.0 * kPi;
  }
  throw UnsupportedError("sphere_area: dimension outside {1,2,3}");
}

double default_cross_section(int dv) { return 1.0 / sphere_area(dv); }

double truncation_radius(double extent) {
  return 2.0 * extent / (3.0 + std::sqrt(2.0));
}

void CollisionParams::validate(int dv) const {
  if (kind != OperatorKind::elastic && kind != OperatorKind::inelastic)
    throw UnsupportedError("collision: operator kind is not a binary collision operator");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ConfigError("collision.lambda outside [0,1]");
  if (b > 0.0 && !std::isfinite(b)) throw ConfigError("collision.b not finite");
  if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("collision.e outside [0,1]");
  if (!(eps > 0.0)) throw ConfigError("collision.eps must be > 0");
  if (kind == OperatorKind::inelastic && lambda != 1.0)
    throw UnsupportedError("collision: the granular operator is defined for hard spheres (lambda = 1)");
  (void)dv;
}

// ---------------------------------------------------------------------------
// Mode weights.
//
// A(m,k) reduces to one radial integral per mode pair:
//   dv=1:  A = 4 b Int_0^{2R} u^lambda cos(c u) du,          c = zeta (m - gamma k)
//   dv=2:  A = (2 pi)^2 b Int_0^{2R} r^{1+lambda}
//              J0(zeta |m - gamma k/2| r) J0(zeta gamma |k| r / 2) dr
// The dv=2 reduction uses the double-angle identity
// (u.sigma)(k.sigma) = (u.k)/2 + |u||k| cos(theta_u + theta_k - 2 phi)/2 and
// the plane-wave angular average, so the weights are real.
// ---------------------------------------------------------------------------

namespace {

// Int_0^X u^lambda cos(c u) du. Closed forms for lambda in {0,1}; otherwise
// the supplied Gauss-Legendre rule on [0,X].
double radial_cos_integral(double lambda, double c, double X, const GaussRule* rule) {
  const double a = std::abs(c);
  if (lambda == 1.0) {
    if (a * X < 1e-8) return 0.5 * X * X;
    return (std::cos(c * X) - 1.0 + c * X * std::sin(c * X)) / (c * c);
  }
  if (lambda == 0.0) {
    if (a * X < 1e-8) return X;
    return std::sin(c * X) / c;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < rule->x.size(); ++i)
    acc += rule->w[i] * std::pow(rule->x[i], lambda) * std::cos(c * rule->x[i]);
  return acc;
}

struct Kernel1dTable {
  double zeta, gamma, b, lambda, R;
  GaussRule rule;  // only used for lambda outside {0,1}

  double operator()(int m, int k) const {
    const double c = zeta * (m - gamma * k);
    return 4.0 * b * radial_cos_integral(lambda, c, 2.0 * R, &rule);
  }
};

struct Kernel2dTable {
  double zeta, gamma, b, lambda, R;
  GaussRule rule;              // radial nodes on [0, 2R]
  std::vector<double> wr;      // w_i * r_i^{1+lambda}
  FastJ0 j0;

  Kernel2dTable(double zeta_, double gamma_, double b_, double lambda_, double R_,
                int order, int n_half)
      : zeta(zeta_), gamma(gamma_), b(b_), lambda(lambda_), R(R_),
        rule(gauss_legendre(order, 0.0, 2.0 * R_)),
        j0(j0_argument_bound(zeta_, gamma_, R_, n_half)) {
    wr.resize(rule.x.size());
    const double front = 4.0 * kPi * kPi * b;
    for (std::size_t i = 0; i < rule.x.size(); ++i)
      wr[i] = front * rule.w[i] * std::pow(rule.x[i], 1.0 + lambda);
  }

  static double j0_argument_bound(double zeta, double gamma, double R, int n_half) {
    const double qmax = std::sqrt(2.0) * n_half * (1.0 + 0.5 * gamma);
    return zeta * 2.0 * R * qmax + 1.0;
  }

  // t2[i] = wr[i] * J0(zeta gamma |k| r_i / 2) for a fixed output mode k.
  void loss_row(double knorm, std::vector<double>& t2) const {
    t2.resize(rule.x.size());
    const double c = 0.5 * zeta * gamma * knorm;
    for (std::size_t i = 0; i < rule.x.size(); ++i) t2[i] = wr[i] * j0(c * rule.x[i]);
  }

  double gain_entry(double q1, const std::vector<double>& t2) const {
    const double c = zeta * q1;
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) acc += t2[i] * j0(c * rule.x[i]);
    return acc;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// SpectralKernel plumbing: FFT plans and half-offset phase tables.
// ---------------------------------------------------------------------------

struct SpectralKernel::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex);
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

void SpectralKernel::finalize() {
  const int dv = grid_.dim();
  phase_.assign(static_cast<std::size_t>(dv), {});
  for (int a = 0; a < dv; ++a) {
    const int n = grid_.n(a);
    phase_[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
      const double m = t - n / 2;
      const double arg = kPi * m * (1.0 - 1.0 / n);
      phase_[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)] =
          std::complex<double>(std::cos(arg), std::sin(arg));
    }
  }
  plans_ = std::make_shared<Plans>();
  std::vector<std::complex<double>> tmp_in(grid_.size()), tmp_out(grid_.size());
  int dims[3];
  for (int a = 0; a < dv; ++a) dims[a] = grid_.n(a);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex);
  plans_->fwd = fftw_plan_dft(dv, dims, reinterpret_cast<fftw_complex*>(tmp_in.data()),
                              reinterpret_cast<fftw_complex*>(tmp_out.data()),
                              FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->bwd = fftw_plan_dft(dv, dims, reinterpret_cast<fftw_complex*>(tmp_in.data()),
                              reinterpret_cast<fftw_complex*>(tmp_out.data()),
                              FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->fwd || !plans_->bwd) throw SolverError("collision: FFT planning failed");
}

namespace {

void require_spectral_grid(const VelocityGrid& grid) {
  if (grid.dim() > 2)
    throw UnsupportedError(
        "spectral collision operator supports dv in {1,2}; use the ES-BGK model for dv=3");
  if (grid.dim() == 2 && grid.n(0) != grid.n(1))
    throw UnsupportedError("spectral collision operator requires equal per-axis node counts");
}

}  // namespace

SpectralKernel precompute_kernel(const VelocityGrid& grid, const CollisionParams& params,
                                 int quad_order) {
  require_spectral_grid(grid);
  params.validate(grid.dim());
  if (quad_order < 4) throw ConfigError("collision.quad_order must be >= 4");

  SpectralKernel kernel;
  kernel.grid_ = grid;
  kernel.R_ = truncation_radius(grid.extent());
  kernel.lambda_ = params.lambda;
  kernel.e_ = params.effective_e();

  const int dv = grid.dim();
  const int N = grid.n(0);
  const std::size_t NV = grid.size();
  const double zeta = kPi / grid.extent();
  const double gamma = params.gamma();
  const double b = params.cross_section(dv);

  kernel.gain_.resize(NV * NV);
  kernel.loss_.resize(NV);

  if (dv == 1) {
    Kernel1dTable tab{zeta, gamma, b, params.lambda, kernel.R_, {}};
    const bool quadratured = params.lambda != 0.0 && params.lambda != 1.0;
    if (quadratured) tab.rule = gauss_legendre(quad_order, 0.0, 2.0 * kernel.R_);
    for (int kt = 0; kt < N; ++kt) {
      const int k = kt - N / 2;
      double* row = &kernel.gain_[static_cast<std::size_t>(kt) * NV];
      for (int mt = 0; mt < N; ++mt) row[mt] = tab(mt - N / 2, k);
    }
    if (quadratured) {
      Kernel1dTable probe = tab;
      probe.rule = gauss_legendre(quad_order + 4, 0.0, 2.0 * kernel.R_);
      double delta = 0.0;
      for (int mt = 0; mt < N; ++mt)
        delta = std::max(delta, std::abs(tab(mt - N / 2, 0) - probe(mt - N / 2, 0)));
      if (delta > 1e-8)
        std::fprintf(stderr,
                     "warning: collision kernel radial quadrature not converged "
                     "(order %d vs %d moves weights by %.3e)\n",
                     quad_order, quad_order + 4, delta);
    }
  } else {
    Kernel2dTable tab(zeta, gamma, b, params.lambda, kernel.R_, quad_order, N / 2);
    std::vector<double> t2;
    for (int kt0 = 0; kt0 < N; ++kt0) {
      for (int kt1 = 0; kt1 < N; ++kt1) {
        const double k0 = kt0 - N / 2, k1 = kt1 - N / 2;
        tab.loss_row(std::hypot(k0, k1), t2);
        double* row = &kernel.gain_[(static_cast<std::size_t>(kt0) * N + kt1) * NV];
        for (int mt0 = 0; mt0 < N; ++mt0) {
          const double p0 = (mt0 - N / 2) - 0.5 * gamma * k0;
          for (int mt1 = 0; mt1 < N; ++mt1) {
            const double p1 = (mt1 - N / 2) - 0.5 * gamma * k1;
            row[static_cast<std::size_t>(mt0) * N + mt1] =
                tab.gain_entry(std::hypot(p0, p1), t2);
          }
        }
      }
    }
    // Refinement probe on the loss modes (k = 0 row).
    Kernel2dTable probe(zeta, gamma, b, params.lambda, kernel.R_, quad_order + 4, N / 2);
    std::vector<double> t2p;
    tab.loss_row(0.0, t2);
    probe.loss_row(0.0, t2p);
    double delta = 0.0;
    for (int mt0 = 0; mt0 < N; ++mt0)
      for (int mt1 = 0; mt1 < N; ++mt1) {
        const double q = std::hypot(static_cast<double>(mt0 - N / 2),
                                    static_cast<double>(mt1 - N / 2));
        delta = std::max(delta, std::abs(tab.gain_entry(q, t2) - probe.gain_entry(q, t2p)));
      }
    if (delta > 1e-8)
      std::fprintf(stderr,
                   "warning: collision kernel radial quadrature not converged "
                   "(order %d vs %d moves weights by %.3e)\n",
                   quad_order, quad_order + 4, delta);
  }

  // Loss weights come from the zero-output-mode gain row, which makes the
  // discrete mass-mode identity exact by construction.
  std::size_t k0_index = 0;
  {
    std::array<int, 3> mid{0, 0, 0};
    for (int a = 0; a < dv; ++a) mid[static_cast<std::size_t>(a)] = grid.n(a) / 2;
    k0_index = grid.flat(mid);
  }
  std::memcpy(kernel.loss_.data(), &kernel.gain_[k0_index * NV], NV * sizeof(double));

  for (double w : kernel.gain_)
    if (!std::isfinite(w)) throw SolverError("collision: non-finite kernel weight");

  kernel.finalize();
  return kernel;
}

// ---------------------------------------------------------------------------
// apply: FFT -> half-offset phase -> fused gain/loss double sum -> inverse.
// ---------------------------------------------------------------------------

namespace {

struct ApplyScratch {
  std::vector<std::complex<double>> a, b, ghat, qhat;
};

thread_local ApplyScratch tl_scratch;

inline std::size_t freq_of(std::size_t t, std::size_t n) {
  return t >= n / 2 ? t - n / 2 : t + n / 2;
}

}  // namespace

void apply(const SpectralKernel& kernel, std::span<const double> g, std::span<double> out) {
  const VelocityGrid& grid = kernel.grid_;
  const int dv = grid.dim();
  const std::size_t NV = grid.size();
  if (g.size() != NV || out.size() != NV)
    throw SolverError("collision apply: slice size mismatch");
  if (!kernel.plans_) throw SolverError("collision apply: kernel not finalized");

  ApplyScratch& s = tl_scratch;
  s.a.resize(NV); s.b.resize(NV); s.ghat.resize(NV); s.qhat.resize(NV);

  for (std::size_t j = 0; j < NV; ++j) s.a[j] = std::complex<double>(g[j], 0.0);
  fftw_execute_dft(kernel.plans_->fwd, reinterpret_cast<fftw_complex*>(s.a.data()),
                   reinterpret_cast<fftw_complex*>(s.b.data()));

  const std::size_t N = static_cast<std::size_t>(grid.n(0));
  const double inv_norm = 1.0 / (static_cast<double>(NV) * static_cast<double>(NV));

  if (dv == 1) {
    const auto& ph = kernel.phase_[0];
    for (std::size_t t = 0; t < N; ++t) s.ghat[t] = s.b[freq_of(t, N)] * ph[t];
    const int n = static_cast<int>(N), half = n / 2;
    for (int kt = 0; kt < n; ++kt) {
      const int mlo = std::max(0, kt - half + 1);
      const int mhi = std::min(n - 1, kt + half);
      const double* row = &kernel.gain_[static_cast<std::size_t>(kt) * NV];
      std::complex<double> acc(0.0, 0.0);
      for (int mt = mlo; mt <= mhi; ++mt)
        acc += s.ghat[static_cast<std::size_t>(mt)] *
               s.ghat[static_cast<std::size_t>(kt - mt + half)] *
               (row[mt] - kernel.loss_[static_cast<std::size_t>(mt)]);
      s.qhat[static_cast<std::size_t>(kt)] = acc * inv_norm;
    }
    for (std::size_t t = 0; t < N; ++t) s.a[freq_of(t, N)] = s.qhat[t] * std::conj(ph[t]);
  } else {
    const auto& ph0 = kernel.phase_[0];
    const auto& ph1 = kernel.phase_[1];
    for (std::size_t t0 = 0; t0 < N; ++t0) {
      const std::size_t q0 = freq_of(t0, N);
      for (std::size_t t1 = 0; t1 < N; ++t1)
        s.ghat[t0 * N + t1] = s.b[q0 * N + freq_of(t1, N)] * (ph0[t0] * ph1[t1]);
    }
    const int n = static_cast<int>(N), half = n / 2;
    for (int kt0 = 0; kt0 < n; ++kt0) {
      const int m0lo = std::max(0, kt0 - half + 1);
      const int m0hi = std::min(n - 1, kt0 + half);
      for (int kt1 = 0; kt1 < n; ++kt1) {
        const int m1lo = std::max(0, kt1 - half + 1);
        const int m1hi = std::min(n - 1, kt1 + half);
        const double* krow =
            &kernel.gain_[(static_cast<std::size_t>(kt0) * N + kt1) * NV];
        std::complex<double> acc(0.0, 0.0);
        for (int mt0 = m0lo; mt0 <= m0hi; ++mt0) {
          const std::complex<double>* g1 = &s.ghat[static_cast<std::size_t>(mt0) * N];
          const std::complex<double>* g2 =
              &s.ghat[static_cast<std::size_t>(kt0 - mt0 + half) * N];
          const double* w = &krow[static_cast<std::size_t>(mt0) * N];
          const double* l = &kernel.loss_[static_cast<std::size_t>(mt0) * N];
          const int off = kt1 + half;
          for (int mt1 = m1lo; mt1 <= m1hi; ++mt1)
            acc += g1[mt1] * g2[off - mt1] * (w[mt1] - l[mt1]);
        }
        s.qhat[static_cast<std::size_t>(kt0) * N + kt1] = acc * inv_norm;
      }
    }
    for (std::size_t t0 = 0; t0 < N; ++t0) {
      const std::size_t q0 = freq_of(t0, N);
      for (std::size_t t1 = 0; t1 < N; ++t1)
        s.a[q0 * N + freq_of(t1, N)] = s.qhat[t0 * N + t1] * std::conj(ph0[t0] * ph1[t1]);
    }
  }

  fftw_execute_dft(kernel.plans_->bwd, reinterpret_cast<fftw_complex*>(s.a.data()),
                   reinterpret_cast<fftw_complex*>(s.b.data()));

  double max_re = 0.0, max_im = 0.0, max_w = 0.0, sum_mode = 0.0;
  for (std::size_t j = 0; j < NV; ++j) {
    max_re = std::max(max_re, std::abs(s.b[j].real()));
    max_im = std::max(max_im, std::abs(s.b[j].imag()));
    sum_mode += std::abs(s.ghat[j]);
  }
  for (double w : kernel.loss_) max_w = std::max(max_w, std::abs(w));
  sum_mode /= static_cast<double>(NV);
  // The asymmetric mode set {-N/2..N/2-1} leaves a residue of spectral
  // truncation order in the imaginary part; that is expected and discarded.
  // The guard fires only when the residue rivals the real part (an index or
  // phase failure), with an absolute floor from a rigorous bound on |Q|
  // protecting exactly-cancelling configurations (elastic dv=1).
  const double bound = max_w * sum_mode * sum_mode * static_cast<double>(NV);
  if (!std::isfinite(max_re) || !std::isfinite(max_im))
    throw BreakdownError("collision apply: non-finite output");
  if (max_im > 0.5 * max_re && max_im > 1e-8 * bound) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "collision apply: imaginary residue %.3e against real %.3e (bound %.3e)",
                  max_im, max_re, bound);
    throw BreakdownError(msg);
  }
  for (std::size_t j = 0; j < NV; ++j) out[j] = s.b[j].real();
}

// ---------------------------------------------------------------------------
// Direct-summation oracle. Weights by independent quadrature (Gauss-Legendre
// radial at fixed order 128; angular averages by a folded 192-point
// trapezoid), transforms by explicit summation.
// ---------------------------------------------------------------------------

namespace {

constexpr int kOracleRadialOrder = 128;
constexpr int kOracleAngles = 192;

// (1/2pi) Int_0^{2pi} exp(-i z cos(theta)) dtheta by uniform trapezoid,
// folded onto the quarter period. Real by symmetry.
class TrapezoidAngular {
 public:
  TrapezoidAngular() {
    for (int i = 0; i <= kOracleAngles / 4; ++i)
      cosines_.push_back(std::cos(2.0 * kPi * i / kOracleAngles));
  }
  double operator()(double z) const {
    double acc = 0.0;
    const int q = kOracleAngles / 4;
    for (int i = 0; i <= q; ++i) {
      const double w = (i == 0 || i == q) ? 2.0 : 4.0;
      acc += w * std::cos(z * cosines_[static_cast<std::size_t>(i)]);
    }
    return acc / kOracleAngles;
  }

 private:
  std::vector<double> cosines_;
};

}  // namespace

std::vector<double> direct_sum_oracle(std::span<const double> g, const CollisionParams& params,
                                      const VelocityGrid& grid) {
  require_spectral_grid(grid);
  params.validate(grid.dim());
  const int dv = grid.dim();
  const int N = grid.n(0);
  if (N > 16) throw UnsupportedError("direct_sum_oracle: N above the N <= 16 cost cap");
  const std::size_t NV = grid.size();
  if (g.size() != NV) throw SolverError("direct_sum_oracle: slice size mismatch");

  const double V = grid.extent();
  const double zeta = kPi / V;
  const double R = truncation_radius(V);
  const double gamma = params.gamma();
  const double b = params.cross_section(dv);
  const int half = N / 2;
  using cd = std::complex<double>;

  // Per-axis direct transform tables, forward with the 1/N factor folded in.
  std::vector<cd> fwd(static_cast<std::size_t>(N) * N), bwd(static_cast<std::size_t>(N) * N);
  for (int t = 0; t < N; ++t)
    for (int j = 0; j < N; ++j) {
      const double arg = zeta * (t - half) * grid.node(0, j);
      fwd[static_cast<std::size_t>(t) * N + j] = cd(std::cos(arg), -std::sin(arg)) / double(N);
      bwd[static_cast<std::size_t>(t) * N + j] = cd(std::cos(arg), std::sin(arg));
    }

  std::vector<cd> c(NV), qh(NV);
  if (dv == 1) {
    for (int t = 0; t < N; ++t) {
      cd acc(0.0, 0.0);
      for (int j = 0; j < N; ++j) acc += fwd[static_cast<std::size_t>(t) * N + j] * g[j];
      c[static_cast<std::size_t>(t)] = acc;
    }
  } else {
    std::vector<cd> tmp(NV);
    for (int j0 = 0; j0 < N; ++j0)
      for (int t1 = 0; t1 < N; ++t1) {
        cd acc(0.0, 0.0);
        for (int j1 = 0; j1 < N; ++j1)
          acc += fwd[static_cast<std::size_t>(t1) * N + j1] *
                 g[static_cast<std::size_t>(j0) * N + j1];
        tmp[static_cast<std::size_t>(j0) * N + t1] = acc;
      }
    for (int t0 = 0; t0 < N; ++t0)
      for (int t1 = 0; t1 < N; ++t1) {
        cd acc(0.0, 0.0);
        for (int j0 = 0; j0 < N; ++j0)
          acc += fwd[static_cast<std::size_t>(t0) * N + j0] *
                 tmp[static_cast<std::size_t>(j0) * N + t1];
        c[static_cast<std::size_t>(t0) * N + t1] = acc;
      }
  }

  const GaussRule radial = gauss_legendre(kOracleRadialOrder, 0.0, 2.0 * R);

  if (dv == 1) {
    // A(m,k) = 4b Int_0^{2R} u^lambda cos(zeta (m - gamma k) u) du, by GL-128.
    auto weight = [&](int m, int k) {
      const double cc = zeta * (m - gamma * k);
      double acc = 0.0;
      for (std::size_t i = 0; i < radial.x.size(); ++i)
        acc += radial.w[i] * std::pow(radial.x[i], params.lambda) * std::cos(cc * radial.x[i]);
      return 4.0 * b * acc;
    };
    std::vector<double> loss(static_cast<std::size_t>(N));
    for (int mt = 0; mt < N; ++mt) loss[static_cast<std::size_t>(mt)] = weight(mt - half, 0);
    for (int kt = 0; kt < N; ++kt) {
      const int mlo = std::max(0, kt - half + 1), mhi = std::min(N - 1, kt + half);
      cd acc(0.0, 0.0);
      for (int mt = mlo; mt <= mhi; ++mt)
        acc += c[static_cast<std::size_t>(mt)] * c[static_cast<std::size_t>(kt - mt + half)] *
               (weight(mt - half, kt - half) - loss[static_cast<std::size_t>(mt)]);
      qh[static_cast<std::size_t>(kt)] = acc;
    }
  } else {
    const TrapezoidAngular trap;
    const std::size_t nr = radial.x.size();
    std::vector<double> wr(nr);
    const double front = 4.0 * kPi * kPi * b;
    for (std::size_t i = 0; i < nr; ++i)
      wr[i] = front * radial.w[i] * std::pow(radial.x[i], 1.0 + params.lambda);

    // Radial profiles of the u-side angular average, memoized on the exact
    // integer invariants (|m|^2, m.k, |k|^2) that determine |m - gamma k/2|.
    std::unordered_map<std::uint64_t, std::vector<double>> memo;
    auto u_profile = [&](int m0, int m1, int k0, int k1) -> const std::vector<double>& {
      const std::uint64_t msq = static_cast<std::uint64_t>(m0 * m0 + m1 * m1);
      const std::uint64_t dot = static_cast<std::uint64_t>(m0 * k0 + m1 * k1 + (1 << 20));
      const std::uint64_t ksq = static_cast<std::uint64_t>(k0 * k0 + k1 * k1);
      const std::uint64_t key = (msq << 42) | (dot << 21) | ksq;
      auto it = memo.find(key);
      if (it != memo.end()) return it->second;
      const double q1 = std::hypot(m0 - 0.5 * gamma * k0, m1 - 0.5 * gamma * k1);
      std::vector<double> prof(nr);
      for (std::size_t i = 0; i < nr; ++i) prof[i] = trap(zeta * q1 * radial.x[i]);
      return memo.emplace(key, std::move(prof)).first->second;
    };

    std::vector<double> srow(nr), loss(NV);
    // Loss weights first: k = 0 gives S = 1 identically.
    for (int mt0 = 0; mt0 < N; ++mt0)
      for (int mt1 = 0; mt1 < N; ++mt1) {
        const auto& prof = u_profile(mt0 - half, mt1 - half, 0, 0);
        double acc = 0.0;
        for (std::size_t i = 0; i < nr; ++i) acc += wr[i] * prof[i];
        loss[static_cast<std::size_t>(mt0) * N + mt1] = acc;
      }
    for (int kt0 = 0; kt0 < N; ++kt0)
      for (int kt1 = 0; kt1 < N; ++kt1) {
        const int k0 = kt0 - half, k1 = kt1 - half;
        const double knorm = std::hypot(static_cast<double>(k0), static_cast<double>(k1));
        for (std::size_t i = 0; i < nr; ++i)
          srow[i] = wr[i] * trap(0.5 * zeta * gamma * knorm * radial.x[i]);
        const int m0lo = std::max(0, kt0 - half + 1), m0hi = std::min(N - 1, kt0 + half);
        const int m1lo = std::max(0, kt1 - half + 1), m1hi = std::min(N - 1, kt1 + half);
        cd acc(0.0, 0.0);
        for (int mt0 = m0lo; mt0 <= m0hi; ++mt0)
          for (int mt1 = m1lo; mt1 <= m1hi; ++mt1) {
            const auto& prof = u_profile(mt0 - half, mt1 - half, k0, k1);
            double A = 0.0;
            for (std::size_t i = 0; i < nr; ++i) A += srow[i] * prof[i];
            acc += c[static_cast<std::size_t>(mt0) * N + mt1] *
                   c[static_cast<std::size_t>(kt0 - mt0 + half) * N + (kt1 - mt1 + half)] *
                   (A - loss[static_cast<std::size_t>(mt0) * N + mt1]);
          }
        qh[static_cast<std::size_t>(kt0) * N + kt1] = acc;
      }
  }

  // Inverse transform by direct summation.
  std::vector<double> out(NV);
  if (dv == 1) {
    for (int j = 0; j < N; ++j) {
      cd acc(0.0, 0.0);
      for (int t = 0; t < N; ++t)
        acc += qh[static_cast<std::size_t>(t)] * bwd[static_cast<std::size_t>(t) * N + j];
      out[static_cast<std::size_t>(j)] = acc.real();
    }
  } else {
    std::vector<cd> tmp(NV);
    for (int t0 = 0; t0 < N; ++t0)
      for (int j1 = 0; j1 < N; ++j1) {
        cd acc(0.0, 0.0);
        for (int t1 = 0; t1 < N; ++t1)
          acc += qh[static_cast<std::size_t>(t0) * N + t1] *
                 bwd[static_cast<std::size_t>(t1) * N + j1];
        tmp[static_cast<std::size_t>(t0) * N + j1] = acc;
      }
    for (int j0 = 0; j0 < N; ++j0)
      for (int j1 = 0; j1 < N; ++j1) {
        cd acc(0.0, 0.0);
        for (int t0 = 0; t0 < N; ++t0)
          acc += bwd[static_cast<std::size_t>(t0) * N + j0] *
                 tmp[static_cast<std::size_t>(t0) * N + j1];
        out[static_cast<std::size_t>(j0) * N + j1] = acc.real();
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dissipation functional and the quasi-elastic cooling constant.
// ---------------------------------------------------------------------------

double dissipation_functional(std::span<const double> g, double e, const VelocityGrid& grid) {
  const std::size_t NV = grid.size();
  if (g.size() != NV) throw SolverError("dissipation_functional: slice size mismatch");
  const int dv = grid.dim();
  std::vector<std::array<double, 3>> xi(NV);
  for (std::size_t f = 0; f < NV; ++f) xi[f] = grid.coords(f);
  double acc = 0.0;
  for (std::size_t i = 0; i < NV; ++i) {
    if (g[i] == 0.0) continue;
    for (std::size_t j = i + 1; j < NV; ++j) {
      double d2 = 0.0;
      for (int a = 0; a < dv; ++a) {
        const double d = xi[i][static_cast<std::size_t>(a)] - xi[j][static_cast<std::size_t>(a)];
        d2 += d * d;
      }
      acc += 2.0 * g[i] * g[j] * d2 * std::sqrt(d2);
    }
  }
  const double C = 1.0 / (8.0 * dv);
  const double vol = grid.cell_volume();
  return C * (1.0 - e * e) * acc * vol * vol;
}

double haff_constant(int dv, double b) {
  if (dv < 1 || dv > 3) throw UnsupportedError("haff_constant: dimension outside {1,2,3}");
  if (!(b > 0.0)) throw ConfigError("collision.b must be > 0");
  static std::mutex cache_mutex;
  static std::map<int, double> cache;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(dv);
    if (it != cache.end()) return b * sphere_area(dv) * it->second;
  }
  // Reference quadrature of the Maxwellian dissipation integral. The |u|^3
  // kink limits the midpoint rule to fourth order; these sizes put the error
  // near 3e-12 / 9e-9 / 1.3e-6 for dv = 1 / 2 / 3.
  const int n = dv == 1 ? 2048 : (dv == 2 ? 128 : 32);
  const VelocityGrid ref(dv, 8.0, n);
  std::vector<double> m(ref.size());
  eval_maxwellian(m, ref, 1.0, {0.0, 0.0, 0.0}, 1.0);
  const double k_norm = 2.0 * dissipation_functional(m, 0.0, ref);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.emplace(dv, k_norm);
  }
  return b * sphere_area(dv) * k_norm;
}

// ---------------------------------------------------------------------------
// Kernel cache files.
// ---------------------------------------------------------------------------

namespace {

void write_u32(std::FILE* f, std::uint32_t v) {
  if (std::fwrite(&v, sizeof v, 1, f) != 1) throw SolverError("kernel cache: short write");
}
void write_f64(std::FILE* f, double v) {
  if (std::fwrite(&v, sizeof v, 1, f) != 1) throw SolverError("kernel cache: short write");
}
std::uint32_t read_u32(std::FILE* f) {
  std::uint32_t v;
  if (std::fread(&v, sizeof v, 1, f) != 1) throw SolverError("kernel cache: short read");
  return v;
}
double read_f64(std::FILE* f) {
  double v;
  if (std::fread(&v, sizeof v, 1, f) != 1) throw SolverError("kernel cache: short read");
  return v;
}

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};

}  // namespace

void save_kernel(const std::string& path, const SpectralKernel& kernel) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw SolverError("kernel cache: cannot open " + path + " for writing");
  if (std::fwrite("KRSK", 1, 4, f.get()) != 4) throw SolverError("kernel cache: short write");
  write_u32(f.get(), static_cast<std::uint32_t>(kernel.grid().dim()));
  write_u32(f.get(), static_cast<std::uint32_t>(kernel.grid().n(0)));
  write_f64(f.get(), kernel.grid().extent());
  write_f64(f.get(), kernel.lambda());
  write_f64(f.get(), kernel.restitution());
  for (double w : kernel.gain()) {
    write_f64(f.get(), w);
    write_f64(f.get(), 0.0);
  }
  for (double w : kernel.loss()) {
    write_f64(f.get(), w);
    write_f64(f.get(), 0.0);
  }
}

SpectralKernel load_kernel(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) throw SolverError("kernel cache: cannot open " + path);
  char magic[4];
  if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, "KRSK", 4) != 0)
    throw SolverError("kernel cache: bad magic in " + path);
  const int dv = static_cast<int>(read_u32(f.get()));
  const int N = static_cast<int>(read_u32(f.get()));
  const double V = read_f64(f.get());
  SpectralKernel kernel;
  kernel.grid_ = VelocityGrid(dv, V, N);
  require_spectral_grid(kernel.grid_);
  kernel.R_ = truncation_radius(V);
  kernel.lambda_ = read_f64(f.get());
  kernel.e_ = read_f64(f.get());
  const std::size_t NV = kernel.grid_.size();
  kernel.gain_.resize(NV * NV);
  kernel.loss_.resize(NV);
  for (auto& w : kernel.gain_) {
    w = read_f64(f.get());
    (void)read_f64(f.get());
  }
  for (auto& w : kernel.loss_) {
    w = read_f64(f.get());
    (void)read_f64(f.get());
  }
  kernel.finalize();
  return kernel;
}

}  // namespace kinrescale
