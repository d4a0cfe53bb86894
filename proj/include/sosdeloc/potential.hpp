#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace sosdeloc {

using cplx = std::complex<double>;

enum class Family { pSOS, XYdual };

struct PotentialSpec {
  Family family = Family::pSOS;
  double p = 1.0;
  double beta = 1.0;
  double gauss_reg = 0.0;

  static PotentialSpec psos(double p, double beta, double eps = 0.0) {
    PotentialSpec s{Family::pSOS, p, beta, eps};
    s.validate();
    return s;
  }
  static PotentialSpec xy_dual(double beta, double eps = 0.0) {
    PotentialSpec s{Family::XYdual, 0.0, beta, eps};
    s.validate();
    return s;
  }

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive and finite");
    if (!(gauss_reg >= 0.0)) throw std::invalid_argument("gauss_reg must be non-negative");
    if (family == Family::pSOS && !(p > 0.0 && p <= 2.0)) throw std::invalid_argument("p must lie in (0,2]");
  }
};

// log I(x) for real x, including the e^{-eps x^2} regularizer.
inline double log_weight(const PotentialSpec& s, double x) {
  const double reg = -s.gauss_reg * x * x;
  if (s.family == Family::pSOS) {
    const double ax = std::abs(x);
    return (ax == 0.0 ? 0.0 : -s.beta * std::pow(ax, s.p)) + reg;
  }
  const double v = std::cyl_bessel_i(std::abs(x), 1.0 / s.beta);
  if (!std::isfinite(v) || v <= 0.0) throw std::overflow_error("Bessel weight not representable for this beta");
  return std::log(v) + reg;
}

inline double weight(const PotentialSpec& s, long n) {
  return std::exp(log_weight(s, static_cast<double>(n)));
}

// g(a) = a^2 (1 + e^{2 pi |a|}).
inline double g_profile(double a) { return a * a * (1.0 + std::exp(2.0 * std::numbers::pi * std::abs(a))); }

class StripViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline cplx log1p_c(cplx u) {
  if (std::abs(u) < 1e-3) {
    cplx term = u, acc = 0.0;
    for (int k = 1; k <= 8; ++k) {
      acc += term / static_cast<double>(k) * (k % 2 ? 1.0 : -1.0);
      term *= u;
    }
    return acc;
  }
  return std::log(1.0 + u);
}

inline cplx expm1_c(cplx v) {
  if (std::abs(v) < 1e-3) {
    cplx term = v, acc = 0.0;
    double fact = 1.0;
    for (int k = 1; k <= 8; ++k) {
      fact *= k;
      acc += term / fact;
      term *= v;
    }
    return acc;
  }
  return std::exp(v) - 1.0;
}

// sinc(w)^2 and its derivative in w.
inline cplx sinc2(cplx w) {
  if (std::abs(w) < 1e-4) return 1.0 - w * w / 3.0;
  const cplx s = std::sin(w) / w;
  return s * s;
}
inline cplx sinc2_prime(cplx w) {
  if (std::abs(w) < 1e-4) return -2.0 * w / 3.0;
  const cplx s = std::sin(w), c = std::cos(w);
  return 2.0 * (s / w) * (w * c - s) / (w * w);
}

}  // namespace detail

// Holomorphic interpolant of e^{-beta|n|^p} on the strip |Im z| < 1/(2 beta^{1/3}).
//
// Evaluated as log I(z) = -(f(z) - f(0)) - sum_m t_m sinc^2(pi(z-m)) with t_m = s_m + f(0).
// Subtracting the constant f(0) is exact because sum_m sinc^2(pi(z-m)) = 1 on C; it removes the
// non-decaying part of s_m and makes the p = 2 case collapse to -beta z^2. The series is summed
// directly over a window and the two tails are added by midpoint Euler-Maclaurin.
class Extension {
 public:
  explicit Extension(PotentialSpec spec, int series_window = 64, double series_tol = 1e-13)
      : spec_(spec), window_(series_window), tol_(series_tol) {
    spec_.validate();
    if (spec_.family != Family::pSOS) throw std::invalid_argument("analytic extension is only available for pSOS");
    if (spec_.beta > 1.0) throw std::invalid_argument("analytic extension requires beta <= 1");
    if (spec_.gauss_reg != 0.0) throw std::invalid_argument("analytic extension is built for the unregularized weight");
    if (series_window < 8) throw std::invalid_argument("series window too small");
    alpha_ = 1.0 - spec_.p / 3.0;
    b_alpha_ = std::pow(spec_.beta, alpha_);
    b23_ = std::pow(spec_.beta, 2.0 / 3.0);
    strip_ = 1.0 / (2.0 * std::cbrt(spec_.beta));
    gaussian_ = spec_.p == 2.0;
    tcache_.resize(static_cast<std::size_t>(window_) + 256 + kTailDirect);
    for (std::size_t m = 0; m < tcache_.size(); ++m) tcache_[m] = t_coef(static_cast<double>(m));
  }

  const PotentialSpec& spec() const { return spec_; }
  double alpha() const { return alpha_; }
  double strip_halfwidth() const { return strip_; }
  int series_window() const { return window_; }
  double series_tol() const { return tol_; }

  // f(z) = beta^alpha (1 + beta^{2/3} z^2)^{p/2}, principal branch.
  cplx f_profile(cplx z) const {
    const cplx u = 1.0 + b23_ * z * z;
    if (u.real() <= 0.0) throw StripViolation("principal branch undefined: Re(1+w^2) <= 0");
    return b_alpha_ * std::pow(u, spec_.p / 2.0);
  }

  // s_m = beta|m|^p - f(m).
  double s_coefficient(long m) const { return t_at(std::labs(m)) - b_alpha_; }

  cplx log_eval(cplx z) const {
    check_strip(z);
    if (gaussian_) return -spec_.beta * z * z;
    const long n = std::lround(z.real());
    const long L = window_ + std::labs(n);
    const cplx delta = z - static_cast<double>(n);
    const cplx sn = std::sin(std::numbers::pi * delta);
    cplx direct = 0.0;
    for (long m = -L; m <= L; ++m) {
      if (m == n) continue;
      const cplx d = z - static_cast<double>(m);
      direct += t_at(std::labs(m)) / (d * d);
    }
    const cplx series = t_at(std::labs(n)) * detail::sinc2(std::numbers::pi * delta) +
                        sn * sn / (std::numbers::pi * std::numbers::pi) * (direct + tail_sum(z, L, 2));
    return -reduced_profile(z) - series;
  }

  cplx eval(cplx z) const { return std::exp(log_eval(z)); }

  // d/dz log I(z), differentiated term by term.
  cplx log_derivative(cplx z) const {
    check_strip(z);
    if (gaussian_) return -2.0 * spec_.beta * z;
    const long n = std::lround(z.real());
    const long L = window_ + std::labs(n);
    const double pi = std::numbers::pi;
    const cplx delta = z - static_cast<double>(n);
    const cplx sn = std::sin(pi * delta);
    cplx d2 = 0.0, d3 = 0.0;
    for (long m = -L; m <= L; ++m) {
      if (m == n) continue;
      const cplx d = z - static_cast<double>(m);
      const double t = t_at(std::labs(m));
      const cplx inv = 1.0 / d;
      d2 += t * inv * inv;
      d3 += t * inv * inv * inv;
    }
    d2 += tail_sum(z, L, 2);
    d3 += tail_sum(z, L, 3);
    const cplx series_prime = t_at(std::labs(n)) * pi * detail::sinc2_prime(pi * delta) +
                              std::sin(2.0 * pi * delta) / pi * d2 - 2.0 * sn * sn / (pi * pi) * d3;
    return -reduced_profile_prime(z) - series_prime;
  }

 private:
  void check_strip(cplx z) const {
    if (!(std::abs(z.imag()) < strip_)) {
      std::ostringstream os;
      os << "|Im z| = " << std::abs(z.imag()) << " outside the strip half-width " << strip_;
      throw StripViolation(os.str());
    }
    if (!std::isfinite(z.real())) throw StripViolation("non-finite argument");
  }

  // f(z) - f(0), accurate when beta^{2/3} z^2 is small.
  cplx reduced_profile(cplx z) const {
    const cplx w2 = b23_ * z * z;
    if ((1.0 + w2).real() <= 0.0) throw StripViolation("principal branch undefined: Re(1+w^2) <= 0");
    return b_alpha_ * detail::expm1_c(spec_.p / 2.0 * detail::log1p_c(w2));
  }
  cplx reduced_profile_prime(cplx z) const {
    const cplx u = 1.0 + b23_ * z * z;
    return spec_.p * b_alpha_ * b23_ * z * std::pow(u, spec_.p / 2.0 - 1.0);
  }

  // t(r) = beta r^p - f(r) + f(0) for r >= 0.
  double t_coef(double r) const {
    if (gaussian_ || r == 0.0) return 0.0;
    const double u = b23_ * r * r;
    const double half_p = spec_.p / 2.0;
    if (u > 1.0) {
      const double s = -spec_.beta * std::pow(r, spec_.p) * std::expm1(half_p * std::log1p(1.0 / u));
      return b_alpha_ + s;
    }
    return spec_.beta * std::pow(r, spec_.p) - b_alpha_ * std::expm1(half_p * std::log1p(u));
  }
  double t_at(long m) const {
    return static_cast<std::size_t>(m) < tcache_.size() ? tcache_[static_cast<std::size_t>(m)]
                                                        : t_coef(static_cast<double>(m));
  }

  // sum_{m > L} t_m [(z-m)^{-k} + (z+m)^{-k}] by midpoint Euler-Maclaurin around A = L + 1/2.
  // Everything is carried relative to t_A and with t^{-k} pulled out, so tiny beta cannot push the
  // integrand into subnormals.
  cplx tail_sum(cplx z, long L, int k) const {
    if (gaussian_) return 0.0;
    // The Euler-Maclaurin remainder and the unit-step derivative stencils both fall off like A^{-7};
    // a short direct run first pushes them below the series tolerance.
    cplx near = 0.0;
    for (long m = L + 1; m <= L + kTailDirect; ++m) {
      const double md = static_cast<double>(m);
      near += t_at(m) * (std::pow(z - md, -k) + std::pow(z + md, -k));
    }
    L += kTailDirect;
    const double A = static_cast<double>(L) + 0.5;
    const double scale = std::abs(t_coef(A));
    if (scale == 0.0) return near;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    // t^k h(t) / scale, with h(t) = t_coef(t) [(z-t)^{-k} + (z+t)^{-k}].
    auto core = [&](double t) -> cplx {
      const cplx w = z / t;
      return t_coef(t) / scale * (sign * std::pow(1.0 - w, -k) + std::pow(1.0 + w, -k));
    };
    auto h = [&](double t) -> cplx { return core(t) * std::pow(t, -k); };
    // t_m changes regime near r* = beta^{-1/3}. When r* is far out, [A, r*] is integrated in log t
    // and only [r*, inf) uses the inverse-square map; otherwise the map starts at A.
    const double rstar = 1.0 / std::cbrt(spec_.beta);
    const double anchor = rstar > 4.0 * A ? rstar : A;
    const double jac = 2.0 * std::pow(anchor, 1.0 - k);
    auto integrand = [&](double v) -> cplx {
      if (v <= 0.0) return 0.0;
      return core(anchor / (v * v)) * (jac * std::pow(v, 2 * k - 3));
    };
    double err = 0.0;
    cplx integral = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, 0.0, 1.0, 12, tol_, &err);
    if (anchor > A) {
      auto logpart = [&](double s) -> cplx {
        const double t = A * std::exp(s);
        return core(t) * std::pow(t, 1.0 - k);
      };
      integral += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(logpart, 0.0, std::log(anchor / A), 12, tol_, &err);
    }
    const cplx hm2 = h(A - 2.0), hm1 = h(A - 1.0), hp1 = h(A + 1.0), hp2 = h(A + 2.0);
    const cplx d1 = (hm2 - 8.0 * hm1 + 8.0 * hp1 - hp2) / 12.0;
    const cplx d3 = (hp2 - 2.0 * hp1 + 2.0 * hm1 - hm2) / 2.0;
    return near + scale * (integral + d1 / 24.0 - 7.0 * d3 / 5760.0);
  }

  static constexpr long kTailDirect = 64;

  PotentialSpec spec_;
  int window_;
  double tol_;
  double alpha_ = 0.0, b_alpha_ = 0.0, b23_ = 0.0, strip_ = 0.0;
  bool gaussian_ = false;
  std::vector<double> tcache_;
};

struct AssumptionGrid {
  std::vector<double> x;
  std::vector<double> a;
  std::string describe() const {
    std::ostringstream os;
    os << x.size() << " x-points";
    if (!x.empty()) os << " in [" << x.front() << "," << x.back() << "]";
    os << ", a in {";
    for (std::size_t i = 0; i < a.size(); ++i) os << (i ? "," : "") << a[i];
    os << "}";
    return os.str();
  }
};

inline std::vector<double> linspace_step(double lo, double hi, double step) {
  std::vector<double> v;
  const long n = std::lround((hi - lo) / step);
  for (long i = 0; i <= n; ++i) v.push_back(lo + step * static_cast<double>(i));
  return v;
}

// x in [-40,40] step 0.25; a in {0, +-0.1, +-0.5, +-0.9} times the strip half-width.
inline AssumptionGrid default_grid(const Extension& ext) {
  AssumptionGrid g;
  g.x = linspace_step(-40.0, 40.0, 0.25);
  const double e = ext.strip_halfwidth();
  g.a = {0.0, 0.1 * e, -0.1 * e, 0.5 * e, -0.5 * e, 0.9 * e, -0.9 * e};
  return g;
}

// Grid for tiny beta, where the strip is far wider than any shift a spin wave uses and
// e^{2 pi a} overflows near its edge. Constants fitted on it are valid for |a| <= a_max only.
inline AssumptionGrid bounded_shift_grid(const Extension& ext, double a_max, double x_half = 8.0,
                                         double x_step = 1.0 / 64.0, int a_points = 8) {
  if (!(a_max > 0.0) || !(a_max < ext.strip_halfwidth())) throw StripViolation("a_max must lie inside the strip");
  if (a_points < 1) throw std::invalid_argument("need at least one shift value");
  AssumptionGrid g;
  g.x = linspace_step(-x_half, x_half, x_step);
  g.a.push_back(0.0);
  for (int i = 1; i <= a_points; ++i) {
    const double a = a_max * static_cast<double>(i) / a_points;
    g.a.push_back(a);
    g.a.push_back(-a);
  }
  return g;
}

struct AssumptionSample {
  double x;
  double a;
  double growth_ratio;      // Re log(I(x+ia)/I(x)) / g(a)
  double derivative_ratio;  // max_m |d^m/dx^m log(I(x+ia)/I(x))| / (1+g(a)), m = 1,2
  double curvature;         // |(log I)''(x)|
};

struct AssumptionReport {
  double c_beta_fit = 0.0;
  double c_beta_prime_fit = 0.0;
  double growth_ratio_max = 0.0;
  double derivative_ratio_max = 0.0;
  double curvature_max = 0.0;
  double max_ratio_violation = 0.0;  // excess of the statistics at grid midpoints over the fitted constants
  std::optional<bool> calibration_ok;
  std::string grid_description;
  std::vector<AssumptionSample> samples;
};

namespace detail {

struct PointStats {
  double growth = 0.0, deriv = 0.0, curv = 0.0;
};

inline void require_finite(double v, double x, double a) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "non-finite assumption statistic at x=" << x << ", a=" << a;
    throw StripViolation(os.str());
  }
}

inline std::vector<PointStats> stats_at(const Extension& ext, double x, const std::vector<double>& as) {
  const double h = 1e-5 * (1.0 + std::abs(x));
  double l0[5];
  for (int j = -2; j <= 2; ++j) l0[j + 2] = ext.log_eval(cplx(x + j * h, 0.0)).real();
  // The Gaussian case has the exact curvature 2 beta; a difference quotient would only add noise.
  const double curv = ext.spec().p == 2.0
                          ? 2.0 * ext.spec().beta
                          : std::abs((-l0[0] + 16.0 * l0[1] - 30.0 * l0[2] + 16.0 * l0[3] - l0[4]) / (12.0 * h * h));
  std::vector<PointStats> out(as.size());
  for (std::size_t k = 0; k < as.size(); ++k) {
    out[k].curv = curv;
    const double a = as[k];
    if (a == 0.0) continue;
    cplx r[5];
    for (int j = -2; j <= 2; ++j) r[j + 2] = ext.log_eval(cplx(x + j * h, a)) - l0[j + 2];
    const double g = g_profile(a);
    const cplx d1 = (r[0] - 8.0 * r[1] + 8.0 * r[3] - r[4]) / (12.0 * h);
    const cplx d2 = (-r[0] + 16.0 * r[1] - 30.0 * r[2] + 16.0 * r[3] - r[4]) / (12.0 * h * h);
    out[k].growth = r[2].real() / g;
    out[k].deriv = std::max(std::abs(d1), std::abs(d2)) / (1.0 + g);
    require_finite(out[k].growth, x, a);
    require_finite(out[k].deriv, x, a);
  }
  require_finite(curv, x, 0.0);
  return out;
}

}  // namespace detail

// Grid maxima of the three assumption statistics. c_beta_fit bounds both the growth and the
// derivative statistic (one constant serves both bounds); c_beta_prime_fit bounds the curvature.
inline AssumptionReport verify_assumptions(const Extension& ext, const AssumptionGrid& grid,
                                           std::optional<double> calibration = std::nullopt,
                                           bool keep_samples = true) {
  for (double a : grid.a)
    if (!(std::abs(a) < ext.strip_halfwidth())) throw StripViolation("grid a-value outside the strip");
  AssumptionReport rep;
  rep.grid_description = grid.describe();
  for (double x : grid.x) {
    const auto st = detail::stats_at(ext, x, grid.a);
    for (std::size_t k = 0; k < grid.a.size(); ++k) {
      rep.growth_ratio_max = std::max(rep.growth_ratio_max, st[k].growth);
      rep.derivative_ratio_max = std::max(rep.derivative_ratio_max, st[k].deriv);
      rep.curvature_max = std::max(rep.curvature_max, st[k].curv);
      if (keep_samples) rep.samples.push_back({x, grid.a[k], st[k].growth, st[k].deriv, st[k].curv});
    }
  }
  rep.c_beta_fit = std::max(rep.growth_ratio_max, rep.derivative_ratio_max);
  rep.c_beta_prime_fit = rep.curvature_max;
  for (std::size_t i = 0; i + 1 < grid.x.size(); ++i) {
    const double xm = 0.5 * (grid.x[i] + grid.x[i + 1]);
    for (const auto& s : detail::stats_at(ext, xm, grid.a)) {
      rep.max_ratio_violation = std::max(rep.max_ratio_violation, s.growth - rep.c_beta_fit);
      rep.max_ratio_violation = std::max(rep.max_ratio_violation, s.deriv - rep.c_beta_fit);
      rep.max_ratio_violation = std::max(rep.max_ratio_violation, s.curv - rep.c_beta_prime_fit);
    }
  }
  if (calibration) rep.calibration_ok = rep.c_beta_fit <= *calibration * std::cbrt(ext.spec().beta);
  return rep;
}

// The constant C in c_beta <= C beta^{1/3}, measured at beta = 1 on the default grid.
inline double calibration_constant(double p, int series_window = 64) {
  Extension e(PotentialSpec::psos(p, 1.0), series_window);
  return verify_assumptions(e, default_grid(e), std::nullopt, false).c_beta_fit;
}

struct GammaParams {
  double gamma_beta = 0.0;
  double inverse_term = 0.0;     // 1/gamma
  double growth_term = 0.0;      // c_beta g(gamma)/gamma
  double derivative_term = 0.0;  // c'_beta e^{C3 gamma}
  bool satisfied = false;
};

// gamma_beta = c |log beta| and the regime test max(...) <= C4.
inline GammaParams gamma_params(const Extension& ext, const AssumptionReport& rep, double c, double C3, double C4) {
  if (!(C4 > 0.0)) throw std::invalid_argument("C4 must be positive");
  GammaParams gp;
  gp.gamma_beta = c * std::abs(std::log(ext.spec().beta));
  if (!(gp.gamma_beta > 0.0)) throw std::invalid_argument("gamma_beta must be positive (beta = 1 gives gamma = 0)");
  if (gp.gamma_beta >= ext.strip_halfwidth()) {
    std::ostringstream os;
    os << "gamma_beta = " << gp.gamma_beta << " is not inside the strip (half-width " << ext.strip_halfwidth() << ")";
    throw StripViolation(os.str());
  }
  gp.inverse_term = 1.0 / gp.gamma_beta;
  gp.growth_term = rep.c_beta_fit * g_profile(gp.gamma_beta) / gp.gamma_beta;
  gp.derivative_term = rep.c_beta_prime_fit * std::exp(C3 * gp.gamma_beta);
  gp.satisfied = std::max({gp.inverse_term, gp.growth_term, gp.derivative_term}) <= C4;
  return gp;
}

}  // namespace sosdeloc
