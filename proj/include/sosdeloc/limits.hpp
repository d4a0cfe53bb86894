#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lattice.hpp"
#include "potential.hpp"

namespace sosdeloc {

// lambda(x) = 1 + 2 sum_q c_q cos(q w x), with w = 1 (angular convention) or w = 2 pi (unit period).
class TrigPoly {
 public:
  TrigPoly() = default;
  explicit TrigPoly(std::vector<double> coeffs) : c_(std::move(coeffs)) {
    for (double v : c_)
      if (!(std::abs(v) <= 1.0)) throw std::invalid_argument("trigonometric coefficients must satisfy |c_q| <= 1");
  }
  // All coefficients 1: the truncated comb sum_{|q| <= N} e^{2 pi i q x} in the unit-period convention.
  static TrigPoly comb(int N) {
    if (N < 0) throw std::invalid_argument("comb order must be non-negative");
    return TrigPoly(std::vector<double>(static_cast<std::size_t>(N), 1.0));
  }

  int order() const { return static_cast<int>(c_.size()); }
  const std::vector<double>& coefficients() const { return c_; }

  double eval_angular(double x) const { return eval_impl(x, 1.0); }
  double eval_unit_period(double x) const { return eval_impl(x, 2.0 * std::numbers::pi); }
  cplx eval_angular(cplx z) const { return eval_impl(z, 1.0); }
  cplx eval_unit_period(cplx z) const { return eval_impl(z, 2.0 * std::numbers::pi); }

 private:
  template <class T>
  T eval_impl(T x, double w) const {
    T acc = 0.0;
    // Summed from the highest frequency down so small terms are added first.
    for (std::size_t q = c_.size(); q-- > 0;) acc += c_[q] * std::cos(static_cast<double>(q + 1) * w * x);
    return T(1.0) + 2.0 * acc;
  }
  std::vector<double> c_;
};

// sin((2N+1) pi x) / sin(pi x), the closed form of the unit-period comb truncation. Near the integers
// both sines are roundoff-sized, so the cosine sum is used there instead.
inline double dirichlet_kernel(int N, double x) {
  const double s = std::sin(std::numbers::pi * x);
  if (std::abs(s) <= 1e-3) return TrigPoly::comb(N).eval_unit_period(x);
  return std::sin((2.0 * N + 1.0) * std::numbers::pi * x) / s;
}

// ---------------------------------------------------------------- comb convergence

struct CombRow {
  int N = 0;
  double integral = 0.0;
  double comb_sum = 0.0;
  double error = 0.0;           // |integral - comb_sum|
  double halved_change = 0.0;   // change of the integral when the panel width is halved
};

struct CombProblem {
  std::string name;
  std::function<double(double)> f;
  double R = 7.0;          // |f| is negligible beyond R
  bool kink_at_zero = false;
};

inline CombProblem gaussian_comb_problem() { return {"exp(-x^2)", [](double x) { return std::exp(-x * x); }, 7.0, false}; }
inline CombProblem laplace_comb_problem() { return {"exp(-|x|)", [](double x) { return std::exp(-std::abs(x)); }, 40.0, true}; }

namespace detail {

inline double comb_value(int N, double x) { return dirichlet_kernel(N, x); }

// int_{-R}^{R} f(x) lambda^{<=N}(x) dx with Gauss-Kronrod 15 on panels of width 1/((2N+1) refine).
inline double comb_integral(const CombProblem& p, int N, int refine) {
  const double width = 1.0 / ((2.0 * N + 1.0) * refine);
  const long panels = static_cast<long>(std::ceil(p.R / width));
  double total = 0.0;
  auto g = [&](double x) { return p.f(x) * comb_value(N, x); };
  for (int side : {-1, 1})
    for (long k = 0; k < panels; ++k) {
      const double a = side * width * static_cast<double>(k), b = side * width * static_cast<double>(k + 1);
      const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, std::min(a, b), std::max(a, b), 0);
      total += v;
    }
  return total;
}

}  // namespace detail

inline std::vector<CombRow> comb_convergence(const CombProblem& p, const std::vector<int>& N_list) {
  double comb_sum = 0.0;
  const long M = static_cast<long>(std::floor(p.R));
  for (long n = -M; n <= M; ++n) comb_sum += p.f(static_cast<double>(n));
  std::vector<CombRow> rows;
  for (int N : N_list) {
    if (N < 1) throw std::invalid_argument("comb order must be positive");
    CombRow r;
    r.N = N;
    r.integral = detail::comb_integral(p, N, 1);
    r.comb_sum = comb_sum;
    r.error = std::abs(r.integral - comb_sum);
    r.halved_change = std::abs(detail::comb_integral(p, N, 2) - r.integral);
    rows.push_back(r);
  }
  return rows;
}

// Errors must not grow along the doubling schedule, judged against the quadrature noise floor.
inline bool comb_errors_decreasing(const std::vector<CombRow>& rows, double floor_abs = 0.0) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double floor = floor_abs + 4.0 * std::max(rows[i].halved_change, rows[i - 1].halved_change);
    if (rows[i].error > rows[i - 1].error && rows[i].error > floor) return false;
  }
  return true;
}

// ---------------------------------------------------------------- complex translation

struct TranslationResult {
  cplx lhs;            // integral of F over R^n
  cplx rhs;            // integral of F(. + i a)
  double diff = 0.0;   // |rhs - lhs|
  double rel = 0.0;    // diff / |lhs|
  double halved_change = 0.0;
  double boundary_max = 0.0;  // largest |F| seen at the truncation boundary, relative to |lhs|
  bool pass = false;
};

class DecayViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Nodes {
  std::vector<double> x, w;
  std::vector<long> panel;      // panel index of each node
  std::vector<int> local;       // position within the panel's rule
  std::vector<double> offsets;  // rule offsets from the panel start, shared by all panels
  double h = 0.0;
  long panels = 0;
};

inline Nodes gl_nodes(double R, double panel) {
  Nodes n;
  n.panels = static_cast<long>(std::ceil(2.0 * R / panel));
  n.h = 2.0 * R / static_cast<double>(n.panels);
  const auto& abs = boost::math::quadrature::gauss<double, 20>::abscissa();
  const auto& wts = boost::math::quadrature::gauss<double, 20>::weights();
  std::vector<double> rw;
  for (std::size_t j = 0; j < abs.size(); ++j) {
    if (abs[j] != 0.0) {
      n.offsets.push_back(0.5 * n.h * (1.0 - abs[j]));
      rw.push_back(0.5 * n.h * wts[j]);
    }
    n.offsets.push_back(0.5 * n.h * (1.0 + abs[j]));
    rw.push_back(0.5 * n.h * wts[j]);
  }
  for (long k = 0; k < n.panels; ++k)
    for (std::size_t j = 0; j < n.offsets.size(); ++j) {
      n.x.push_back(-R + n.h * static_cast<double>(k) + n.offsets[j]);
      n.w.push_back(rw[j]);
      n.panel.push_back(k);
      n.local.push_back(static_cast<int>(j));
    }
  return n;
}

// Path graph 0 - 1 - ... - n with vertex 0 pinned at the origin:
// F(x) = prod_i I(x_i - x_{i-1}) e^{-x_i^2}, shifted by i a (a_0 = 0).
inline cplx path_integral(const Extension& ext, const std::vector<double>& a, const Nodes& nd) {
  const std::size_t K = nd.x.size();
  const std::size_t P = nd.offsets.size();
  std::vector<cplx> v(K), next(K);
  auto vertex = [&](std::size_t k, double ai) {
    const cplx z(nd.x[k], ai);
    return nd.w[k] * std::exp(-z * z);
  };
  for (std::size_t k = 0; k < K; ++k) v[k] = vertex(k, a[0]) * ext.eval(cplx(nd.x[k], a[0]));
  for (std::size_t i = 1; i < a.size(); ++i) {
    const double da = a[i] - a[i - 1];
    // Node differences depend only on (panel difference, local pair); tabulate the edge factor once.
    std::vector<cplx> table(static_cast<std::size_t>(2 * nd.panels - 1) * P * P);
    for (long dp = -(nd.panels - 1); dp <= nd.panels - 1; ++dp)
      for (std::size_t j2 = 0; j2 < P; ++j2)
        for (std::size_t j1 = 0; j1 < P; ++j1) {
          const double dx = nd.h * static_cast<double>(dp) + nd.offsets[j2] - nd.offsets[j1];
          table[(static_cast<std::size_t>(dp + nd.panels - 1) * P + j2) * P + j1] = ext.eval(cplx(dx, da));
        }
    for (std::size_t k2 = 0; k2 < K; ++k2) {
      cplx acc = 0.0;
      for (std::size_t k1 = 0; k1 < K; ++k1) {
        const long dp = nd.panel[k2] - nd.panel[k1];
        acc += v[k1] * table[(static_cast<std::size_t>(dp + nd.panels - 1) * P + static_cast<std::size_t>(nd.local[k2])) * P +
                             static_cast<std::size_t>(nd.local[k1])];
      }
      next[k2] = acc * vertex(k2, a[i]);
    }
    std::swap(v, next);
  }
  cplx total = 0.0;
  for (const cplx& c : v) total += c;
  return total;
}

}  // namespace detail

struct TranslationSpec {
  double R = 7.0;         // truncation box [-R, R]^n
  double panel = 0.5;     // Gauss-Legendre panel width
  double rel_tol = 1e-6;
  double decay_tol = 1e-12;
};

inline TranslationResult complex_translation_check(const Extension& ext, const std::vector<double>& a,
                                                   const TranslationSpec& q = {}) {
  if (a.empty() || a.size() > 3) throw std::invalid_argument("translation checks support 1 to 3 integration variables");
  const double eps = ext.strip_halfwidth();
  if (!(std::abs(a[0]) < eps)) throw StripViolation("shift of the first edge leaves the strip");
  for (std::size_t i = 1; i < a.size(); ++i)
    if (!(std::abs(a[i] - a[i - 1]) < eps)) throw StripViolation("edge shift difference leaves the strip");
  TranslationResult r;
  const std::vector<double> zero(a.size(), 0.0);
  const auto nodes = detail::gl_nodes(q.R, q.panel);
  r.lhs = detail::path_integral(ext, zero, nodes);
  r.rhs = detail::path_integral(ext, a, nodes);
  const auto fine = detail::gl_nodes(q.R, 0.5 * q.panel);
  r.halved_change = std::max(std::abs(detail::path_integral(ext, zero, fine) - r.lhs),
                             std::abs(detail::path_integral(ext, a, fine) - r.rhs));
  // Decay hypothesis: the shifted single-vertex factor must be negligible on the boundary.
  for (double x : {-q.R, q.R})
    for (std::size_t i = 0; i < a.size(); ++i) {
      const cplx z(x, a[i]);
      const double edge = std::abs(ext.eval(cplx(x, a[i] - (i ? a[i - 1] : 0.0))));
      r.boundary_max = std::max(r.boundary_max, std::abs(std::exp(-z * z)) * edge);
    }
  r.boundary_max /= std::abs(r.lhs);
  if (r.boundary_max > q.decay_tol) throw DecayViolation("integrand does not decay at the truncation boundary");
  r.diff = std::abs(r.rhs - r.lhs);
  r.rel = r.diff / std::abs(r.lhs);
  r.pass = r.rel <= q.rel_tol;
  return r;
}

// ---------------------------------------------------------------- regularization bridge

struct BridgeRow {
  double eps = 0.0;
  double value = 0.0;   // sum over phi in zeta + Z^Lambda of I^{eps,xi}(phi) phi^powers
  double change = 0.0;  // |value - previous value|
};

struct BridgeProblem {
  PotentialSpec potential;   // gauss_reg ignored; replaced by each eps
  std::vector<Site> sites;   // one or two sites
  std::vector<double> zeta;  // per site
  double xi = 0.0;           // constant boundary value
  std::vector<int> powers;   // monomial exponent per site
};

inline double bridge_sum(const BridgeProblem& bp, double eps) {
  const Domain dom = Domain::from_sites(bp.sites);
  if (dom.size() > 2) throw std::invalid_argument("bridge sums are limited to two sites");
  if (bp.zeta.size() != dom.size() || bp.powers.size() != dom.size()) throw std::invalid_argument("bridge field sizes");
  PotentialSpec pot = bp.potential;
  pot.gauss_reg = eps;
  pot.validate();
  // Every site has at least three boundary edges; beyond the window the weight is below e^{-180}.
  long W;
  if (pot.family == Family::pSOS)
    W = static_cast<long>(std::ceil(std::pow(60.0 / pot.beta, 1.0 / pot.p))) + static_cast<long>(std::ceil(std::abs(bp.xi))) + 2;
  else
    W = 64 + static_cast<long>(std::ceil(std::abs(bp.xi)));
  const std::size_t n = dom.size();
  const std::size_t L = static_cast<std::size_t>(2 * W + 1);
  // Per-site boundary log-weight and monomial factor, tabulated over h in [-W, W].
  std::vector<std::vector<double>> site_lw(n, std::vector<double>(L)), mono(n, std::vector<double>(L));
  std::vector<std::size_t> deg(n, 0);
  for (const BoundaryEdge& e : dom.boundary_edges()) ++deg[e.interior];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < L; ++k) {
      const double phi = static_cast<double>(static_cast<long>(k) - W) + bp.zeta[i];
      site_lw[i][k] = static_cast<double>(deg[i]) * log_weight(pot, phi - bp.xi);
      mono[i][k] = std::pow(phi, bp.powers[i]);
    }
  double total = 0.0;
  if (n == 1) {
    for (std::size_t k = 0; k < L; ++k) total += std::exp(site_lw[0][k]) * mono[0][k];
    return total;
  }
  // Interior edge log-weight tabulated over h_0 - h_1 in [-2W, 2W].
  std::vector<double> edge(2 * L - 1);
  for (std::size_t d = 0; d < edge.size(); ++d)
    edge[d] = log_weight(pot, static_cast<double>(static_cast<long>(d) - 2 * W) + bp.zeta[0] - bp.zeta[1]);
  for (std::size_t k0 = 0; k0 < L; ++k0)
    for (std::size_t k1 = 0; k1 < L; ++k1)
      total += std::exp(site_lw[0][k0] + site_lw[1][k1] + edge[k0 + L - 1 - k1]) * mono[0][k0] * mono[1][k1];
  return total;
}

inline std::vector<BridgeRow> regularized_weight_bridge(const BridgeProblem& bp, const std::vector<double>& eps_list) {
  std::vector<BridgeRow> rows;
  for (double e : eps_list) {
    BridgeRow r;
    r.eps = e;
    r.value = bridge_sum(bp, e);
    r.change = rows.empty() ? 0.0 : std::abs(r.value - rows.back().value);
    rows.push_back(r);
  }
  return rows;
}

// Successive changes shrink along a decreasing eps list. Changes before row `from` are treated as
// pre-asymptotic and not compared.
inline bool bridge_is_cauchy(const std::vector<BridgeRow>& rows, std::size_t from = 2) {
  if (rows.size() < from + 2) throw std::invalid_argument("not enough rows for a Cauchy check");
  for (std::size_t i = std::max<std::size_t>(from + 1, 2); i < rows.size(); ++i)
    if (!(rows[i].change < rows[i - 1].change)) return false;
  return true;
}

}  // namespace sosdeloc
