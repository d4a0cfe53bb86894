#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "charges.hpp"
#include "lattice.hpp"
#include "potential.hpp"
#include "spinwave.hpp"

namespace sosdeloc {

// iota(x, a) = I(x+ia)/I(x) e^{-3 c g(a)}, evaluated in log space.
inline cplx log_iota(const Extension& ext, double x, double a, double c_beta) {
  if (a == 0.0) return 0.0;
  if (!(std::abs(a) < ext.strip_halfwidth())) throw StripViolation("iota: shift outside the strip");
  return ext.log_eval(cplx(x, a)) - ext.log_eval(cplx(x, 0.0)).real() - 3.0 * c_beta * g_profile(a);
}

inline cplx iota(const Extension& ext, double x, double a, double c_beta) {
  return std::exp(log_iota(ext, x, a, c_beta));
}

// d/dx log iota(x, a) = (log I)'(x+ia) - (log I)'(x).
inline cplx iota_log_derivative(const Extension& ext, double x, double a) {
  if (a == 0.0) return 0.0;
  return ext.log_derivative(cplx(x, a)) - ext.log_derivative(cplx(x, 0.0)).real();
}

// Value of a domain-indexed field at any site; zero off the domain.
inline double field_at(const Domain& dom, const SiteVector& v, Site s) {
  const auto i = dom.index_of(s);
  return i ? v[*i] : 0.0;
}

// Oriented edge (i, j) of supp grad a with a_i - a_j != 0.
struct ShiftEdge {
  Site i, j;
  double a = 0.0;
};

inline std::vector<ShiftEdge> shift_edges(const SpinWave& a) {
  std::vector<ShiftEdge> out;
  a.for_each_edge([&](Site s, Site t, double d) {
    if (d != 0.0) out.push_back({s, t, d});
  });
  return out;
}

// ||(grad sigma) restricted to V||_2^2 over the edges with both endpoints in V = supp grad a.
inline double restricted_gradient_sq(const Domain& dom, const SiteVector& sigma, const std::vector<Site>& V) {
  double acc = 0.0;
  for (const Site& s : V)
    for (const Site& t : {Site{s.x + 1, s.y}, Site{s.x, s.y + 1}})
      if (std::binary_search(V.begin(), V.end(), t)) {
        const double d = field_at(dom, sigma, s) - field_at(dom, sigma, t);
        acc += d * d;
      }
  return acc;
}

inline cplx log_iota_V(const Extension& ext, const Domain& dom, const SiteVector& phi,
                       const std::vector<ShiftEdge>& edges, double c_beta) {
  cplx acc = 0.0;
  for (const ShiftEdge& e : edges) acc += log_iota(ext, field_at(dom, phi, e.i) - field_at(dom, phi, e.j), e.a, c_beta);
  return acc;
}

inline cplx iota_V(const Extension& ext, const Domain& dom, const SiteVector& phi, const SpinWave& a, double c_beta) {
  return std::exp(log_iota_V(ext, dom, phi, shift_edges(a), c_beta));
}

// grad sigma . grad_{grad phi} iota_V(phi, a), using d iota_V/d x_e = iota_V (log iota_e)'.
inline cplx iota_V_directional(const Extension& ext, const Domain& dom, const SiteVector& phi,
                               const std::vector<ShiftEdge>& edges, const SiteVector& sigma, double c_beta) {
  cplx dir = 0.0;
  for (const ShiftEdge& e : edges) {
    const double s = field_at(dom, sigma, e.i) - field_at(dom, sigma, e.j);
    if (s != 0.0) dir += s * iota_log_derivative(ext, field_at(dom, phi, e.i) - field_at(dom, phi, e.j), e.a);
  }
  return std::exp(log_iota_V(ext, dom, phi, edges, c_beta)) * dir;
}

struct EdgeDerivatives {
  cplx first, second;
};

// Central differences in the single edge variable x_e of iota_V, all other edges frozen.
inline EdgeDerivatives iota_V_edge_fd(const Extension& ext, const Domain& dom, const SiteVector& phi,
                                     const std::vector<ShiftEdge>& edges, std::size_t e, double c_beta,
                                     double h = 1e-5) {
  if (e >= edges.size()) throw std::out_of_range("edge index");
  cplx rest = 0.0;
  for (std::size_t k = 0; k < edges.size(); ++k)
    if (k != e) rest += log_iota(ext, field_at(dom, phi, edges[k].i) - field_at(dom, phi, edges[k].j), edges[k].a, c_beta);
  const double x = field_at(dom, phi, edges[e].i) - field_at(dom, phi, edges[e].j);
  auto at = [&](double dx) { return std::exp(rest + log_iota(ext, x + dx, edges[e].a, c_beta)); };
  const cplx p = at(0.5 * h), m = at(-0.5 * h);
  const cplx pp = at(h), mm = at(-h), c0 = at(0.0);
  return {(p - m) / h, (pp - 2.0 * c0 + mm) / (h * h)};
}

// ---------------------------------------------------------------- activities

struct RenormActivity {
  double z = 0.0;
  double K = 0.0;
  double E = 0.0;
};

inline RenormActivity renorm_activity(double K, double E) { return {2.0 * K * std::exp(-E), K, E}; }

// K(rho) at its worst permitted size with lambda-hat = 1: 2K = e^{C3 A} prod_v 2 e^{|rho_v|}.
inline double synthetic_K(const ChargeDensity& rho, long A, double C3 = 1.0) {
  double logK = C3 * static_cast<double>(A) - std::log(2.0);
  for (const auto& e : rho.entries()) logK += std::log(2.0) + static_cast<double>(std::labs(e.second));
  return std::exp(logK);
}

struct ActivityCheck {
  RenormActivity act;
  double decay_bound = 0.0;  // e^{-C5 gamma ||rho||_1/2 - C5 gamma A}
  bool within_decay_bound = false;
  bool within_eighth = false;
};

inline ActivityCheck check_activity(const ChargeDensity& rho, long A, double E, double gamma, double C5, double C3 = 1.0) {
  ActivityCheck c;
  c.act = renorm_activity(synthetic_K(rho, A, C3), E);
  c.decay_bound = std::exp(-C5 * gamma * static_cast<double>(rho.l1_norm()) / 2.0 - C5 * gamma * static_cast<double>(A));
  c.within_decay_bound = std::abs(c.act.z) <= c.decay_bound;
  c.within_eighth = std::abs(c.act.z) <= 0.125;
  return c;
}

// ---------------------------------------------------------------- Taylor claims

struct TaylorInstance {
  const Domain* domain = nullptr;
  ChargeDensity rho;
  SpinWave a;
  SiteVector phi, sigma, f, zeta;
  double z = 0.0;

  void validate() const {
    if (!domain) throw std::invalid_argument("instance has no domain");
    const std::size_t n = domain->size();
    if (phi.size() != n || sigma.size() != n || f.size() != n || zeta.size() != n)
      throw std::invalid_argument("instance fields do not match the domain");
    if (!(std::abs(z) <= 0.125)) throw std::invalid_argument("|z| must not exceed 1/8");
  }
};

struct TaylorResult {
  double lhs = 0.0;
  double S = 0.0;
  double r_bound = 0.0;
  double slack = 0.0;  // |lhs - S| / r_bound (0 when both vanish)
  bool pass = false;
};

class PositivityViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline TaylorResult taylor_check(const TaylorInstance& in, const Extension& ext, double c_beta) {
  in.validate();
  const Domain& dom = *in.domain;
  const auto edges = shift_edges(in.a);
  std::vector<Site> V;
  for (const ShiftEdge& e : edges) {
    V.push_back(e.i);
    V.push_back(e.j);
  }
  std::sort(V.begin(), V.end());
  V.erase(std::unique(V.begin(), V.end()), V.end());

  double theta = 0.0, srho = 0.0;
  for (const auto& [s, q] : in.rho.entries()) {
    theta += static_cast<double>(q) * (field_at(dom, in.phi, s) - field_at(dom, in.zeta, s));
    srho += static_cast<double>(q) * field_at(dom, in.sigma, s);
  }
  double fa = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (in.f[i] != 0.0) fa += in.f[i] * in.a.value(dom.site(i));
  const double u = srho + fa;

  SiteVector shifted = in.phi;
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += in.sigma[i];
  const cplx i0 = std::exp(log_iota_V(ext, dom, in.phi, edges, c_beta));
  const cplx i1 = std::exp(log_iota_V(ext, dom, shifted, edges, c_beta));
  const double F0 = i0.real() * std::cos(theta), G0 = i0.imag() * std::sin(theta);
  const double F1 = i1.real() * std::cos(theta + u), G1 = i1.imag() * std::sin(theta + u);
  const double D0 = 1.0 + in.z * F0 - in.z * G0;
  const double D1 = 1.0 + in.z * F1 - in.z * G1;
  if (!(D0 > 0.0) || !(D1 > 0.0)) throw PositivityViolation("1 + zF - zG is not positive");

  TaylorResult r;
  r.lhs = std::log1p((in.z * (F1 - F0) - in.z * (G1 - G0)) / D0);
  const cplx di = iota_V_directional(ext, dom, in.phi, edges, in.sigma, c_beta);
  const double c = std::cos(theta), s = std::sin(theta);
  r.S = in.z / D0 * (c * di.real() - s * u * i0.real() - s * di.imag() - c * u * i0.imag());
  const double grad_sq = restricted_gradient_sq(dom, in.sigma, V);
  r.r_bound = 6.0 * std::abs(in.z) * u * u +
              24.0 * (c_beta + 2.0) * (c_beta + 2.0) * std::abs(in.z) * static_cast<double>(V.size()) * grad_sq;
  const double diff = std::abs(r.lhs - r.S);
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(r.lhs) + std::abs(r.S));
  r.slack = r.r_bound > 0.0 ? diff / r.r_bound : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  r.pass = diff <= r.r_bound + roundoff;
  return r;
}

struct LnITaylorResult {
  double lhs = 0.0;
  double T = 0.0;
  double R_bound = 0.0;
  double slack = 0.0;
  bool pass = false;
};

// ln(I(phi+sigma)/I(phi)) over every edge touching the domain (exterior heights 0) against its
// first-order term and the (c'/2)||grad sigma||^2 remainder bound.
inline LnITaylorResult lnI_taylor_check(const Extension& ext, const Domain& dom, const SiteVector& phi,
                                        const SiteVector& sigma, double c_beta_prime) {
  if (phi.size() != dom.size() || sigma.size() != dom.size()) throw std::invalid_argument("field size mismatch");
  LnITaylorResult r;
  double grad_sq = 0.0, mag = 0.0;
  auto edge = [&](double x, double s) {
    if (s == 0.0) return;
    const double l1 = ext.log_eval(cplx(x + s, 0.0)).real(), l0 = ext.log_eval(cplx(x, 0.0)).real();
    const double t = ext.log_derivative(cplx(x, 0.0)).real() * s;
    r.lhs += l1 - l0;
    r.T += t;
    mag += std::abs(l1) + std::abs(l0) + std::abs(t);
    grad_sq += s * s;
  };
  for (std::size_t i = 0; i < dom.size(); ++i)
    for (std::size_t j : dom.neighbors(i))
      if (i < j) edge(phi[i] - phi[j], sigma[i] - sigma[j]);
  for (const BoundaryEdge& b : dom.boundary_edges()) edge(phi[b.interior], sigma[b.interior]);
  r.R_bound = 0.5 * c_beta_prime * grad_sq;
  const double diff = std::abs(r.lhs - r.T);
  r.slack = r.R_bound > 0.0 ? diff / r.R_bound : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  r.pass = diff <= r.R_bound + 64.0 * std::numeric_limits<double>::epsilon() * mag;
  return r;
}

// First-order term of ln(I(phi+sigma)/I(phi)) alone, for antisymmetry checks.
inline double lnI_linear_term(const Extension& ext, const Domain& dom, const SiteVector& phi, const SiteVector& sigma) {
  double T = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i)
    for (std::size_t j : dom.neighbors(i))
      if (i < j) T += ext.log_derivative(cplx(phi[i] - phi[j], 0.0)).real() * (sigma[i] - sigma[j]);
  for (const BoundaryEdge& b : dom.boundary_edges())
    T += ext.log_derivative(cplx(phi[b.interior], 0.0)).real() * sigma[b.interior];
  return T;
}

struct AggregateRemainder {
  double sum_r_bounds = 0.0;
  double rhs = 0.0;  // 2 e^{-C5 gamma/2} ||grad sigma||^2
  bool pass = false;
};

inline AggregateRemainder aggregate_remainder(const std::vector<TaylorResult>& per_charge, double grad_sigma_sq,
                                              double C5, double gamma) {
  AggregateRemainder a;
  for (const TaylorResult& t : per_charge) a.sum_r_bounds += t.r_bound;
  a.rhs = 2.0 * std::exp(-C5 * gamma / 2.0) * grad_sigma_sq;
  a.pass = a.sum_r_bounds <= a.rhs;
  return a;
}

}  // namespace sosdeloc
