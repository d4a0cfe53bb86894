#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "lattice.hpp"
#include "potential.hpp"

namespace sosdeloc {

enum class ValueMode { Integer, Real };

struct ModelSpec {
  PotentialSpec potential;
  std::shared_ptr<const Domain> domain;
  std::unordered_map<Site, double, SiteHash> xi;  // values on exterior boundary sites
  SiteVector zeta;                                 // fiber shift per site, in [0,1)
  ValueMode mode = ValueMode::Integer;
  std::optional<std::pair<long, long>> height_bounds;  // truncation of n_i, for exact small-instance checks

  // xi_i = u.i on the exterior boundary; zeta defaults to zero.
  static ModelSpec tilted(PotentialSpec pot, Domain dom, double ux, double uy, SiteVector zeta = {},
                          ValueMode mode = ValueMode::Integer) {
    ModelSpec m;
    m.potential = pot;
    m.domain = std::make_shared<const Domain>(std::move(dom));
    for (const Site& s : m.domain->exterior_boundary_sites())
      m.xi[s] = ux * static_cast<double>(s.x) + uy * static_cast<double>(s.y);
    m.zeta = zeta.empty() ? SiteVector(m.domain->size(), 0.0) : std::move(zeta);
    m.mode = mode;
    m.validate();
    return m;
  }

  void validate() const {
    potential.validate();
    if (!domain || domain->size() == 0) throw std::invalid_argument("model needs a non-empty domain");
    if (zeta.size() != domain->size()) throw std::invalid_argument("zeta must have one entry per site");
    for (double z : zeta)
      if (!(z >= 0.0 && z < 1.0)) throw std::invalid_argument("zeta values must lie in [0,1)");
    for (const Site& s : domain->exterior_boundary_sites()) {
      auto it = xi.find(s);
      if (it == xi.end() || !std::isfinite(it->second)) throw std::invalid_argument("boundary value missing or not finite");
    }
    if (height_bounds && height_bounds->first > height_bounds->second) throw std::invalid_argument("empty height bounds");
  }
};

// Uniform double in [0,1) from the top 53 bits; fixed so streams are reproducible across libraries.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace detail {

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// T[W] >= log sum_{s >= W+1} of the largest product of four edge weights at distance >= s.
class TailTable {
 public:
  explicit TailTable(const PotentialSpec& pot) : pot_(pot) {}

  // Smallest W with log(2) + T[W] <= log_budget.
  long window_for(double log_budget) {
    long W = 0;
    while (true) {
      if (W >= static_cast<long>(table_.size())) extend(std::max<long>(64, 2 * static_cast<long>(table_.size())));
      if (std::log(2.0) + table_[static_cast<std::size_t>(W)] <= log_budget) return W;
      ++W;
    }
  }

 private:
  static constexpr long kCap = long{1} << 22;

  void extend(long n) {
    if (n > kCap) throw std::runtime_error("heat-bath window exceeds the enumeration cap");
    for (long W = static_cast<long>(table_.size()); W < n; ++W) table_.push_back(bound(static_cast<double>(W + 1)));
  }

  double bound(double A) const {
    if (pot_.family == Family::pSOS) {
      // e^{-c A^p} + int_A^inf e^{-c t^p} dt with c = 4 beta.
      const double c = 4.0 * pot_.beta, p = pot_.p;
      const double head = -c * std::pow(A, p);
      const double q = boost::math::gamma_q(1.0 / p, c * std::pow(A, p));
      const double integral = q > 0.0 ? std::log(q) + std::lgamma(1.0 / p) - std::log(p) - std::log(c) / p
                                      : -std::numeric_limits<double>::infinity();
      return log_sum_exp(head, integral);
    }
    // I_{nu+1}(y)/I_nu(y) < y/(2nu+2): geometric tail after distance A.
    const double y = 1.0 / pot_.beta;
    const double r = y / (2.0 * A + 2.0);
    if (r >= 1.0) return std::numeric_limits<double>::infinity();
    return 4.0 * log_weight(pot_, A) - std::log1p(-std::pow(r, 4.0));
  }

  PotentialSpec pot_;
  std::vector<double> table_;
};

}  // namespace detail

struct ConditionalPmf {
  long lo = 0;                // integer n of probs[0]
  std::vector<double> probs;  // normalized
  double offset = 0.0;        // phi = n + offset
};

class HeatBath {
 public:
  explicit HeatBath(ModelSpec spec) : spec_(std::move(spec)), tail_(spec_.potential) {
    spec_.validate();
    const Domain& d = *spec_.domain;
    nbrs_.resize(d.size());
    ext_.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) nbrs_[i] = d.neighbors(i);
    for (const BoundaryEdge& e : d.boundary_edges()) ext_[e.interior].push_back(spec_.xi.at(e.exterior));
    for (std::size_t i = 0; i < d.size(); ++i) (even_parity(d.site(i)) ? even_ : odd_).push_back(i);
    fast_p1_ = spec_.potential.family == Family::pSOS && spec_.potential.p == 1.0 && spec_.potential.gauss_reg == 0.0 &&
               !spec_.height_bounds && spec_.mode == ValueMode::Integer;
    gaussian_rv_ = spec_.potential.family == Family::pSOS && spec_.potential.p == 2.0 &&
                   spec_.potential.gauss_reg == 0.0 && spec_.mode == ValueMode::Real;
    phi_.assign(d.size(), 0.0);
  }

  const ModelSpec& spec() const { return spec_; }
  const SiteVector& phi() const { return phi_; }
  std::uint64_t sweeps_done() const { return sweeps_; }

  // Heights from the rounded harmonic extension of the boundary data.
  void init_harmonic() {
    const Domain& d = *spec_.domain;
    SiteVector b(d.size(), 0.0);
    bool any = false;
    for (std::size_t i = 0; i < d.size(); ++i)
      for (double v : ext_[i]) {
        b[i] += v;
        any = any || v != 0.0;
      }
    SiteVector h(d.size(), 0.0);
    if (any) h = solve_green(d, b, 1e-10).sigma;
    for (std::size_t i = 0; i < d.size(); ++i) phi_[i] = h[i];
    if (spec_.mode == ValueMode::Integer)
      for (std::size_t i = 0; i < d.size(); ++i) {
        double n = std::round(h[i] - spec_.zeta[i]);
        if (spec_.height_bounds)
          n = std::clamp(n, static_cast<double>(spec_.height_bounds->first), static_cast<double>(spec_.height_bounds->second));
        phi_[i] = n + spec_.zeta[i];
      }
  }

  // Integer heights n_i (phi_i = n_i + zeta_i).
  void set_heights(const std::vector<long>& n) {
    if (n.size() != phi_.size()) throw std::invalid_argument("height vector size mismatch");
    for (std::size_t i = 0; i < n.size(); ++i) phi_[i] = static_cast<double>(n[i]) + spec_.zeta[i];
  }
  std::vector<long> heights() const {
    std::vector<long> n(phi_.size());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = std::lround(phi_[i] - spec_.zeta[i]);
    return n;
  }
  void set_phi(const SiteVector& x) {
    if (x.size() != phi_.size()) throw std::invalid_argument("field size mismatch");
    phi_ = x;
  }

  // Exact conditional law of n_i given the other heights, over the tail-bounded window.
  ConditionalPmf conditional(std::size_t i) const {
    if (spec_.mode != ValueMode::Integer) throw std::logic_error("integer conditional requested in real mode");
    std::array<double, 4> c{};
    const int k = gather(i, c);
    const double off = std::floor(c[0]);
    for (int j = 0; j < k; ++j) c[j] -= off;
    ConditionalPmf pmf;
    long lo, hi;
    if (spec_.height_bounds) {
      lo = spec_.height_bounds->first - static_cast<long>(off);
      hi = spec_.height_bounds->second - static_cast<long>(off);
    } else {
      window(c, k, lo, hi);
    }
    std::vector<double> lw(static_cast<std::size_t>(hi - lo + 1));
    double mx = -std::numeric_limits<double>::infinity();
    for (long n = lo; n <= hi; ++n) {
      const double v = log_cond(static_cast<double>(n), c, k, i);
      lw[static_cast<std::size_t>(n - lo)] = v;
      mx = std::max(mx, v);
    }
    if (!std::isfinite(mx)) fail(i, "conditional weight is not finite");
    double Z = 0.0;
    for (double& v : lw) Z += (v = std::exp(v - mx));
    for (double& v : lw) v /= Z;
    pmf.lo = lo + static_cast<long>(off);
    pmf.probs = std::move(lw);
    pmf.offset = spec_.zeta[i];
    return pmf;
  }

  // E[phi_i], E[phi_i^2] under the exact conditional.
  std::pair<double, double> conditional_moments(std::size_t i) const {
    if (spec_.mode == ValueMode::Real) return real_moments(i);
    const ConditionalPmf pmf = conditional(i);
    // Centre at the mode-ish window midpoint to limit cancellation.
    const double centre = static_cast<double>(pmf.lo) + 0.5 * static_cast<double>(pmf.probs.size() - 1) + pmf.offset;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < pmf.probs.size(); ++k) {
      const double y = static_cast<double>(pmf.lo + static_cast<long>(k)) + pmf.offset - centre;
      m1 += pmf.probs[k] * y;
      m2 += pmf.probs[k] * y * y;
    }
    return {m1 + centre, m2 + 2.0 * centre * m1 + centre * centre};
  }

  void update_site(std::size_t i, std::mt19937_64& rng) {
    if (spec_.mode == ValueMode::Real) {
      phi_[i] = sample_real(i, rng);
      return;
    }
    if (fast_p1_) {
      phi_[i] = static_cast<double>(sample_p1(i, rng)) + spec_.zeta[i];
      return;
    }
    const ConditionalPmf pmf = conditional(i);
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t k = 0;
    for (; k + 1 < pmf.probs.size(); ++k) {
      acc += pmf.probs[k];
      if (u < acc) break;
    }
    phi_[i] = static_cast<double>(pmf.lo + static_cast<long>(k)) + pmf.offset;
  }

  // One systematic checkerboard sweep: even sites, then odd sites.
  void sweep(std::mt19937_64& rng) {
    for (std::size_t i : even_) update_site(i, rng);
    for (std::size_t i : odd_) update_site(i, rng);
    ++sweeps_;
  }

  const std::vector<std::size_t>& even_sites() const { return even_; }
  const std::vector<std::size_t>& odd_sites() const { return odd_; }

 private:
  [[noreturn]] void fail(std::size_t i, const std::string& what) const {
    const Site s = spec_.domain->site(i);
    std::ostringstream os;
    os << what << " at site (" << s.x << "," << s.y << ")";
    throw std::runtime_error(os.str());
  }

  // c_j = phi_j - zeta_i for the four neighbours; returns how many (always 4 on Z^2).
  int gather(std::size_t i, std::array<double, 4>& c) const {
    int k = 0;
    for (std::size_t j : nbrs_[i]) c[k++] = phi_[j] - spec_.zeta[i];
    for (double v : ext_[i]) c[k++] = v - spec_.zeta[i];
    std::sort(c.begin(), c.begin() + k);
    return k;
  }

  double log_cond(double n, const std::array<double, 4>& c, int k, std::size_t i) const {
    double v = 0.0;
    for (int j = 0; j < k; ++j) v += log_weight(spec_.potential, n - c[j]);
    if (!std::isfinite(v) && v != -std::numeric_limits<double>::infinity()) fail(i, "non-finite weight");
    return v;
  }

  void window(const std::array<double, 4>& c, int k, long& lo, long& hi) const {
    const long mmin = static_cast<long>(std::floor(c[0])), mmax = static_cast<long>(std::ceil(c[k - 1]));
    double core = -std::numeric_limits<double>::infinity();
    for (long n = mmin; n <= mmax; ++n) core = detail::log_sum_exp(core, log_cond(static_cast<double>(n), c, k, 0));
    // Relative tail mass 1e-16: second moments pick up W^2 times the dropped mass.
    const long W = tail_.window_for(std::log(1e-16) + core);
    lo = mmin - W;
    hi = mmax + W;
  }

  // Exact sampler for p = 1: the log-weight is piecewise linear in n between the ceilings of the c_j.
  long sample_p1(std::size_t i, std::mt19937_64& rng) const {
    std::array<double, 4> c{};
    const int k = gather(i, c);
    if (k != 4) fail(i, "site does not have four neighbours");
    const double base = std::floor(c[0]);
    for (double& v : c) v -= base;
    const double beta = spec_.potential.beta;
    std::array<long, 4> t{};
    for (int j = 0; j < 4; ++j) t[j] = static_cast<long>(std::ceil(c[j]));
    // Region r holds integers n with exactly r of the c_j <= n; there log w = -beta((2r-4) n + C_r).
    std::array<double, 5> logmass{}, slope{}, alpha{};
    std::array<long, 5> a{}, b{};
    const long inf = std::numeric_limits<long>::max();
    for (int r = 0; r <= 4; ++r) {
      double C = 0.0;
      for (int j = 0; j < 4; ++j) C += j < r ? -c[j] : c[j];
      slope[r] = -beta * (2.0 * r - 4.0);
      alpha[r] = -beta * C;
      a[r] = r == 0 ? -inf : t[r - 1];
      b[r] = r == 4 ? inf : t[r] - 1;
      logmass[r] = -std::numeric_limits<double>::infinity();
      if (r == 0) {
        logmass[r] = alpha[r] + slope[r] * static_cast<double>(b[r]) - std::log(-std::expm1(-slope[r]));
      } else if (r == 4) {
        logmass[r] = alpha[r] + slope[r] * static_cast<double>(a[r]) - std::log(-std::expm1(slope[r]));
      } else if (b[r] >= a[r]) {
        const double L = static_cast<double>(b[r] - a[r] + 1);
        if (slope[r] == 0.0) {
          logmass[r] = alpha[r] + std::log(L);
        } else if (slope[r] < 0.0) {
          logmass[r] = alpha[r] + slope[r] * static_cast<double>(a[r]) + std::log(std::expm1(slope[r] * L) / std::expm1(slope[r]));
        } else {
          logmass[r] = alpha[r] + slope[r] * static_cast<double>(b[r]) + std::log(std::expm1(-slope[r] * L) / std::expm1(-slope[r]));
        }
      }
    }
    const double mx = *std::max_element(logmass.begin(), logmass.end());
    std::array<double, 5> m{};
    double Z = 0.0;
    for (int r = 0; r <= 4; ++r) Z += (m[r] = std::exp(logmass[r] - mx));
    double u = uniform01(rng) * Z;
    int r = 0;
    for (; r < 4; ++r) {
      if (u < m[r]) break;
      u -= m[r];
    }
    const double v = uniform01(rng);
    long n;
    if (r == 0) {
      n = b[0] - geometric(slope[0], v);
    } else if (r == 4) {
      n = a[4] + geometric(-slope[4], v);
    } else {
      const long L = b[r] - a[r] + 1;
      if (slope[r] == 0.0) {
        n = a[r] + std::min(L - 1, static_cast<long>(v * static_cast<double>(L)));
      } else if (slope[r] < 0.0) {
        n = a[r] + truncated_geometric(-slope[r], L, v);
      } else {
        n = b[r] - truncated_geometric(slope[r], L, v);
      }
    }
    return n + static_cast<long>(base);
  }

  // P(m) proportional to e^{-lambda m}, m >= 0.
  static long geometric(double lambda, double v) {
    const double x = std::floor(-std::log1p(-v) / lambda);
    return static_cast<long>(x);
  }
  // Same law truncated to m < L.
  static long truncated_geometric(double lambda, long L, double v) {
    const double tot = -std::expm1(-lambda * static_cast<double>(L));
    const double x = std::floor(-std::log1p(-v * tot) / lambda);
    return std::min(L - 1, static_cast<long>(x));
  }

  // Real-valued heights: exact Gaussian conditional for p = 2, else inverse CDF on a 1/64 grid.
  struct RealGrid {
    double x0 = 0.0, h = 1.0 / 64.0;
    std::vector<double> cdf;
  };

  RealGrid real_grid(std::size_t i) const {
    std::array<double, 4> c{};
    const int k = gather(i, c);
    std::array<double, 4> cz = c;
    for (int j = 0; j < k; ++j) cz[j] += spec_.zeta[i];
    long lo, hi;
    window(cz, k, lo, hi);
    RealGrid g;
    g.x0 = static_cast<double>(lo);
    const long cells = (hi - lo) * 64;
    g.cdf.resize(static_cast<std::size_t>(cells));
    std::vector<double> lw(static_cast<std::size_t>(cells));
    double mx = -std::numeric_limits<double>::infinity();
    for (long q = 0; q < cells; ++q) {
      const double x = g.x0 + (static_cast<double>(q) + 0.5) * g.h;
      lw[static_cast<std::size_t>(q)] = log_cond(x, cz, k, i);
      mx = std::max(mx, lw[static_cast<std::size_t>(q)]);
    }
    double acc = 0.0;
    for (long q = 0; q < cells; ++q) g.cdf[static_cast<std::size_t>(q)] = (acc += std::exp(lw[static_cast<std::size_t>(q)] - mx));
    for (double& v : g.cdf) v /= acc;
    return g;
  }

  double sample_real(std::size_t i, std::mt19937_64& rng) const {
    if (gaussian_rv_) {
      double mean = 0.0;
      int k = 0;
      for (std::size_t j : nbrs_[i]) mean += phi_[j], ++k;
      for (double v : ext_[i]) mean += v, ++k;
      mean /= k;
      const double sd = 1.0 / std::sqrt(2.0 * spec_.potential.beta * k);
      const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
      return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    const RealGrid g = real_grid(i);
    const double u = uniform01(rng);
    const auto it = std::upper_bound(g.cdf.begin(), g.cdf.end(), u);
    const std::size_t q = std::min<std::size_t>(static_cast<std::size_t>(it - g.cdf.begin()), g.cdf.size() - 1);
    return g.x0 + (static_cast<double>(q) + uniform01(rng)) * g.h;
  }

  std::pair<double, double> real_moments(std::size_t i) const {
    if (gaussian_rv_) {
      double mean = 0.0;
      int k = 0;
      for (std::size_t j : nbrs_[i]) mean += phi_[j], ++k;
      for (double v : ext_[i]) mean += v, ++k;
      mean /= k;
      const double var = 1.0 / (2.0 * spec_.potential.beta * k);
      return {mean, var + mean * mean};
    }
    const RealGrid g = real_grid(i);
    double m1 = 0.0, m2 = 0.0, prev = 0.0;
    for (std::size_t q = 0; q < g.cdf.size(); ++q) {
      const double w = g.cdf[q] - prev;
      prev = g.cdf[q];
      const double lo = g.x0 + static_cast<double>(q) * g.h, hi = lo + g.h;
      m1 += w * 0.5 * (lo + hi);
      m2 += w * (lo * lo + lo * hi + hi * hi) / 3.0;
    }
    return {m1, m2};
  }

  ModelSpec spec_;
  mutable detail::TailTable tail_;
  std::vector<std::vector<std::size_t>> nbrs_;
  std::vector<std::vector<double>> ext_;
  std::vector<std::size_t> even_, odd_;
  SiteVector phi_;
  bool fast_p1_ = false;
  bool gaussian_rv_ = false;
  std::uint64_t sweeps_ = 0;
};

// ---------------------------------------------------------------- statistics

struct BatchMeans {
  double mean = 0.0;
  double se = 0.0;
  double tau_int = 0.0;
};

// Batch-means mean and standard error of a series; tau_int = b s_bm^2 / (2 s^2).
inline BatchMeans batch_means(const std::vector<double>& x, int batches) {
  if (batches < 2) throw std::invalid_argument("need at least two batches");
  const std::size_t b = x.size() / static_cast<std::size_t>(batches);
  if (b == 0) throw std::invalid_argument("fewer samples than batches");
  const std::size_t n = b * static_cast<std::size_t>(batches);
  BatchMeans r;
  std::vector<double> bm(static_cast<std::size_t>(batches), 0.0);
  for (std::size_t i = 0; i < n; ++i) bm[i / b] += x[i];
  for (double& v : bm) v /= static_cast<double>(b);
  r.mean = std::accumulate(bm.begin(), bm.end(), 0.0) / batches;
  double s_bm = 0.0, s = 0.0;
  for (double v : bm) s_bm += (v - r.mean) * (v - r.mean);
  s_bm /= batches - 1;
  for (std::size_t i = 0; i < n; ++i) s += (x[i] - r.mean) * (x[i] - r.mean);
  s /= static_cast<double>(n - 1);
  r.se = std::sqrt(s_bm / batches);
  r.tau_int = s > 0.0 ? static_cast<double>(b) * s_bm / (2.0 * s) : 0.0;
  return r;
}

struct ObservableEstimate {
  std::string name;
  double mean = 0.0;
  double se_mean = 0.0;
  double var = 0.0;
  double se_var = 0.0;
  double tau_int = 0.0;
};

// Variance from per-sweep first and second moments; the error bar comes from the batch means of the
// linearised estimator m2 - 2 mean m1.
inline ObservableEstimate estimate_from_moments(std::string name, const std::vector<double>& m1,
                                                const std::vector<double>& m2, int batches) {
  ObservableEstimate e;
  e.name = std::move(name);
  const BatchMeans a = batch_means(m1, batches);
  const BatchMeans b = batch_means(m2, batches);
  e.mean = a.mean;
  e.se_mean = a.se;
  e.tau_int = a.tau_int;
  e.var = b.mean - a.mean * a.mean;
  std::vector<double> psi(m1.size());
  for (std::size_t t = 0; t < m1.size(); ++t) psi[t] = m2[t] - 2.0 * a.mean * m1[t];
  e.se_var = batch_means(psi, batches).se;
  return e;
}

struct LinearObservable {
  std::string name;
  SiteVector f;
};

struct ChainConfig {
  std::uint64_t sweeps = 6400;
  std::uint64_t burn_in = 1000;
  int batches = 32;
  std::uint64_t seed = 1;
  bool rao_blackwell_origin = true;  // estimate phi_0 moments from the exact conditional
};

struct ChainStats {
  std::vector<ObservableEstimate> observables;  // phi_0 first, then the linear observables
  std::uint64_t sweeps = 0;
};

inline ChainStats run_chain(const ModelSpec& spec, const std::vector<LinearObservable>& obs, const ChainConfig& cfg) {
  if (cfg.batches < 32) throw std::invalid_argument("at least 32 batches are required");
  if (cfg.sweeps < 64ULL * static_cast<std::uint64_t>(cfg.batches)) throw std::invalid_argument("sweeps must be at least 64 per batch");
  for (const auto& o : obs)
    if (o.f.size() != spec.domain->size()) throw std::invalid_argument("observable size mismatch");
  const auto origin = spec.domain->index_of({0, 0});
  if (!origin) throw std::invalid_argument("the domain must contain the origin");
  HeatBath hb(spec);
  hb.init_harmonic();
  std::mt19937_64 rng(cfg.seed);
  for (std::uint64_t s = 0; s < cfg.burn_in; ++s) hb.sweep(rng);
  std::vector<double> o1(cfg.sweeps), o2(cfg.sweeps);
  std::vector<std::vector<double>> l1(obs.size(), std::vector<double>(cfg.sweeps));
  std::vector<std::vector<double>> l2 = l1;
  for (std::uint64_t s = 0; s < cfg.sweeps; ++s) {
    hb.sweep(rng);
    if (cfg.rao_blackwell_origin) {
      const auto m = hb.conditional_moments(*origin);
      o1[s] = m.first;
      o2[s] = m.second;
    } else {
      o1[s] = hb.phi()[*origin];
      o2[s] = o1[s] * o1[s];
    }
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const double v = dot(obs[k].f, hb.phi());
      l1[k][s] = v;
      l2[k][s] = v * v;
    }
  }
  ChainStats st;
  st.sweeps = cfg.sweeps;
  st.observables.push_back(estimate_from_moments("phi0", o1, o2, cfg.batches));
  for (std::size_t k = 0; k < obs.size(); ++k) st.observables.push_back(estimate_from_moments(obs[k].name, l1[k], l2[k], cfg.batches));
  return st;
}

// ---------------------------------------------------------------- exact enumeration oracle

struct ExactMoments {
  double mean = 0.0;
  double var = 0.0;
};

// Exact mean and variance of f.phi on a small domain by brute-force summation over |n_i| <= R.
inline ExactMoments exact_linear_moments(const ModelSpec& spec, const SiteVector& f, long R) {
  const Domain& d = *spec.domain;
  if (d.size() > 3) throw std::invalid_argument("enumeration oracle limited to three sites");
  const std::size_t n = d.size();
  std::vector<long> h(n, -R);
  double Z = 0.0, s1 = 0.0, s2 = 0.0;
  while (true) {
    double lw = 0.0;
    SiteVector phi(n);
    for (std::size_t i = 0; i < n; ++i) phi[i] = static_cast<double>(h[i]) + spec.zeta[i];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j : d.neighbors(i))
        if (i < j) lw += log_weight(spec.potential, phi[i] - phi[j]);
    for (const BoundaryEdge& e : d.boundary_edges()) lw += log_weight(spec.potential, phi[e.interior] - spec.xi.at(e.exterior));
    const double w = std::exp(lw);
    const double v = dot(f, phi);
    Z += w;
    s1 += w * v;
    s2 += w * v * v;
    std::size_t k = 0;
    while (k < n && h[k] == R) h[k++] = -R;
    if (k == n) break;
    ++h[k];
  }
  ExactMoments m;
  m.mean = s1 / Z;
  m.var = s2 / Z - m.mean * m.mean;
  return m;
}

// ---------------------------------------------------------------- growth experiment

struct LineFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = a x + b. When per-point standard errors are given, the slope error is
// propagated from them: se(a)^2 = sum_i ((x_i - xbar)/Sxx)^2 se_i^2. Unweighted on purpose, so a
// point whose error bar is underestimated (rare-event chains) cannot dominate the fit.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& se = {}) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs at least two points");
  if (!se.empty() && se.size() != x.size()) throw std::invalid_argument("fit_line: error vector size mismatch");
  const double n = static_cast<double>(x.size());
  const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double Sxx = 0.0, Sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Sxx += (x[i] - xbar) * (x[i] - xbar);
    Sxy += (x[i] - xbar) * (y[i] - ybar);
  }
  if (!(Sxx > 0.0)) throw std::invalid_argument("fit_line needs distinct abscissae");
  LineFit f;
  f.slope = Sxy / Sxx;
  f.intercept = ybar - f.slope * xbar;
  double v = 0.0;
  for (std::size_t i = 0; i < se.size(); ++i) v += (x[i] - xbar) * (x[i] - xbar) / (Sxx * Sxx) * se[i] * se[i];
  f.slope_se = std::sqrt(v);
  return f;
}

struct GrowthConfig {
  double p = 1.0;
  double beta = 0.1;
  double ux = 0.0, uy = 0.0;
  std::vector<std::int64_t> N_list{8, 16, 32};
  ChainConfig chain;
  unsigned threads = 1;
};

struct GrowthRow {
  std::int64_t N = 0;
  ObservableEstimate phi0;
  double quadratic_form = 0.0;  // delta_0 . Delta^{-1} delta_0
};

struct GrowthTable {
  std::vector<GrowthRow> rows;
  LineFit variance_fit;  // Var vs ln N
  LineFit qf_fit;        // quadratic form vs ln N
  double beta_eff_inv_fit = 0.0;  // variance slope / quadratic-form slope
  double beta_eff_fit = 0.0;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline GrowthTable variance_growth_experiment(const GrowthConfig& cfg) {
  if (cfg.N_list.size() < 2) throw std::invalid_argument("need at least two box sizes");
  for (std::size_t i = 1; i < cfg.N_list.size(); ++i)
    if (cfg.N_list[i] <= cfg.N_list[i - 1]) throw std::invalid_argument("box sizes must increase");
  GrowthTable t;
  t.rows.resize(cfg.N_list.size());
  auto work = [&](std::size_t k) {
    const std::int64_t N = cfg.N_list[k];
    Domain dom = Domain::box(N);
    GrowthRow& row = t.rows[k];
    row.N = N;
    row.quadratic_form = quadratic_form(dom, delta_at(dom, {0, 0}), 1e-12);
    ModelSpec spec = ModelSpec::tilted(PotentialSpec::psos(cfg.p, cfg.beta), std::move(dom), cfg.ux, cfg.uy);
    ChainConfig cc = cfg.chain;
    cc.seed = derive_seed(cfg.chain.seed, static_cast<std::uint64_t>(N));
    row.phi0 = run_chain(spec, {}, cc).observables.front();
  };
  const unsigned T = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.N_list.size())));
  if (T == 1) {
    for (std::size_t k = 0; k < cfg.N_list.size(); ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(T);
    for (unsigned w = 0; w < T; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < cfg.N_list.size(); k += T) work(k);
        } catch (...) {
          errs[w] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  std::vector<double> x, y, se, q;
  for (const GrowthRow& r : t.rows) {
    x.push_back(std::log(static_cast<double>(r.N)));
    y.push_back(r.phi0.var);
    se.push_back(r.phi0.se_var);
    q.push_back(r.quadratic_form);
  }
  t.variance_fit = fit_line(x, y, se);
  t.qf_fit = fit_line(x, q);
  t.beta_eff_inv_fit = t.variance_fit.slope / t.qf_fit.slope;
  t.beta_eff_fit = t.qf_fit.slope / t.variance_fit.slope;
  return t;
}

}  // namespace sosdeloc
