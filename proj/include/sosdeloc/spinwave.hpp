#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "charges.hpp"
#include "lattice.hpp"
#include "potential.hpp"

namespace sosdeloc {

// Real function on Z^2 stored on a dense rectangle with a zero margin of one site, so every edge
// touching a nonzero value has both endpoints inside the rectangle.
class SpinWave {
 public:
  SpinWave() = default;
  // Rectangle [lo, hi] (inclusive) of sites that may be nonzero.
  SpinWave(Site lo, Site hi) {
    if (hi.x < lo.x || hi.y < lo.y) return;
    lo_ = {lo.x - 1, lo.y - 1};
    w_ = hi.x - lo.x + 3;
    h_ = hi.y - lo.y + 3;
    v_.assign(static_cast<std::size_t>(w_ * h_), 0.0);
  }

  bool empty() const { return v_.empty(); }
  Site lo() const { return lo_; }
  Site hi() const { return {lo_.x + w_ - 1, lo_.y + h_ - 1}; }
  std::int64_t width() const { return w_; }
  std::int64_t height() const { return h_; }

  bool in_window(Site s) const { return !empty() && s.x >= lo_.x && s.y >= lo_.y && s.x < lo_.x + w_ && s.y < lo_.y + h_; }
  double value(Site s) const { return in_window(s) ? v_[index(s)] : 0.0; }
  void set(Site s, double v) {
    if (!in_window(s) || s.x == lo_.x || s.y == lo_.y || s.x == lo_.x + w_ - 1 || s.y == lo_.y + h_ - 1)
      throw std::out_of_range("SpinWave::set outside the writable rectangle");
    v_[index(s)] = v;
  }

  template <class F>
  void for_each_site(F&& f) const {
    for (std::int64_t j = 0; j < h_; ++j)
      for (std::int64_t i = 0; i < w_; ++i) f(Site{lo_.x + i, lo_.y + j}, v_[static_cast<std::size_t>(j * w_ + i)]);
  }
  template <class F>
  void for_each_nonzero(F&& f) const {
    for_each_site([&](Site s, double v) {
      if (v != 0.0) f(s, v);
    });
  }
  // Every nearest-neighbour edge inside the window, each once, as (s, t, value(s) - value(t)).
  template <class F>
  void for_each_edge(F&& f) const {
    for (std::int64_t j = 0; j < h_; ++j)
      for (std::int64_t i = 0; i < w_; ++i) {
        const double a = v_[static_cast<std::size_t>(j * w_ + i)];
        const Site s{lo_.x + i, lo_.y + j};
        if (i + 1 < w_) f(s, Site{s.x + 1, s.y}, a - v_[static_cast<std::size_t>(j * w_ + i + 1)]);
        if (j + 1 < h_) f(s, Site{s.x, s.y + 1}, a - v_[static_cast<std::size_t>((j + 1) * w_ + i)]);
      }
  }

  std::size_t support_size() const {
    return static_cast<std::size_t>(std::count_if(v_.begin(), v_.end(), [](double x) { return x != 0.0; }));
  }
  double max_abs_gradient() const {
    double m = 0.0;
    for_each_edge([&](Site, Site, double d) { m = std::max(m, std::abs(d)); });
    return m;
  }
  double gradient_norm_sq() const {
    double acc = 0.0;
    for_each_edge([&](Site, Site, double d) { acc += d * d; });
    return acc;
  }
  // Sites with an incident edge of nonzero difference.
  std::vector<Site> gradient_support() const {
    std::vector<Site> out;
    for_each_edge([&](Site s, Site t, double d) {
      if (d != 0.0) {
        out.push_back(s);
        out.push_back(t);
      }
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  double dot(const ChargeDensity& rho) const {
    // Charges are summed per distinct wave value first, so a neutral charge under a constant wave gives exactly 0.
    std::map<double, long> by_value;
    for (const auto& e : rho.entries()) by_value[value(e.first)] += e.second;
    double acc = 0.0;
    for (const auto& [v, q] : by_value) acc += static_cast<double>(q) * v;
    return acc;
  }

  // this + scale * other, on the union window.
  SpinWave plus(const SpinWave& other, double scale = 1.0) const {
    if (other.empty()) return *this;
    if (empty()) {
      SpinWave r = other;
      for (double& x : r.v_) x *= scale;
      return r;
    }
    const Site a_lo{std::min(lo().x, other.lo().x) + 1, std::min(lo().y, other.lo().y) + 1};
    const Site a_hi{std::max(hi().x, other.hi().x) - 1, std::max(hi().y, other.hi().y) - 1};
    SpinWave r(a_lo, a_hi);
    auto add = [&r](const SpinWave& src, double c) {
      for (std::int64_t j = 0; j < src.h_; ++j)
        for (std::int64_t i = 0; i < src.w_; ++i) {
          const double x = src.v_[static_cast<std::size_t>(j * src.w_ + i)];
          if (x != 0.0) r.v_[r.index({src.lo_.x + i, src.lo_.y + j})] += c * x;
        }
    };
    add(*this, 1.0);
    add(other, scale);
    return r;
  }
  SpinWave scaled(double c) const {
    SpinWave r = *this;
    for (double& x : r.v_) x *= c;
    return r;
  }

 private:
  std::size_t index(Site s) const { return static_cast<std::size_t>((s.y - lo_.y) * w_ + (s.x - lo_.x)); }
  Site lo_{};
  std::int64_t w_ = 0, h_ = 0;
  std::vector<double> v_;
};

// True when no edge has a nonzero difference in both functions.
inline bool gradient_edges_disjoint(const SpinWave& a, const SpinWave& b) {
  if (a.empty() || b.empty()) return true;
  const SpinWave& small = a.width() * a.height() <= b.width() * b.height() ? a : b;
  const SpinWave& big = &small == &a ? b : a;
  bool ok = true;
  small.for_each_edge([&](Site s, Site t, double d) {
    if (ok && d != 0.0 && big.value(s) != big.value(t)) ok = false;
  });
  return ok;
}

struct EnergyParams {
  double c_beta = 0.0;
  double gamma = 0.0;
  double c2_factor = 3.0;  // the (2C+1) multiplier with C = 1
  std::optional<double> strip_halfwidth;

  void validate() const {
    if (!(c_beta >= 0.0) || !(gamma >= 0.0)) throw std::invalid_argument("energy parameters must be non-negative");
    if (strip_halfwidth && !(gamma < *strip_halfwidth)) throw std::invalid_argument("gamma must lie inside the strip");
  }
  // c_beta g(gamma)/gamma <= 1/48 makes the level-0 loss at most a quarter of the bare gain.
  double regime_statistic() const { return gamma > 0.0 ? c_beta * g_profile(gamma) / gamma : 0.0; }
  bool in_regime() const { return regime_statistic() <= 1.0 / 48.0; }
};

// E(rho, a) = rho.a - c2 c_beta sum_{i~j} g(a_i - a_j).
inline double energy(const ChargeDensity& rho, const SpinWave& a, const EnergyParams& p) {
  double loss = 0.0;
  a.for_each_edge([&](Site, Site, double d) {
    if (d != 0.0) loss += g_profile(d);
  });
  return a.dot(rho) - p.c2_factor * p.c_beta * loss;
}

// ---------------------------------------------------------------- construction context

struct Cluster {
  std::vector<Site> centers;
  std::vector<std::int64_t> radii;
  std::int64_t diam = 0;
  bool contains(Site s) const {
    for (std::size_t i = 0; i < centers.size(); ++i)
      if (l1_dist(s, centers[i]) <= radii[i]) return true;
    return false;
  }
};

// Everything the spin-wave construction needs to know about one charge in its ensemble.
template <Region R>
struct ChargeContext {
  const R* region = nullptr;
  const Ensemble* ensemble = nullptr;
  std::size_t index = 0;
  std::int64_t d = 0;
  int sc = 0;
  Envelope env;
  std::vector<std::size_t> near;     // N_<(rho), excluding rho
  std::vector<Envelope> near_env;
  std::vector<Cluster> clusters;     // connected components of the union of D+(rho'), rho' in near

  const ChargeDensity& rho() const { return ensemble->charges[index]; }

  bool in_clusters(Site s) const {
    for (const Envelope& e : near_env)
      if (e.in_Dplus(s)) return true;
    return false;
  }
  const Cluster* cluster_of(Site s) const {
    for (const Cluster& c : clusters)
      if (c.contains(s)) return &c;
    return nullptr;
  }
};

template <Region R>
ChargeContext<R> make_context(const R& region, const Ensemble& ens, std::size_t idx) {
  if (idx >= ens.charges.size()) throw std::out_of_range("charge index outside the ensemble");
  ChargeContext<R> c;
  c.region = &region;
  c.ensemble = &ens;
  c.index = idx;
  c.d = d_lambda(region, ens.charges[idx]);
  c.sc = scale_from(c.d, ens.M, ens.alpha);
  c.env = envelope(region, ens.charges[idx]);
  c.near = comparable_neighbours(region, ens, idx);
  for (std::size_t j : c.near) c.near_env.push_back(envelope(region, ens.charges[j]));
  // Union-find over D+ balls; two balls belong to one component when their union is connected.
  const std::size_t n = c.near_env.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = c.near_env[i];
      const auto& b = c.near_env[j];
      if (l1_dist(a.center, b.center) <= a.radius_Dplus() + b.radius_Dplus() + 1) parent[find(i)] = find(j);
    }
  std::vector<std::size_t> root_to_cluster(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_to_cluster[r] == n) {
      root_to_cluster[r] = c.clusters.size();
      c.clusters.emplace_back();
    }
    Cluster& cl = c.clusters[root_to_cluster[r]];
    cl.centers.push_back(c.near_env[i].center);
    cl.radii.push_back(c.near_env[i].radius_Dplus());
  }
  for (Cluster& cl : c.clusters)
    for (std::size_t i = 0; i < cl.centers.size(); ++i)
      for (std::size_t j = 0; j < cl.centers.size(); ++j)
        cl.diam = std::max(cl.diam, l1_dist(cl.centers[i], cl.centers[j]) + cl.radii[i] + cl.radii[j]);
  return c;
}

// ---------------------------------------------------------------- level 0

template <Region R>
SpinWave build_b0(const ChargeContext<R>& ctx) {
  const ChargeDensity& rho = ctx.rho();
  long mass_even = 0, mass_odd = 0;
  for (const auto& e : rho.entries()) (even_parity(e.first) ? mass_even : mass_odd) += std::labs(e.second);
  const long l1 = rho.l1_norm();
  const bool even_ok = 2 * mass_even >= l1, odd_ok = 2 * mass_odd >= l1;
  bool use_even = even_ok;
  if (even_ok && odd_ok && ctx.d == 1) use_even = even_parity(ctx.env.center);
  const auto supp = rho.support();
  Site lo = supp.front(), hi = supp.front();
  for (const Site& s : supp) {
    lo = {std::min(lo.x, s.x), std::min(lo.y, s.y)};
    hi = {std::max(hi.x, s.x), std::max(hi.y, s.y)};
  }
  SpinWave b(lo, hi);
  for (const auto& e : rho.entries())
    if (even_parity(e.first) == use_even) b.set(e.first, e.second > 0 ? 1.0 : -1.0);
  return b;
}

// ---------------------------------------------------------------- square waves

inline constexpr int kRampScale = 10;

template <Region R>
SpinWave build_bks(const ChargeContext<R>& ctx, int k, const Square& s) {
  if (k < 1 || k > ctx.sc) throw std::invalid_argument("square wave scale outside [1, sc]");
  const ChargeDensity& rho = ctx.rho();
  long q = 0;
  for (const auto& e : rho.entries())
    if (s.contains(e.first)) q += e.second;
  if (q == 0) throw std::logic_error("square carries zero charge; ensemble isolation property violated");
  const double sign = q > 0 ? 1.0 : -1.0;
  const R& region = *ctx.region;

  // Below the ramp scale the profile is a plateau of height 2^-k on {dist(i,s) <= max(2^{k-3},1)};
  // from the ramp scale on it is a linear l1 ramp from 1/4 down to 0 at dist = 2^{k-1}.
  const bool plateau = k < kRampScale;
  const std::int64_t R0 = plateau ? (k >= 3 ? (std::int64_t{1} << (k - 3)) : 1) : (std::int64_t{1} << (k - 3));
  const std::int64_t R1 = std::int64_t{1} << (k - 1);
  const double v = sign * (plateau ? std::ldexp(1.0, -k) : 0.25);
  auto profile = [&](Site p) {
    const std::int64_t r = site_square_dist(p, s);
    if (r <= R0) return v;
    if (r >= R1 || plateau) return 0.0;
    return v * static_cast<double>(R1 - r) / static_cast<double>(R1 - R0);
  };
  const Site lo{s.corner.x - R1, s.corner.y - R1}, hi{s.corner.x + s.side() - 1 + R1, s.corner.y + s.side() - 1 + R1};
  // Flattening value per cluster: 0 if the cluster reaches the outer ring or leaves the domain,
  // else the profile value at the cluster site nearest s. A plateau edge crossing a cluster
  // therefore moves to the cluster boundary.
  std::vector<double> flat(ctx.clusters.size(), 0.0);
  std::vector<bool> relevant(ctx.clusters.size(), false);
  for (std::size_t c = 0; c < ctx.clusters.size(); ++c) {
    const Cluster& cl = ctx.clusters[c];
    bool touches_outer = false, meets = false;
    std::int64_t best_r = std::numeric_limits<std::int64_t>::max();
    Site best{};
    for (std::size_t b = 0; b < cl.centers.size(); ++b) {
      const Site ce = cl.centers[b];
      const std::int64_t rr = cl.radii[b];
      if (site_square_dist(ce, s) > R1 + rr) continue;
      meets = true;
      for (std::int64_t dy = -rr; dy <= rr; ++dy) {
        const std::int64_t span = rr - std::llabs(dy);
        for (std::int64_t dx = -span; dx <= span; ++dx) {
          const Site p{ce.x + dx, ce.y + dy};
          const std::int64_t r = site_square_dist(p, s);
          if (r > R1 || !region.contains(p)) touches_outer = true;
          if (r < best_r || (r == best_r && p < best)) {
            best_r = r;
            best = p;
          }
        }
      }
    }
    if (!meets) continue;
    relevant[c] = true;
    flat[c] = touches_outer ? 0.0 : profile(best);
  }
  SpinWave b(lo, hi);
  for (std::int64_t y = lo.y; y <= hi.y; ++y)
    for (std::int64_t x = lo.x; x <= hi.x; ++x) {
      const Site p{x, y};
      if (site_square_dist(p, s) > R1 || !region.contains(p)) continue;
      double val = profile(p);
      for (std::size_t c = 0; c < ctx.clusters.size(); ++c)
        if (relevant[c] && ctx.clusters[c].contains(p)) {
          val = flat[c];
          break;
        }
      if (val != 0.0) b.set(p, val);
    }
  return b;
}

// ---------------------------------------------------------------- property checks

struct PropertyViolation {
  std::string where;
  std::string what;
};

namespace detail {

inline bool constant_on_ball(const SpinWave& b, Site c, std::int64_t r) {
  bool first = true;
  double v0 = 0.0;
  // Sites of the ball outside the window carry the value 0.
  const bool inside = b.in_window({c.x - r, c.y}) && b.in_window({c.x + r, c.y}) && b.in_window({c.x, c.y - r}) &&
                      b.in_window({c.x, c.y + r});
  if (!inside) {
    first = false;
    v0 = 0.0;
  }
  const std::int64_t ylo = std::max(c.y - r, b.lo().y), yhi = std::min(c.y + r, b.hi().y);
  for (std::int64_t y = ylo; y <= yhi; ++y) {
    const std::int64_t span = r - std::llabs(y - c.y);
    const std::int64_t xlo = std::max(c.x - span, b.lo().x), xhi = std::min(c.x + span, b.hi().x);
    for (std::int64_t x = xlo; x <= xhi; ++x) {
      const double v = b.value({x, y});
      if (first) {
        v0 = v;
        first = false;
      } else if (v != v0) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace detail

template <Region R>
std::vector<PropertyViolation> check_b0(const ChargeContext<R>& ctx, const SpinWave& b) {
  std::vector<PropertyViolation> out;
  const ChargeDensity& rho = ctx.rho();
  b.for_each_nonzero([&](Site s, double) {
    if (rho.value_at(s) == 0) out.push_back({"b0", "support outside supp rho"});
  });
  if (b.max_abs_gradient() > 1.0) out.push_back({"b0", "gradient exceeds 1"});
  for (const Envelope& e : ctx.near_env)
    if (!detail::constant_on_ball(b, e.center, e.radius_Dplus())) out.push_back({"b0", "not constant on a D+ envelope"});
  if (2.0 * b.dot(rho) < static_cast<double>(rho.l1_norm())) out.push_back({"b0", "rho.b0 below ||rho||_1/2"});
  return out;
}

template <Region R>
std::vector<PropertyViolation> check_bks(const ChargeContext<R>& ctx, int k, const Square& s, const SpinWave& b) {
  std::vector<PropertyViolation> out;
  std::ostringstream tag;
  tag << "b_" << k << "^(" << s.corner.x << "," << s.corner.y << ")";
  const std::string w = tag.str();
  const R& region = *ctx.region;
  const std::int64_t outer = std::int64_t{1} << (k - 1);
  const std::int64_t inner = std::max<std::int64_t>(k >= 3 ? (std::int64_t{1} << (k - 3)) : 0, 1);
  bool supp_ok = true;
  b.for_each_nonzero([&](Site p, double) {
    if (!region.contains(p) || site_square_dist(p, s) > outer) supp_ok = false;
  });
  if (!supp_ok) out.push_back({w, "support leaves {j in domain : dist(j,s) <= 2^(k-1)}"});
  bool first = true, const_ok = true;
  double v0 = 0.0;
  for (std::int64_t y = s.corner.y - inner; y <= s.corner.y + s.side() - 1 + inner; ++y)
    for (std::int64_t x = s.corner.x - inner; x <= s.corner.x + s.side() - 1 + inner; ++x) {
      const Site p{x, y};
      if (site_square_dist(p, s) > inner || !region.contains(p)) continue;
      const double v = b.value(p);
      if (first) {
        v0 = v;
        first = false;
      } else if (v != v0) {
        const_ok = false;
      }
    }
  if (!const_ok) out.push_back({w, "not constant on {dist(j,s) <= max(2^(k-3),1)}"});
  for (const Envelope& e : ctx.near_env)
    if (!detail::constant_on_ball(b, e.center, e.radius_Dplus())) out.push_back({w, "not constant on a D+ envelope"});
  const double away = std::ldexp(1.0, -k);
  bool grad_ok = true;
  b.for_each_edge([&](Site p, Site q, double d) {
    if (d == 0.0 || !grad_ok) return;
    const bool pin = ctx.in_clusters(p), qin = ctx.in_clusters(q);
    if (!pin && !qin) {
      if (std::abs(d) > away * (1.0 + 1e-12)) grad_ok = false;
    } else if (pin != qin) {
      const Cluster* cl = ctx.cluster_of(pin ? p : q);
      if (std::abs(d) > static_cast<double>(cl->diam) * away * (1.0 + 1e-12)) grad_ok = false;
    }
  });
  if (!grad_ok) out.push_back({w, "gradient bound violated"});
  if (b.dot(ctx.rho()) < std::ldexp(1.0, -9)) out.push_back({w, "rho.b below 2^-9"});
  return out;
}

// ---------------------------------------------------------------- assembly

struct AssembledWave {
  SpinWave a;
  std::vector<SpinWave> parts;  // b0 first, then b_k^s in (k, s) order
  std::vector<std::string> labels;
  long A = 0;
  std::size_t separated_squares = 0;
  std::vector<PropertyViolation> violations;
};

template <Region R>
AssembledWave assemble(const ChargeContext<R>& ctx, double gamma, bool check = true) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  AssembledWave out;
  const ChargeDensity& rho = ctx.rho();
  const Ensemble& ens = *ctx.ensemble;
  SpinWave b0 = build_b0(ctx);
  if (check) {
    auto v = check_b0(ctx, b0);
    out.violations.insert(out.violations.end(), v.begin(), v.end());
  }
  out.parts.push_back(b0);
  out.labels.push_back("b0");
  SpinWave sum = b0;
  for (int k = 0; k <= ctx.sc; ++k) out.A += static_cast<long>(square_cover(rho, k).squares.size());
  for (int k = 1; k <= ctx.sc; ++k) {
    for (const Square& s : sep_squares(*ctx.region, rho, k, ens.M, ens.alpha)) {
      SpinWave b = build_bks(ctx, k, s);
      if (check) {
        auto v = check_bks(ctx, k, s, b);
        out.violations.insert(out.violations.end(), v.begin(), v.end());
      }
      sum = sum.plus(b);
      out.parts.push_back(std::move(b));
      out.labels.push_back("b_" + std::to_string(k));
      ++out.separated_squares;
    }
  }
  if (check) {
    for (std::size_t i = 0; i < out.parts.size(); ++i)
      for (std::size_t j = i + 1; j < out.parts.size(); ++j)
        if (!gradient_edges_disjoint(out.parts[i], out.parts[j]))
          out.violations.push_back({out.labels[i] + "/" + out.labels[j], "two summands have gradient on a common edge"});
  }
  out.a = sum.scaled(gamma);
  if (check) {
    const R& region = *ctx.region;
    bool supp_ok = true;
    out.a.for_each_nonzero([&](Site p, double) {
      if (!region.contains(p) || !ctx.env.in_D(p)) supp_ok = false;
    });
    if (!supp_ok) out.violations.push_back({"a", "support leaves D(rho) within the domain"});
    if (out.a.max_abs_gradient() > gamma * (1.0 + 1e-12)) out.violations.push_back({"a", "edge gradient exceeds gamma"});
  }
  return out;
}

// Cross-charge conditions: disjoint gradient supports and a_rho . rho' = 0.
inline std::vector<PropertyViolation> check_pairwise(const Ensemble& ens, const std::vector<SpinWave>& waves) {
  std::vector<PropertyViolation> out;
  std::vector<std::vector<Site>> gs;
  for (const SpinWave& w : waves) gs.push_back(w.gradient_support());
  for (std::size_t i = 0; i < waves.size(); ++i)
    for (std::size_t j = 0; j < waves.size(); ++j) {
      if (i == j) continue;
      const std::string tag = "a_" + std::to_string(i) + "/rho_" + std::to_string(j);
      if (waves[i].dot(ens.charges[j]) != 0.0) out.push_back({tag, "a_rho . rho' is nonzero"});
      if (i < j) {
        std::vector<Site> common;
        std::set_intersection(gs[i].begin(), gs[i].end(), gs[j].begin(), gs[j].end(), std::back_inserter(common));
        if (!common.empty()) out.push_back({tag, "gradient supports intersect"});
      }
    }
  return out;
}

struct EnergyBoundReport {
  std::size_t charges = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_gradient = 0.0;
  double norm_constant = 0.0;  // max ||grad a||^2 / (gamma^2 (A + |supp rho|))
  bool in_regime = false;
  bool flagged = false;  // some ratio <= 0
  std::vector<PropertyViolation> violations;
  std::vector<double> ratios;
};

// Builds every spin wave of the ensemble and reports E/(gamma(||rho||_1 + A)).
template <Region R>
EnergyBoundReport energy_bound_check(const R& region, const Ensemble& ens, const EnergyParams& params,
                                     bool check_properties = true) {
  params.validate();
  EnergyBoundReport rep;
  rep.in_regime = params.in_regime();
  std::vector<SpinWave> waves;
  for (std::size_t i = 0; i < ens.charges.size(); ++i) {
    const auto ctx = make_context(region, ens, i);
    AssembledWave aw = assemble(ctx, params.gamma, check_properties);
    rep.violations.insert(rep.violations.end(), aw.violations.begin(), aw.violations.end());
    const ChargeDensity& rho = ens.charges[i];
    const double E = energy(rho, aw.a, params);
    const double denom = params.gamma * (static_cast<double>(rho.l1_norm()) + static_cast<double>(aw.A));
    const double ratio = denom > 0.0 ? E / denom : 0.0;
    rep.ratios.push_back(ratio);
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_gradient = std::max(rep.max_gradient, aw.a.max_abs_gradient());
    if (params.gamma > 0.0)
      rep.norm_constant = std::max(rep.norm_constant, aw.a.gradient_norm_sq() / (params.gamma * params.gamma *
                                                                                  (static_cast<double>(aw.A) + static_cast<double>(rho.support_size()))));
    if (!(ratio > 0.0)) rep.flagged = true;
    waves.push_back(std::move(aw.a));
    ++rep.charges;
  }
  if (check_properties) {
    auto v = check_pairwise(ens, waves);
    rep.violations.insert(rep.violations.end(), v.begin(), v.end());
  }
  return rep;
}

}  // namespace sosdeloc
