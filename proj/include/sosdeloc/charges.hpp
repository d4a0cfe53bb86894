#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lattice.hpp"

namespace sosdeloc {

class ChargeDensity {
 public:
  using Entry = std::pair<Site, long>;

  ChargeDensity() = default;
  explicit ChargeDensity(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end());
    if (entries_.empty()) throw std::invalid_argument("charge density must be non-zero");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].second == 0) throw std::invalid_argument("charge density stores an explicit zero");
      if (i && entries_[i].first == entries_[i - 1].first) throw std::invalid_argument("duplicate charge site");
    }
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t support_size() const { return entries_.size(); }
  std::vector<Site> support() const {
    std::vector<Site> s;
    s.reserve(entries_.size());
    for (const auto& e : entries_) s.push_back(e.first);
    return s;
  }
  long value_at(Site s) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{s, std::numeric_limits<long>::min()});
    return (it != entries_.end() && it->first == s) ? it->second : 0;
  }
  long total() const {
    long t = 0;
    for (const auto& e : entries_) t += e.second;
    return t;
  }
  bool neutral() const { return total() == 0; }
  long l1_norm() const {
    long t = 0;
    for (const auto& e : entries_) t += std::labs(e.second);
    return t;
  }
  std::int64_t diam() const {
    std::int64_t d = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      for (std::size_t j = i + 1; j < entries_.size(); ++j) d = std::max(d, l1_dist(entries_[i].first, entries_[j].first));
    return d;
  }
  ChargeDensity translated(Site t) const {
    auto e = entries_;
    for (auto& x : e) x.first = {x.first.x + t.x, x.first.y + t.y};
    return ChargeDensity(std::move(e));
  }
  ChargeDensity reflected() const {
    auto e = entries_;
    for (auto& x : e) x.first = reflect(x.first);
    return ChargeDensity(std::move(e));
  }

 private:
  std::vector<Entry> entries_;
};

inline std::int64_t set_dist(const std::vector<Site>& a, const std::vector<Site>& b) {
  std::int64_t d = std::numeric_limits<std::int64_t>::max();
  for (const Site& x : a)
    for (const Site& y : b) d = std::min(d, l1_dist(x, y));
  return d;
}

inline std::int64_t dist(const ChargeDensity& a, const ChargeDensity& b) { return set_dist(a.support(), b.support()); }

template <Region R>
void require_inside(const R& region, const ChargeDensity& rho) {
  for (const auto& e : rho.entries())
    if (!region.contains(e.first)) {
      std::ostringstream os;
      os << "charge support site (" << e.first.x << "," << e.first.y << ") lies outside the domain";
      throw std::invalid_argument(os.str());
    }
}

template <Region R>
std::int64_t dist_to_complement(const R& region, const ChargeDensity& rho) {
  std::int64_t d = std::numeric_limits<std::int64_t>::max();
  for (const auto& e : rho.entries()) d = std::min(d, region.dist_to_complement(e.first));
  return d;
}

template <Region R>
std::int64_t d_lambda(const R& region, const ChargeDensity& rho) {
  require_inside(region, rho);
  const std::int64_t diam = rho.diam();
  if (rho.neutral()) return diam;
  return std::max(diam, dist_to_complement(region, rho));
}

inline constexpr double kDefaultM = 65536.0;
inline constexpr double kDefaultAlpha = 1.75;

// ceil(log2(M d^alpha)); the small offset keeps exact powers of two from rounding up.
inline int scale_from(std::int64_t d, double M, double alpha) {
  if (d < 1) throw std::invalid_argument("modified diameter must be at least 1");
  const double v = std::log2(M) + alpha * std::log2(static_cast<double>(d));
  return static_cast<int>(std::ceil(v - 1e-12));
}

template <Region R>
int sc_lambda(const R& region, const ChargeDensity& rho, double M = kDefaultM, double alpha = kDefaultAlpha) {
  return scale_from(d_lambda(region, rho), M, alpha);
}

// ---------------------------------------------------------------- square covers

struct Square {
  Site corner;  // lower-left
  int k = 0;
  std::int64_t side() const { return std::int64_t{1} << k; }
  bool contains(Site s) const {
    return s.x >= corner.x && s.x < corner.x + side() && s.y >= corner.y && s.y < corner.y + side();
  }
  auto operator<=>(const Square&) const = default;
};

inline std::int64_t interval_gap(std::int64_t a, std::int64_t la, std::int64_t b, std::int64_t lb) {
  if (a + la - 1 < b) return b - (a + la - 1);
  if (b + lb - 1 < a) return a - (b + lb - 1);
  return 0;
}

// l1 distance between the site sets of two squares.
inline std::int64_t square_dist(const Square& s, const Square& t) {
  return interval_gap(s.corner.x, s.side(), t.corner.x, t.side()) +
         interval_gap(s.corner.y, s.side(), t.corner.y, t.side());
}

// l1 distance from a site to a square's site set.
inline std::int64_t site_square_dist(Site p, const Square& s) {
  auto axis = [](std::int64_t v, std::int64_t lo, std::int64_t hi) -> std::int64_t {
    return v < lo ? lo - v : (v > hi ? v - hi : 0);
  };
  return axis(p.x, s.corner.x, s.corner.x + s.side() - 1) + axis(p.y, s.corner.y, s.corner.y + s.side() - 1);
}

struct CoverResult {
  int k = 0;
  std::vector<Square> squares;
  bool minimal = true;
};

struct CoverOptions {
  std::size_t exact_cap = 24;
  std::size_t node_budget = 2'000'000;
};

namespace detail {

using Mask = std::uint32_t;

struct CoverSearch {
  std::vector<Site> pts;
  std::vector<Site> corners;  // candidate corners, lexicographically sorted
  std::vector<Mask> masks;
  std::vector<std::vector<std::size_t>> by_point;  // candidates containing each point
  std::int64_t L = 1;
  Mask full = 0;
  std::vector<std::size_t> best;
  bool have_best = false;
  std::vector<std::size_t> chosen;
  std::size_t nodes = 0, budget = 0;
  bool exhausted = false;

  bool compatible(std::size_t i, std::size_t j) const {
    return std::llabs(pts[i].x - pts[j].x) < L && std::llabs(pts[i].y - pts[j].y) < L;
  }

  // Size of a greedily built set of pairwise incompatible uncovered points.
  std::size_t lower_bound(Mask covered) const {
    std::vector<std::size_t> indep;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (covered >> i & 1U) continue;
      bool ok = true;
      for (std::size_t j : indep)
        if (compatible(i, j)) {
          ok = false;
          break;
        }
      if (ok) indep.push_back(i);
    }
    return indep.size();
  }

  static std::vector<Site> sorted_corners(const std::vector<std::size_t>& idx, const std::vector<Site>& corners) {
    std::vector<Site> c;
    for (std::size_t i : idx) c.push_back(corners[i]);
    std::sort(c.begin(), c.end());
    return c;
  }

  void offer() {
    if (!have_best || chosen.size() < best.size() ||
        (chosen.size() == best.size() && sorted_corners(chosen, corners) < sorted_corners(best, corners))) {
      best = chosen;
      have_best = true;
    }
  }

  void dfs(Mask covered) {
    if (exhausted) return;
    if (++nodes > budget) {
      exhausted = true;
      return;
    }
    if (covered == full) {
      offer();
      return;
    }
    if (have_best && chosen.size() + lower_bound(covered) > best.size()) return;
    std::size_t first = 0;
    while (covered >> first & 1U) ++first;
    for (std::size_t c : by_point[first]) {
      chosen.push_back(c);
      dfs(covered | masks[c]);
      chosen.pop_back();
      if (exhausted) return;
    }
  }
};

inline std::vector<Square> greedy_cover(const std::vector<Site>& pts, int k) {
  std::vector<bool> covered(pts.size(), false);
  std::vector<Square> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (covered[i]) continue;
    Square best{};
    std::size_t best_count = 0;
    bool have = false;
    for (const Site& a : pts)
      for (const Site& b : pts) {
        Square s{{a.x, b.y}, k};
        if (!s.contains(pts[i])) continue;
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < pts.size(); ++j)
          if (!covered[j] && s.contains(pts[j])) ++cnt;
        if (!have || cnt > best_count || (cnt == best_count && s < best)) {
          best = s;
          best_count = cnt;
          have = true;
        }
      }
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (best.contains(pts[j])) covered[j] = true;
    out.push_back(best);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Minimum number of 2^k x 2^k squares covering the given sites. When one square suffices it is
// centred on the bounding box, which keeps squares of successive scales strictly nested.
inline CoverResult square_cover(std::vector<Site> pts, int k, const CoverOptions& opt = {}) {
  if (k < 0 || k > 61) throw std::invalid_argument("cover scale k must lie in [0,61]");
  if (pts.empty()) throw std::invalid_argument("cannot cover an empty support");
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  CoverResult res;
  res.k = k;
  const std::int64_t L = std::int64_t{1} << k;

  std::int64_t minx = pts[0].x, maxx = pts[0].x, miny = pts[0].y, maxy = pts[0].y;
  for (const Site& p : pts) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  if (maxx - minx < L && maxy - miny < L) {
    auto centred = [&](std::int64_t lo, std::int64_t hi) {
      if (k == 0) return lo;
      const std::int64_t sum = lo + hi + 1;
      const std::int64_t c = sum >= 0 ? sum / 2 : -((-sum + 1) / 2);
      return c - L / 2;
    };
    res.squares.push_back({{centred(minx, maxx), centred(miny, maxy)}, k});
    return res;
  }
  if (pts.size() > opt.exact_cap || pts.size() > 32) {
    res.squares = detail::greedy_cover(pts, k);
    res.minimal = false;
    return res;
  }

  detail::CoverSearch cs;
  cs.pts = pts;
  cs.L = L;
  cs.budget = opt.node_budget;
  cs.full = pts.size() == 32 ? ~detail::Mask{0} : ((detail::Mask{1} << pts.size()) - 1);
  for (const Site& a : pts)
    for (const Site& b : pts) cs.corners.push_back({a.x, b.y});
  std::sort(cs.corners.begin(), cs.corners.end());
  cs.corners.erase(std::unique(cs.corners.begin(), cs.corners.end()), cs.corners.end());
  for (const Site& c : cs.corners) {
    Square s{c, k};
    detail::Mask m = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (s.contains(pts[i])) m |= detail::Mask{1} << i;
    cs.masks.push_back(m);
  }
  cs.by_point.resize(pts.size());
  for (std::size_t c = 0; c < cs.corners.size(); ++c)
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (cs.masks[c] >> i & 1U) cs.by_point[i].push_back(c);
  cs.dfs(0);
  if (cs.exhausted || !cs.have_best) {
    res.squares = detail::greedy_cover(pts, k);
    res.minimal = false;
    return res;
  }
  for (const Site& c : detail::CoverSearch::sorted_corners(cs.best, cs.corners)) res.squares.push_back({c, k});
  return res;
}

inline CoverResult square_cover(const ChargeDensity& rho, int k, const CoverOptions& opt = {}) {
  return square_cover(rho.support(), k, opt);
}

template <Region R>
long a_lambda(const R& region, const ChargeDensity& rho, double M = kDefaultM, double alpha = kDefaultAlpha,
              const CoverOptions& opt = {}) {
  const int sc = sc_lambda(region, rho, M, alpha);
  long total = 0;
  for (int k = 0; k <= sc; ++k) total += static_cast<long>(square_cover(rho, k, opt).squares.size());
  return total;
}

template <Region R>
std::vector<Square> sep_squares(const R& region, const ChargeDensity& rho, int k, double M = kDefaultM,
                                double alpha = kDefaultAlpha, const CoverOptions& opt = {}) {
  const int sc = sc_lambda(region, rho, M, alpha);
  if (k < 1 || k > sc) throw std::invalid_argument("sep_squares requires 1 <= k <= sc");
  const CoverResult cover = square_cover(rho, k, opt);
  const auto& sq = cover.squares;
  if (sq.size() > 1) {
    const double threshold = 2.0 * M * std::pow(2.0, alpha * (k + 1));
    std::vector<Square> out;
    for (std::size_t i = 0; i < sq.size(); ++i) {
      std::int64_t m = std::numeric_limits<std::int64_t>::max();
      for (std::size_t j = 0; j < sq.size(); ++j)
        if (j != i) m = std::min(m, square_dist(sq[i], sq[j]));
      if (static_cast<double>(m) >= threshold) out.push_back(sq[i]);
    }
    return out;
  }
  if (!rho.neutral() && dist_to_complement(region, rho) >= (std::int64_t{2} << k)) return sq;
  return {};
}

struct ScaleReport {
  std::int64_t d = 0;
  int sc = 0;
  long A = 0;
  std::vector<std::size_t> cover_sizes;  // index k = 0..sc
  std::vector<std::size_t> sep_sizes;    // index k = 0..sc, entry 0 unused
  bool all_minimal = true;
  // A / (|S_0| + sum_k |S_k^sep|)
  double sep_ratio() const {
    double denom = static_cast<double>(cover_sizes.empty() ? 0 : cover_sizes[0]);
    for (std::size_t k = 1; k < sep_sizes.size(); ++k) denom += static_cast<double>(sep_sizes[k]);
    return static_cast<double>(A) / denom;
  }
};

template <Region R>
ScaleReport scale_report(const R& region, const ChargeDensity& rho, double M = kDefaultM,
                         double alpha = kDefaultAlpha, const CoverOptions& opt = {}) {
  ScaleReport r;
  r.d = d_lambda(region, rho);
  r.sc = scale_from(r.d, M, alpha);
  r.sep_sizes.assign(static_cast<std::size_t>(r.sc) + 1, 0);
  for (int k = 0; k <= r.sc; ++k) {
    auto c = square_cover(rho, k, opt);
    r.all_minimal = r.all_minimal && c.minimal;
    r.cover_sizes.push_back(c.squares.size());
    r.A += static_cast<long>(c.squares.size());
    if (k >= 1) r.sep_sizes[static_cast<std::size_t>(k)] = sep_squares(region, rho, k, M, alpha, opt).size();
  }
  return r;
}

// ---------------------------------------------------------------- envelopes

struct Envelope {
  Site center;
  std::int64_t d = 1;
  // D = {i : dist(center,i) < 2d}, D+ = {i : dist(i, D) <= 1}; both are l1 balls.
  std::int64_t radius_D() const { return 2 * d - 1; }
  std::int64_t radius_Dplus() const { return 2 * d; }
  bool in_D(Site s) const { return l1_dist(center, s) <= radius_D(); }
  bool in_Dplus(Site s) const { return l1_dist(center, s) <= radius_Dplus(); }
  static std::int64_t ball_size(std::int64_t r) { return 2 * r * r + 2 * r + 1; }
};

// The centre is taken inside supp rho: a lexicographically smallest support point realising the
// diameter, or, for charged densities whose modified diameter is the boundary distance, the
// lexicographically smallest support point at that distance from the complement.
template <Region R>
Envelope envelope(const R& region, const ChargeDensity& rho) {
  Envelope env;
  env.d = d_lambda(region, rho);
  const auto supp = rho.support();
  const std::int64_t diam = rho.diam();
  if (env.d == diam) {
    for (const Site& s : supp)
      for (const Site& t : supp)
        if (l1_dist(s, t) == diam) {
          env.center = s;
          return env;
        }
  }
  for (const Site& s : supp)
    if (region.dist_to_complement(s) == env.d) {
      env.center = s;
      return env;
    }
  throw std::logic_error("no support site realises the modified diameter");
}

// ---------------------------------------------------------------- ensembles

struct Ensemble {
  std::vector<ChargeDensity> charges;
  double M = kDefaultM;
  double alpha = kDefaultAlpha;
};

// Every proper sub-density rho_1 whose distance to the rest is at least 2M diam(rho_1)^alpha must be
// charged and satisfy 2M dist(rho_1, complement)^alpha > dist(rho_1, rho - rho_1).
template <Region R>
std::string isolation_violation(const R& region, const ChargeDensity& rho, double M, double alpha) {
  const auto& e = rho.entries();
  const std::size_t n = e.size();
  if (n > 16) throw std::invalid_argument("isolation check limited to supports of at most 16 sites");
  for (std::uint32_t mask = 1; mask + 1 < (1U << n); ++mask) {
    std::vector<Site> in, out;
    long charge = 0;
    std::int64_t dc = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) {
        in.push_back(e[i].first);
        charge += e[i].second;
        dc = std::min(dc, region.dist_to_complement(e[i].first));
      } else {
        out.push_back(e[i].first);
      }
    }
    std::int64_t diam1 = 0;
    for (const Site& a : in)
      for (const Site& b : in) diam1 = std::max(diam1, l1_dist(a, b));
    const double sep = static_cast<double>(set_dist(in, out));
    const double need = 2.0 * M * std::pow(static_cast<double>(diam1), alpha);
    if (sep < need) continue;
    if (charge == 0) return "isolated neutral sub-density";
    if (!(2.0 * M * std::pow(static_cast<double>(dc), alpha) > sep)) return "isolated sub-density too far from the boundary";
  }
  return {};
}

template <Region R>
std::vector<std::string> validate_ensemble(const R& region, const Ensemble& ens) {
  std::vector<std::string> problems;
  const auto& q = ens.charges;
  std::vector<std::int64_t> d(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    try {
      d[i] = d_lambda(region, q[i]);
    } catch (const std::exception& ex) {
      problems.push_back("charge " + std::to_string(i) + ": " + ex.what());
      return problems;
    }
    const std::string iso = isolation_violation(region, q[i], ens.M, ens.alpha);
    if (!iso.empty()) problems.push_back("charge " + std::to_string(i) + ": " + iso);
  }
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = i + 1; j < q.size(); ++j) {
      const std::int64_t dd = dist(q[i], q[j]);
      if (dd == 0) problems.push_back("charges " + std::to_string(i) + "," + std::to_string(j) + " overlap");
      const double need = ens.M * std::pow(static_cast<double>(std::min(d[i], d[j])), ens.alpha);
      if (static_cast<double>(dd) < need)
        problems.push_back("charges " + std::to_string(i) + "," + std::to_string(j) + " violate separation");
    }
  return problems;
}

struct EnsembleOptions {
  int max_points = 4;       // support size of each generated charge
  int window = 4;           // side of the box the support is drawn from
  int max_abs = 5;          // |rho_v| <= max_abs
  double neutral_fraction = 0.5;
  int attempts_per_charge = 200;
};

// Rejection sampler: draws candidate charges uniformly over the region and keeps those compatible
// with everything accepted so far. Returns early (still valid) when the attempt budget runs out.
template <Region R, class Rng>
Ensemble random_ensemble(const R& region, Rng& rng, double M, double alpha, std::size_t size_budget,
                         const EnsembleOptions& opt = {}) {
  if (!(M >= 2.0)) throw std::invalid_argument("M must be at least 2");
  if (!(alpha > 1.5 && alpha < 2.0)) throw std::invalid_argument("alpha must lie in (3/2, 2)");
  Ensemble ens;
  ens.M = M;
  ens.alpha = alpha;
  const auto [lo, hi] = region.bounding_box();
  std::uniform_int_distribution<std::int64_t> ux(lo.x, hi.x), uy(lo.y, hi.y);
  std::uniform_int_distribution<int> npts(1, std::max(1, opt.max_points)), off(0, std::max(0, opt.window - 1)),
      val(1, std::max(1, opt.max_abs)), sgn(0, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::int64_t> dacc;
  const std::size_t attempts = static_cast<std::size_t>(opt.attempts_per_charge) * std::max<std::size_t>(size_budget, 1);
  for (std::size_t a = 0; a < attempts && ens.charges.size() < size_budget; ++a) {
    const Site base{ux(rng), uy(rng)};
    const int n = npts(rng);
    const bool want_neutral = n >= 2 && unit(rng) < opt.neutral_fraction;
    std::vector<ChargeDensity::Entry> e;
    bool bad = false;
    for (int i = 0; i < n && !bad; ++i) {
      Site s{base.x + off(rng), base.y + off(rng)};
      if (!region.contains(s)) bad = true;
      for (const auto& x : e)
        if (x.first == s) bad = true;
      e.push_back({s, static_cast<long>(val(rng)) * (sgn(rng) ? 1 : -1)});
    }
    if (bad) continue;
    if (want_neutral) {
      long t = 0;
      for (std::size_t i = 0; i + 1 < e.size(); ++i) t += e[i].second;
      if (t == 0 || std::labs(t) > opt.max_abs) continue;
      e.back().second = -t;
    }
    ChargeDensity cand(std::move(e));
    const std::int64_t dc = d_lambda(region, cand);
    if (!isolation_violation(region, cand, M, alpha).empty()) continue;
    bool ok = true;
    for (std::size_t i = 0; i < ens.charges.size() && ok; ++i) {
      const double need = M * std::pow(static_cast<double>(std::min(dc, dacc[i])), alpha);
      if (static_cast<double>(dist(cand, ens.charges[i])) < need) ok = false;
    }
    if (!ok) continue;
    ens.charges.push_back(std::move(cand));
    dacc.push_back(dc);
  }
  return ens;
}

// N_<(rho): the other members of the ensemble with d(rho') <= 2 d(rho).
template <Region R>
std::vector<std::size_t> comparable_neighbours(const R& region, const Ensemble& ens, std::size_t idx) {
  const std::int64_t d = d_lambda(region, ens.charges[idx]);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < ens.charges.size(); ++j)
    if (j != idx && d_lambda(region, ens.charges[j]) <= 2 * d) out.push_back(j);
  return out;
}

}  // namespace sosdeloc
