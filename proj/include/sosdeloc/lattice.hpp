#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sosdeloc {

struct Site {
  std::int64_t x = 0;
  std::int64_t y = 0;
  auto operator<=>(const Site&) const = default;
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(s.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(s.y) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

inline std::int64_t l1_dist(Site a, Site b) { return std::llabs(a.x - b.x) + std::llabs(a.y - b.y); }

inline std::array<Site, 4> neighbors_of(Site s) {
  return {Site{s.x + 1, s.y}, Site{s.x - 1, s.y}, Site{s.x, s.y + 1}, Site{s.x, s.y - 1}};
}

inline bool even_parity(Site s) { return ((s.x + s.y) % 2 + 2) % 2 == 0; }

inline Site reflect(Site s) { return {-s.x, -s.y}; }

// Values indexed like Domain::sites(); zero outside the domain.
using SiteVector = std::vector<double>;

struct BoundaryEdge {
  std::size_t interior;
  Site exterior;
};

// Finite subset of Z^2 with nearest-neighbour structure. Immutable after construction.
class Domain {
 public:
  Domain() = default;

  static Domain box(std::int64_t N) {
    if (N < 0) throw std::invalid_argument("box half-width must be non-negative");
    std::vector<Site> sites;
    sites.reserve(static_cast<std::size_t>((2 * N + 1) * (2 * N + 1)));
    for (std::int64_t x = -N; x <= N; ++x)
      for (std::int64_t y = -N; y <= N; ++y) sites.push_back({x, y});
    Domain d(std::move(sites));
    d.box_half_width_ = N;
    return d;
  }

  static Domain from_sites(std::vector<Site> sites) { return Domain(std::move(sites)); }

  std::size_t size() const { return sites_.size(); }
  const std::vector<Site>& sites() const { return sites_; }
  const Site& site(std::size_t i) const { return sites_[i]; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency_[i]; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }
  const std::vector<Site>& exterior_boundary_sites() const { return exterior_sites_; }
  std::optional<std::int64_t> box_half_width() const { return box_half_width_; }

  std::optional<std::size_t> index_of(Site s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(Site s) const { return index_.count(s) != 0; }

  // l1 distance from s to the nearest site outside the domain (0 when s is outside).
  std::int64_t dist_to_complement(Site s) const {
    if (!contains(s)) return 0;
    if (box_half_width_) {
      const std::int64_t n = *box_half_width_ + 1;
      return std::min(n - std::llabs(s.x), n - std::llabs(s.y));
    }
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const Site& e : exterior_sites_) best = std::min(best, l1_dist(s, e));
    return best;
  }

  Domain reflected() const {
    std::vector<Site> r;
    r.reserve(sites_.size());
    for (const Site& s : sites_) r.push_back(reflect(s));
    std::sort(r.begin(), r.end());
    Domain d(std::move(r));
    d.box_half_width_ = box_half_width_;
    return d;
  }

  // Componentwise min and max corners of the site set.
  std::pair<Site, Site> bounding_box() const {
    if (sites_.empty()) throw std::logic_error("bounding_box of an empty domain");
    Site lo = sites_.front(), hi = sites_.front();
    for (const Site& s : sites_) {
      lo = {std::min(lo.x, s.x), std::min(lo.y, s.y)};
      hi = {std::max(hi.x, s.x), std::max(hi.y, s.y)};
    }
    return {lo, hi};
  }

  Domain translated(Site shift) const {
    std::vector<Site> t;
    t.reserve(sites_.size());
    for (const Site& s : sites_) t.push_back({s.x + shift.x, s.y + shift.y});
    return Domain(std::move(t));
  }

  bool is_reflection_symmetric() const {
    return std::all_of(sites_.begin(), sites_.end(), [&](const Site& s) { return contains(reflect(s)); });
  }

 private:
  explicit Domain(std::vector<Site> sites) : sites_(std::move(sites)) {
    index_.reserve(sites_.size() * 2);
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (!index_.emplace(sites_[i], i).second) {
        std::ostringstream os;
        os << "duplicate site (" << sites_[i].x << "," << sites_[i].y << ")";
        throw std::invalid_argument(os.str());
      }
    }
    adjacency_.resize(sites_.size());
    std::unordered_map<Site, bool, SiteHash> seen_exterior;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      for (const Site& nb : neighbors_of(sites_[i])) {
        auto it = index_.find(nb);
        if (it != index_.end()) {
          adjacency_[i].push_back(it->second);
        } else {
          boundary_.push_back({i, nb});
          if (seen_exterior.emplace(nb, true).second) exterior_sites_.push_back(nb);
        }
      }
    }
    std::sort(exterior_sites_.begin(), exterior_sites_.end());
  }

  std::vector<Site> sites_;
  std::unordered_map<Site, std::size_t, SiteHash> index_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<Site> exterior_sites_;
  std::optional<std::int64_t> box_half_width_;
};

// Box {-N..N}^2 described analytically, for boxes too large to enumerate.
class BoxRegion {
 public:
  explicit BoxRegion(std::int64_t N) : N_(N) {
    if (N < 0) throw std::invalid_argument("box half-width must be non-negative");
  }
  std::int64_t half_width() const { return N_; }
  bool contains(Site s) const { return std::llabs(s.x) <= N_ && std::llabs(s.y) <= N_; }
  std::int64_t dist_to_complement(Site s) const {
    if (!contains(s)) return 0;
    return std::min(N_ + 1 - std::llabs(s.x), N_ + 1 - std::llabs(s.y));
  }
  std::pair<Site, Site> bounding_box() const { return {{-N_, -N_}, {N_, N_}}; }

 private:
  std::int64_t N_;
};

// Anything that answers membership and distance-to-complement queries.
template <class R>
concept Region = requires(const R& r, Site s) {
  { r.contains(s) } -> std::convertible_to<bool>;
  { r.dist_to_complement(s) } -> std::convertible_to<std::int64_t>;
  { r.bounding_box() } -> std::convertible_to<std::pair<Site, Site>>;
};

inline double dot(const SiteVector& a, const SiteVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline SiteVector delta_at(const Domain& d, Site s) {
  SiteVector f(d.size(), 0.0);
  auto i = d.index_of(s);
  if (!i) throw std::invalid_argument("delta_at: site outside domain");
  f[*i] = 1.0;
  return f;
}

// (Delta f)_i = 4 f_i - sum over interior neighbours; exterior values are zero.
inline SiteVector laplacian_apply(const Domain& d, const SiteVector& f) {
  if (f.size() != d.size()) throw std::invalid_argument("laplacian_apply: dimension mismatch");
  SiteVector out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double v = 4.0 * f[i];
    for (std::size_t j : d.neighbors(i)) v -= f[j];
    out[i] = v;
  }
  return out;
}

// Sum of squared differences over all edges of Z^2 touching the domain, exterior values zero.
inline double gradient_norm_sq(const Domain& d, const SiteVector& s) {
  if (s.size() != d.size()) throw std::invalid_argument("gradient_norm_sq: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j : d.neighbors(i))
      if (i < j) acc += (s[i] - s[j]) * (s[i] - s[j]);
  for (const BoundaryEdge& e : d.boundary_edges()) acc += s[e.interior] * s[e.interior];
  return acc;
}

// f^rfl_i = f_{-i}; requires a reflection-symmetric domain.
inline SiteVector reflect_vector(const Domain& d, const SiteVector& f) {
  if (f.size() != d.size()) throw std::invalid_argument("reflect_vector: dimension mismatch");
  SiteVector out(f.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto j = d.index_of(reflect(d.site(i)));
    if (!j) throw std::invalid_argument("reflect_vector: domain is not reflection symmetric");
    out[i] = f[*j];
  }
  return out;
}

class GreenSolveError : public std::runtime_error {
 public:
  GreenSolveError(double residual, std::size_t iterations)
      : std::runtime_error(message(residual, iterations)), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  static std::string message(double r, std::size_t it) {
    std::ostringstream os;
    os << "conjugate gradient did not converge after " << it << " iterations (relative residual " << r << ")";
    return os.str();
  }
  double residual_;
  std::size_t iterations_;
};

struct GreenSolution {
  SiteVector sigma;
  double relative_residual = 0.0;
  std::size_t iterations = 0;
};

// Jacobi-preconditioned CG for Delta sigma = f. The diagonal is the constant 4.
inline GreenSolution solve_green(const Domain& d, const SiteVector& f, double tol = 1e-10) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_green: tol must be positive");
  if (f.size() != d.size()) throw std::invalid_argument("solve_green: dimension mismatch");
  const std::size_t n = d.size();
  GreenSolution out;
  out.sigma.assign(n, 0.0);
  const double fnorm = std::sqrt(dot(f, f));
  if (fnorm == 0.0) return out;

  SiteVector r = f, z(n), p(n), q;
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / 4.0;
  p = z;
  double rz = dot(r, z);
  const std::size_t cap = 20 * n;
  double rel = 1.0;
  for (std::size_t it = 1; it <= cap; ++it) {
    q = laplacian_apply(d, p);
    const double alpha = rz / dot(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      out.sigma[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rel = std::sqrt(dot(r, r)) / fnorm;
    out.iterations = it;
    if (rel <= tol) break;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / 4.0;
    const double rz_new = dot(r, z);
    const double b = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + b * p[i];
  }
  // Recompute the true residual; the recursive one drifts at tight tolerances.
  SiteVector check = laplacian_apply(d, out.sigma);
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) res += (check[i] - f[i]) * (check[i] - f[i]);
  out.relative_residual = std::sqrt(res) / fnorm;
  if (rel > tol) throw GreenSolveError(out.relative_residual, out.iterations);
  return out;
}

inline double quadratic_form(const Domain& d, const SiteVector& f, double tol = 1e-10) {
  return dot(f, solve_green(d, f, tol).sigma);
}

}  // namespace sosdeloc
