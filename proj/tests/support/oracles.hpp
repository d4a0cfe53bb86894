#pragma once

// Brute-force reference computations that share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <sosdeloc/lattice.hpp>

namespace oracle {

using sosdeloc::Site;

// Random connected domain grown by accretion around the origin.
template <class Rng>
sosdeloc::Domain random_domain(Rng& rng, std::size_t n) {
  std::set<Site> in{{0, 0}};
  std::vector<Site> list{{0, 0}};
  std::uniform_int_distribution<int> dir(0, 3);
  while (in.size() < n) {
    std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
    const Site s = list[pick(rng)];
    const Site t = sosdeloc::neighbors_of(s)[static_cast<std::size_t>(dir(rng))];
    if (in.insert(t).second) list.push_back(t);
  }
  return sosdeloc::Domain::from_sites(list);
}

// Minimum number of 2^k x 2^k squares covering the points: dynamic programming over point subsets.
// A covering square can always be slid until its lower-left corner has an x and a y taken from the
// points, so those corners suffice.
inline std::size_t min_cover_count(const std::vector<Site>& pts, int k) {
  const std::size_t n = pts.size();
  if (n == 0) return 0;
  if (n > 16) throw std::invalid_argument("subset oracle limited to 16 points");
  const std::int64_t side = std::int64_t{1} << k;
  std::set<std::uint32_t> masks;
  for (const Site& a : pts)
    for (const Site& b : pts) {
      std::uint32_t m = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (pts[i].x >= a.x && pts[i].x < a.x + side && pts[i].y >= b.y && pts[i].y < b.y + side) m |= 1U << i;
      if (m) masks.insert(m);
    }
  const std::uint32_t full = (1U << n) - 1;
  std::vector<std::size_t> best(full + 1, std::numeric_limits<std::size_t>::max());
  best[0] = 0;
  for (std::uint32_t s = 0; s <= full; ++s) {
    if (best[s] == std::numeric_limits<std::size_t>::max()) continue;
    for (std::uint32_t m : masks) best[s | m] = std::min(best[s | m], best[s] + 1);
  }
  return best[full];
}

// Normalised exact Gibbs law of (n_0, n_1) for two adjacent sites with heights in [lo, hi],
// exterior values 0, fiber shifts z0, z1.
struct PairLaw {
  long lo, hi;
  std::vector<double> prob;  // index (n0 - lo) * width + (n1 - lo)
};

template <class LogWeight>
PairLaw pair_gibbs(LogWeight lw, long lo, long hi, double z0, double z1, double x0 = 0.0, double x1 = 0.0) {
  PairLaw law{lo, hi, {}};
  const long w = hi - lo + 1;
  law.prob.resize(static_cast<std::size_t>(w * w));
  double Z = 0.0;
  for (long a = lo; a <= hi; ++a)
    for (long b = lo; b <= hi; ++b) {
      const double p0 = static_cast<double>(a) + z0, p1 = static_cast<double>(b) + z1;
      // site 0 at (0,0), site 1 at (1,0): three exterior edges each, one shared edge
      const double e = 3.0 * lw(p0 - x0) + 3.0 * lw(p1 - x1) + lw(p0 - p1);
      const double v = std::exp(e);
      law.prob[static_cast<std::size_t>((a - lo) * w + (b - lo))] = v;
      Z += v;
    }
  for (double& v : law.prob) v /= Z;
  return law;
}

}  // namespace oracle
