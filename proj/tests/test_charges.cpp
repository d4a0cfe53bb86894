#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <sosdeloc/checks.hpp>

#include "support/oracles.hpp"

using namespace sosdeloc;

namespace {

ChargeDensity dipole() { return ChargeDensity({{{0, 0}, 1}, {{1, 0}, -1}}); }
ChargeDensity monopole(Site s = {0, 0}) { return ChargeDensity({{s, 1}}); }

std::vector<Site> random_points(std::mt19937_64& rng, int max_points, int window) {
  std::uniform_int_distribution<int> npts(1, max_points), coord(0, window - 1);
  std::vector<Site> pts;
  const int n = npts(rng);
  while (static_cast<int>(pts.size()) < n) {
    const Site s{coord(rng), coord(rng)};
    if (std::find(pts.begin(), pts.end(), s) == pts.end()) pts.push_back(s);
  }
  return pts;
}

}  // namespace

TEST(ChargeDensity, RejectsZerosAndDuplicates) {
  EXPECT_THROW(ChargeDensity(std::vector<ChargeDensity::Entry>{}), std::invalid_argument);
  EXPECT_THROW(ChargeDensity({{{0, 0}, 0}}), std::invalid_argument);
  EXPECT_THROW(ChargeDensity({{{0, 0}, 1}, {{0, 0}, 2}}), std::invalid_argument);
}

TEST(DLambda, Examples) {
  EXPECT_EQ(d_lambda(BoxRegion(10), dipole()), 1);
  for (std::int64_t N : {0, 3, 12}) EXPECT_EQ(d_lambda(BoxRegion(N), monopole()), N + 1);
  EXPECT_EQ(d_lambda(BoxRegion(10), ChargeDensity({{{0, 0}, 1}, {{3, 4}, -1}})), 7);
  EXPECT_THROW(d_lambda(BoxRegion(1), monopole({5, 5})), std::invalid_argument);
}

TEST(SquareCover, Examples) {
  for (int k : {0, 1, 4, 9}) EXPECT_EQ(square_cover(monopole(), k).squares.size(), 1u);
  EXPECT_EQ(square_cover(std::vector<Site>{{0, 0}, {5, 0}}, 1).squares.size(), 2u);
  EXPECT_EQ(square_cover(std::vector<Site>{{0, 0}, {1, 1}, {2, 0}}, 2).squares.size(), 1u);
}

TEST(SquareCover, CoversEveryPointAndIsDeterministic) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const auto pts = random_points(rng, 8, 12);
    for (int k = 0; k <= 4; ++k) {
      const CoverResult c = square_cover(pts, k);
      for (const Site& p : pts)
        EXPECT_TRUE(std::any_of(c.squares.begin(), c.squares.end(), [&](const Square& s) { return s.contains(p); }));
      EXPECT_EQ(c.squares, square_cover(pts, k).squares);
    }
  }
}

TEST(SquareCover, MatchesSubsetOracleOnSmallSupports) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const auto pts = random_points(rng, 8, 16);
    for (int k = 0; k <= 4; ++k) {
      const CoverResult c = square_cover(pts, k);
      EXPECT_TRUE(c.minimal);
      EXPECT_EQ(c.squares.size(), oracle::min_cover_count(pts, k)) << "rep=" << rep << " k=" << k;
    }
  }
}

TEST(SquareCover, CountsAreMonotoneInScale) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const auto pts = random_points(rng, 10, 40);
    std::size_t prev = square_cover(pts, 0).squares.size();
    EXPECT_EQ(prev, pts.size());
    for (int k = 1; k <= 7; ++k) {
      const std::size_t cur = square_cover(pts, k).squares.size();
      EXPECT_LE(cur, prev);
      prev = cur;
    }
  }
}

TEST(ALambda, MonopoleInSingleSiteDomain) {
  // d = 1, sc = log2(2^16) = 16, one square at every scale
  EXPECT_EQ(sc_lambda(BoxRegion(0), monopole()), 16);
  EXPECT_EQ(a_lambda(BoxRegion(0), monopole()), 17);
}

TEST(ALambda, LeftInequalityOnRandomDensities) {
  std::mt19937_64 rng(4);
  const BoxRegion region(20);
  for (int i = 0; i < 500; ++i) {
    const ChargeDensity rho = random_density(rng, 20, 8, 12, 5);
    const ScaleReport rep = scale_report(region, rho);
    EXPECT_LE(std::log2(1.0 + static_cast<double>(rep.d)), static_cast<double>(rep.A));
    EXPECT_EQ(rep.cover_sizes[0], rho.support_size());
    EXPECT_GT(rep.sep_ratio(), 0.0);
    EXPECT_TRUE(std::isfinite(rep.sep_ratio()));
  }
}

TEST(SepSquares, SingleSquareCases) {
  const BoxRegion big(1000);
  EXPECT_TRUE(sep_squares(big, dipole(), 1).empty());
  // monopole deep inside: dist to the complement is 1001 >= 2^{k+1} for small k
  const auto s = sep_squares(big, monopole(), 3);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], square_cover(monopole(), 3).squares[0]);
  // and near the boundary the second case fails
  EXPECT_TRUE(sep_squares(BoxRegion(3), monopole({3, 0}), 2).empty());
}

TEST(SepSquares, CloseSquaresAreNotSeparated) {
  const ChargeDensity rho({{{0, 0}, 1}, {{20, 0}, 1}});
  const BoxRegion region(100);
  // distance 19 between the level-0..3 squares is far below 2M 2^{alpha(k+1)}
  for (int k = 1; k <= 3; ++k) EXPECT_TRUE(sep_squares(region, rho, k, 4.0, 1.75).empty());
}

TEST(Envelope, MonopoleAtOrigin) {
  for (std::int64_t N : {2, 5}) {
    const Envelope env = envelope(BoxRegion(N), monopole());
    EXPECT_EQ(env.center, (Site{0, 0}));
    EXPECT_EQ(env.d, N + 1);
    std::int64_t count = 0;
    for (std::int64_t x = -3 * N; x <= 3 * N; ++x)
      for (std::int64_t y = -3 * N; y <= 3 * N; ++y)
        if (l1_dist({x, y}, env.center) < 2 * (N + 1)) ++count;
    EXPECT_EQ(Envelope::ball_size(env.radius_D()), count);
  }
}

TEST(Envelope, DipoleBallAndNeighbourhood) {
  const Envelope env = envelope(BoxRegion(10), dipole());
  EXPECT_EQ(Envelope::ball_size(env.radius_D()), 5);
  for (std::int64_t x = -4; x <= 4; ++x)
    for (std::int64_t y = -4; y <= 4; ++y) {
      const Site s{x, y};
      if (!env.in_D(s)) continue;
      EXPECT_TRUE(env.in_Dplus(s));
      for (const Site& n : neighbors_of(s)) EXPECT_TRUE(env.in_Dplus(n));
    }
}

TEST(Ensemble, SingletonBudget) {
  std::mt19937_64 rng(5);
  const BoxRegion region(30);
  const Ensemble ens = random_ensemble(region, rng, 16.0, 1.75, 1);
  EXPECT_EQ(ens.charges.size(), 1u);
  EXPECT_TRUE(validate_ensemble(region, ens).empty());
}

TEST(Ensemble, TwoUnitMonopolesRespectSeparation) {
  const BoxRegion region(50);
  Ensemble ens;
  ens.M = 4.0;
  ens.alpha = 1.75;
  ens.charges = {monopole({0, 0}), monopole({2, 0})};
  // each monopole sees the whole box as its scale, so two of them two sites apart cannot be isolated
  EXPECT_FALSE(validate_ensemble(region, ens).empty());
  ens.charges = {dipole(), ChargeDensity({{{6, 0}, 1}, {{7, 0}, -1}})};
  EXPECT_TRUE(validate_ensemble(region, ens).empty());
  EXPECT_GE(dist(ens.charges[0], ens.charges[1]), 4);
  ens.charges[1] = ChargeDensity({{{3, 0}, 1}, {{4, 0}, -1}});
  EXPECT_FALSE(validate_ensemble(region, ens).empty());
}

TEST(Ensemble, GeneratedEnsemblesValidate) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 40; ++rep) {
    const BoxRegion region(24 + 8 * (rep % 4));
    const Ensemble ens = random_ensemble(region, rng, 16.0, 1.75, 12);
    EXPECT_TRUE(validate_ensemble(region, ens).empty()) << "rep=" << rep;
    EXPECT_GE(ens.charges.size(), 1u);
  }
}

TEST(Covariance, TranslationLeavesScalesUnchanged) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const ChargeDensity rho = random_density(rng, 10, 6, 8, 3);
    const Site t{13, -7};
    const Domain dom = Domain::box(10);
    const Domain moved = dom.translated(t);
    const ChargeDensity rho_t = rho.translated(t);
    EXPECT_EQ(d_lambda(dom, rho), d_lambda(moved, rho_t));
    EXPECT_EQ(a_lambda(dom, rho), a_lambda(moved, rho_t));
    for (int k = 0; k <= 5; ++k) EXPECT_EQ(square_cover(rho, k).squares.size(), square_cover(rho_t, k).squares.size());
  }
}

TEST(Covariance, ReflectionLeavesModifiedDiameterUnchanged) {
  std::mt19937_64 rng(8);
  const Domain dom = oracle::random_domain(rng, 150);
  const Domain rdom = dom.reflected();
  std::uniform_int_distribution<std::size_t> pick(0, dom.size() - 1);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<ChargeDensity::Entry> e;
    for (int i = 0; i < 3; ++i) {
      const Site s = dom.site(pick(rng));
      if (std::none_of(e.begin(), e.end(), [&](const auto& x) { return x.first == s; })) e.push_back({s, i % 2 ? -1 : 2});
    }
    const ChargeDensity rho(e);
    EXPECT_EQ(d_lambda(dom, rho), d_lambda(rdom, rho.reflected()));
  }
}
