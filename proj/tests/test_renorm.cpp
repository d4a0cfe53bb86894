#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <sosdeloc/renorm.hpp>

using namespace sosdeloc;

namespace {

// Fitted c_beta for p = 1, beta = 1/2 on the default grid (see test_potential).
constexpr double kCBeta = 2.5581441995889223;

const Extension& ext_p1() {
  static const Extension e(PotentialSpec::psos(1.0, 0.5));
  return e;
}

SpinWave bump(double h) {
  SpinWave a({0, 0}, {0, 0});
  a.set({0, 0}, h);
  return a;
}

SiteVector random_field(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  SiteVector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(Iota, TrivialShift) {
  for (double x : {-3.0, 0.0, 0.4, 7.0}) EXPECT_EQ(iota(ext_p1(), x, 0.0, kCBeta), cplx(1.0, 0.0));
}

TEST(Iota, BoundedByDampingOnTheGrid) {
  const AssumptionGrid grid = default_grid(ext_p1());
  for (double x : grid.x)
    for (double a : grid.a) {
      const double lhs = std::abs(iota(ext_p1(), x, a, kCBeta));
      EXPECT_LE(lhs, std::exp(-2.0 * kCBeta * g_profile(a)) * (1.0 + 1e-10)) << "x=" << x << " a=" << a;
    }
}

TEST(Iota, ConjugationSymmetry) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-10.0, 10.0), ua(-0.3, 0.3);
  for (int i = 0; i < 200; ++i) {
    const double x = ux(rng), a = ua(rng);
    const cplx p = iota(ext_p1(), x, a, kCBeta), m = iota(ext_p1(), x, -a, kCBeta);
    EXPECT_LE(std::abs(p - std::conj(m)), 1e-12 * std::max(1.0, std::abs(p)));
  }
}

TEST(Iota, OutsideStripRejected) {
  EXPECT_THROW(iota(ext_p1(), 0.0, ext_p1().strip_halfwidth(), kCBeta), StripViolation);
}

TEST(IotaV, ZeroWaveAndSingleEdge) {
  const Domain dom = Domain::box(2);
  std::mt19937_64 rng(1);
  const SiteVector phi = random_field(rng, dom.size(), 2.0);
  EXPECT_EQ(iota_V(ext_p1(), dom, phi, SpinWave({0, 0}, {1, 1}), kCBeta), cplx(1.0, 0.0));
  // a bump at the origin shifts its four edges
  const SpinWave a = bump(0.1);
  const auto edges = shift_edges(a);
  ASSERT_EQ(edges.size(), 4u);
  cplx prod = 1.0;
  for (const ShiftEdge& e : edges)
    prod *= iota(ext_p1(), field_at(dom, phi, e.i) - field_at(dom, phi, e.j), e.a, kCBeta);
  const cplx v = iota_V(ext_p1(), dom, phi, a, kCBeta);
  EXPECT_LE(std::abs(v - prod), 1e-14);
}

TEST(IotaV, ModulusAtMostOneForSmallWaves) {
  const Domain dom = Domain::box(3);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ua(-0.05, 0.05);
  for (int rep = 0; rep < 1000; ++rep) {
    const SiteVector phi = random_field(rng, dom.size(), 3.0);
    SpinWave a({-1, -1}, {1, 1});
    for (std::int64_t y = -1; y <= 1; ++y)
      for (std::int64_t x = -1; x <= 1; ++x) a.set({x, y}, ua(rng));
    EXPECT_LE(std::abs(iota_V(ext_p1(), dom, phi, a, kCBeta)), 1.0 + 1e-12) << "rep=" << rep;
  }
}

TEST(IotaV, EdgeDerivativeMatchesLogDerivative) {
  const Domain dom = Domain::box(2);
  std::mt19937_64 rng(9);
  const SiteVector phi = random_field(rng, dom.size(), 2.0);
  const auto edges = shift_edges(bump(0.2));
  const cplx base = iota_V(ext_p1(), dom, phi, bump(0.2), kCBeta);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const EdgeDerivatives fd = iota_V_edge_fd(ext_p1(), dom, phi, edges, e, kCBeta);
    const double x = field_at(dom, phi, edges[e].i) - field_at(dom, phi, edges[e].j);
    const cplx exact = base * iota_log_derivative(ext_p1(), x, edges[e].a);
    EXPECT_LE(std::abs(fd.first - exact), 1e-7 * std::max(1.0, std::abs(exact))) << "e=" << e;
    EXPECT_TRUE(std::isfinite(std::abs(fd.second)));
  }
  EXPECT_THROW(iota_V_edge_fd(ext_p1(), dom, phi, edges, edges.size(), kCBeta), std::out_of_range);
}

TEST(Activity, Examples) {
  EXPECT_EQ(renorm_activity(0.0, 3.0).z, 0.0);
  EXPECT_DOUBLE_EQ(renorm_activity(1.0 / 16.0, 0.0).z, 0.125);
  EXPECT_NEAR(renorm_activity(1.0, 1.0).z, 2.0 / std::numbers::e, 1e-15);
  // one unit charge, A = 1: 2K = e^{1} * 2 e^{1}
  EXPECT_NEAR(synthetic_K(ChargeDensity({{{0, 0}, 1}}), 1), std::exp(2.0), 1e-12);
}

TEST(Activity, DecayAndEighthFlags) {
  const ChargeDensity rho({{{0, 0}, 1}, {{1, 0}, -1}});
  const ActivityCheck small = check_activity(rho, 3, 100.0, 1.0, 1.0);
  EXPECT_TRUE(small.within_eighth);
  EXPECT_TRUE(small.within_decay_bound);
  const ActivityCheck big = check_activity(rho, 3, 0.0, 1.0, 1.0);
  EXPECT_FALSE(big.within_eighth);
  EXPECT_FALSE(big.within_decay_bound);
}

namespace {

TaylorInstance small_instance(const Domain& dom, std::mt19937_64& rng, double gamma, double sigma_scale) {
  std::uniform_real_distribution<double> ua(-gamma, gamma), uz(-0.125, 0.125);
  TaylorInstance in;
  in.domain = &dom;
  in.rho = ChargeDensity({{{0, 0}, 1}, {{1, 0}, -1}});
  in.a = SpinWave({-1, -1}, {2, 1});
  for (std::int64_t y = -1; y <= 1; ++y)
    for (std::int64_t x = -1; x <= 2; ++x) in.a.set({x, y}, ua(rng));
  in.phi = random_field(rng, dom.size(), 2.0);
  in.sigma = random_field(rng, dom.size(), sigma_scale);
  in.f = SiteVector(dom.size(), 0.0);
  in.zeta = SiteVector(dom.size(), 0.0);
  in.z = uz(rng);
  return in;
}

}  // namespace

TEST(Taylor, ZeroShiftOrZeroActivityIsExact) {
  const Domain dom = Domain::box(3);
  std::mt19937_64 rng(2);
  TaylorInstance in = small_instance(dom, rng, 0.05, 0.0);
  TaylorResult r = taylor_check(in, ext_p1(), kCBeta);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.S, 0.0);
  EXPECT_TRUE(r.pass);
  in = small_instance(dom, rng, 0.05, 0.3);
  in.z = 0.0;
  r = taylor_check(in, ext_p1(), kCBeta);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.S, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Taylor, RandomSmallInstancesPass) {
  const Domain dom = Domain::box(3);
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const TaylorInstance in = small_instance(dom, rng, 0.05, 0.05);
    const TaylorResult r = taylor_check(in, ext_p1(), kCBeta);
    EXPECT_TRUE(r.pass) << "rep=" << rep << " slack=" << r.slack;
  }
}

TEST(Taylor, InvalidInstancesRejected) {
  const Domain dom = Domain::box(1);
  std::mt19937_64 rng(4);
  TaylorInstance in = small_instance(dom, rng, 0.05, 0.1);
  in.z = 0.2;
  EXPECT_THROW(taylor_check(in, ext_p1(), kCBeta), std::invalid_argument);
  in.z = 0.1;
  in.sigma.pop_back();
  EXPECT_THROW(taylor_check(in, ext_p1(), kCBeta), std::invalid_argument);
}

TEST(Taylor, NonPositiveDenominatorDetected) {
  // A strongly negative damping constant inflates iota far past 1, so 1 + zF - zG changes sign.
  const Domain dom = Domain::box(1);
  TaylorInstance in;
  in.domain = &dom;
  in.rho = ChargeDensity({{{0, 0}, 1}});
  in.a = bump(0.3);
  in.phi = SiteVector(dom.size(), 0.0);
  in.phi[*dom.index_of({0, 0})] = std::numbers::pi;
  in.sigma = SiteVector(dom.size(), 0.0);
  in.f = SiteVector(dom.size(), 0.0);
  in.zeta = SiteVector(dom.size(), 0.0);
  in.z = 0.125;
  EXPECT_THROW(taylor_check(in, ext_p1(), -200.0), PositivityViolation);
}

TEST(LnI, GaussianSingleSiteRemainderIsExact) {
  const double beta = 0.3;
  const Extension ext(PotentialSpec::psos(2.0, beta));
  const Domain dom = Domain::from_sites({{0, 0}});
  for (double phi : {-1.0, 0.0, 0.7})
    for (double sigma : {-0.4, 0.1, 0.5}) {
      const LnITaylorResult r = lnI_taylor_check(ext, dom, {phi}, {sigma}, 2.0 * beta);
      // four boundary edges: lhs - T = -4 beta sigma^2 = -beta ||grad sigma||^2
      EXPECT_NEAR(r.lhs - r.T, -4.0 * beta * sigma * sigma, 1e-9);
      EXPECT_NEAR(r.R_bound, 0.5 * 2.0 * beta * 4.0 * sigma * sigma, 1e-15);
      EXPECT_TRUE(r.pass);
    }
}

TEST(LnI, LinearTermIsOddInBothArguments) {
  const Domain dom = Domain::box(2);
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    const SiteVector phi = random_field(rng, dom.size(), 4.0), sigma = random_field(rng, dom.size(), 1.0);
    SiteVector mphi = phi, msigma = sigma;
    for (auto& v : mphi) v = -v;
    for (auto& v : msigma) v = -v;
    const double T = lnI_linear_term(ext_p1(), dom, phi, sigma);
    EXPECT_NEAR(lnI_linear_term(ext_p1(), dom, phi, msigma), -T, 1e-12 * std::max(1.0, std::abs(T)));
    EXPECT_NEAR(lnI_linear_term(ext_p1(), dom, mphi, sigma), -T, 1e-12 * std::max(1.0, std::abs(T)));
    EXPECT_NEAR(lnI_taylor_check(ext_p1(), dom, phi, sigma, 3.0238727960702394).T, T, 1e-12 * std::max(1.0, std::abs(T)));
  }
}

TEST(Aggregate, SumsPerChargeBounds) {
  std::vector<TaylorResult> rs(3);
  rs[0].r_bound = 0.1;
  rs[1].r_bound = 0.2;
  rs[2].r_bound = 0.3;
  const AggregateRemainder a = aggregate_remainder(rs, 1.0, 2.0, 0.5);
  EXPECT_NEAR(a.sum_r_bounds, 0.6, 1e-15);
  EXPECT_NEAR(a.rhs, 2.0 * std::exp(-0.5), 1e-15);
  EXPECT_TRUE(a.pass);
  EXPECT_FALSE(aggregate_remainder(rs, 0.1, 2.0, 0.5).pass);
}
