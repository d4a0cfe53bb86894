// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <sosdeloc/checks.hpp>

#include "support/dense_green.hpp"
#include "support/oracles.hpp"

using namespace sosdeloc;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [" << what << "]";
    }
  }
  void absorb(const CheckResult& r) {
    if (r.pass) return;
    pass = false;
    for (const auto& f : r.failures) note << " [" << r.kind << ": " << f << "]";
  }
};

double max_abs_diff(const SiteVector& a, const SiteVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// 1. CG against dense LU on every domain size up to 64, and the logarithmic growth of the Green function.
Outcome green_solver() {
  Outcome o;
  std::mt19937_64 rng(derive_seed(kSeed, 1));
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  std::size_t domains = 0;
  for (std::size_t n = 1; n <= 64; ++n)
    for (int rep = 0; rep < 5; ++rep) {
      const Domain d = oracle::random_domain(rng, n);
      SiteVector f(d.size());
      for (auto& v : f) v = gauss(rng);
      worst = std::max(worst, max_abs_diff(solve_green(d, f).sigma, oracle::dense_solve(d, f)));
      ++domains;
    }
  for (std::int64_t N : {0, 1, 2, 3}) {
    const Domain d = Domain::box(N);
    const SiteVector f = delta_at(d, {0, 0});
    worst = std::max(worst, max_abs_diff(solve_green(d, f).sigma, oracle::dense_solve(d, f)));
    ++domains;
  }
  o.require(worst <= 1e-8, "CG vs dense max error " + format_double(worst));

  std::vector<double> x, y;
  double ref_err = 0.0;
  for (std::int64_t N : {8, 16, 32, 64}) {
    const Domain d = Domain::box(N);
    const SiteVector f = delta_at(d, {0, 0});
    const double q = quadratic_form(d, f, 1e-12);
    const SiteVector ref = N <= 16 ? oracle::dense_solve(d, f) : oracle::sparse_solve(d, f);
    ref_err = std::max(ref_err, std::abs(q - ref[*d.index_of({0, 0})]));
    x.push_back(std::log(2.0 * static_cast<double>(N) + 1.0));
    y.push_back(q);
  }
  const LineFit fit = fit_line(x, y);
  const double target = 1.0 / (2.0 * std::numbers::pi);
  o.require(ref_err <= 1e-8, "Green function at the origin differs from the direct solve by " + format_double(ref_err));
  o.require(std::abs(fit.slope - target) <= 0.1 * target, "log-slope " + format_double(fit.slope));
  o.note << " domains=" << domains << " max_err=" << format_double(worst) << " slope=" << format_double(fit.slope)
         << " target=" << format_double(target);
  return o;
}

// 2. Interpolation of the integer weights, finite assumption ratios, and the growth of c_beta in beta.
Outcome analytic_extension() {
  Outcome o;
  double worst = 0.0;
  for (double p : {0.5, 1.0, 1.5, 2.0})
    for (double beta : {0.1, 0.5, 1.0}) {
      PotentialParams pp;
      pp.p = p;
      pp.beta = beta;
      pp.keep_samples = false;
      const CheckResult r = potential_check(pp);
      o.absorb(r);
      worst = std::max(worst, r.summary.at("interpolation_error").get<double>());
      for (const char* key : {"c_beta_fit", "c_beta_prime_fit", "growth_ratio_max", "derivative_ratio_max", "curvature_max"})
        o.require(std::isfinite(r.summary.at(key).get<double>()), std::string(key) + " not finite");
    }
  std::vector<double> betas{1e-3, 1e-2, 0.1, 0.5, 1.0}, cs;
  for (double beta : betas) {
    const Extension ext(PotentialSpec::psos(1.0, beta));
    cs.push_back(verify_assumptions(ext, default_grid(ext), std::nullopt, false).c_beta_fit);
  }
  for (std::size_t i = 1; i < cs.size(); ++i)
    o.require(cs[i] > cs[i - 1], "c_beta not increasing between beta=" + format_double(betas[i - 1]) + " and " + format_double(betas[i]));
  const double ratio = cs.back() / cs.front();
  o.require(ratio >= 5.0, "c_beta(1)/c_beta(0.001) = " + format_double(ratio));
  o.note << " max_interp_err=" << format_double(worst) << " c_beta(1e-3)=" << format_double(cs.front())
         << " c_beta(1)=" << format_double(cs.back()) << " ratio=" << format_double(ratio);
  return o;
}

// 3. Covers against the exhaustive oracle, and the left inequality on random densities.
Outcome charge_combinatorics() {
  Outcome o;
  std::mt19937_64 rng(derive_seed(kSeed, 3));
  std::uniform_int_distribution<int> npts(1, 8), coord(0, 15);
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<Site> pts;
    const int n = npts(rng);
    while (static_cast<int>(pts.size()) < n) {
      const Site s{coord(rng), coord(rng)};
      if (std::find(pts.begin(), pts.end(), s) == pts.end()) pts.push_back(s);
    }
    for (int k = 0; k <= 4; ++k) {
      const CoverResult c = square_cover(pts, k);
      if (!c.minimal || c.squares.size() != oracle::min_cover_count(pts, k)) ++mismatches;
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " cover mismatches");
  ChargesParams cp;
  cp.samples = 500;
  cp.seed = derive_seed(kSeed, 30);
  const CheckResult r = charges_check(cp);
  o.absorb(r);
  o.note << " cover_mismatches=" << mismatches << " left_violations=" << r.summary.at("left_inequality_violations").dump();
  return o;
}

// 4. Spin-wave properties on random in-regime ensembles.
Outcome spin_waves() {
  Outcome o;
  SpinwaveParams sp;
  sp.ensembles = 200;
  sp.seed = derive_seed(kSeed, 4);
  sp.heatmap = false;
  const CheckResult r = spinwave_check(sp);
  o.absorb(r);
  if (r.summary.contains("min_energy_ratio")) {
    o.require(r.summary.at("min_energy_ratio").get<double>() > 0.0, "non-positive energy ratio");
    o.note << " ensembles=200 charges=" << r.summary.at("charges").dump()
           << " violations=" << r.summary.at("property_violations").dump()
           << " min_energy_ratio=" << format_double(r.summary.at("min_energy_ratio").get<double>());
  }
  return o;
}

// 5. Activities in regime, iota bounds and both Taylor claims.
Outcome renormalization() {
  Outcome o;
  ActivityParams ap;
  ap.seed = derive_seed(kSeed, 5);
  const CheckResult act = activity_check(ap);
  o.absorb(act);
  TaylorParams tp;
  tp.instances = 1000;
  tp.seed = derive_seed(kSeed, 50);
  const CheckResult tay = taylor_batch(tp);
  o.absorb(tay);
  // |iota| <= 1 over the whole verification grid of the Taylor potential
  const Extension ext(PotentialSpec::psos(tp.p, tp.beta));
  const AssumptionGrid grid = default_grid(ext);
  const double c = verify_assumptions(ext, grid, std::nullopt, false).c_beta_fit;
  double worst = 0.0;
  for (double x : grid.x)
    for (double a : grid.a) worst = std::max(worst, std::abs(iota(ext, x, a, c)));
  o.require(worst <= 1.0 + 1e-12, "|iota| reaches " + format_double(worst) + " on the grid");
  if (act.summary.contains("max_abs_z")) o.note << " max_abs_z=" << format_double(act.summary.at("max_abs_z").get<double>());
  if (tay.summary.contains("max_slack"))
    o.note << " taylor_fg_failures=" << tay.summary.at("taylor_fg_failures").dump()
           << " taylor_lnI_failures=" << tay.summary.at("taylor_lnI_failures").dump()
           << " max_slack=" << format_double(tay.summary.at("max_slack").get<double>());
  o.note << " max_grid_iota=" << format_double(worst);
  return o;
}

// 6. Complex translations, comb convergence and the Dirichlet closed form.
Outcome limits_numerics() {
  Outcome o;
  const CheckResult tr = translate_check({});
  o.absorb(tr);
  double worst_rel = 0.0, worst_halved = 0.0;
  for (const auto& row : tr.tables.at(0).second.rows) {
    worst_rel = std::max(worst_rel, std::get<double>(row[6]));
    worst_halved = std::max(worst_halved, std::get<double>(row[7]));
  }
  o.require(worst_halved < 1e-8, "translation quadrature not converged: halved change " + format_double(worst_halved));
  const CheckResult comb = comb_check({});
  o.absorb(comb);
  const auto rows = comb_convergence(gaussian_comb_problem(), {25, 50, 100, 200});
  for (const CombRow& r : rows) o.require(r.halved_change < 1e-8, "Gaussian comb quadrature not converged at N=" + std::to_string(r.N));
  o.require(rows.back().error < 1e-3, "Gaussian comb error at N=200 is " + format_double(rows.back().error));
  o.note << " max_translation_rel=" << format_double(worst_rel) << " gaussian_comb_err_N200=" << format_double(rows.back().error)
         << " dirichlet_err=" << format_double(comb.summary.at("dirichlet_max_error").get<double>());
  return o;
}

// 7. Chains against exact enumeration, and exact invariance of the truncated two-site law under one sweep.
Outcome sampler_correctness() {
  Outcome o;
  SamplerOracleParams sp;
  sp.seed = derive_seed(kSeed, 7);
  o.absorb(sampler_oracle_check(sp));

  const long lo = -3, hi = 3, w = hi - lo + 1;
  double worst = 0.0;
  for (double p : {0.5, 1.0, 2.0})
    for (double beta : {0.3, 1.0}) {
      ModelSpec spec = ModelSpec::tilted(PotentialSpec::psos(p, beta), Domain::from_sites({{0, 0}, {1, 0}}), 0.0, 0.0, {0.25, 0.5});
      spec.height_bounds = std::make_pair(lo, hi);
      HeatBath hb(spec);
      const oracle::PairLaw law = oracle::pair_gibbs([&](double x) { return -beta * std::pow(std::abs(x), p); }, lo, hi, 0.25, 0.5);
      std::vector<double> out(law.prob.size(), 0.0);
      auto at = [](const ConditionalPmf& c, long n) { return c.probs[static_cast<std::size_t>(n - c.lo)]; };
      for (long a = lo; a <= hi; ++a)
        for (long b = lo; b <= hi; ++b) {
          const double pin = law.prob[static_cast<std::size_t>((a - lo) * w + (b - lo))];
          hb.set_heights({a, b});
          const ConditionalPmf c0 = hb.conditional(0);
          for (long a2 = lo; a2 <= hi; ++a2) {
            hb.set_heights({a2, b});
            const ConditionalPmf c1 = hb.conditional(1);
            for (long b2 = lo; b2 <= hi; ++b2) out[static_cast<std::size_t>((a2 - lo) * w + (b2 - lo))] += pin * at(c0, a2) * at(c1, b2);
          }
        }
      for (std::size_t k = 0; k < out.size(); ++k) worst = std::max(worst, std::abs(out[k] - law.prob[k]));
    }
  o.require(worst <= 1e-10, "one-sweep transition moves the truncated Gibbs vector by " + format_double(worst));
  o.note << " oracle_instances=" << oracle_instances().size() << " sweep_invariance_err=" << format_double(worst);
  return o;
}

// 8. Variance growth at small beta (flat and tilted) and the localized contrast at large beta.
Outcome delocalization() {
  Outcome o;
  auto run = [&](double beta, double ux, GrowthExpectation expect, double n_se, std::uint64_t stream) {
    GrowthParams gp;
    gp.config.p = 1.0;
    gp.config.beta = beta;
    gp.config.ux = ux;
    gp.config.N_list = {8, 16, 32};
    gp.config.chain.sweeps = 100000;
    gp.config.chain.burn_in = 2000;
    gp.config.chain.batches = 32;
    gp.config.chain.seed = derive_seed(kSeed, stream);
    gp.expect = expect;
    gp.n_se = n_se;
    const CheckResult r = growth_check(gp);
    o.absorb(r);
    return r;
  };
  const CheckResult flat = run(0.1, 0.0, GrowthExpectation::Delocalized, 3.0, 80);
  const CheckResult tilt = run(0.1, 0.3, GrowthExpectation::Delocalized, 3.0, 81);
  const CheckResult loc = run(3.0, 0.0, GrowthExpectation::Localized, 2.0, 82);
  auto z = [](const CheckResult& r) { return format_double(r.summary.at("slope_z").get<double>()); };
  o.note << " flat_z=" << z(flat) << " flat_beta_eff_inv=" << format_double(flat.summary.at("beta_eff_inv_fit").get<double>())
         << " tilt_z=" << z(tilt) << " tilt_beta_eff_inv=" << format_double(tilt.summary.at("beta_eff_inv_fit").get<double>())
         << " localized_z=" << z(loc);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"green solver", green_solver},         {"analytic extension", analytic_extension},
      {"charge combinatorics", charge_combinatorics}, {"spin waves", spin_waves},
      {"renormalization", renormalization},   {"limits numerics", limits_numerics},
      {"sampler correctness", sampler_correctness},   {"delocalization", delocalization}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu (%s): %s (%.1f s)%s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", secs, o.note.str().c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed ? 1 : 0;
}
