#pragma once

// Self-contained verification drivers shared by the suite runner and the command-line tool.
// Each driver takes explicit parameters (seeds included), never touches the filesystem, and
// returns its verdict together with the tables and figures the caller may persist.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "charges.hpp"
#include "io.hpp"
#include "lattice.hpp"
#include "limits.hpp"
#include "potential.hpp"
#include "renorm.hpp"
#include "sampler.hpp"
#include "spinwave.hpp"

namespace sosdeloc {

struct CheckResult {
  CheckResult() = default;
  explicit CheckResult(std::string k) : kind(std::move(k)) {}

  std::string kind;
  bool pass = true;
  std::vector<std::string> failures;
  json summary = json::object();
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<std::pair<std::string, std::string>> figures;  // file stem, SVG text
  std::map<std::string, double> constants;

  void fail(std::string why) {
    pass = false;
    failures.push_back(std::move(why));
  }
};

namespace detail {

inline std::string num(double v) { return format_double(v); }

}  // namespace detail

// ---------------------------------------------------------------- green

struct GreenParams {
  std::vector<std::int64_t> N_list{8, 16, 32, 64};
  double tol = 1e-10;
  double slope_rel_tol = 0.1;  // |a - 1/(2 pi)| <= slope_rel_tol / (2 pi)
};

inline CheckResult green_check(const GreenParams& p) {
  if (p.N_list.size() < 2) throw std::invalid_argument("green check needs at least two box sizes");
  CheckResult r{"green"};
  Table t{{"N", "log_2N_plus_1", "quadratic_form", "relative_residual", "iterations"}, {}};
  std::vector<double> x, y;
  for (std::int64_t N : p.N_list) {
    const Domain dom = Domain::box(N);
    const GreenSolution sol = solve_green(dom, delta_at(dom, {0, 0}), p.tol);
    const double q = sol.sigma[*dom.index_of({0, 0})];
    x.push_back(std::log(2.0 * static_cast<double>(N) + 1.0));
    y.push_back(q);
    t.add({static_cast<long long>(N), x.back(), q, sol.relative_residual, static_cast<long long>(sol.iterations)});
  }
  const LineFit fit = fit_line(x, y);
  const double target = 1.0 / (2.0 * std::numbers::pi);
  r.summary = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"target_slope", target}};
  if (!(std::abs(fit.slope - target) <= p.slope_rel_tol * target))
    r.fail("log-slope " + detail::num(fit.slope) + " is not within " + detail::num(100 * p.slope_rel_tol) + "% of 1/(2 pi)");
  r.tables.emplace_back("green", std::move(t));
  return r;
}

// ---------------------------------------------------------------- potential

struct PotentialParams {
  double p = 1.0;
  double beta = 0.5;
  int series_window = 64;
  long interp_nmax = 50;
  double interp_tol = 1e-9;
  std::optional<double> a_max;  // use the bounded-shift grid with this largest shift instead of the default grid
  bool keep_samples = true;
};

inline double interpolation_error(const Extension& ext, long nmax) {
  double err = 0.0;
  for (long n = -nmax; n <= nmax; ++n)
    err = std::max(err, std::abs(ext.eval(cplx(static_cast<double>(n), 0.0)) - weight(ext.spec(), n)));
  return err;
}

inline AssumptionReport fit_assumptions(const Extension& ext, std::optional<double> a_max, bool keep_samples) {
  const AssumptionGrid grid = a_max ? bounded_shift_grid(ext, *a_max) : default_grid(ext);
  return verify_assumptions(ext, grid, std::nullopt, keep_samples);
}

inline CheckResult potential_check(const PotentialParams& p) {
  CheckResult r{"potential"};
  const Extension ext(PotentialSpec::psos(p.p, p.beta), p.series_window);
  const double interp = interpolation_error(ext, p.interp_nmax);
  r.summary["interpolation_error"] = interp;
  r.summary["strip_halfwidth"] = ext.strip_halfwidth();
  if (!(interp <= p.interp_tol)) r.fail("integer interpolation error " + detail::num(interp) + " exceeds " + detail::num(p.interp_tol));
  AssumptionReport rep;
  try {
    rep = fit_assumptions(ext, p.a_max, p.keep_samples);
  } catch (const StripViolation& e) {
    r.fail(std::string("assumption statistics not finite: ") + e.what());
    return r;
  }
  r.summary["c_beta_fit"] = rep.c_beta_fit;
  r.summary["c_beta_prime_fit"] = rep.c_beta_prime_fit;
  r.summary["growth_ratio_max"] = rep.growth_ratio_max;
  r.summary["derivative_ratio_max"] = rep.derivative_ratio_max;
  r.summary["curvature_max"] = rep.curvature_max;
  r.summary["max_ratio_violation"] = rep.max_ratio_violation;
  r.summary["grid"] = rep.grid_description;
  r.constants["c_beta"] = rep.c_beta_fit;
  r.constants["c_beta_prime"] = rep.c_beta_prime_fit;
  if (p.keep_samples) {
    Table t{{"x", "a", "growth_ratio", "derivative_ratio", "curvature"}, {}};
    for (const auto& s : rep.samples) t.add({s.x, s.a, s.growth_ratio, s.derivative_ratio, s.curvature});
    r.tables.emplace_back("assumption_samples", std::move(t));
  }
  return r;
}

struct RegimeParams {
  double p = 1.0;
  double beta = 1e-3;
  double c = 0.2;  // gamma_beta = c |log beta|
  double C3 = 1.0;
  double C4 = 1.0;
  std::optional<double> a_max;
};

// The gamma_beta regime test with freshly fitted constants; out of regime is a failure.
inline CheckResult regime_check(const RegimeParams& p) {
  CheckResult r{"regime"};
  const Extension ext(PotentialSpec::psos(p.p, p.beta));
  const AssumptionReport rep = fit_assumptions(ext, p.a_max, false);
  GammaParams gp;
  try {
    gp = gamma_params(ext, rep, p.c, p.C3, p.C4);
  } catch (const StripViolation& e) {
    r.fail(e.what());
    return r;
  }
  r.summary = {{"gamma_beta", gp.gamma_beta},   {"inverse_term", gp.inverse_term}, {"growth_term", gp.growth_term},
               {"derivative_term", gp.derivative_term}, {"satisfied", gp.satisfied}, {"c_beta_fit", rep.c_beta_fit},
               {"c_beta_prime_fit", rep.c_beta_prime_fit}};
  r.constants["c_beta"] = rep.c_beta_fit;
  r.constants["c_beta_prime"] = rep.c_beta_prime_fit;
  if (!gp.satisfied)
    r.fail("gamma_beta = " + detail::num(gp.gamma_beta) + " is out of regime: max(1/gamma, c g(gamma)/gamma, c' e^{C3 gamma}) = " +
           detail::num(std::max({gp.inverse_term, gp.growth_term, gp.derivative_term})) + " > C4 = " + detail::num(p.C4));
  return r;
}

// ---------------------------------------------------------------- charges

struct ChargesParams {
  std::size_t samples = 500;
  std::int64_t box = 20;
  int max_points = 8;
  int window = 12;
  int max_abs = 5;
  double M = kDefaultM;
  double alpha = kDefaultAlpha;
  std::uint64_t seed = 1;
};

// Random density: up to max_points distinct sites of a window x window square inside the box.
template <class Rng>
ChargeDensity random_density(Rng& rng, std::int64_t box, int max_points, int window, int max_abs) {
  const std::int64_t w = std::min<std::int64_t>(window, 2 * box + 1);
  std::uniform_int_distribution<std::int64_t> corner(-box, box - w + 1), off(0, w - 1);
  std::uniform_int_distribution<int> npts(1, max_points), val(1, max_abs), sgn(0, 1);
  const Site base{corner(rng), corner(rng)};
  const int n = npts(rng);
  std::vector<ChargeDensity::Entry> e;
  for (int tries = 0; static_cast<int>(e.size()) < n && tries < 64 * n; ++tries) {
    const Site s{base.x + off(rng), base.y + off(rng)};
    if (std::any_of(e.begin(), e.end(), [&](const auto& x) { return x.first == s; })) continue;
    e.push_back({s, static_cast<long>(val(rng)) * (sgn(rng) ? 1 : -1)});
  }
  return ChargeDensity(std::move(e));
}

inline CheckResult charges_check(const ChargesParams& p) {
  CheckResult r{"charges"};
  const BoxRegion region(p.box);
  std::mt19937_64 rng(p.seed);
  Table t{{"id", "support", "neutral", "d", "sc", "A", "log2_1_plus_d", "sep_ratio", "minimal"}, {}};
  std::size_t left_violations = 0, monotone_violations = 0, s0_violations = 0;
  double max_sep_ratio = 0.0;
  for (std::size_t i = 0; i < p.samples; ++i) {
    const ChargeDensity rho = random_density(rng, p.box, p.max_points, p.window, p.max_abs);
    const ScaleReport rep = scale_report(region, rho, p.M, p.alpha);
    const double lb = std::log2(1.0 + static_cast<double>(rep.d));
    if (!(lb <= static_cast<double>(rep.A))) ++left_violations;
    if (rep.cover_sizes[0] != rho.support_size()) ++s0_violations;
    for (std::size_t k = 1; k < rep.cover_sizes.size(); ++k)
      if (rep.cover_sizes[k] > rep.cover_sizes[k - 1]) ++monotone_violations;
    max_sep_ratio = std::max(max_sep_ratio, rep.sep_ratio());
    t.add({static_cast<long long>(i), static_cast<long long>(rho.support_size()), rho.neutral(), static_cast<long long>(rep.d),
           static_cast<long long>(rep.sc), static_cast<long long>(rep.A), lb, rep.sep_ratio(), rep.all_minimal});
  }
  r.summary = {{"samples", p.samples}, {"left_inequality_violations", left_violations},
               {"cover_monotonicity_violations", monotone_violations}, {"s0_violations", s0_violations},
               {"max_sep_ratio", max_sep_ratio}};
  r.constants["C3_candidate"] = max_sep_ratio;
  if (left_violations) r.fail(std::to_string(left_violations) + " densities violate log2(1+d) <= A");
  if (monotone_violations) r.fail(std::to_string(monotone_violations) + " cover-size increases along k");
  if (s0_violations) r.fail(std::to_string(s0_violations) + " level-0 covers differ from the support size");
  r.tables.emplace_back("charges", std::move(t));
  return r;
}

// ---------------------------------------------------------------- spin waves

struct SpinwaveParams {
  std::size_t ensembles = 200;
  std::vector<std::int64_t> boxes{24, 48, 96, 160};  // cycled over the ensembles
  std::size_t size_budget = 12;
  double M = 16.0;
  double alpha = kDefaultAlpha;
  double p = 1.0;
  double beta = 1e-3;
  double gamma = 0.02;
  std::optional<double> c_beta;  // fitted on |a| <= gamma when absent
  std::uint64_t seed = 1;
  bool heatmap = true;
};

inline double fitted_c_beta(double p, double beta, double gamma) {
  const Extension ext(PotentialSpec::psos(p, beta));
  if (!(gamma < ext.strip_halfwidth())) throw StripViolation("gamma is not inside the analyticity strip");
  if (gamma == 0.0) return 0.0;
  return fit_assumptions(ext, gamma, false).c_beta_fit;
}

inline CheckResult spinwave_check(const SpinwaveParams& p) {
  CheckResult r{"spinwave"};
  if (p.boxes.empty()) throw std::invalid_argument("spinwave check needs at least one box size");
  EnergyParams ep;
  ep.gamma = p.gamma;
  try {
    ep.c_beta = p.c_beta ? *p.c_beta : fitted_c_beta(p.p, p.beta, p.gamma);
  } catch (const StripViolation& e) {
    r.fail(e.what());
    return r;
  }
  r.summary["c_beta"] = ep.c_beta;
  r.summary["regime_statistic"] = ep.regime_statistic();
  if (!ep.in_regime()) {
    r.fail("gamma = " + detail::num(p.gamma) + " is out of regime: c_beta g(gamma)/gamma = " + detail::num(ep.regime_statistic()) +
           " > 1/48");
    return r;
  }
  Table t{{"ensemble", "box", "charges", "min_ratio", "max_gradient", "norm_constant", "violations"}, {}};
  double min_ratio = std::numeric_limits<double>::infinity(), max_grad = 0.0, norm_c = 0.0;
  std::size_t charges = 0, violations = 0, flagged = 0, invalid = 0;
  std::vector<std::string> first_violations;
  for (std::size_t i = 0; i < p.ensembles; ++i) {
    const std::int64_t N = p.boxes[i % p.boxes.size()];
    const BoxRegion region(N);
    std::mt19937_64 rng(derive_seed(p.seed, i));
    const Ensemble ens = random_ensemble(region, rng, p.M, p.alpha, p.size_budget);
    invalid += validate_ensemble(region, ens).size();
    const EnergyBoundReport rep = energy_bound_check(region, ens, ep);
    for (const auto& v : rep.violations)
      if (first_violations.size() < 8) first_violations.push_back("ensemble " + std::to_string(i) + ": " + v.where + ": " + v.what);
    violations += rep.violations.size();
    flagged += rep.flagged ? 1 : 0;
    charges += rep.charges;
    if (rep.charges) min_ratio = std::min(min_ratio, rep.min_ratio);
    max_grad = std::max(max_grad, rep.max_gradient);
    norm_c = std::max(norm_c, rep.norm_constant);
    t.add({static_cast<long long>(i), static_cast<long long>(N), static_cast<long long>(rep.charges),
           rep.charges ? rep.min_ratio : std::numeric_limits<double>::quiet_NaN(), rep.max_gradient, rep.norm_constant,
           static_cast<long long>(rep.violations.size())});
    if (p.heatmap && i == 0 && !ens.charges.empty()) {
      const auto ctx = make_context(region, ens, 0);
      const AssembledWave aw = assemble(ctx, p.gamma, false);
      r.figures.emplace_back("spinwave_heatmap", svg_heatmap(aw.a, "spin wave of charge 0, ensemble 0"));
    }
  }
  r.summary["ensembles"] = p.ensembles;
  r.summary["charges"] = charges;
  r.summary["min_energy_ratio"] = charges ? min_ratio : 0.0;
  r.summary["max_gradient"] = max_grad;
  r.summary["norm_constant"] = norm_c;
  r.summary["property_violations"] = violations;
  r.summary["ensemble_invariant_violations"] = invalid;
  r.constants["C5"] = charges ? min_ratio : 0.0;
  r.constants["norm_constant"] = norm_c;
  if (charges == 0) r.fail("no charges were generated");
  if (invalid) r.fail(std::to_string(invalid) + " ensemble invariant violations");
  if (violations) {
    r.fail(std::to_string(violations) + " spin-wave property violations");
    for (auto& s : first_violations) r.failures.push_back(s);
  }
  if (flagged) r.fail(std::to_string(flagged) + " ensembles have a non-positive energy ratio");
  r.tables.emplace_back("spinwave", std::move(t));
  return r;
}

// ---------------------------------------------------------------- renormalized activities

struct ActivityParams {
  std::size_t ensembles = 50;
  std::int64_t box = 6;
  std::size_t size_budget = 4;
  double M = 256.0;
  double alpha = kDefaultAlpha;
  double p = 1.0;
  double beta = 1e-300;
  double gamma = 30.0;
  double C3 = 1.0;
  std::uint64_t seed = 1;
};

inline CheckResult activity_check(const ActivityParams& p) {
  CheckResult r{"activity"};
  EnergyParams ep;
  ep.gamma = p.gamma;
  try {
    ep.c_beta = fitted_c_beta(p.p, p.beta, p.gamma);
  } catch (const StripViolation& e) {
    r.fail(e.what());
    return r;
  }
  r.summary["c_beta"] = ep.c_beta;
  r.summary["regime_statistic"] = ep.regime_statistic();
  if (!ep.in_regime()) {
    r.fail("gamma = " + detail::num(p.gamma) + " is out of regime: c_beta g(gamma)/gamma = " + detail::num(ep.regime_statistic()) +
           " > 1/48");
    return r;
  }
  struct Item {
    std::size_t ens;
    ChargeDensity rho;
    long A;
    double E;
  };
  std::vector<Item> items;
  const BoxRegion region(p.box);
  double C5 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.ensembles; ++i) {
    std::mt19937_64 rng(derive_seed(p.seed, i));
    const Ensemble ens = random_ensemble(region, rng, p.M, p.alpha, p.size_budget);
    for (std::size_t c = 0; c < ens.charges.size(); ++c) {
      const auto ctx = make_context(region, ens, c);
      const AssembledWave aw = assemble(ctx, p.gamma, false);
      const double E = energy(ens.charges[c], aw.a, ep);
      const double denom = p.gamma * (static_cast<double>(ens.charges[c].l1_norm()) + static_cast<double>(aw.A));
      C5 = std::min(C5, E / denom);
      items.push_back({i, ens.charges[c], aw.A, E});
    }
  }
  if (items.empty()) {
    r.fail("no charges were generated");
    return r;
  }
  Table t{{"ensemble", "l1_norm", "A", "E", "log_z", "z", "decay_bound", "within_decay_bound", "within_eighth"}, {}};
  std::size_t over = 0, decay_ok = 0;
  double max_z = 0.0;
  for (const Item& it : items) {
    const ActivityCheck c = check_activity(it.rho, it.A, it.E, p.gamma, C5, p.C3);
    const double log_z = std::log(2.0 * synthetic_K(it.rho, it.A, p.C3)) - it.E;
    max_z = std::max(max_z, std::abs(c.act.z));
    over += c.within_eighth ? 0 : 1;
    decay_ok += c.within_decay_bound ? 1 : 0;
    t.add({static_cast<long long>(it.ens), static_cast<long long>(it.rho.l1_norm()), static_cast<long long>(it.A), it.E, log_z,
           c.act.z, c.decay_bound, c.within_decay_bound, c.within_eighth});
  }
  r.summary["charges"] = items.size();
  r.summary["max_abs_z"] = max_z;
  r.summary["C5_fit"] = C5;
  r.summary["within_decay_bound"] = decay_ok;
  r.constants["C5_activity"] = C5;
  if (over) r.fail(std::to_string(over) + " activities exceed 1/8 in regime");
  r.tables.emplace_back("activity", std::move(t));
  return r;
}

// ---------------------------------------------------------------- Taylor claims

struct TaylorParams {
  std::size_t instances = 1000;
  double p = 1.0;
  double beta = 0.5;
  double gamma = 0.3;
  std::int64_t box = 6;
  double M = 256.0;
  double phi_range = 5.0;
  double sigma_range = 0.05;
  std::uint64_t seed = 1;
};

inline CheckResult taylor_batch(const TaylorParams& p) {
  CheckResult r{"taylor"};
  const Extension ext(PotentialSpec::psos(p.p, p.beta));
  if (!(p.gamma < ext.strip_halfwidth())) {
    r.fail("gamma is not inside the analyticity strip");
    return r;
  }
  const AssumptionReport rep = verify_assumptions(ext, default_grid(ext), std::nullopt, false);
  const double c = rep.c_beta_fit, cp = rep.c_beta_prime_fit;
  r.constants["c_beta"] = c;
  r.constants["c_beta_prime"] = cp;
  const Domain dom = Domain::box(p.box);
  const std::size_t n = dom.size();
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> U(-p.phi_range, p.phi_range), Z(-0.125, 0.125), Ze(0.0, 1.0),
      Sg(-p.sigma_range, p.sigma_range);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Table t{{"instance", "lhs", "S", "bound", "slack", "lnI_lhs", "lnI_T", "lnI_bound", "lnI_slack"}, {}};
  std::size_t fails = 0, lnI_fails = 0, iota_fails = 0, d1_fails = 0, d2_fails = 0, positivity = 0, done = 0;
  double max_slack = 0.0, max_lnI_slack = 0.0, max_iota = 0.0, max_d1 = 0.0, max_d2 = 0.0;
  while (done < p.instances) {
    const Ensemble ens = random_ensemble(dom, rng, p.M, kDefaultAlpha, 1);
    if (ens.charges.empty()) continue;
    const auto ctx = make_context(dom, ens, 0);
    TaylorInstance in;
    in.domain = &dom;
    in.rho = ens.charges[0];
    in.a = assemble(ctx, p.gamma, false).a;
    in.z = Z(rng);
    in.phi.resize(n);
    in.sigma.resize(n);
    in.zeta.resize(n);
    in.f.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      in.phi[i] = U(rng);
      in.sigma[i] = Sg(rng);
      in.zeta[i] = Ze(rng);
    }
    for (int k = 0; k < 3; ++k) in.f[pick(rng)] = Sg(rng);
    TaylorResult tr;
    try {
      tr = taylor_check(in, ext, c);
    } catch (const PositivityViolation&) {
      ++positivity;
      ++done;
      continue;
    }
    const LnITaylorResult lr = lnI_taylor_check(ext, dom, in.phi, in.sigma, cp);
    fails += tr.pass ? 0 : 1;
    lnI_fails += lr.pass ? 0 : 1;
    max_slack = std::max(max_slack, tr.slack);
    max_lnI_slack = std::max(max_lnI_slack, lr.slack);
    const auto edges = shift_edges(in.a);
    const double mod = std::abs(std::exp(log_iota_V(ext, dom, in.phi, edges, c)));
    max_iota = std::max(max_iota, mod);
    if (mod > 1.0 + 1e-14) ++iota_fails;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const EdgeDerivatives d = iota_V_edge_fd(ext, dom, in.phi, edges, e, c);
      max_d1 = std::max(max_d1, std::abs(d.first));
      max_d2 = std::max(max_d2, std::abs(d.second));
      if (std::abs(d.first) > 1.0 + c) ++d1_fails;
      if (std::abs(d.second) > (c + 1.0) * (c + 2.0)) ++d2_fails;
    }
    t.add({static_cast<long long>(done), tr.lhs, tr.S, tr.r_bound, tr.slack, lr.lhs, lr.T, lr.R_bound, lr.slack});
    ++done;
  }
  r.summary = {{"instances", p.instances},   {"c_beta", c},
               {"c_beta_prime", cp},         {"taylor_fg_failures", fails},
               {"taylor_lnI_failures", lnI_fails}, {"max_slack", max_slack},
               {"max_lnI_slack", max_lnI_slack},   {"max_abs_iota", max_iota},
               {"max_first_derivative", max_d1},   {"first_derivative_bound", 1.0 + c},
               {"max_second_derivative", max_d2},  {"second_derivative_bound", (c + 1.0) * (c + 2.0)},
               {"positivity_violations", positivity}};
  if (fails) r.fail(std::to_string(fails) + " Taylor (F,G) bound violations");
  if (lnI_fails) r.fail(std::to_string(lnI_fails) + " Taylor (ln I) bound violations");
  if (positivity) r.fail(std::to_string(positivity) + " instances with 1 + zF - zG <= 0");
  if (iota_fails) r.fail(std::to_string(iota_fails) + " instances with |iota_V| > 1");
  if (d1_fails || d2_fails) r.fail(std::to_string(d1_fails + d2_fails) + " edge-derivative bound violations");
  r.tables.emplace_back("taylor", std::move(t));
  return r;
}

// ---------------------------------------------------------------- limits

struct CombParams {
  std::vector<int> N_list{25, 50, 100, 200};
  double p = 1.0;
  double beta = 0.5;
  double gaussian_tol = 1e-3;
};

inline CheckResult comb_check(const CombParams& cp) {
  CheckResult r{"comb"};
  const Extension ext(PotentialSpec::psos(cp.p, cp.beta));
  const CombProblem ext_problem{"I(x) exp(-x^2)", [&](double x) { return ext.eval(cplx(x, 0.0)).real() * std::exp(-x * x); }, 7.0,
                                false};
  Table t{{"problem", "N", "integral", "comb_sum", "error", "halved_change"}, {}};
  for (const CombProblem& pb : {gaussian_comb_problem(), laplace_comb_problem(), ext_problem}) {
    const auto rows = comb_convergence(pb, cp.N_list);
    for (const CombRow& row : rows) t.add({pb.name, static_cast<long long>(row.N), row.integral, row.comb_sum, row.error, row.halved_change});
    const bool dec = comb_errors_decreasing(rows);
    r.summary[pb.name] = {{"final_error", rows.back().error}, {"decreasing", dec}};
    if (!dec) r.fail(pb.name + ": comb errors do not decrease along the doubling schedule");
    if (pb.name == "exp(-x^2)" && !(rows.back().error < cp.gaussian_tol))
      r.fail("Gaussian comb error " + detail::num(rows.back().error) + " at N=" + std::to_string(rows.back().N) + " is not below " +
             detail::num(cp.gaussian_tol));
  }
  double dk = 0.0;
  for (int N : {1, 3, 10, 50})
    for (int k = 1; k < 400; ++k) {
      const double x = -2.0 + k * 0.01 + 1e-3;
      dk = std::max(dk, std::abs(TrigPoly::comb(N).eval_unit_period(x) - dirichlet_kernel(N, x)));
    }
  r.summary["dirichlet_max_error"] = dk;
  if (!(dk <= 1e-10)) r.fail("Dirichlet kernel identity off by " + detail::num(dk));
  r.tables.emplace_back("comb", std::move(t));
  return r;
}

struct TranslateParams {
  double p = 1.0;
  double beta = 0.5;
  std::vector<std::vector<double>> shifts;  // empty: the standard n = 1, 2, 3 cases
  TranslationSpec quad;
};

inline CheckResult translate_check(const TranslateParams& tp) {
  CheckResult r{"translate"};
  const Extension ext(PotentialSpec::psos(tp.p, tp.beta));
  auto shifts = tp.shifts;
  if (shifts.empty()) {
    const double e = ext.strip_halfwidth();
    shifts = {{e / 2}, {0.3, 0.5}, {0.3, 0.3}, {0.2, 0.5, 0.3}};
  }
  Table t{{"n", "shifts", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "relative_difference", "halved_change", "boundary_max", "pass"}, {}};
  for (const auto& a : shifts) {
    std::string label;
    for (std::size_t i = 0; i < a.size(); ++i) label += (i ? " " : "") + detail::num(a[i]);
    try {
      const TranslationResult res = complex_translation_check(ext, a, tp.quad);
      t.add({static_cast<long long>(a.size()), label, res.lhs.real(), res.lhs.imag(), res.rhs.real(), res.rhs.imag(), res.rel,
             res.halved_change, res.boundary_max, res.pass});
      if (!res.pass) r.fail("translation identity fails for shifts {" + label + "}: relative difference " + detail::num(res.rel));
    } catch (const std::exception& e) {
      r.fail("shifts {" + label + "}: " + e.what());
    }
  }
  r.tables.emplace_back("translate", std::move(t));
  return r;
}

struct BridgeParams {
  std::vector<double> eps_list{1.0, 0.1, 0.01, 0.001, 0.0};
  std::vector<BridgeProblem> problems;  // empty: the two standard problems
};

inline std::vector<BridgeProblem> standard_bridge_problems() {
  return {BridgeProblem{PotentialSpec::psos(1.0, 1.0), {{0, 0}}, {0.0}, 0.0, {0}},
          BridgeProblem{PotentialSpec::psos(0.5, 1.0), {{0, 0}, {1, 0}}, {0.0, 0.0}, 0.0, {2, 0}}};
}

inline CheckResult bridge_check(const BridgeParams& bp) {
  CheckResult r{"bridge"};
  const auto problems = bp.problems.empty() ? standard_bridge_problems() : bp.problems;
  Table t{{"problem", "p", "beta", "sites", "eps", "value", "change"}, {}};
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const auto rows = regularized_weight_bridge(problems[i], bp.eps_list);
    for (const BridgeRow& row : rows)
      t.add({static_cast<long long>(i), problems[i].potential.p, problems[i].potential.beta,
             static_cast<long long>(problems[i].sites.size()), row.eps, row.value, row.change});
    if (!bridge_is_cauchy(rows)) r.fail("bridge problem " + std::to_string(i) + " is not Cauchy along the eps schedule");
  }
  r.tables.emplace_back("bridge", std::move(t));
  return r;
}

// ---------------------------------------------------------------- sampler

struct SamplerOracleParams {
  std::uint64_t sweeps = 100000;
  std::uint64_t burn_in = 1000;
  double n_se = 3.0;
  double roundoff_rel = 1e-10;  // floor for estimates whose SE vanishes (Rao-Blackwellised one-site moments)
  std::uint64_t seed = 1;
};

struct OracleInstance {
  std::string name;
  ModelSpec spec;
  SiteVector f;
};

// Enumeration radius with every site's boundary weight below e^{-50} at the edge of the window.
inline long oracle_radius(const PotentialSpec& pot) {
  return static_cast<long>(std::ceil(std::pow(50.0 / (3.0 * pot.beta), 1.0 / pot.p))) + 2;
}

// All one- and two-site instances of the oracle table.
inline std::vector<OracleInstance> oracle_instances() {
  std::vector<OracleInstance> out;
  const Domain one = Domain::from_sites({{0, 0}});
  const Domain two = Domain::from_sites({{0, 0}, {1, 0}});
  struct Pot {
    const char* tag;
    PotentialSpec spec;
  };
  for (const Pot& pot : {Pot{"p1_b1", PotentialSpec::psos(1.0, 1.0)}, Pot{"p2_b0.5", PotentialSpec::psos(2.0, 0.5)},
                         Pot{"p0.5_b1.5", PotentialSpec::psos(0.5, 1.5)}}) {
    out.push_back({std::string("1site_") + pot.tag, ModelSpec::tilted(pot.spec, one, 0.0, 0.0), {1.0}});
    out.push_back({std::string("1site_zeta_") + pot.tag, ModelSpec::tilted(pot.spec, one, 0.0, 0.0, {0.5}), {1.0}});
    out.push_back({std::string("2site_dipole_") + pot.tag, ModelSpec::tilted(pot.spec, two, 0.0, 0.0), {1.0, -1.0}});
    out.push_back(
        {std::string("2site_tilt_zeta_") + pot.tag, ModelSpec::tilted(pot.spec, two, 0.3, 0.0, {0.25, 0.75}), {1.0, 1.0}});
  }
  return out;
}

inline CheckResult sampler_oracle_check(const SamplerOracleParams& p) {
  CheckResult r{"sampler"};
  Table t{{"instance", "observable", "mcmc_var", "se", "exact_var", "z"}, {}};
  const auto inst = oracle_instances();
  for (std::size_t k = 0; k < inst.size(); ++k) {
    const OracleInstance& in = inst[k];
    ChainConfig cc;
    cc.sweeps = p.sweeps;
    cc.burn_in = p.burn_in;
    cc.seed = derive_seed(p.seed, k);
    const ChainStats st = run_chain(in.spec, {{"f.phi", in.f}}, cc);
    const long R = oracle_radius(in.spec.potential);
    const ExactMoments ex0 = exact_linear_moments(in.spec, delta_at(*in.spec.domain, {0, 0}), R);
    const ExactMoments exf = exact_linear_moments(in.spec, in.f, R);
    for (const auto& [est, ex] : {std::pair{st.observables[0], ex0}, std::pair{st.observables[1], exf}}) {
      const double z = (est.var - ex.var) / est.se_var;
      t.add({in.name, est.name, est.var, est.se_var, ex.var, z});
      if (!(std::abs(est.var - ex.var) <= p.n_se * est.se_var + p.roundoff_rel * std::max(1.0, std::abs(ex.var))))
        r.fail(in.name + " " + est.name + ": variance " + detail::num(est.var) + " vs exact " + detail::num(ex.var) + " (" +
               detail::num(z) + " SE)");
    }
  }
  r.tables.emplace_back("sampler_oracle", std::move(t));
  return r;
}

enum class GrowthExpectation { None, Delocalized, Localized };

struct GrowthParams {
  GrowthConfig config;
  GrowthExpectation expect = GrowthExpectation::None;
  double n_se = 3.0;  // slope positivity margin (delocalized) or null band (localized)
};

inline Table growth_table(const GrowthTable& g) {
  Table t{{"N", "log_N", "var_phi0", "se_var", "mean_phi0", "se_mean", "tau_int", "quadratic_form"}, {}};
  for (const GrowthRow& row : g.rows)
    t.add({static_cast<long long>(row.N), std::log(static_cast<double>(row.N)), row.phi0.var, row.phi0.se_var, row.phi0.mean,
           row.phi0.se_mean, row.phi0.tau_int, row.quadratic_form});
  return t;
}

inline std::string growth_svg(const GrowthTable& g, const std::string& title) {
  PlotSeries var{"Var(phi_0)", {}, {}, {}, "#1f77b4"};
  PlotSeries qf{"beta_eff^-1 x Green lower bound", {}, {}, {}, "#d62728"};
  for (const GrowthRow& row : g.rows) {
    var.x.push_back(static_cast<double>(row.N));
    var.y.push_back(row.phi0.var);
    var.yerr.push_back(row.phi0.se_var);
    qf.x.push_back(static_cast<double>(row.N));
    qf.y.push_back(g.beta_eff_inv_fit * row.quadratic_form + (g.variance_fit.intercept - g.beta_eff_inv_fit * g.qf_fit.intercept));
  }
  return svg_plot(title, "N (log scale)", "variance", {var, qf}, true);
}

inline CheckResult growth_check(const GrowthParams& gp) {
  CheckResult r{"growth"};
  const GrowthTable g = variance_growth_experiment(gp.config);
  const double z = g.variance_fit.slope_se > 0.0 ? g.variance_fit.slope / g.variance_fit.slope_se
                                                : std::copysign(std::numeric_limits<double>::infinity(), g.variance_fit.slope);
  r.summary = {{"variance_slope", g.variance_fit.slope}, {"variance_slope_se", g.variance_fit.slope_se}, {"slope_z", z},
               {"qf_slope", g.qf_fit.slope},             {"beta_eff_inv_fit", g.beta_eff_inv_fit},     {"beta_eff_fit", g.beta_eff_fit}};
  r.constants["beta_eff_fit"] = g.beta_eff_fit;
  r.constants["beta_eff_inv_fit"] = g.beta_eff_inv_fit;
  if (gp.expect == GrowthExpectation::Delocalized) {
    for (std::size_t i = 1; i < g.rows.size(); ++i)
      if (!(g.rows[i].phi0.var > g.rows[i - 1].phi0.var))
        r.fail("Var(phi_0) does not increase from N=" + std::to_string(g.rows[i - 1].N) + " to N=" + std::to_string(g.rows[i].N));
    if (!(z > gp.n_se)) r.fail("fitted log-slope is not positive at " + detail::num(gp.n_se) + " SE (z = " + detail::num(z) + ")");
    if (!(g.beta_eff_inv_fit > 0.0)) r.fail("beta_eff^-1 fit is not positive");
  } else if (gp.expect == GrowthExpectation::Localized) {
    if (!(std::abs(z) < gp.n_se)) r.fail("fitted log-slope is not within " + detail::num(gp.n_se) + " SE of 0 (z = " + detail::num(z) + ")");
  }
  r.tables.emplace_back("growth", growth_table(g));
  char title[128];
  std::snprintf(title, sizeof title, "p=%g beta=%g u=(%g,%g)", gp.config.p, gp.config.beta, gp.config.ux, gp.config.uy);
  r.figures.emplace_back("growth", growth_svg(g, title));
  return r;
}

}  // namespace sosdeloc
