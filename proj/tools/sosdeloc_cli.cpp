#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <sosdeloc/suite.hpp>

namespace fs = std::filesystem;
using namespace sosdeloc;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_dir = "sosdeloc_out";
  std::string format = "csv";

  OutputFormat fmt() const { return format == "json" ? OutputFormat::Json : OutputFormat::Csv; }
};

// Writes the result's tables and figures plus <kind>_report.json, echoes the report to stdout.
int emit(const Globals& g, const CheckResult& r) {
  const fs::path dir(g.out_dir);
  json report = result_json(r.kind, r);
  json arts = json::array();
  for (const auto& f : write_artifacts(dir, "", r, g.fmt())) arts.push_back(f);
  report["artifacts"] = arts;
  write_text(dir / (r.kind + "_report.json"), report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  if (!r.pass) {
    std::cerr << r.kind << " check FAILED";
    for (const auto& f : r.failures) std::cerr << "\n  " << f;
    std::cerr << "\n";
  }
  return r.pass ? 0 : 1;
}

std::vector<Site> read_sites(const std::string& path) {
  const json j = read_json_file(path);
  std::vector<Site> sites;
  try {
    for (const auto& s : j) {
      const auto v = s.get<std::vector<std::int64_t>>();
      if (v.size() != 2) throw ConfigError(path + ": each site must be [x, y]");
      sites.push_back({v[0], v[1]});
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return sites;
}

ChargeDensity read_density(const std::string& path) {
  const json j = read_json_file(path);
  std::vector<ChargeDensity::Entry> e;
  try {
    for (const auto& s : j) {
      const auto v = s.get<std::vector<long>>();
      if (v.size() != 3) throw ConfigError(path + ": each entry must be [x, y, q]");
      e.push_back({{v[0], v[1]}, v[2]});
    }
  } catch (const json::exception& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
  return ChargeDensity(std::move(e));
}

json squares_json(const std::vector<Square>& sq) {
  json a = json::array();
  for (const Square& s : sq) a.push_back({s.corner.x, s.corner.y, s.side()});
  return a;
}

// ---------------------------------------------------------------- subcommands

struct GreenOpts {
  std::optional<std::int64_t> box;
  std::string domain, f;
  double tol = 1e-10;
};

int cmd_green(const Globals& g, const GreenOpts& o) {
  if (o.box.has_value() == !o.domain.empty()) throw ConfigError("green: give exactly one of --box or --domain");
  const Domain dom = o.box ? Domain::box(*o.box) : Domain::from_sites(read_sites(o.domain));
  SiteVector f;
  if (!o.f.empty()) {
    try {
      f = read_json_file(o.f).get<SiteVector>();
    } catch (const json::exception& e) {
      throw ConfigError(o.f + ": " + e.what());
    }
    if (f.size() != dom.size()) throw ConfigError("green: --f has " + std::to_string(f.size()) + " entries for " + std::to_string(dom.size()) + " sites");
  } else {
    if (!dom.contains({0, 0})) throw ConfigError("green: without --f the domain must contain the origin");
    f = delta_at(dom, {0, 0});
  }
  const GreenSolution sol = solve_green(dom, f, o.tol);
  const json out = {{"sigma", sol.sigma}, {"quadratic_form", dot(f, sol.sigma)}, {"residual", sol.relative_residual},
                    {"iterations", sol.iterations}};
  write_text(fs::path(g.out_dir) / "green.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct PotentialOpts {
  double p = 1.0, beta = 0.5, tol = 1e-9;
  std::vector<double> grid_x{-40.0, 40.0, 0.25};
  std::vector<double> grid_a;
};

int cmd_verify_potential(const Globals& g, const PotentialOpts& o) {
  if (o.grid_x.size() != 3 || !(o.grid_x[2] > 0.0) || !(o.grid_x[1] >= o.grid_x[0]))
    throw ConfigError("verify-potential: --grid-x takes lo,hi,step with lo <= hi and step > 0");
  const Extension ext(PotentialSpec::psos(o.p, o.beta));
  CheckResult r{"potential"};
  const double interp = interpolation_error(ext, 50);
  if (!(interp <= o.tol)) r.fail("integer interpolation error " + format_double(interp) + " exceeds " + format_double(o.tol));
  AssumptionGrid grid = default_grid(ext);
  grid.x = linspace_step(o.grid_x[0], o.grid_x[1], o.grid_x[2]);
  if (!o.grid_a.empty()) grid.a = o.grid_a;
  try {
    const AssumptionReport rep = verify_assumptions(ext, grid);
    r.summary = {{"interpolation_error", interp},          {"c_beta_fit", rep.c_beta_fit},
                 {"c_beta_prime_fit", rep.c_beta_prime_fit}, {"growth_ratio_max", rep.growth_ratio_max},
                 {"derivative_ratio_max", rep.derivative_ratio_max}, {"curvature_max", rep.curvature_max},
                 {"max_ratio_violation", rep.max_ratio_violation}, {"grid", rep.grid_description}};
    r.constants["c_beta"] = rep.c_beta_fit;
    r.constants["c_beta_prime"] = rep.c_beta_prime_fit;
    Table t{{"x", "a", "ratio"}, {}};
    for (const auto& s : rep.samples) t.add({s.x, s.a, s.growth_ratio});
    r.tables.emplace_back("potential_samples", std::move(t));
  } catch (const StripViolation& e) {
    throw ConfigError(std::string("verify-potential: ") + e.what());
  }
  return emit(g, r);
}

struct ChargesOpts {
  std::string rho;
  std::int64_t box = 20;
  std::optional<int> k;
  double M = kDefaultM, alpha = kDefaultAlpha;
};

int cmd_charges(const Globals& g, const ChargesOpts& o) {
  const ChargeDensity rho = read_density(o.rho);
  const BoxRegion region(o.box);
  const ScaleReport rep = scale_report(region, rho, o.M, o.alpha);
  json covers = json::array(), seps = json::array();
  const int k_lo = o.k ? *o.k : 0, k_hi = o.k ? *o.k : rep.sc;
  if (k_lo < 0 || k_hi > rep.sc) throw ConfigError("charges: --k must lie in [0, sc] = [0, " + std::to_string(rep.sc) + "]");
  for (int k = k_lo; k <= k_hi; ++k) {
    const CoverResult c = square_cover(rho, k);
    covers.push_back({{"k", k}, {"minimal", c.minimal}, {"squares", squares_json(c.squares)}});
    if (k >= 1) seps.push_back({{"k", k}, {"squares", squares_json(sep_squares(region, rho, k, o.M, o.alpha))}});
  }
  const json out = {{"d", rep.d}, {"sc", rep.sc}, {"A", rep.A}, {"neutral", rho.neutral()}, {"covers", covers}, {"sep_squares", seps}};
  write_text(fs::path(g.out_dir) / "charges.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct SimOpts {
  double p = 1.0, beta = 0.1;
  std::int64_t box = 8;
  std::vector<double> tilt{0.0, 0.0};
  std::string zeta_mode = "zero";
  std::uint64_t sweeps = 6400, burn_in = 1000;
  int batches = 32;
  std::string out;
};

SiteVector make_zeta(const Domain& dom, const std::string& mode, std::uint64_t seed) {
  SiteVector z(dom.size(), 0.0);
  if (mode == "zero") return z;
  std::mt19937_64 rng(seed);
  if (mode == "random") {
    for (double& v : z) v = uniform01(rng);
    return z;
  }
  // antisym: zeta(-i) = -zeta(i) mod 1, zeta(0) in {0, 1/2}
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const Site s = dom.site(i);
    const std::size_t j = *dom.index_of(reflect(s));
    if (j < i) continue;
    if (j == i) {
      z[i] = uniform01(rng) < 0.5 ? 0.0 : 0.5;
    } else {
      z[i] = uniform01(rng);
      z[j] = z[i] == 0.0 ? 0.0 : 1.0 - z[i];
    }
  }
  return z;
}

int cmd_simulate(const Globals& g, const SimOpts& o) {
  if (o.tilt.size() != 2) throw ConfigError("simulate: --tilt takes ux,uy");
  Domain dom = Domain::box(o.box);
  const SiteVector zeta = make_zeta(dom, o.zeta_mode, derive_seed(g.seed, 1));
  const ModelSpec spec = ModelSpec::tilted(PotentialSpec::psos(o.p, o.beta), dom, o.tilt[0], o.tilt[1], zeta);
  SiteVector avg(dom.size(), 1.0 / static_cast<double>(dom.size()));
  ChainConfig cc;
  cc.sweeps = o.sweeps;
  cc.burn_in = o.burn_in;
  cc.batches = o.batches;
  cc.seed = g.seed;
  const ChainStats st = run_chain(spec, {{"mean_height", avg}}, cc);
  Table t{{"N", "observable", "mean", "var", "se", "tau_int"}, {}};
  for (const auto& e : st.observables) t.add({static_cast<long long>(o.box), e.name, e.mean, e.var, e.se_var, e.tau_int});
  const fs::path path = o.out.empty() ? fs::path(g.out_dir) / (g.fmt() == OutputFormat::Csv ? "simulate.csv" : "simulate.json") : fs::path(o.out);
  write_text(path, g.fmt() == OutputFormat::Csv ? to_csv(t) : to_json(t).dump(2) + "\n");
  std::cout << to_csv(t);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks and simulations for integer-valued interface models"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--format", g.format, "Table format")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));

  int rc = 0;
  auto guard = [&](auto&& fn) {
    return [&rc, fn] {
      try {
        rc = fn();
      } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        rc = 2;
      } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        rc = 2;
      } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        rc = 2;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        rc = 1;
      }
    };
  };

  GreenOpts go;
  auto* green = app.add_subcommand("green", "Solve the Dirichlet problem on a box or site list");
  green->add_option("--box", go.box, "Box half-width N");
  green->add_option("--domain", go.domain, "JSON list of [x,y] sites")->check(CLI::ExistingFile);
  green->add_option("--f", go.f, "JSON list of right-hand-side values in site order (default: delta at the origin)")->check(CLI::ExistingFile);
  green->add_option("--tol", go.tol, "Relative residual tolerance")->capture_default_str();
  green->callback(guard([&] { return cmd_green(g, go); }));

  PotentialOpts po;
  auto* pot = app.add_subcommand("verify-potential", "Fit the analytic-extension constants and check integer interpolation");
  pot->add_option("--p", po.p)->capture_default_str();
  pot->add_option("--beta", po.beta)->capture_default_str();
  pot->add_option("--grid-x", po.grid_x, "lo,hi,step")->delimiter(',')->expected(3)->capture_default_str();
  pot->add_option("--grid-a", po.grid_a, "Comma-separated shifts (default: fractions of the strip)")->delimiter(',');
  pot->add_option("--tol", po.tol, "Interpolation tolerance")->capture_default_str();
  pot->callback(guard([&] { return cmd_verify_potential(g, po); }));

  ChargesOpts co;
  auto* ch = app.add_subcommand("charges", "Scales, covers and separated squares of one charge density");
  ch->add_option("--rho", co.rho, "JSON list of [x,y,q]")->required()->check(CLI::ExistingFile);
  ch->add_option("--box", co.box, "Box half-width")->capture_default_str();
  ch->add_option("--k", co.k, "Report a single scale");
  ch->add_option("--M", co.M)->capture_default_str();
  ch->add_option("--alpha", co.alpha)->capture_default_str();
  ch->callback(guard([&] { return cmd_charges(g, co); }));

  SpinwaveParams sp;
  auto* sw = app.add_subcommand("spinwave-check", "Build spin waves for random ensembles and check their properties");
  sw->add_option("--ensembles", sp.ensembles)->capture_default_str();
  sw->add_option("--M", sp.M)->capture_default_str();
  sw->add_option("--alpha", sp.alpha)->capture_default_str();
  sw->add_option("--gamma", sp.gamma)->capture_default_str();
  sw->add_option("--beta", sp.beta)->capture_default_str();
  sw->add_option("--p", sp.p)->capture_default_str();
  sw->add_option("--c-beta", sp.c_beta, "Override the fitted c_beta");
  sw->add_flag("!--no-heatmap", sp.heatmap, "Skip the SVG heat map");
  sw->callback(guard([&] {
    sp.seed = g.seed;
    return emit(g, spinwave_check(sp));
  }));

  TaylorParams tp;
  auto* ty = app.add_subcommand("taylor-check", "Random Taylor-remainder instances");
  ty->add_option("--instances", tp.instances)->capture_default_str();
  ty->add_option("--p", tp.p)->capture_default_str();
  ty->add_option("--beta", tp.beta)->capture_default_str();
  ty->add_option("--gamma", tp.gamma)->capture_default_str();
  ty->callback(guard([&] {
    tp.seed = g.seed;
    return emit(g, taylor_batch(tp));
  }));

  SimOpts so;
  auto* sim = app.add_subcommand("simulate", "Heat-bath run on one box");
  sim->add_option("--p", so.p)->capture_default_str();
  sim->add_option("--beta", so.beta)->capture_default_str();
  sim->add_option("--box", so.box, "Box half-width N")->capture_default_str();
  sim->add_option("--tilt", so.tilt, "ux,uy")->delimiter(',')->expected(2)->capture_default_str();
  sim->add_option("--zeta-mode", so.zeta_mode)->check(CLI::IsMember({"zero", "random", "antisym"}))->capture_default_str();
  sim->add_option("--sweeps", so.sweeps)->capture_default_str();
  sim->add_option("--burn-in", so.burn_in)->capture_default_str();
  sim->add_option("--batches", so.batches)->capture_default_str();
  sim->add_option("--out", so.out, "Output table path (default: <out-dir>/simulate.<format>)");
  sim->callback(guard([&] { return cmd_simulate(g, so); }));

  GrowthParams gp;
  std::vector<double> gtilt{0.0, 0.0};
  std::string expect = "none";
  auto* gr = app.add_subcommand("growth", "Variance of phi_0 against ln N with the Green-function benchmark");
  gr->add_option("--p", gp.config.p)->capture_default_str();
  gr->add_option("--beta", gp.config.beta)->capture_default_str();
  gr->add_option("--tilt", gtilt, "ux,uy")->delimiter(',')->expected(2)->capture_default_str();
  gr->add_option("--N", gp.config.N_list, "Comma-separated box half-widths")->delimiter(',')->capture_default_str();
  gr->add_option("--sweeps", gp.config.chain.sweeps)->capture_default_str();
  gr->add_option("--burn-in", gp.config.chain.burn_in)->capture_default_str();
  gr->add_option("--batches", gp.config.chain.batches)->capture_default_str();
  gr->add_option("--expect", expect)->check(CLI::IsMember({"none", "delocalized", "localized"}))->capture_default_str();
  gr->add_option("--n-se", gp.n_se)->capture_default_str();
  gr->callback(guard([&] {
    gp.config.ux = gtilt[0];
    gp.config.uy = gtilt[1];
    gp.config.chain.seed = g.seed;
    gp.config.threads = g.threads;
    gp.expect = detail::parse_expectation(expect);
    return emit(g, growth_check(gp));
  }));

  std::string which;
  CombParams cmb;
  TranslateParams trn;
  BridgeParams brg;
  auto* lim = app.add_subcommand("limits-check", "Comb convergence, complex translation or regularization bridge");
  lim->add_option("--which", which)->required()->check(CLI::IsMember({"comb", "translate", "bridge"}));
  lim->add_option("--N", cmb.N_list, "comb: doubling schedule")->delimiter(',');
  lim->add_option("--p", trn.p, "comb/translate: exponent")->capture_default_str();
  lim->add_option("--beta", trn.beta, "comb/translate: inverse temperature")->capture_default_str();
  lim->add_option("--R", trn.quad.R, "translate: truncation box")->capture_default_str();
  lim->add_option("--eps", brg.eps_list, "bridge: regularization schedule")->delimiter(',');
  lim->callback(guard([&] {
    if (which == "comb") {
      cmb.p = trn.p;
      cmb.beta = trn.beta;
      return emit(g, comb_check(cmb));
    }
    if (which == "translate") return emit(g, translate_check(trn));
    return emit(g, bridge_check(brg));
  }));

  std::string config;
  auto* suite = app.add_subcommand("suite", "Run a JSON-configured batch of checks and write a manifest");
  suite->add_option("config,--config", config, "Suite configuration")->required();
  suite->callback(guard([&] {
    std::optional<std::uint64_t> seed;
    if (app.count("--seed")) seed = g.seed;
    const SuiteConfig cfg = parse_suite(read_json_file(config), seed);
    const SuiteOutcome out = run_suite(cfg, g.out_dir, g.fmt(), g.threads);
    std::cout << "suite: " << out.manifest["passed"] << " passed, " << out.manifest["failed"] << " failed; manifest at "
              << (fs::path(g.out_dir) / "manifest.json").string() << "\n";
    return out.exit_code;
  }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return rc;
}
