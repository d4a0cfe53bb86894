#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "checks.hpp"
#include "io.hpp"

namespace sosdeloc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads an object field by field and rejects whatever was not asked for.
class StrictObject {
 public:
  StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    if (!j_.contains(key)) return false;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
    return true;
  }

  template <class T>
  bool get(const std::string& key, std::optional<T>& out) {
    T v{};
    if (!get(key, v)) return false;
    out = v;
    return true;
  }

  template <class T>
  T require(const std::string& key) {
    T v{};
    if (!get(key, v)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return v;
  }

  const json* sub(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

enum class CheckKind { Green, Potential, Regime, Charges, Spinwave, Activity, Taylor, Comb, Translate, Bridge, Sampler, Growth };

inline CheckKind parse_kind(const std::string& s) {
  static const std::vector<std::pair<std::string, CheckKind>> kinds{
      {"green", CheckKind::Green},         {"potential", CheckKind::Potential}, {"regime", CheckKind::Regime},
      {"charges", CheckKind::Charges},     {"spinwave", CheckKind::Spinwave},   {"activity", CheckKind::Activity},
      {"taylor", CheckKind::Taylor},       {"comb", CheckKind::Comb},           {"translate", CheckKind::Translate},
      {"bridge", CheckKind::Bridge},       {"sampler", CheckKind::Sampler},     {"growth", CheckKind::Growth}};
  for (const auto& [name, k] : kinds)
    if (name == s) return k;
  throw ConfigError("unknown check kind '" + s + "'");
}

struct SuiteItem {
  std::string name;
  std::string kind_name;
  CheckKind kind;
  json params = json::object();
  std::uint64_t seed = 0;
};

struct SuiteConfig {
  std::optional<std::uint64_t> seed;
  std::vector<SuiteItem> items;
};

inline SuiteConfig parse_suite(const json& j, std::optional<std::uint64_t> seed_override = std::nullopt) {
  SuiteConfig cfg;
  StrictObject top(j, "config");
  top.get("seed", cfg.seed);
  if (seed_override) cfg.seed = seed_override;
  const json* checks = top.sub("checks");
  top.finish();
  if (!checks) throw ConfigError("config: missing required key 'checks'");
  if (!checks->is_array()) throw ConfigError("config.checks: expected an array");
  if (!checks->empty() && !cfg.seed) throw ConfigError("config: an explicit 'seed' is required when checks are present");
  std::set<std::string> names;
  for (std::size_t i = 0; i < checks->size(); ++i) {
    const std::string where = "config.checks[" + std::to_string(i) + "]";
    StrictObject c((*checks)[i], where);
    SuiteItem it;
    it.kind_name = c.require<std::string>("kind");
    it.kind = parse_kind(it.kind_name);
    if (!c.get("name", it.name)) it.name = it.kind_name + "_" + std::to_string(i);
    if (it.name.empty() || it.name.find_first_of("/\\") != std::string::npos || it.name == "." || it.name == "..")
      throw ConfigError(where + ": invalid check name '" + it.name + "'");
    if (!names.insert(it.name).second) throw ConfigError(where + ": duplicate check name '" + it.name + "'");
    if (const json* p = c.sub("params")) it.params = *p;
    c.finish();
    it.seed = derive_seed(*cfg.seed, i);
    cfg.items.push_back(std::move(it));
  }
  return cfg;
}

// ---------------------------------------------------------------- parameter decoding

namespace detail {

inline std::vector<std::vector<double>> shift_list(const json& j, const std::string& where) {
  try {
    return j.get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline GrowthExpectation parse_expectation(const std::string& s) {
  if (s == "none") return GrowthExpectation::None;
  if (s == "delocalized") return GrowthExpectation::Delocalized;
  if (s == "localized") return GrowthExpectation::Localized;
  throw ConfigError("growth.expect must be one of none, delocalized, localized");
}

}  // namespace detail

// Runs one configured check; parameter problems surface as ConfigError.
inline CheckResult run_item(const SuiteItem& it, unsigned threads) {
  StrictObject o(it.params, it.name + ".params");
  auto finish = [&](auto&& fn) {
    o.finish();
    try {
      return fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(it.name + ": " + e.what());
    }
  };
  switch (it.kind) {
    case CheckKind::Green: {
      GreenParams p;
      o.get("N_list", p.N_list);
      o.get("tol", p.tol);
      o.get("slope_rel_tol", p.slope_rel_tol);
      return finish([&] { return green_check(p); });
    }
    case CheckKind::Potential: {
      PotentialParams p;
      o.get("p", p.p);
      o.get("beta", p.beta);
      o.get("series_window", p.series_window);
      o.get("interp_nmax", p.interp_nmax);
      o.get("interp_tol", p.interp_tol);
      o.get("a_max", p.a_max);
      o.get("keep_samples", p.keep_samples);
      return finish([&] { return potential_check(p); });
    }
    case CheckKind::Regime: {
      RegimeParams p;
      o.get("p", p.p);
      o.get("beta", p.beta);
      o.get("c", p.c);
      o.get("C3", p.C3);
      o.get("C4", p.C4);
      o.get("a_max", p.a_max);
      return finish([&] { return regime_check(p); });
    }
    case CheckKind::Charges: {
      ChargesParams p;
      p.seed = it.seed;
      o.get("samples", p.samples);
      o.get("box", p.box);
      o.get("max_points", p.max_points);
      o.get("window", p.window);
      o.get("max_abs", p.max_abs);
      o.get("M", p.M);
      o.get("alpha", p.alpha);
      return finish([&] { return charges_check(p); });
    }
    case CheckKind::Spinwave: {
      SpinwaveParams p;
      p.seed = it.seed;
      o.get("ensembles", p.ensembles);
      o.get("boxes", p.boxes);
      o.get("size_budget", p.size_budget);
      o.get("M", p.M);
      o.get("alpha", p.alpha);
      o.get("p", p.p);
      o.get("beta", p.beta);
      o.get("gamma", p.gamma);
      o.get("c_beta", p.c_beta);
      o.get("heatmap", p.heatmap);
      return finish([&] { return spinwave_check(p); });
    }
    case CheckKind::Activity: {
      ActivityParams p;
      p.seed = it.seed;
      o.get("ensembles", p.ensembles);
      o.get("box", p.box);
      o.get("size_budget", p.size_budget);
      o.get("M", p.M);
      o.get("alpha", p.alpha);
      o.get("p", p.p);
      o.get("beta", p.beta);
      o.get("gamma", p.gamma);
      o.get("C3", p.C3);
      return finish([&] { return activity_check(p); });
    }
    case CheckKind::Taylor: {
      TaylorParams p;
      p.seed = it.seed;
      o.get("instances", p.instances);
      o.get("p", p.p);
      o.get("beta", p.beta);
      o.get("gamma", p.gamma);
      o.get("box", p.box);
      o.get("M", p.M);
      o.get("phi_range", p.phi_range);
      o.get("sigma_range", p.sigma_range);
      return finish([&] { return taylor_batch(p); });
    }
    case CheckKind::Comb: {
      CombParams p;
      o.get("N_list", p.N_list);
      o.get("p", p.p);
      o.get("beta", p.beta);
      o.get("gaussian_tol", p.gaussian_tol);
      return finish([&] { return comb_check(p); });
    }
    case CheckKind::Translate: {
      TranslateParams p;
      o.get("p", p.p);
      o.get("beta", p.beta);
      if (const json* s = o.sub("shifts")) p.shifts = detail::shift_list(*s, it.name + ".params.shifts");
      o.get("R", p.quad.R);
      o.get("panel", p.quad.panel);
      o.get("rel_tol", p.quad.rel_tol);
      return finish([&] { return translate_check(p); });
    }
    case CheckKind::Bridge: {
      BridgeParams p;
      o.get("eps_list", p.eps_list);
      return finish([&] { return bridge_check(p); });
    }
    case CheckKind::Sampler: {
      SamplerOracleParams p;
      p.seed = it.seed;
      o.get("sweeps", p.sweeps);
      o.get("burn_in", p.burn_in);
      o.get("n_se", p.n_se);
      return finish([&] { return sampler_oracle_check(p); });
    }
    case CheckKind::Growth: {
      GrowthParams p;
      p.config.chain.seed = it.seed;
      p.config.threads = threads;
      o.get("p", p.config.p);
      o.get("beta", p.config.beta);
      o.get("ux", p.config.ux);
      o.get("uy", p.config.uy);
      o.get("N_list", p.config.N_list);
      o.get("sweeps", p.config.chain.sweeps);
      o.get("burn_in", p.config.chain.burn_in);
      o.get("batches", p.config.chain.batches);
      std::string expect = "none";
      o.get("expect", expect);
      p.expect = detail::parse_expectation(expect);
      o.get("n_se", p.n_se);
      return finish([&] { return growth_check(p); });
    }
  }
  throw std::logic_error("unhandled check kind");
}

// ---------------------------------------------------------------- outputs

inline std::vector<std::string> write_artifacts(const std::filesystem::path& dir, const std::string& prefix, const CheckResult& r,
                                                OutputFormat fmt) {
  std::vector<std::string> files;
  for (const auto& [stem, table] : r.tables) files.push_back(write_table(dir, prefix + stem, table, fmt).filename().string());
  for (const auto& [stem, svg] : r.figures) {
    write_text(dir / (prefix + stem + ".svg"), svg);
    files.push_back(prefix + stem + ".svg");
  }
  return files;
}

inline json result_json(const std::string& name, const CheckResult& r) {
  json j = {{"name", name}, {"kind", r.kind}, {"pass", r.pass}, {"failures", r.failures}, {"summary", r.summary}};
  json c = json::object();
  for (const auto& [k, v] : r.constants) c[k] = v;
  j["constants"] = c;
  return j;
}

struct SuiteOutcome {
  int exit_code = 0;
  json manifest;
};

// Executes every item on a pool of `threads` workers pulling from a shared counter. Artifacts land
// in <out_dir>/<item name>/; the manifest is assembled afterwards in configuration order.
inline SuiteOutcome run_suite(const SuiteConfig& cfg, const std::filesystem::path& out_dir, OutputFormat fmt, unsigned threads,
                              std::ostream& err = std::cerr) {
  const std::size_t n = cfg.items.size();
  std::vector<CheckResult> results(n);
  std::vector<std::vector<std::string>> files(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        results[i] = run_item(cfg.items[i], 1);
        files[i] = write_artifacts(out_dir / cfg.items[i].name, "", results[i], fmt);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned T = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < T; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < n; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);  // configuration or IO trouble outranks results

  SuiteOutcome out;
  json checks = json::array(), constants = json::object();
  std::size_t failed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    json j = result_json(cfg.items[i].name, results[i]);
    json arts = json::array();
    for (const auto& f : files[i]) arts.push_back(cfg.items[i].name + "/" + f);
    j["artifacts"] = arts;
    checks.push_back(std::move(j));
    if (!results[i].constants.empty()) {
      json c = json::object();
      for (const auto& [k, v] : results[i].constants) c[k] = v;
      constants[cfg.items[i].name] = c;
    }
    if (!results[i].pass) {
      ++failed;
      err << "check '" << cfg.items[i].name << "' (" << results[i].kind << ") FAILED";
      for (const auto& f : results[i].failures) err << "\n  " << f;
      err << "\n";
    }
  }
  out.manifest = {{"checks", checks}, {"constants", constants}, {"passed", n - failed}, {"failed", failed}};
  if (cfg.seed) out.manifest["seed"] = *cfg.seed;
  write_text(out_dir / "manifest.json", out.manifest.dump(2) + "\n");
  out.exit_code = failed ? 1 : 0;
  return out;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace sosdeloc
