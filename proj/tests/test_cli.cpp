#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef SOSDELOC_CLI_PATH
#error "SOSDELOC_CLI_PATH must point at the CLI binary"
#endif

#ifndef SOSDELOC_SOURCE_DIR
#error "SOSDELOC_SOURCE_DIR must point at the source tree"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("sosdeloc_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + SOSDELOC_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path write_config(const std::string& name, const json& j) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  static std::string config(const std::string& name) { return (fs::path(SOSDELOC_SOURCE_DIR) / "configs" / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, EmptySuiteSucceeds) {
  const CliRun r = run("--out-dir \"" + (dir_ / "o").string() + "\" suite " + config("empty_suite.json"));
  EXPECT_EQ(r.code, 0) << r.err;
  const json m = json::parse(slurp(dir_ / "o" / "manifest.json"));
  EXPECT_TRUE(m.at("checks").empty());
  EXPECT_EQ(m.at("failed"), 0);
}

TEST_F(Cli, PotentialAndChargesSuitePasses) {
  const fs::path o = dir_ / "o";
  const CliRun r = run("--out-dir \"" + o.string() + "\" --format json suite " + config("potential_charges.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = json::parse(slurp(o / "manifest.json"));
  EXPECT_EQ(m.at("checks").size(), 3u);
  EXPECT_EQ(m.at("failed"), 0);
  EXPECT_EQ(m.at("seed"), 20240601);
  EXPECT_TRUE(m.at("constants").contains("potential_p1"));
  for (const auto& c : m.at("checks"))
    for (const auto& a : c.at("artifacts")) EXPECT_TRUE(fs::exists(o / a.get<std::string>())) << a;
}

TEST_F(Cli, OutOfRegimeCheckFailsWithItsName) {
  const CliRun r = run("--out-dir \"" + (dir_ / "o").string() + "\" suite " + config("out_of_regime.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("spinwave_gamma_too_large"), std::string::npos) << r.err;
  EXPECT_EQ(r.err.find("charges_ok"), std::string::npos) << r.err;
}

TEST_F(Cli, ConfigErrorsExitWithTwo) {
  const fs::path unknown = write_config("unknown.json", {{"seed", 1}, {"checks", json::array()}, {"colour", "red"}});
  EXPECT_EQ(run("--out-dir \"" + (dir_ / "o").string() + "\" suite \"" + unknown.string() + "\"").code, 2);
  const fs::path unknown_param = write_config(
      "unknown_param.json", {{"seed", 1}, {"checks", {{{"kind", "charges"}, {"params", {{"sampels", 3}}}}}}});
  EXPECT_EQ(run("--out-dir \"" + (dir_ / "o").string() + "\" suite \"" + unknown_param.string() + "\"").code, 2);
  const fs::path seedless = write_config("seedless.json", {{"checks", {{{"kind", "charges"}, {"params", {{"samples", 3}}}}}}});
  EXPECT_EQ(run("--out-dir \"" + (dir_ / "o").string() + "\" suite \"" + seedless.string() + "\"").code, 2);
  const fs::path bad_kind = write_config("bad_kind.json", {{"seed", 1}, {"checks", {{{"kind", "nonsense"}}}}});
  EXPECT_EQ(run("--out-dir \"" + (dir_ / "o").string() + "\" suite \"" + bad_kind.string() + "\"").code, 2);
  EXPECT_EQ(run("suite \"" + (dir_ / "missing.json").string() + "\"").code, 2);
  EXPECT_EQ(run("--format xml green --box 1").code, 2);
}

TEST_F(Cli, SuiteOutputIsByteIdenticalForAFixedSeed) {
  const fs::path cfg = write_config("det.json", {{"seed", 5},
                                                 {"checks",
                                                  {{{"name", "c"}, {"kind", "charges"}, {"params", {{"samples", 30}}}},
                                                   {{"name", "s"}, {"kind", "spinwave"}, {"params", {{"ensembles", 2}}}}}}});
  for (const char* d : {"a", "b"}) ASSERT_LE(run("--out-dir \"" + (dir_ / d).string() + "\" suite \"" + cfg.string() + "\"").code, 1);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_ / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir_ / "a");
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 1u);
  // a different master seed changes the sampled ensembles
  ASSERT_LE(run("--seed 6 --out-dir \"" + (dir_ / "c").string() + "\" suite \"" + cfg.string() + "\"").code, 1);
  EXPECT_NE(slurp(dir_ / "a" / "manifest.json"), slurp(dir_ / "c" / "manifest.json"));
}

TEST_F(Cli, GreenOnTheThreeByThreeBox) {
  const CliRun r = run("--out-dir \"" + (dir_ / "o").string() + "\" green --box 1");
  ASSERT_EQ(r.code, 0) << r.err;
  const json g = json::parse(slurp(dir_ / "o" / "green.json"));
  EXPECT_NEAR(g.at("quadratic_form").get<double>(), 0.375, 1e-12);
  ASSERT_EQ(g.at("sigma").size(), 9u);
  EXPECT_NEAR(g.at("sigma")[4].get<double>(), 0.375, 1e-12);
  EXPECT_NEAR(g.at("sigma")[0].get<double>(), 0.0625, 1e-12);
}

TEST_F(Cli, TableFormatFollowsTheFlag) {
  const std::string common = "verify-potential --p 1 --beta 0.5 --grid-x -2,2,1 --grid-a 0,0.1";
  ASSERT_EQ(run("--out-dir \"" + (dir_ / "csv").string() + "\" --format csv " + common).code, 0);
  ASSERT_EQ(run("--out-dir \"" + (dir_ / "json").string() + "\" --format json " + common).code, 0);
  const std::string csv = slurp(dir_ / "csv" / "potential_samples.csv");
  EXPECT_EQ(csv.rfind("x,a,", 0), 0u) << csv.substr(0, 40);
  const json j = json::parse(slurp(dir_ / "json" / "potential_samples.json"));
  EXPECT_FALSE(j.empty());
  const json rep = json::parse(slurp(dir_ / "json" / "potential_report.json"));
  EXPECT_TRUE(rep.at("pass").get<bool>());
}

TEST_F(Cli, ChargesSubcommandReportsScales) {
  const fs::path rho = write_config("dipole.json", json::array({{0, 0, 1}, {1, 0, -1}}));
  const CliRun r = run("--out-dir \"" + (dir_ / "o").string() + "\" charges --rho \"" + rho.string() + "\" --box 10");
  ASSERT_EQ(r.code, 0) << r.err;
  const json c = json::parse(slurp(dir_ / "o" / "charges.json"));
  EXPECT_EQ(c.at("d"), 1);
  EXPECT_TRUE(c.at("neutral").get<bool>());
}
