#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "filippov/integrator.hpp"
#include "filippov/report.hpp"
#include "filippov/scenario.hpp"
#include "filippov/svg.hpp"
#include "systems.hpp"

using namespace filippov;
using namespace filippov::test_support;

namespace {

const std::string kScenarios = FILIPPOV_SCENARIO_DIR;
const std::string kFixtures = FILIPPOV_FIXTURE_DIR;

std::string tmp_path(const std::string& name) {
  const char* dir = std::getenv("TMPDIR");
  return std::string(dir ? dir : "/tmp") + "/filippov_test_cli_" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Runs the CLI with stdout sent to `out` (if given), stderr discarded.
int cli(const std::string& args, const std::string& out = "") {
  const std::string cmd = std::string(FILIPPOV_CLI_PATH) + " " + args + " > " + (out.empty() ? "/dev/null" : out) +
                          " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

std::string config_error(const std::string& path) {
  try {
    load_scenario(path);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadScenario, SlidingBeltShipped) {
  const auto s = load_scenario(kScenarios + "/sliding_belt_torus.json");
  EXPECT_EQ(s.name, "sliding_belt_torus");
  EXPECT_EQ(s.system.curves().size(), 1u);
  EXPECT_EQ(s.system.regions().size(), 2u);
  EXPECT_TRUE(s.domain.periodic());
}

TEST(LoadScenario, EveryShippedScenarioLoads) {
  for (const char* name : {"chaotic_torus", "sliding_belt_torus", "rotation_plane", "relay_plane"}) {
    EXPECT_NO_THROW(load_scenario(kScenarios + "/" + name + ".json")) << name;
  }
}

TEST(LoadScenario, ChaoticMatchesTestSystem) {
  const auto s = load_scenario(kScenarios + "/chaotic_torus.json");
  const auto ref = chaotic_torus();
  for (const Vec2 p : {Vec2{0.1, 0.2}, Vec2{0.7, 0.3}, Vec2{0.4, 0.8}, Vec2{0.9, 0.6}}) {
    const Vec2 a = std::get<Vec2>(s.system.field_at(p)), b = std::get<Vec2>(ref.field_at(p));
    EXPECT_DOUBLE_EQ(a.x, b.x);
    EXPECT_DOUBLE_EQ(a.y, b.y);
  }
  EXPECT_EQ(s.diagnostics.seed, 7u);
  EXPECT_EQ(s.diagnostics.probe.dwell_grid.size(), 33u);
}

TEST(LoadScenario, OverlappingCurvesNameBothIds) {
  const std::string msg = config_error(kFixtures + "/overlapping_curves.json");
  EXPECT_NE(msg.find("overlap"), std::string::npos) << msg;
  EXPECT_NE(msg.find('4'), std::string::npos) << msg;
  EXPECT_NE(msg.find('9'), std::string::npos) << msg;
}

TEST(LoadScenario, AbsInFieldIsExpressionError) {
  const std::string msg = config_error(kFixtures + "/abs_field.json");
  EXPECT_NE(msg.find("regions[1].field[0]: expression error"), std::string::npos) << msg;
  EXPECT_NE(msg.find("abs"), std::string::npos) << msg;
}

TEST(LoadScenario, FieldErrorsNamePath) {
  auto doc = nlohmann::json::parse(slurp(kScenarios + "/sliding_belt_torus.json"));
  doc["curves"][0].erase("negative_region");
  try {
    parse_scenario(doc);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("curves[0].negative_region"), std::string::npos) << e.what();
  }
  doc = nlohmann::json::parse(slurp(kScenarios + "/sliding_belt_torus.json"));
  doc["domain"]["kind"] = "sphere";
  EXPECT_THROW(parse_scenario(doc), ConfigError);
  EXPECT_THROW(load_scenario(kFixtures + "/missing.json"), ConfigError);
}

TEST(Portrait, EmptyDataIsLegendOnly) {
  const std::string svg = render_portrait(box(1), {}, {});
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("xmlns=\"http://www.w3.org/2000/svg\""), std::string::npos);
  EXPECT_NE(svg.find("version=\"1.1\""), std::string::npos);
  EXPECT_EQ(count(svg, "<path"), 0u);
  EXPECT_EQ(count(svg, "class=\"tangency\""), 0u);
  EXPECT_EQ(count(svg, "class=\"legend\""), 1u);
  EXPECT_EQ(count(svg, "<text"), 6u);
}

TEST(Portrait, RegularArcEndpointsMapAffinely) {
  const auto sys = smooth_plane("1", "0");
  const Integrator in(sys);
  const Orbit o = in.integrate({-1.0, 0.5}, 1.0, Direction::forward, BranchPolicy::exit_up());
  PortraitOptions opt;
  opt.width = 400;
  opt.height = 200;
  opt.margin = 20;
  const std::string svg = render_portrait(sys.domain(), {}, {o}, opt);
  EXPECT_EQ(count(svg, "<path"), 1u);
  // Domain [-2,2]^2 onto [20,380] x [20,180], y flipped.
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, std::regex("d=\"M([0-9.]+),([0-9.]+) .*L([0-9.]+),([0-9.]+)\"")));
  EXPECT_NEAR(std::stod(m[1]), 20.0 + 360.0 * (1.0 / 4.0), 1e-3);
  EXPECT_NEAR(std::stod(m[2]), 20.0 + 160.0 * (1.5 / 4.0), 1e-3);
  EXPECT_NEAR(std::stod(m[3]), 20.0 + 360.0 * (2.0 / 4.0), 1e-3);
  EXPECT_NEAR(std::stod(m[4]), 20.0 + 160.0 * (1.5 / 4.0), 1e-3);
}

TEST(Portrait, SlidingArcAndFold) {
  // L1 = x, L2 = 1: sliding for x < 0, crossing for x > 0, fold of Y1 at 0.
  const auto sys = half_plane("1", "x", "1", "1");
  const std::string svg = render_portrait(sys.domain(), {sigma_decomposition(sys, 0, 2000)}, {});
  EXPECT_EQ(count(svg, "class=\"arc-sliding\""), 1u);
  EXPECT_EQ(count(svg, "class=\"arc-crossing\""), 1u);
  EXPECT_EQ(count(svg, "class=\"arc-escaping\""), 0u);
  EXPECT_EQ(count(svg, "class=\"tangency\""), 1u);
  EXPECT_EQ(count(svg, "class=\"pseudo-equilibrium\""), 0u);
  const auto at = svg.find("class=\"arc-sliding\"");
  EXPECT_NE(svg.substr(at, 120).find("stroke-width=\"4\""), std::string::npos);
}

TEST(Portrait, EscapingArcIsDashed) {
  const auto sys = half_plane("1", "1", "1", "-1");
  const std::string svg = render_portrait(sys.domain(), {sigma_decomposition(sys, 0, 2000)}, {});
  ASSERT_EQ(count(svg, "class=\"arc-escaping\""), 1u);
  const auto at = svg.find("class=\"arc-escaping\"");
  EXPECT_NE(svg.substr(at, 160).find("stroke-dasharray"), std::string::npos);
}

TEST(Cli, ClassifyWritesDecomposition) {
  const std::string out = tmp_path("classify.json");
  ASSERT_EQ(cli("classify --scenario " + kScenarios + "/chaotic_torus.json --curve 0 --resolution 2000", out), 0);
  const auto j = nlohmann::json::parse(slurp(out));
  ASSERT_EQ(j["curves"].size(), 1u);
  EXPECT_EQ(j["curves"][0]["arcs"].size(), 4u);
  EXPECT_EQ(j["curves"][0]["tangencies"].size(), 4u);
}

TEST(Cli, OrbitCsvIsDeterministic) {
  const std::string a = tmp_path("orbit_a.csv"), b = tmp_path("orbit_b.csv");
  const std::string args = "orbit --scenario " + kScenarios +
                           "/chaotic_torus.json --start 0.1,0.9 --horizon 50 --policy slide_until_tangency --csv ";
  ASSERT_EQ(cli(args + a), 0);
  ASSERT_EQ(cli(args + b), 0);
  const std::string csv = slurp(a);
  EXPECT_EQ(csv.rfind("t,x,y,segment_kind,segment_index\n", 0), 0u);
  EXPECT_GT(count(csv, "\n"), 10u);
  EXPECT_EQ(csv, slurp(b));
}

TEST(Cli, ErrorsExitTwo) {
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("orbit --scenario " + kScenarios + "/chaotic_torus.json --start 0.1,0.2 --bogus 1"), 2);
  EXPECT_EQ(cli("orbit --scenario " + kScenarios + "/chaotic_torus.json --start 0.1"), 2);
  EXPECT_EQ(cli("orbit --scenario " + kScenarios + "/chaotic_torus.json --start 0.1,0.2 --policy sideways"), 2);
  EXPECT_EQ(cli("classify --scenario " + kFixtures + "/abs_field.json"), 2);
  EXPECT_EQ(cli("classify --scenario " + kFixtures + "/overlapping_curves.json"), 2);
  EXPECT_EQ(cli("classify --scenario " + kFixtures + "/missing.json"), 2);
}

TEST(Cli, PortraitCountsMatchDecomposition) {
  const std::string svg_path = tmp_path("portrait.svg"), json_path = tmp_path("portrait.json");
  ASSERT_EQ(cli("portrait --scenario " + kScenarios + "/chaotic_torus.json --out " + svg_path), 0);
  ASSERT_EQ(cli("classify --scenario " + kScenarios + "/chaotic_torus.json", json_path), 0);
  const std::string svg = slurp(svg_path);
  const auto j = nlohmann::json::parse(slurp(json_path));
  std::size_t arcs[3] = {0, 0, 0}, tangencies = 0, pseudo = 0;
  for (const auto& c : j["curves"]) {
    for (const auto& a : c["arcs"]) {
      const std::string k = a["kind"];
      ++arcs[k == "sliding" ? 0 : (k == "escaping" ? 1 : 2)];
    }
    tangencies += c["tangencies"].size();
    pseudo += c["pseudo_equilibria"].size();
  }
  EXPECT_EQ(count(svg, "class=\"arc-sliding\""), arcs[0]);
  EXPECT_EQ(count(svg, "class=\"arc-escaping\""), arcs[1]);
  EXPECT_EQ(count(svg, "class=\"arc-crossing\""), arcs[2]);
  EXPECT_EQ(count(svg, "class=\"tangency\""), tangencies);
  EXPECT_EQ(count(svg, "class=\"pseudo-equilibrium\""), pseudo);
  EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
}

TEST(Cli, SaturateCsvRows) {
  const std::string out = tmp_path("coverage.csv");
  ASSERT_EQ(cli("saturate --scenario " + kScenarios + "/sliding_belt_torus.json --grid 8 --horizon 5 --out " + out), 0);
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.rfind("j,i,x_center,y_center,hit\n", 0), 0u);
  EXPECT_EQ(count(csv, "\n"), 65u);
}

TEST(Cli, CyclesOnSlidingBelt) {
  const std::string dot = tmp_path("graph.dot"), out = tmp_path("cycles.json");
  ASSERT_EQ(cli("cycles --scenario " + kScenarios + "/sliding_belt_torus.json --dot " + dot + " --out " + out), 0);
  EXPECT_EQ(slurp(dot).rfind("digraph", 0), 0u);
  const auto j = nlohmann::json::parse(slurp(out));
  ASSERT_FALSE(j["closed_orbits"].empty());
  EXPECT_EQ(j["closed_orbits"][0]["status"], "found");
  EXPECT_NEAR(j["closed_orbits"][0]["period"].get<double>(), 1.0, 1e-6);
}

TEST(Cli, DiagnoseRotationExitsOne) {
  const std::string out = tmp_path("rotation.json");
  EXPECT_EQ(cli("diagnose --scenario " + kScenarios + "/rotation_plane.json --seed 3 --out " + out), 1);
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["verdict"], "not_chaotic");
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
}

TEST(Cli, DiagnoseChaoticExitsZero) {
  const std::string out = tmp_path("chaotic.json");
  EXPECT_EQ(cli("diagnose --scenario " + kScenarios + "/chaotic_torus.json --seed 7 --out " + out), 0);
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["verdict"], "chaotic");
  EXPECT_EQ(j["config"]["seed"], 7);
}
