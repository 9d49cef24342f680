#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "filippov/coverage.hpp"
#include "filippov/integrator.hpp"
#include "filippov/orbit_io.hpp"
#include "filippov/report.hpp"
#include "filippov/scenario.hpp"
#include "filippov/segment_graph.hpp"
#include "filippov/sigma.hpp"
#include "filippov/svg.hpp"

namespace fp = filippov;

namespace {

// Exit codes: 0 success (or chaotic verdict), 1 negative result, 2 usage or
// input error.
constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kBadInput = 2;

int log_level() {
  const char* v = std::getenv("FILIPPOV_LOG");
  if (!v) return 0;
  const std::string s(v);
  if (s == "debug") return 2;
  if (s == "info") return 1;
  return 0;
}

void log(int level, const std::string& msg) {
  if (log_level() >= level) std::cerr << "[filippov] " << msg << '\n';
}

fp::Vec2 parse_point(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw fp::ConfigError("point '" + s + "': expected x,y");
  try {
    std::size_t a = 0, b = 0;
    const double x = std::stod(s.substr(0, comma), &a);
    const double y = std::stod(s.substr(comma + 1), &b);
    if (a != comma || b != s.size() - comma - 1) throw std::invalid_argument("trailing");
    return {x, y};
  } catch (const std::logic_error&) {
    throw fp::ConfigError("point '" + s + "': expected x,y");
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fp::ConfigError(path + ": cannot open for writing");
  out << content;
  if (!out) throw fp::ConfigError(path + ": write failed");
}

std::string dump(const fp::Json& j) { return j.dump(2) + "\n"; }

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_file(path, content);
    log(1, "wrote " + path);
  }
}

std::vector<int> selected_curves(const fp::FilippovSystem& sys, int curve) {
  std::vector<int> ids;
  for (const auto& c : sys.curves()) {
    if (curve < 0 || c.id == curve) ids.push_back(c.id);
  }
  if (curve >= 0 && ids.empty()) throw fp::ConfigError("--curve: no curve with id " + std::to_string(curve));
  return ids;
}

struct Common {
  std::string scenario;
  int resolution = 0;
};

fp::Scenario load(const Common& c) {
  log(1, "loading " + c.scenario);
  auto s = fp::load_scenario(c.scenario);
  if (c.resolution > 0) s.diagnostics.resolution = c.resolution;
  return s;
}

int run_classify(const Common& c, int curve, const std::vector<std::string>& points, const std::string& out) {
  const auto s = load(c);
  fp::Json j;
  j["scenario"] = s.name;
  if (points.empty()) {
    fp::Json decs = fp::Json::array();
    for (int id : selected_curves(s.system, curve)) {
      decs.push_back(fp::decomposition_json(fp::sigma_decomposition(s.system, id, s.diagnostics.resolution)));
    }
    j["curves"] = std::move(decs);
  } else {
    fp::Json pts = fp::Json::array();
    for (const auto& text : points) {
      const fp::Vec2 p = parse_point(text);
      fp::Json e;
      e["point"] = fp::to_json(p);
      fp::Json cls = fp::Json::array();
      for (int id : selected_curves(s.system, curve)) {
        const auto pc = fp::classify_point(s.system, id, p);
        cls.push_back({{"curve", id}, {"kind", fp::to_string(pc.kind)}, {"l1", pc.l1}, {"l2", pc.l2}});
      }
      e["classes"] = std::move(cls);
      pts.push_back(std::move(e));
    }
    j["points"] = std::move(pts);
  }
  emit(out, dump(j));
  return kOk;
}

fp::Direction parse_direction(const std::string& d) {
  if (d == "forward") return fp::Direction::forward;
  if (d == "backward") return fp::Direction::backward;
  throw fp::ConfigError("--direction: expected forward or backward");
}

int run_orbit(const Common& c, const std::string& start, double horizon, const std::string& policy,
              const std::string& direction, const std::string& csv, const std::string& json) {
  const auto s = load(c);
  const fp::Integrator in(s.system, fp::IntegratorOptions{.scan_resolution = s.diagnostics.resolution});
  const fp::Orbit o = in.integrate(parse_point(start), horizon, parse_direction(direction), fp::BranchPolicy::parse(policy));
  if (!csv.empty()) {
    std::ostringstream os;
    fp::write_orbit_csv(o, os);
    emit(csv, os.str());
  }
  fp::Json j = fp::orbit_summary_json(o);
  j["policy"] = policy;
  if (!json.empty() || csv.empty()) emit(json, dump(j));
  return kOk;
}

int run_portrait(const Common& c, const std::vector<std::string>& starts, double horizon, const std::string& policy,
                 const std::string& out) {
  const auto s = load(c);
  std::vector<fp::SigmaDecomposition> decs;
  for (const auto& cv : s.system.curves()) decs.push_back(fp::sigma_decomposition(s.system, cv.id, s.diagnostics.resolution));
  std::vector<fp::Orbit> orbits;
  if (!starts.empty()) {
    const fp::Integrator in(s.system, fp::IntegratorOptions{.scan_resolution = s.diagnostics.resolution});
    const auto pol = fp::BranchPolicy::parse(policy);
    for (const auto& p : starts) orbits.push_back(in.integrate(parse_point(p), horizon, fp::Direction::forward, pol));
  }
  emit(out, fp::render_portrait(s.system.domain(), decs, orbits));
  return kOk;
}

int run_saturate(const Common& c, int grid, double horizon, int per_arc, const std::string& out) {
  auto s = load(c);
  auto& d = s.diagnostics;
  if (grid > 0) d.grid = grid;
  if (horizon > 0) d.saturation_horizon = horizon;
  if (per_arc > 0) d.seeds_per_arc = per_arc;
  const fp::Integrator in(s.system, fp::IntegratorOptions{.scan_resolution = d.resolution});
  const auto seeds = fp::sigma_seeds(s.system, d.seeds_per_arc, d.include_escaping, d.resolution);
  if (seeds.empty()) throw fp::ConfigError("saturate: the scenario has no sliding or escaping arcs to seed from");
  std::vector<fp::BranchPolicy> policies;
  for (const auto& p : d.policies) policies.push_back(fp::BranchPolicy::parse(p));
  log(1, "saturating from " + std::to_string(seeds.size()) + " seeds");
  const auto cov = fp::saturate(in, seeds, d.saturation_horizon, policies, d.grid);
  std::ostringstream os;
  cov.write_csv(os);
  emit(out, os.str());
  std::cerr << "coverage " << fp::format_double(cov.fraction()) << " (" << cov.hit_count() << " of "
            << d.grid * d.grid << " cells)\n";
  return cov.fraction() >= d.coverage_threshold ? kOk : kNegative;
}

int run_diagnose(const Common& c, const std::optional<std::uint64_t>& seed, const std::string& out) {
  auto s = load(c);
  if (seed) s.diagnostics.seed = *seed;
  log(1, "running diagnostics with seed " + std::to_string(s.diagnostics.seed));
  const fp::Json rep = fp::chaos_report(s.system, s.diagnostics, s.name);
  emit(out, dump(rep));
  const std::string verdict = rep["verdict"];
  std::cerr << "verdict: " << verdict << '\n';
  return verdict == "chaotic" ? kOk : kNegative;
}

int run_cycles(const Common& c, const std::string& dot, const std::string& out) {
  const auto s = load(c);
  const auto& d = s.diagnostics;
  const fp::Integrator in(s.system, fp::IntegratorOptions{.scan_resolution = d.resolution});
  const fp::SegmentGraph g = fp::build_segment_graph(in, d.graph);
  if (!dot.empty()) {
    std::ostringstream os;
    g.write_dot(os);
    emit(dot, os.str());
  }
  fp::Json j;
  j["scenario"] = s.name;
  j["hypothesis_present"] = g.hypothesis_present;
  j["nodes"] = g.nodes.size();
  j["edges"] = g.edges.size();
  fp::Json cycles = fp::Json::array();
  std::size_t found = 0;
  for (int a : g.find(fp::NodeRole::sliding_anchor)) {
    fp::Json e;
    e["base"] = fp::to_json(g.nodes[static_cast<std::size_t>(a)].point);
    const auto rec = fp::assemble_closed_orbit(in, g, a, {}, static_cast<std::size_t>(d.max_cycle_edges));
    if (rec && rec->validated) {
      ++found;
      e["status"] = "found";
      e["period"] = rec->period;
      e["gap"] = rec->gap;
      e["edges"] = rec->edges;
      fp::BranchPolicy p = fp::BranchPolicy::exit_up();
      p.script = rec->script;
      e["policy"] = fp::policy_json(p);
    } else {
      e["status"] = "not_found";
    }
    cycles.push_back(std::move(e));
  }
  j["closed_orbits"] = std::move(cycles);
  emit(out, dump(j));
  return found > 0 ? kOk : kNegative;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filippov system toolkit"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", common.scenario, "Scenario JSON file")->required();
    sub->add_option("--resolution", common.resolution, "Samples per curve component");
  };

  auto* classify = app.add_subcommand("classify", "Decompose switching curves or classify points");
  add_common(classify);
  int curve = -1;
  std::vector<std::string> points;
  std::string classify_out;
  classify->add_option("--curve", curve, "Restrict to one curve id");
  classify->add_option("--point", points, "Classify x,y instead of decomposing")->take_all();
  classify->add_option("--out", classify_out, "Output JSON (default stdout)");

  auto* orbit = app.add_subcommand("orbit", "Integrate one orbit");
  add_common(orbit);
  std::string start, policy = "exit_up", direction = "forward", csv, orbit_json;
  double horizon = 10.0;
  orbit->add_option("--start", start, "Initial point x,y")->required();
  orbit->add_option("--horizon", horizon, "Time horizon")->check(CLI::PositiveNumber);
  orbit->add_option("--policy", policy, "exit_up | exit_down | slide | dwell:<t>:<up|down>");
  orbit->add_option("--direction", direction, "forward | backward");
  orbit->add_option("--csv", csv, "Write the sampled trace as CSV");
  orbit->add_option("--json", orbit_json, "Write the orbit summary as JSON (default stdout)");

  auto* portrait = app.add_subcommand("portrait", "Render an SVG phase portrait");
  add_common(portrait);
  std::vector<std::string> starts;
  std::string portrait_out, portrait_policy = "exit_up";
  double portrait_horizon = 10.0;
  portrait->add_option("--orbit", starts, "Add the forward orbit from x,y")->take_all();
  portrait->add_option("--horizon", portrait_horizon, "Orbit horizon")->check(CLI::PositiveNumber);
  portrait->add_option("--policy", portrait_policy, "Branch policy for orbits");
  portrait->add_option("--out", portrait_out, "Output SVG (default stdout)");

  auto* saturate = app.add_subcommand("saturate", "Grid coverage of orbits seeded on sliding/escaping arcs");
  add_common(saturate);
  int grid = 0, per_arc = 0;
  double sat_horizon = 0.0;
  std::string sat_out;
  saturate->add_option("--grid", grid, "Cells per side");
  saturate->add_option("--horizon", sat_horizon, "Horizon per orbit");
  saturate->add_option("--seeds-per-arc", per_arc, "Seeds per arc");
  saturate->add_option("--out", sat_out, "Coverage CSV (default stdout)");

  auto* diagnose = app.add_subcommand("diagnose", "Run all chaos diagnostics and write the report");
  add_common(diagnose);
  std::optional<std::uint64_t> seed;
  std::string report_out;
  diagnose->add_option("--seed", seed, "RNG seed (overrides the scenario)");
  diagnose->add_option("--out", report_out, "Report JSON (default stdout)");

  auto* cycles = app.add_subcommand("cycles", "Segment graph and closed orbits through sliding anchors");
  add_common(cycles);
  std::string dot, cycles_out;
  cycles->add_option("--dot", dot, "Write the segment graph as DOT");
  cycles->add_option("--out", cycles_out, "Closed-orbit JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }

  try {
    if (*classify) return run_classify(common, curve, points, classify_out);
    if (*orbit) return run_orbit(common, start, horizon, policy, direction, csv, orbit_json);
    if (*portrait) return run_portrait(common, starts, portrait_horizon, portrait_policy, portrait_out);
    if (*saturate) return run_saturate(common, grid, sat_horizon, per_arc, sat_out);
    if (*diagnose) return run_diagnose(common, seed, report_out);
    if (*cycles) return run_cycles(common, dot, cycles_out);
  } catch (const fp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kBadInput;
}
