#ifndef FILIPPOV_REPORT_HPP
#define FILIPPOV_REPORT_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "filippov/coverage.hpp"
#include "filippov/json_util.hpp"
#include "filippov/orbit_io.hpp"
#include "filippov/probes.hpp"
#include "filippov/segment_graph.hpp"

namespace filippov {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kInconclusive = "inconclusive at budget";

struct DiagnosticsConfig {
  std::uint64_t seed = 0;
  int resolution = 2000;  // curve scans

  // Saturation of the seeds on the sliding (and escaping) arcs.
  int grid = 32;
  double saturation_horizon = 200.0;
  int seeds_per_arc = 20;
  bool include_escaping = true;
  std::vector<std::string> policies{"exit_up", "exit_down", "slide"};
  double coverage_threshold = 0.99;

  ProbeConfig probe{10.0, {}, 1, 1000, 1, 0.01};
  int transitivity_pairs = 20;
  double window_radius = 0.05;
  double sensitivity_r_factor = 0.25;  // r = factor * diam(M)
  double sensitivity_disk_radius = 0.01;
  int sensitivity_disks = 1;

  GraphConfig graph{};
  int closed_orbit_windows = 10;
  std::size_t max_cycle_edges = 6;
  int probe_window_grid = 8;
  double probe_window_horizon = 2.0;

  DiagnosticsConfig() {
    for (int k = 0; k <= 32; ++k) probe.dwell_grid.push_back(0.025 * k);
    graph.probe.dwell_grid = probe.dwell_grid;
  }
};

/// Dwell grid: an explicit array, or {"start", "stop", "step"}.
inline std::vector<double> parse_dwell_grid(const nlohmann::json& v, const std::string& path) {
  namespace jp = jsonpath;
  std::vector<double> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(jp::number(v[i], jp::index(path, i)));
  } else if (v.is_object()) {
    const double a = jp::number(jp::require(v, "start", path), jp::join(path, "start"));
    const double b = jp::number(jp::require(v, "stop", path), jp::join(path, "stop"));
    const double h = jp::number(jp::require(v, "step", path), jp::join(path, "step"));
    if (!(h > 0.0)) jp::fail(jp::join(path, "step"), "must be > 0");
    const auto n = static_cast<int>(std::floor((b - a) / h + 1e-9));
    for (int k = 0; k <= n; ++k) out.push_back(a + k * h);
  } else {
    jp::fail(path, "expected an array or {start, stop, step}");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] >= 0.0)) jp::fail(jp::index(path, i), "dwell must be >= 0");
  }
  return out;
}

inline DiagnosticsConfig parse_diagnostics(const nlohmann::json& j, const std::string& path) {
  namespace jp = jsonpath;
  DiagnosticsConfig c;
  if (!j.is_object()) jp::fail(path, "expected an object");
  auto seed = static_cast<std::int64_t>(c.seed);
  jp::optional_field(j, "seed", path, seed, jp::integer);
  if (seed < 0) jp::fail(jp::join(path, "seed"), "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  jp::optional_field(j, "resolution", path, c.resolution, jp::integer);
  jp::optional_field(j, "grid", path, c.grid, jp::integer);
  jp::optional_field(j, "saturation_horizon", path, c.saturation_horizon, jp::number);
  jp::optional_field(j, "seeds_per_arc", path, c.seeds_per_arc, jp::integer);
  jp::optional_field(j, "include_escaping", path, c.include_escaping, jp::boolean);
  jp::optional_field(j, "coverage_threshold", path, c.coverage_threshold, jp::number);
  if (auto it = j.find("policies"); it != j.end()) {
    const std::string p = jp::join(path, "policies");
    c.policies.clear();
    for (std::size_t i = 0; i < jp::array(*it, p).size(); ++i) {
      c.policies.push_back(jp::string((*it)[i], jp::index(p, i)));
      try {
        BranchPolicy::parse(c.policies.back());
      } catch (const ConfigError& e) {
        jp::fail(jp::index(p, i), e.what());
      }
    }
  }
  jp::optional_field(j, "probe_horizon", path, c.probe.horizon, jp::number);
  jp::optional_field(j, "max_depth", path, c.probe.max_depth, jp::integer);
  jp::optional_field(j, "budget", path, c.probe.budget, jp::integer);
  jp::optional_field(j, "disk_rings", path, c.probe.rings, jp::integer);
  jp::optional_field(j, "separation_dt", path, c.probe.dt, jp::number);
  if (auto it = j.find("dwell_grid"); it != j.end()) {
    c.probe.dwell_grid = parse_dwell_grid(*it, jp::join(path, "dwell_grid"));
    c.graph.probe.dwell_grid = c.probe.dwell_grid;
  }
  jp::optional_field(j, "transitivity_pairs", path, c.transitivity_pairs, jp::integer);
  jp::optional_field(j, "window_radius", path, c.window_radius, jp::number);
  jp::optional_field(j, "sensitivity_r_factor", path, c.sensitivity_r_factor, jp::number);
  jp::optional_field(j, "sensitivity_disk_radius", path, c.sensitivity_disk_radius, jp::number);
  jp::optional_field(j, "sensitivity_disks", path, c.sensitivity_disks, jp::integer);
  jp::optional_field(j, "node_radius", path, c.graph.node_radius, jp::number);
  jp::optional_field(j, "edge_horizon", path, c.graph.probe.horizon, jp::number);
  jp::optional_field(j, "edge_budget", path, c.graph.probe.budget, jp::integer);
  jp::optional_field(j, "edge_max_depth", path, c.graph.probe.max_depth, jp::integer);
  jp::optional_field(j, "closed_orbit_windows", path, c.closed_orbit_windows, jp::integer);
  jp::optional_field(j, "max_cycle_edges", path, c.max_cycle_edges, jp::integer);
  jp::optional_field(j, "probe_window_grid", path, c.probe_window_grid, jp::integer);
  jp::optional_field(j, "probe_window_horizon", path, c.probe_window_horizon, jp::number);

  auto positive = [&](double v, const char* key) {
    if (!(v > 0.0)) jp::fail(jp::join(path, key), "must be > 0");
  };
  positive(c.grid, "grid");
  positive(c.saturation_horizon, "saturation_horizon");
  positive(c.seeds_per_arc, "seeds_per_arc");
  positive(c.probe.horizon, "probe_horizon");
  positive(static_cast<double>(c.probe.budget), "budget");
  positive(c.probe.dt, "separation_dt");
  positive(c.window_radius, "window_radius");
  positive(c.sensitivity_r_factor, "sensitivity_r_factor");
  positive(c.sensitivity_disk_radius, "sensitivity_disk_radius");
  positive(c.graph.node_radius, "node_radius");
  positive(c.graph.probe.horizon, "edge_horizon");
  positive(static_cast<double>(c.graph.probe.budget), "edge_budget");
  if (c.resolution < 2) jp::fail(jp::join(path, "resolution"), "must be >= 2");
  if (c.probe.rings < 0) jp::fail(jp::join(path, "disk_rings"), "must be >= 0");
  c.graph.resolution = c.resolution;
  return c;
}

inline Json diagnostics_json(const DiagnosticsConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["resolution"] = c.resolution;
  j["grid"] = c.grid;
  j["saturation_horizon"] = c.saturation_horizon;
  j["seeds_per_arc"] = c.seeds_per_arc;
  j["include_escaping"] = c.include_escaping;
  j["policies"] = c.policies;
  j["coverage_threshold"] = c.coverage_threshold;
  j["probe_horizon"] = c.probe.horizon;
  j["dwell_grid"] = c.probe.dwell_grid;
  j["max_depth"] = c.probe.max_depth;
  j["budget"] = c.probe.budget;
  j["disk_rings"] = c.probe.rings;
  j["separation_dt"] = c.probe.dt;
  j["transitivity_pairs"] = c.transitivity_pairs;
  j["window_radius"] = c.window_radius;
  j["sensitivity_r_factor"] = c.sensitivity_r_factor;
  j["sensitivity_disk_radius"] = c.sensitivity_disk_radius;
  j["sensitivity_disks"] = c.sensitivity_disks;
  j["node_radius"] = c.graph.node_radius;
  j["edge_horizon"] = c.graph.probe.horizon;
  j["edge_budget"] = c.graph.probe.budget;
  j["edge_max_depth"] = c.graph.probe.max_depth;
  j["closed_orbit_windows"] = c.closed_orbit_windows;
  j["max_cycle_edges"] = c.max_cycle_edges;
  j["probe_window_grid"] = c.probe_window_grid;
  j["probe_window_horizon"] = c.probe_window_horizon;
  return j;
}

inline Json decomposition_json(const SigmaDecomposition& dec) {
  Json j;
  j["curve"] = dec.curve;
  j["resolution"] = dec.resolution;
  Json comps = Json::array();
  for (const auto& c : dec.components) {
    comps.push_back({{"index", c.index}, {"closed", c.closed}, {"length", c.length}, {"samples", c.points.size()}});
  }
  j["components"] = std::move(comps);
  Json arcs = Json::array();
  for (const auto& a : dec.arcs) {
    Json e;
    e["kind"] = to_string(a.kind);
    e["component"] = a.component;
    e["start"] = to_json(a.start);
    e["end"] = to_json(a.end);
    e["whole_component"] = a.whole_component;
    e["samples"] = a.samples;
    arcs.push_back(std::move(e));
  }
  j["arcs"] = std::move(arcs);
  Json tang = Json::array();
  for (const auto& t : dec.tangencies) {
    tang.push_back({{"position", to_json(t.position)},
                    {"component", t.component},
                    {"side", to_string(t.side)},
                    {"second_lie", t.second_lie},
                    {"fold", to_string(t.fold)}});
  }
  j["tangencies"] = std::move(tang);
  Json pe = Json::array();
  for (const auto& p : dec.pseudo_equilibria) pe.push_back(to_json(p));
  j["pseudo_equilibria"] = std::move(pe);
  return j;
}

inline Json disk_json(const Disk& d) { return {{"center", to_json(d.center)}, {"radius", d.radius}}; }

namespace detail {

/// Uniform disk centres; on a plane the whole disk stays inside the domain.
inline Disk random_disk(std::mt19937_64& rng, const Domain& dom, double radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double m = dom.periodic() ? 0.0 : radius;
  const double x = dom.x_min + m + u(rng) * (dom.width() - 2 * m);
  const double y = dom.y_min + m + u(rng) * (dom.height() - 2 * m);
  return {{x, y}, radius};
}

}  // namespace detail

/// Runs every probe and collects one verdict. An ingredient is "positive"
/// only when every probe of it succeeded; otherwise it is labelled
/// inconclusive at the configured budget, and the verdict is not_chaotic.
inline Json chaos_report(const FilippovSystem& sys, const DiagnosticsConfig& cfg, const std::string& name = "") {
  Integrator in(sys, IntegratorOptions{.scan_resolution = cfg.resolution});
  const Domain& dom = sys.domain();
  std::mt19937_64 rng(cfg.seed);
  Json rep;
  rep["schema_version"] = kReportSchemaVersion;
  rep["scenario"] = name;
  rep["config"] = diagnostics_json(cfg);
  Json notes = Json::array();

  Json sigma = Json::array();
  bool hypothesis = false;
  for (const auto& c : sys.curves()) {
    try {
      const auto dec = sigma_decomposition(sys, c.id, cfg.resolution);
      hypothesis = hypothesis || dec.count(PointKind::sliding) > 0 || dec.count(PointKind::escaping) > 0;
      sigma.push_back(decomposition_json(dec));
    } catch (const DomainError& e) {
      sigma.push_back({{"curve", c.id}, {"error", e.what()}});
    }
  }
  rep["sigma"] = std::move(sigma);
  rep["hypothesis_present"] = hypothesis;
  if (!hypothesis) {
    notes.push_back("no sliding or escaping arcs: the hypothesis on nonempty sliding/escaping sets is absent; "
                    "saturation and periodic-orbit assembly skipped");
  }

  // Saturation.
  Json sat;
  bool sat_ok = false;
  if (hypothesis) {
    std::vector<BranchPolicy> policies;
    for (const auto& p : cfg.policies) policies.push_back(BranchPolicy::parse(p));
    const auto seeds = sigma_seeds(sys, cfg.seeds_per_arc, cfg.include_escaping, cfg.resolution);
    const GridCoverage cov = saturate(in, seeds, cfg.saturation_horizon, policies, cfg.grid);
    sat_ok = cov.fraction() >= cfg.coverage_threshold;
    sat["status"] = sat_ok ? "positive" : kInconclusive;
    sat["seed_set"] = cfg.include_escaping ? "sliding_and_escaping" : "sliding";
    sat["seeds"] = seeds.size();
    sat["grid"] = cfg.grid;
    sat["cells_hit"] = cov.hit_count();
    sat["coverage"] = cov.fraction();
    sat["threshold"] = cfg.coverage_threshold;
  } else {
    sat["status"] = "skipped";
  }
  rep["saturation"] = std::move(sat);

  // Transitivity.
  std::vector<std::pair<Disk, Disk>> pairs;
  for (int i = 0; i < cfg.transitivity_pairs; ++i) {
    const Disk u = detail::random_disk(rng, dom, cfg.window_radius);
    const Disk v = detail::random_disk(rng, dom, cfg.window_radius);
    pairs.emplace_back(u, v);
  }
  std::vector<TransitivityResult> tr(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) { tr[i] = transitivity_probe(in, pairs[i].first, pairs[i].second, cfg.probe); });
  Json trans;
  std::size_t found = 0;
  Json tlist = Json::array();
  for (const auto& r : tr) {
    found += r.found ? 1 : 0;
    Json e;
    e["u"] = disk_json(r.u);
    e["v"] = disk_json(r.v);
    e["found"] = r.found;
    e["orbits_examined"] = r.orbits;
    if (r.found) {
      e["seed_point"] = to_json(r.seed);
      e["entry_time"] = r.entry_time;
      e["policy"] = policy_json(r.policy);
    }
    tlist.push_back(std::move(e));
  }
  const bool trans_ok = !tr.empty() && found == tr.size();
  trans["status"] = trans_ok ? "positive" : kInconclusive;
  trans["found"] = found;
  trans["total"] = tr.size();
  trans["pairs"] = std::move(tlist);
  rep["transitivity"] = std::move(trans);

  // Sensitivity.
  const double r = cfg.sensitivity_r_factor * dom.diameter();
  std::vector<Disk> sdisks;
  for (int i = 0; i < cfg.sensitivity_disks; ++i) sdisks.push_back(detail::random_disk(rng, dom, cfg.sensitivity_disk_radius));
  std::vector<SensitivityResult> sr(sdisks.size());
  parallel_for(sdisks.size(), [&](std::size_t i) { sr[i] = sensitivity_probe(in, sdisks[i], r, cfg.probe); });
  Json sens;
  Json slist = Json::array();
  std::size_t witnesses = 0;
  for (const auto& s : sr) {
    Json e;
    e["disk"] = disk_json(s.disk);
    e["orbits_examined"] = s.orbits;
    if (s.witness) {
      ++witnesses;
      const auto& w = *s.witness;
      e["status"] = "found";
      e["witness"] = {{"x", to_json(w.x)},     {"y", to_json(w.y)},       {"policy_x", policy_json(w.policy_x)},
                      {"policy_y", policy_json(w.policy_y)}, {"t", w.t}, {"distance", w.distance}};
    } else {
      e["status"] = "not_found";
    }
    slist.push_back(std::move(e));
  }
  const bool sens_ok = !sr.empty() && witnesses == sr.size();
  sens["status"] = sens_ok ? "positive" : kInconclusive;
  sens["r"] = r;
  sens["disks"] = std::move(slist);
  rep["sensitivity"] = std::move(sens);

  // Periodic orbits through random windows.
  Json per;
  bool per_ok = false;
  if (hypothesis) {
    const ProbeWindows pw = make_probe_windows(in, cfg.probe_window_grid, cfg.window_radius, cfg.probe_window_horizon);
    const SegmentGraph g = build_segment_graph(in, cfg.graph, pw);
    Json graph;
    graph["nodes"] = g.nodes.size();
    graph["edges"] = g.edges.size();
    graph["windows_v"] = pw.v.size();
    graph["windows_w"] = pw.w.size();
    const auto anchors = g.find(NodeRole::sliding_anchor);
    const auto entries = g.find(NodeRole::escape_entry);
    if (!anchors.empty() && !entries.empty()) {
      graph["anchor_entry_strongly_connected"] = g.strongly_connected(anchors.front(), entries.front());
    }
    per["graph"] = std::move(graph);
    std::vector<Disk> windows;
    for (int i = 0; i < cfg.closed_orbit_windows; ++i) windows.push_back(detail::random_disk(rng, dom, cfg.window_radius));
    std::size_t closed = 0;
    Json wlist = Json::array();
    for (const auto& w : windows) {
      Json e;
      e["window"] = disk_json(w);
      std::optional<ClosedOrbitRecord> best;
      for (int a : anchors) {
        auto rec = assemble_closed_orbit(in, g, a, {w}, cfg.max_cycle_edges);
        if (rec && rec->validated) {
          best = std::move(rec);
          break;
        }
      }
      if (best) {
        ++closed;
        e["status"] = "found";
        e["base"] = to_json(g.nodes[static_cast<std::size_t>(best->base)].point);
        e["period"] = best->period;
        e["gap"] = best->gap;
        e["edges"] = best->edges.size();
        BranchPolicy p = BranchPolicy::exit_up();
        p.script = best->script;
        e["policy"] = policy_json(p);
      } else {
        e["status"] = "not_found";
      }
      wlist.push_back(std::move(e));
    }
    per_ok = !windows.empty() && closed == windows.size();
    per["status"] = per_ok ? "positive" : kInconclusive;
    per["found"] = closed;
    per["total"] = windows.size();
    per["windows"] = std::move(wlist);
  } else {
    per["status"] = "skipped";
  }
  rep["periodic_orbits"] = std::move(per);

  const bool chaotic = hypothesis && sat_ok && trans_ok && sens_ok && per_ok;
  rep["verdict"] = chaotic ? "chaotic" : "not_chaotic";
  if (!chaotic) notes.push_back("at least one ingredient was not established at the configured budget");
  rep["notes"] = std::move(notes);
  return rep;
}

}  // namespace filippov

#endif  // FILIPPOV_REPORT_HPP
