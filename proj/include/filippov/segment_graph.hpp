#ifndef FILIPPOV_SEGMENT_GRAPH_HPP
#define FILIPPOV_SEGMENT_GRAPH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "filippov/coverage.hpp"
#include "filippov/format.hpp"
#include "filippov/integrator.hpp"
#include "filippov/probes.hpp"

namespace filippov {

enum class NodeRole { sliding_anchor, escape_entry, tangency, window_v, window_w };

inline const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::sliding_anchor: return "sliding_anchor";
    case NodeRole::escape_entry: return "escape_entry";
    case NodeRole::tangency: return "tangency";
    case NodeRole::window_v: return "window_v";
    case NodeRole::window_w: return "window_w";
  }
  return "?";
}

struct GraphNode {
  int id = 0;
  NodeRole role = NodeRole::tangency;
  Vec2 point;
  int curve = -1;
  double radius = 0.0;  // windows only

  bool is_window() const { return role == NodeRole::window_v || role == NodeRole::window_w; }
};

/// An orbit piece from one node to the next one it approaches. Window W
/// edges are found by integrating backward from the window; their orbit is
/// that backward orbit.
struct GraphEdge {
  int from = 0;
  int to = 0;
  double flight_time = 0.0;
  Direction direction = Direction::forward;
  std::vector<EscapeDecision> decisions;  // escaping encounters met on the way
  Orbit orbit;
};

struct ProbeWindows {
  std::vector<Disk> v;  // forward orbit enters a sliding arc without meeting a tangency
  std::vector<Disk> w;  // same for the backward orbit
};

struct GraphConfig {
  ProbeConfig probe{6.0, {0.0}, 1, 200, 0, 0.01};
  double node_radius = 1e-3;
  int resolution = 2000;
};

class SegmentGraph {
 public:
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  bool hypothesis_present = false;  // some sliding or escaping arc exists
  double node_radius = 0.0;

  std::vector<int> find(NodeRole role) const {
    std::vector<int> out;
    for (const auto& n : nodes) {
      if (n.role == role) out.push_back(n.id);
    }
    return out;
  }

  bool reachable(int a, int b) const {
    std::vector<bool> seen(nodes.size(), false);
    std::vector<int> stack{a};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& e : edges) {
        if (e.from != u || seen[static_cast<std::size_t>(e.to)]) continue;
        if (e.to == b) return true;
        seen[static_cast<std::size_t>(e.to)] = true;
        stack.push_back(e.to);
      }
    }
    return false;
  }

  bool strongly_connected(int a, int b) const { return reachable(a, b) && reachable(b, a); }

  void write_dot(std::ostream& out) const {
    out << "digraph segments {\n";
    for (const auto& n : nodes) {
      out << "  n" << n.id << " [label=\"" << to_string(n.role) << ' ' << n.id << "\\n(" << format_double(n.point.x)
          << ", " << format_double(n.point.y) << ")\"";
      if (n.is_window()) out << " shape=box";
      out << "];\n";
    }
    for (const auto& e : edges) {
      out << "  n" << e.from << " -> n" << e.to << " [label=\"" << format_double(e.flight_time) << "\"];\n";
    }
    out << "}\n";
  }
};

namespace detail {

/// Closest approach of the trace to `q` during its first visit to the disk
/// of radius `rad` around q, ignoring everything before time `after`.
inline std::optional<Sample> closest_visit(const Domain& dom, const std::vector<Sample>& trace, const Vec2& q,
                                           double rad, double after) {
  std::optional<Sample> best;
  double best_d = rad;
  bool inside = false;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k - 1].t < after) continue;
    const Vec2 a = trace[k - 1].p;
    const Vec2 b = a + dom.displacement(a, trace[k].p);
    const Vec2 c = a + dom.displacement(a, q);
    double s = 0.0;
    const double d = segment_distance(a, b, c, s);
    if (d < rad) {
      inside = true;
      if (d < best_d) {
        best_d = d;
        best = Sample{trace[k - 1].t + s * (trace[k].t - trace[k - 1].t), dom.canonical(a + s * (b - a))};
      }
    } else if (inside) {
      break;
    }
  }
  return best;
}

/// Time at which the trace first gets farther than `rad` from q.
inline double leave_time(const Domain& dom, const std::vector<Sample>& trace, const Vec2& q, double rad) {
  for (const auto& s : trace) {
    if (dom.distance(s.p, q) > rad) return s.t;
  }
  return std::numeric_limits<double>::infinity();
}

inline std::vector<EscapeDecision> decisions_before(const Branch& b, double t_cut, const BranchPolicy& fallback) {
  std::vector<EscapeDecision> out;
  for (const auto& c : b.orbit.branches) {
    if (c.t >= t_cut - 1e-9) break;
    if (c.kind != ChoiceKind::escape_exit && c.kind != ChoiceKind::slide_on) continue;
    const std::size_t i = out.size();
    out.push_back(i < b.policy.script.size() ? b.policy.script[i] : fallback.decide(i));
  }
  return out;
}

}  // namespace detail

/// Grid of n x n window centers, classified by where their short forward and
/// backward orbits first land.
inline ProbeWindows make_probe_windows(const Integrator& in, int n, double radius, double horizon) {
  ProbeWindows out;
  const FilippovSystem& sys = in.system();
  const Domain& dom = sys.domain();
  auto lands_on_sliding = [&](const Vec2& a, Direction dir) {
    const Orbit o = in.integrate(a, horizon, dir, BranchPolicy::exit_up());
    if (o.segments.size() < 2 || o.segments[0].kind != SegmentKind::regular_arc) return false;
    const OrbitSegment& s = o.segments[1];
    if (s.kind != SegmentKind::sliding_arc || s.escaping) return false;
    for (const auto& tp : in.tangencies()) {
      if (dom.distance(tp.position, s.start()) < 2.0 * in.options().tangency_snap) return false;
    }
    return true;
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 a{dom.x_min + (i + 0.5) * dom.width() / n, dom.y_min + (j + 0.5) * dom.height() / n};
      if (sys.region_of(a).on_sigma) continue;
      if (lands_on_sliding(a, Direction::forward)) out.v.push_back({a, radius});
      if (lands_on_sliding(a, Direction::backward)) out.w.push_back({a, radius});
    }
  }
  return out;
}

/// Anchor nodes: the midpoint of every sliding arc, the tangency points
/// (those that start an escaping arc are escape entries), and the windows.
/// Edges follow every enumerated branch from a node to the first other
/// anchor it approaches.
inline SegmentGraph build_segment_graph(const Integrator& in, const GraphConfig& cfg, const ProbeWindows& windows = {}) {
  SegmentGraph g;
  g.node_radius = cfg.node_radius;
  const FilippovSystem& sys = in.system();
  const Domain& dom = sys.domain();
  auto add = [&](NodeRole role, Vec2 p, int curve, double radius) {
    g.nodes.push_back({static_cast<int>(g.nodes.size()), role, p, curve, radius});
  };

  for (const auto& c : sys.curves()) {
    SigmaDecomposition dec;
    try {
      dec = sigma_decomposition(sys, c.id, cfg.resolution);
    } catch (const DomainError&) {
      continue;
    }
    std::vector<SigmaArc> escaping;
    for (const auto& arc : dec.arcs) {
      if (arc.kind == PointKind::escaping) {
        escaping.push_back(arc);
        g.hypothesis_present = true;
      }
      if (arc.kind != PointKind::sliding) continue;
      g.hypothesis_present = true;
      const auto pts = arc_points(dec, arc);
      if (!pts.empty()) add(NodeRole::sliding_anchor, project_to_curve(sys, c.id, pts[pts.size() / 2]), c.id, 0.0);
    }
    for (const auto& tp : dec.tangencies) {
      bool entry = false;
      for (const auto& arc : escaping) {
        // The escaping flow runs away from the tangency it starts at.
        const bool at_start = dom.distance(arc.start, tp.position) < 1e-6;
        const bool at_end = dom.distance(arc.end, tp.position) < 1e-6;
        if (!at_start && !at_end) continue;
        const auto pts = arc_points(dec, arc);
        if (pts.size() < 3) continue;
        const Vec2 inner = at_start ? pts[1] : pts[pts.size() - 2];
        const Vec2 zs = sliding_field_quotient(sigma_local(sys, c.id, inner));
        if (dot(zs, dom.displacement(tp.position, inner)) > 0.0) entry = true;
      }
      add(entry ? NodeRole::escape_entry : NodeRole::tangency, tp.position, c.id, 0.0);
    }
  }
  if (!g.hypothesis_present) return g;
  const std::size_t anchors = g.nodes.size();
  for (const auto& d : windows.v) add(NodeRole::window_v, d.center, -1, d.radius);
  for (const auto& d : windows.w) add(NodeRole::window_w, d.center, -1, d.radius);

  const BranchPolicy fallback = BranchPolicy::exit_up();
  std::vector<std::vector<GraphEdge>> found(g.nodes.size());
  parallel_for(g.nodes.size(), [&](std::size_t src) {
    const GraphNode& node = g.nodes[src];
    const Direction dir = node.role == NodeRole::window_w ? Direction::backward : Direction::forward;
    const double leave_radius = node.is_window() ? node.radius : 2.0 * cfg.node_radius;
    const auto branches = in.enumerate(node.point, cfg.probe.horizon, cfg.probe.budget, cfg.probe.dwell_grid,
                                       cfg.probe.max_depth, dir, fallback);
    for (const auto& b : branches) {
      const auto trace = b.orbit.trace();
      const double after = detail::leave_time(dom, trace, node.point, leave_radius);
      if (!std::isfinite(after)) continue;
      std::optional<Sample> best;
      std::size_t target = 0;
      for (std::size_t k = 0; k < anchors; ++k) {
        if (k == src && node.is_window()) continue;
        const auto v = detail::closest_visit(dom, trace, g.nodes[k].point, cfg.node_radius, after);
        if (v && (!best || v->t < best->t)) {
          best = v;
          target = k;
        }
      }
      if (!best) continue;
      GraphEdge e;
      e.from = static_cast<int>(src);
      e.to = static_cast<int>(target);
      e.direction = dir;
      if (dir == Direction::backward) std::swap(e.from, e.to);
      e.flight_time = best->t;
      e.decisions = detail::decisions_before(b, best->t, fallback);
      const bool dup = std::any_of(found[src].begin(), found[src].end(), [&](const GraphEdge& o) {
        return o.from == e.from && o.to == e.to && o.decisions == e.decisions &&
               std::abs(o.flight_time - e.flight_time) < 1e-6;
      });
      if (dup) continue;
      BranchPolicy replay = fallback;
      replay.script = e.decisions;
      e.orbit = in.integrate(node.point, e.flight_time, dir, replay);
      found[src].push_back(std::move(e));
    }
  });
  for (auto& list : found) {
    for (auto& e : list) g.edges.push_back(std::move(e));
  }
  return g;
}

struct ClosedOrbitRecord {
  int base = 0;
  std::vector<std::size_t> edges;  // indices into SegmentGraph::edges
  std::vector<EscapeDecision> script;
  double period = 0.0;
  double gap = 0.0;  // |gamma(period) - base|
  bool validated = false;
  Orbit orbit;
};

/// Finds a cycle of forward edges from `base` back to itself that passes
/// through every disk in `visit`, then integrates the concatenated branch
/// script once more and refines the period so the orbit closes at the base.
inline std::optional<ClosedOrbitRecord> assemble_closed_orbit(const Integrator& in, const SegmentGraph& g, int base,
                                                               const std::vector<Disk>& visit,
                                                               std::size_t max_edges = 6,
                                                               double close_tol = 1e-6) {
  const Domain& dom = in.system().domain();
  std::vector<std::size_t> forward;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const GraphEdge& e = g.edges[i];
    if (e.direction == Direction::forward && !g.nodes[static_cast<std::size_t>(e.from)].is_window()) {
      forward.push_back(i);
    }
  }
  // hits[i][k]: edge i passes through disk k.
  std::map<std::size_t, std::vector<bool>> hits;
  for (std::size_t i : forward) {
    std::vector<bool> h(visit.size());
    const auto trace = g.edges[i].orbit.trace();
    for (std::size_t k = 0; k < visit.size(); ++k) h[k] = first_entry(dom, trace, visit[k]).has_value();
    hits[i] = std::move(h);
  }

  std::vector<std::size_t> path;
  std::optional<std::vector<std::size_t>> cycle;
  auto covered = [&] {
    for (std::size_t k = 0; k < visit.size(); ++k) {
      if (std::none_of(path.begin(), path.end(), [&](std::size_t i) { return hits[i][k]; })) return false;
    }
    return true;
  };
  auto dfs = [&](auto&& self, int at) -> void {
    if (cycle || path.size() >= max_edges) return;
    for (std::size_t i : forward) {
      const GraphEdge& e = g.edges[i];
      if (e.from != at) continue;
      path.push_back(i);
      if (e.to == base && covered()) {
        cycle = path;
      } else if (e.to != base) {
        self(self, e.to);
      }
      path.pop_back();
      if (cycle) return;
    }
  };
  // Iterative deepening keeps the shortest cycles first.
  for (std::size_t depth = 1; depth <= max_edges && !cycle; ++depth) {
    const std::size_t saved = max_edges;
    max_edges = depth;
    dfs(dfs, base);
    max_edges = saved;
  }
  if (!cycle) return std::nullopt;

  ClosedOrbitRecord rec;
  rec.base = base;
  rec.edges = *cycle;
  double tau = 0.0;
  for (std::size_t i : rec.edges) {
    const GraphEdge& e = g.edges[i];
    rec.script.insert(rec.script.end(), e.decisions.begin(), e.decisions.end());
    tau += e.flight_time;
  }
  BranchPolicy policy = BranchPolicy::exit_up();
  policy.script = rec.script;
  const Vec2 q0 = g.nodes[static_cast<std::size_t>(base)].point;
  const GraphNode& bn = g.nodes[static_cast<std::size_t>(base)];
  Vec2 vel = bn.curve >= 0 ? sliding_field_quotient(sigma_local(in.system(), bn.curve, q0)) : Vec2{};
  Orbit o;
  for (int it = 0; it < 6; ++it) {
    o = in.integrate(q0, tau, Direction::forward, policy);
    const Vec2 off = dom.displacement(q0, o.end_point());
    const double speed2 = dot(vel, vel);
    if (speed2 <= 0.0 || norm(off) <= 0.1 * close_tol) break;
    tau -= dot(off, vel) / speed2;
  }
  rec.period = tau;
  rec.gap = dom.distance(o.end_point(), q0);
  const auto trace = o.trace();
  rec.validated = rec.gap <= close_tol && o.end_time() >= tau - 1e-9;
  for (const auto& d : visit) rec.validated = rec.validated && first_entry(dom, trace, d).has_value();
  rec.orbit = std::move(o);
  return rec;
}

}  // namespace filippov

#endif  // FILIPPOV_SEGMENT_GRAPH_HPP
