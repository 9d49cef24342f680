#ifndef FILIPPOV_INTEGRATOR_HPP
#define FILIPPOV_INTEGRATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "filippov/error.hpp"
#include "filippov/ode.hpp"
#include "filippov/orbit.hpp"
#include "filippov/sigma.hpp"
#include "filippov/system.hpp"

namespace filippov {

inline constexpr double kEventTol = 1e-10;      // |h| at a located event
inline constexpr double kSlidingBand = 1e-8;    // |h| along sliding arcs

struct IntegratorOptions {
  ode::Tolerance tol{};
  double max_step = 0.0;  // 0 picks 0.05 * largest domain extent
  double min_step = 1e-13;
  int sign_checks = 8;    // dense-output samples per step used for event detection
  // Regular arcs passing this close to a tangency of their own field end
  // there. Near a fold the landing point on Sigma is ill-conditioned
  // (error ~ sqrt of the integration error), so the snap radius is well above
  // the tolerances.
  double tangency_snap = 1e-4;
  int scan_resolution = 2000;
  std::size_t max_events = 100000;
};

enum class RegularHit { none, curve, tangency, left_domain, failure };

struct RegularResult {
  OrbitSegment segment;
  RegularHit hit = RegularHit::none;
  int curve = -1;
  int tangency = -1;  // index into Integrator::tangencies()
  TerminalReason failure = TerminalReason::none;
  std::string detail;
};

enum class SlidingExit { t_max, tangency, pseudo_eq, left_domain, failure };

struct SlidingResult {
  OrbitSegment segment;
  SlidingExit exit = SlidingExit::t_max;
  int tangent_region = -1;  // region whose Lie derivative vanished at the exit fold
  bool double_tangency = false;
  TerminalReason failure = TerminalReason::none;
  std::string detail;
};

/// Outcome of arriving on a switching curve.
struct SigmaAction {
  enum class Kind { enter_region, slide, terminal };
  Kind kind = Kind::terminal;
  Vec2 point;                          // position on the curve the action starts from
  int region = -1;                     // enter_region
  std::optional<OrbitSegment> marker;  // crossing_event or escape_departure
  bool escaping = false;               // slide along an escaping arc
  double slide_limit = std::numeric_limits<double>::infinity();
  Side exit_side = Side::up;           // side taken once slide_limit runs out
  std::optional<BranchChoice> choice;
  bool used_decision = false;          // an escaping-encounter decision was consumed
  TerminalReason reason = TerminalReason::none;
  std::string detail;
};

namespace detail {

inline int side_sign(const SwitchingCurve& c, int region) {
  if (c.positive_region == region) return 1;
  if (c.negative_region == region) return -1;
  return 0;
}

inline int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

/// Distance from q to segment [a, b]; `s` receives the segment parameter.
inline double segment_distance(const Vec2& a, const Vec2& b, const Vec2& q, double& s) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  s = len2 > 0.0 ? std::clamp(dot(q - a, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(a + s * ab - q);
}

}  // namespace detail

/// Event-driven Filippov integrator for one system. Holds the system and its
/// time reversal; both are immutable, so a single instance may be shared by
/// threads computing different orbits.
class Integrator {
 public:
  explicit Integrator(const FilippovSystem& sys, IntegratorOptions opt = {})
      : fwd_(sys), bwd_(sys.time_reversed()), opt_(opt) {
    const Domain& d = sys.domain();
    if (opt_.max_step <= 0.0) opt_.max_step = 0.05 * std::max(d.width(), d.height());
    for (const auto& c : sys.curves()) {
      try {
        auto t = find_tangency_points(sys, c.id, opt_.scan_resolution);
        tangencies_.insert(tangencies_.end(), t.begin(), t.end());
      } catch (const DomainError&) {
        // Non-isolated tangencies: nothing to snap to on this curve.
      }
    }
  }

  const FilippovSystem& system(Direction dir = Direction::forward) const {
    return dir == Direction::forward ? fwd_ : bwd_;
  }
  const IntegratorOptions& options() const { return opt_; }
  const std::vector<TangencyPoint>& tangencies() const { return tangencies_; }

  RegularResult integrate_regular(Vec2 p, int region, double t_max, Direction dir = Direction::forward) const {
    return regular(system(dir), p, region, 0.0, t_max);
  }
  SlidingResult integrate_sliding(int curve, Vec2 p, double t_max, Direction dir = Direction::forward) const {
    const auto& s = system(dir);
    const PointClass pc = classify_point(s, curve, p);
    return sliding(s, curve, project_to_curve(s, curve, p), 0.0, t_max, pc.kind == PointKind::escaping);
  }
  SigmaAction handle_sigma_event(int curve, Vec2 p, int incoming_region, const BranchPolicy& policy,
                                 std::size_t encounter = 0, Direction dir = Direction::forward) const {
    return on_sigma(system(dir), curve, p, 0.0, incoming_region, policy, encounter);
  }

  Orbit integrate(Vec2 p, double horizon, Direction dir, const BranchPolicy& policy) const;

  std::vector<Orbit> enumerate_branches(Vec2 p, double horizon, std::size_t budget,
                                        const std::vector<double>& dwell_grid, std::size_t max_depth = 4,
                                        Direction dir = Direction::forward,
                                        const BranchPolicy& fallback = BranchPolicy::exit_up()) const;

  /// Same leaves as enumerate_branches, each with the policy that replays it.
  std::vector<Branch> enumerate(Vec2 p, double horizon, std::size_t budget, const std::vector<double>& dwell_grid,
                                std::size_t max_depth = 4, Direction dir = Direction::forward,
                                const BranchPolicy& fallback = BranchPolicy::exit_up()) const;

 private:
  RegularResult regular(const FilippovSystem& s, Vec2 p, int region, double t0, double t_end) const;
  SlidingResult sliding(const FilippovSystem& s, int curve, Vec2 p, double t0, double t_end, bool escaping) const;
  SigmaAction on_sigma(const FilippovSystem& s, int curve, Vec2 p, double t, int incoming,
                       const BranchPolicy& policy, std::size_t encounter) const;
  SigmaAction escaping_encounter(const FilippovSystem& s, int curve, const Vec2& p, double t,
                                 const BranchPolicy& policy, std::size_t encounter) const;
  SigmaAction tangency_exit(const FilippovSystem& s, int curve, const Vec2& p, double t, int tangent_region,
                            bool from_slide) const;

  bool snaps(const FilippovSystem& s, const TangencyPoint& tp, int region) const {
    if (tp.side == TangentSide::both) return true;
    const auto& c = s.curve(tp.curve);
    return (tp.side == TangentSide::positive ? c.positive_region : c.negative_region) == region;
  }

  FilippovSystem fwd_;
  FilippovSystem bwd_;
  IntegratorOptions opt_;
  std::vector<TangencyPoint> tangencies_;
};

inline RegularResult Integrator::regular(const FilippovSystem& s, Vec2 p, int region, double t0,
                                         double t_end) const {
  const Domain& dom = s.domain();
  const auto& curves = s.curves();
  RegularResult res;
  res.segment.kind = SegmentKind::regular_arc;
  res.segment.region = region;
  res.segment.t_a = t0;
  res.segment.samples.push_back({t0, p});
  auto fail = [&](TerminalReason why, std::string msg, double t) {
    res.hit = RegularHit::failure;
    res.failure = why;
    res.detail = std::move(msg);
    res.segment.t_b = t;
    return res;
  };

  // Reference sign of every h_i along this arc.
  std::vector<int> ref(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const int side = detail::side_sign(curves[i], region);
    ref[i] = side != 0 ? side : detail::sign_of(curves[i].value(p));
    if (ref[i] == 0) ref[i] = 1;
  }
  // A tangency only becomes a snap target once the arc has moved away from it.
  std::vector<bool> armed(tangencies_.size());
  for (std::size_t j = 0; j < tangencies_.size(); ++j) {
    armed[j] = snaps(s, tangencies_[j], region) && dom.distance(p, tangencies_[j].position) > 2 * opt_.tangency_snap;
  }

  auto field = [&](const Vec2& q) { return s.region_field(region, q); };
  double t = t0;
  Vec2 y = p;
  Vec2 k1;
  try {
    k1 = field(y);
  } catch (const EvaluationError& e) {
    return fail(TerminalReason::evaluation_error, e.what(), t);
  }
  double h = std::min(opt_.max_step, t_end - t0);
  const int m = std::max(opt_.sign_checks, 1);

  while (t < t_end) {
    h = std::min(h, t_end - t);
    const bool last = h >= t_end - t;
    ode::Step st;
    try {
      st = ode::dopri_step(field, t, y, k1, h, opt_.tol);
    } catch (const EvaluationError&) {
      st.error = 1e300;
    }
    if (st.error > 1.0) {
      h *= ode::step_factor(st.error);
      if (h < opt_.min_step) return fail(TerminalReason::step_underflow, "step size underflow", t);
      continue;
    }

    // Scan the step on a dense grid for the earliest event.
    double best = 2.0;  // step parameter of the earliest event
    enum class Ev { none, curve, domain, snap } ev = Ev::none;
    int ev_index = -1;
    double prev_theta = 0.0;
    Vec2 prev_q = y;
    for (int k = 1; k <= m && ev == Ev::none; ++k) {
      const double theta = static_cast<double>(k) / m;
      const Vec2 q = k == m ? st.y1 : st.at(theta);
      if (!dom.periodic() && !dom.contains(q)) {
        // Domain exit: shrink to the boundary by bisection.
        double lo = prev_theta, hi = theta;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (dom.contains(st.at(mid)) ? lo : hi) = mid;
        }
        best = lo;
        ev = Ev::domain;
      }
      for (std::size_t i = 0; i < curves.size(); ++i) {
        // A sample inside the band counts as reaching the curve.
        const double v = curves[i].value(q);
        if (v * ref[i] > kSigmaBand) continue;
        double lo = prev_theta, hi = theta;
        if (ev == Ev::domain && hi > best) hi = best;
        const double at_hi = ref[i] * curves[i].value(st.at(hi));
        if (at_hi > kSigmaBand) continue;
        // Locate the sign change itself when there is one, else the band entry.
        const double threshold = at_hi <= 0.0 ? 0.0 : kSigmaBand;
        for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double hv = curves[i].value(st.at(mid));
          (hv * ref[i] > threshold ? lo : hi) = mid;
        }
        if (hi < best || ev == Ev::domain) {
          best = hi;
          ev = Ev::curve;
          ev_index = static_cast<int>(i);
        }
      }
      // Tangency snapping along the chord up to the earliest event so far.
      const Vec2 chord_end = ev != Ev::none ? st.at(best) : q;
      for (std::size_t j = 0; j < tangencies_.size(); ++j) {
        if (!armed[j]) continue;
        const Vec2 tpos = tangencies_[j].position;
        const Vec2 a = tpos + dom.displacement(tpos, prev_q);
        const Vec2 b = a + (chord_end - prev_q);
        double sp = 0.0;
        if (detail::segment_distance(a, b, tpos, sp) < opt_.tangency_snap) {
          const double theta_snap = prev_theta + sp * ((ev != Ev::none ? best : theta) - prev_theta);
          if (ev == Ev::none || theta_snap <= best) {
            best = theta_snap;
            ev = Ev::snap;
            ev_index = static_cast<int>(j);
          }
        }
      }
      prev_theta = theta;
      prev_q = q;
    }

    if (ev != Ev::none) {
      const double te = t + best * h;
      Vec2 q = st.at(best);
      if (ev == Ev::domain) {
        q = {std::clamp(q.x, dom.x_min, dom.x_max), std::clamp(q.y, dom.y_min, dom.y_max)};
        res.hit = RegularHit::left_domain;
      } else if (ev == Ev::curve) {
        res.curve = curves[ev_index].id;
        q = project_to_curve(s, res.curve, q);
        res.hit = RegularHit::curve;
      } else {
        q = tangencies_[ev_index].position;
        res.hit = RegularHit::tangency;
        res.tangency = ev_index;
        res.curve = tangencies_[ev_index].curve;
      }
      res.segment.samples.push_back({te, dom.canonical(q)});
      res.segment.t_b = te;
      return res;
    }

    t = last ? t_end : t + h;
    y = dom.canonical(st.y1);
    k1 = st.k7;
    res.segment.samples.push_back({t, y});
    for (std::size_t j = 0; j < tangencies_.size(); ++j) {
      if (!armed[j] && snaps(s, tangencies_[j], region) &&
          dom.distance(y, tangencies_[j].position) > 2 * opt_.tangency_snap) {
        armed[j] = true;
      }
    }
    h = std::min(h * ode::step_factor(st.error), opt_.max_step);
  }
  res.segment.t_b = t_end;
  return res;
}

inline SlidingResult Integrator::sliding(const FilippovSystem& s, int curve, Vec2 p, double t0, double t_end,
                                         bool escaping) const {
  const auto& c = s.curve(curve);
  SlidingResult res;
  res.segment.kind = SegmentKind::sliding_arc;
  res.segment.curve = curve;
  res.segment.escaping = escaping;
  res.segment.t_a = t0;
  res.segment.samples.push_back({t0, p});
  // Expected signs of L1, L2 on this arc.
  const double e1 = escaping ? 1.0 : -1.0;
  const double e2 = -e1;
  auto field = [&](const Vec2& q) { return sliding_field_quotient(sigma_local(s, curve, q)); };
  // Bit 1: L1 left its sign band; bit 2: L2 did.
  auto violation = [&](const Vec2& q) {
    const SigmaLocal l = sigma_local(s, curve, q);
    return (e1 * l.l1 <= kLieDeadband ? 1 : 0) | (e2 * l.l2 <= kLieDeadband ? 2 : 0);
  };

  double t = t0;
  Vec2 y = p;
  try {
    Vec2 k1 = field(y);
    double h = std::min(opt_.max_step, t_end - t0);
    while (t < t_end) {
      h = std::min(h, t_end - t);
      const bool last = h >= t_end - t;
      ode::Step st = ode::dopri_step(field, t, y, k1, h, opt_.tol);
      if (st.error > 1.0) {
        h *= ode::step_factor(st.error);
        if (h < opt_.min_step) {
          if (norm(k1) * h < 1e-14 || norm(k1) <= kPseudoEqTol) {
            res.exit = SlidingExit::pseudo_eq;
          } else {
            res.exit = SlidingExit::failure;
            res.failure = TerminalReason::step_underflow;
            res.detail = "step size underflow while sliding";
          }
          res.segment.t_b = t;
          return res;
        }
        continue;
      }
      // Fold exits: a Lie derivative leaves its sign inside the step.
      double prev = 0.0;
      for (int k = 1; k <= 4; ++k) {
        const double theta = 0.25 * k;
        int mask = violation(project_to_curve(s, curve, st.at(theta)));
        if (mask == 0) {
          prev = theta;
          continue;
        }
        double lo = prev, hi = theta;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          const int mm = violation(project_to_curve(s, curve, st.at(mid)));
          if (mm == 0) {
            lo = mid;
          } else {
            hi = mid;
            mask = mm;
          }
        }
        const Vec2 q = project_to_curve(s, curve, st.at(hi));
        const double te = t + hi * h;
        res.segment.samples.push_back({te, q});
        res.segment.t_b = te;
        res.exit = SlidingExit::tangency;
        res.double_tangency = mask == 3;
        res.tangent_region = (mask & 1) ? c.positive_region : c.negative_region;
        return res;
      }
      const Domain& dom = s.domain();
      if (!dom.periodic() && !dom.contains(st.y1)) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (dom.contains(st.at(mid)) ? lo : hi) = mid;
        }
        const Vec2 q = st.at(lo);
        res.segment.samples.push_back({t + lo * h, {std::clamp(q.x, dom.x_min, dom.x_max), std::clamp(q.y, dom.y_min, dom.y_max)}});
        res.segment.t_b = t + lo * h;
        res.exit = SlidingExit::left_domain;
        return res;
      }
      t = last ? t_end : t + h;
      y = project_to_curve(s, curve, st.y1);
      res.segment.samples.push_back({t, y});
      k1 = field(y);
      if (norm(k1) <= kPseudoEqTol) {
        res.exit = SlidingExit::pseudo_eq;
        res.segment.t_b = t;
        return res;
      }
      h = std::min(h * ode::step_factor(st.error), opt_.max_step);
    }
  } catch (const EvaluationError& e) {
    res.exit = SlidingExit::failure;
    res.failure = TerminalReason::evaluation_error;
    res.detail = e.what();
    res.segment.t_b = t;
    return res;
  } catch (const DomainError& e) {
    res.exit = SlidingExit::failure;
    res.failure = TerminalReason::unclassifiable;
    res.detail = e.what();
    res.segment.t_b = t;
    return res;
  }
  res.segment.t_b = t_end;
  return res;
}

namespace detail {

inline OrbitSegment marker(SegmentKind kind, int curve, double t, const Vec2& p) {
  OrbitSegment m;
  m.kind = kind;
  m.curve = curve;
  m.t_a = m.t_b = t;
  m.samples.push_back({t, p});
  return m;
}

inline SigmaAction terminal_action(const Vec2& p, TerminalReason why, std::string detail) {
  SigmaAction a;
  a.kind = SigmaAction::Kind::terminal;
  a.point = p;
  a.reason = why;
  a.detail = std::move(detail);
  return a;
}

inline SigmaAction enter(const Vec2& p, int region) {
  SigmaAction a;
  a.kind = SigmaAction::Kind::enter_region;
  a.point = p;
  a.region = region;
  return a;
}

}  // namespace detail

inline SigmaAction Integrator::escaping_encounter(const FilippovSystem& s, int curve, const Vec2& p, double t,
                                                  const BranchPolicy& policy, std::size_t encounter) const {
  const auto& c = s.curve(curve);
  const EscapeDecision d = policy.decide(encounter);
  SigmaAction a;
  a.point = p;
  a.used_decision = true;
  BranchChoice choice;
  choice.point = p;
  choice.t = t;
  choice.kind = d.slide_on ? ChoiceKind::slide_on : ChoiceKind::escape_exit;
  choice.side = d.side;
  choice.dwell = d.slide_on ? 0.0 : d.dwell;
  a.choice = choice;
  if (d.slide_on || d.dwell > 0.0) {
    a.kind = SigmaAction::Kind::slide;
    a.escaping = true;
    if (!d.slide_on) a.slide_limit = d.dwell;
    a.exit_side = d.side;
    return a;
  }
  a.kind = SigmaAction::Kind::enter_region;
  a.region = d.side == Side::up ? c.positive_region : c.negative_region;
  OrbitSegment m = detail::marker(SegmentKind::escape_departure, curve, t, p);
  m.side = d.side;
  a.marker = std::move(m);
  return a;
}

inline SigmaAction Integrator::tangency_exit(const FilippovSystem& s, int curve, const Vec2& p, double t,
                                             int tangent_region, bool from_slide) const {
  const auto& c = s.curve(curve);
  const int other = tangent_region == c.positive_region ? c.negative_region : c.positive_region;
  const double l_other = s.lie(curve, other, p);
  const bool other_leaves = (other == c.positive_region) ? l_other > 0.0 : l_other < 0.0;
  SigmaAction a = detail::enter(p, other_leaves ? other : tangent_region);
  if (from_slide) a.choice = BranchChoice{p, t, ChoiceKind::sliding_exit_at_tangency, Side::up, 0.0};
  if (from_slide) a.choice->side = a.region == c.positive_region ? Side::up : Side::down;
  return a;
}

inline SigmaAction Integrator::on_sigma(const FilippovSystem& s, int curve, Vec2 p, double t, int incoming,
                                        const BranchPolicy& policy, std::size_t encounter) const {
  (void)incoming;
  const auto& c = s.curve(curve);
  PointClass pc;
  try {
    p = project_to_curve(s, curve, p);
    pc = classify_point(s, curve, p);
  } catch (const Error& e) {
    return detail::terminal_action(p, TerminalReason::unclassifiable, e.what());
  }
  switch (pc.kind) {
    case PointKind::crossing: {
      SigmaAction a = detail::enter(p, pc.l1 > 0.0 ? c.positive_region : c.negative_region);
      a.marker = detail::marker(SegmentKind::crossing_event, curve, t, p);
      return a;
    }
    case PointKind::sliding: {
      SigmaAction a;
      a.kind = SigmaAction::Kind::slide;
      a.point = p;
      return a;
    }
    case PointKind::escaping:
      return escaping_encounter(s, curve, p, t, policy, encounter);
    case PointKind::pseudo_equilibrium:
      return detail::terminal_action(p, TerminalReason::pseudo_equilibrium, "pseudo-equilibrium reached");
    case PointKind::tangency:
      break;
  }
  if (pc.tangency == TangencyKind::double_tangency) {
    SigmaAction a = detail::terminal_action(p, TerminalReason::double_tangency, "double tangency");
    a.choice = BranchChoice{p, t, ChoiceKind::double_tangency_stop, Side::up, 0.0};
    return a;
  }
  const bool first_tangent = std::abs(pc.l1) <= kLieDeadband;
  const int tangent = first_tangent ? c.positive_region : c.negative_region;
  const int other = first_tangent ? c.negative_region : c.positive_region;
  const double l_other = first_tangent ? pc.l2 : pc.l1;
  const bool other_leaves = other == c.positive_region ? l_other > 0.0 : l_other < 0.0;

  // Which neighbouring arc does the sliding field run into from here?
  bool sliding_ahead = false, escaping_ahead = false;
  const Vec2 tan = c.tangent(p);
  for (double sgn : {1.0, -1.0}) {
    const double step = 1e-6 * std::max(1.0, std::max(s.domain().width(), s.domain().height()));
    Vec2 n;
    try {
      n = project_to_curve(s, curve, p + (sgn * step) * tan);
    } catch (const DomainError&) {
      continue;
    }
    const SigmaLocal loc = sigma_local(s, curve, n);
    const PointClass pn = classify_witnesses(loc.l1, loc.l2);
    if (pn.kind != PointKind::sliding && pn.kind != PointKind::escaping) continue;
    if (dot(sliding_field_quotient(loc), sgn * tan) <= 0.0) continue;
    (pn.kind == PointKind::sliding ? sliding_ahead : escaping_ahead) = true;
  }
  if (other_leaves) {
    if (escaping_ahead) return escaping_encounter(s, curve, p, t, policy, encounter);
    return detail::enter(p, other);
  }
  if (sliding_ahead) {
    SigmaAction a;
    a.kind = SigmaAction::Kind::slide;
    a.point = p;
    return a;
  }
  return detail::enter(p, tangent);
}

inline Orbit Integrator::integrate(Vec2 p, double horizon, Direction dir, const BranchPolicy& policy) const {
  if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
  const FilippovSystem& s = system(dir);
  const Domain& dom = s.domain();
  if (!dom.periodic() && !dom.contains(p)) throw DomainError("start point outside the domain");
  p = dom.canonical(p);

  Orbit orbit;
  orbit.initial = p;
  orbit.direction = dir;
  orbit.horizon = horizon;
  auto stop = [&](double t, const Vec2& q, TerminalReason why, std::string detail) {
    OrbitSegment seg = detail::marker(SegmentKind::terminal, -1, t, q);
    seg.reason = why;
    seg.detail = std::move(detail);
    orbit.segments.push_back(std::move(seg));
    return orbit;
  };

  double t = 0.0;
  std::size_t encounter = 0;
  std::size_t events = 0, stalled = 0;
  double last_event_t = -1.0;
  int region = -1, curve = -1, incoming = -1;
  const RegionLookup start = s.region_of(p);
  if (start.on_sigma) {
    curve = start.id;
  } else {
    region = start.id;
  }

  while (true) {
    if (region >= 0) {
      RegularResult rr = regular(s, p, region, t, horizon);
      t = rr.segment.t_b;
      p = rr.segment.end();
      orbit.segments.push_back(std::move(rr.segment));
      switch (rr.hit) {
        case RegularHit::none: return orbit;
        case RegularHit::left_domain: return stop(t, p, TerminalReason::left_domain, "left the domain");
        case RegularHit::failure: return stop(t, p, rr.failure, rr.detail);
        case RegularHit::curve:
        case RegularHit::tangency: break;
      }
      curve = rr.curve;
      incoming = region;
      region = -1;
    }

    if (++events > opt_.max_events) return stop(t, p, TerminalReason::unclassifiable, "event limit reached");
    stalled = t - last_event_t < 1e-12 ? stalled + 1 : 0;
    last_event_t = t;
    if (stalled > 64) return stop(t, p, TerminalReason::unclassifiable, "no progress between events");

    const SigmaAction act = on_sigma(s, curve, p, t, incoming, policy, encounter);
    incoming = -1;
    if (act.used_decision) ++encounter;
    if (act.choice) orbit.branches.push_back(*act.choice);
    if (act.marker) orbit.segments.push_back(*act.marker);
    p = act.point;
    if (act.kind == SigmaAction::Kind::terminal) return stop(t, p, act.reason, act.detail);
    if (act.kind == SigmaAction::Kind::enter_region) {
      region = act.region;
      continue;
    }

    const double until = std::min(horizon, t + act.slide_limit);
    SlidingResult sr = sliding(s, curve, p, t, until, act.escaping);
    t = sr.segment.t_b;
    p = sr.segment.end();
    orbit.segments.push_back(std::move(sr.segment));
    switch (sr.exit) {
      case SlidingExit::t_max: {
        if (t >= horizon) return orbit;
        // Dwell used up on an escaping arc.
        const auto& c = s.curve(curve);
        OrbitSegment m = detail::marker(SegmentKind::escape_departure, curve, t, p);
        m.side = act.exit_side;
        orbit.segments.push_back(std::move(m));
        region = act.exit_side == Side::up ? c.positive_region : c.negative_region;
        break;
      }
      case SlidingExit::tangency: {
        if (sr.double_tangency) {
          orbit.branches.push_back({p, t, ChoiceKind::double_tangency_stop, Side::up, 0.0});
          return stop(t, p, TerminalReason::double_tangency, "double tangency");
        }
        const SigmaAction ex = tangency_exit(s, curve, p, t, sr.tangent_region, true);
        if (ex.choice) orbit.branches.push_back(*ex.choice);
        region = ex.region;
        break;
      }
      case SlidingExit::pseudo_eq: return stop(t, p, TerminalReason::pseudo_equilibrium, "pseudo-equilibrium reached");
      case SlidingExit::left_domain: return stop(t, p, TerminalReason::left_domain, "left the domain");
      case SlidingExit::failure: return stop(t, p, sr.failure, sr.detail);
    }
  }
}

inline std::vector<Orbit> Integrator::enumerate_branches(Vec2 p, double horizon, std::size_t budget,
                                                         const std::vector<double>& dwell_grid,
                                                         std::size_t max_depth, Direction dir,
                                                         const BranchPolicy& fallback) const {
  std::vector<Orbit> out;
  for (auto& b : enumerate(p, horizon, budget, dwell_grid, max_depth, dir, fallback)) out.push_back(std::move(b.orbit));
  return out;
}

inline std::vector<Branch> Integrator::enumerate(Vec2 p, double horizon, std::size_t budget,
                                                 const std::vector<double>& dwell_grid, std::size_t max_depth,
                                                 Direction dir, const BranchPolicy& fallback) const {
  if (budget == 0) throw ConfigError("branching budget must be >= 1");
  std::vector<EscapeDecision> forks;
  for (double d : dwell_grid) {
    if (!(d >= 0.0)) throw ConfigError("dwell grid entries must be >= 0");
    forks.push_back({false, d, Side::up});
    forks.push_back({false, d, Side::down});
  }
  forks.push_back({true, 0.0, Side::up});

  std::vector<Branch> out;
  auto decisions = [](const Orbit& o) {
    return static_cast<std::size_t>(std::count_if(o.branches.begin(), o.branches.end(), [](const BranchChoice& b) {
      return b.kind == ChoiceKind::escape_exit || b.kind == ChoiceKind::slide_on;
    }));
  };
  // Depth-first over scripted decisions; children in fork order.
  auto explore = [&](auto&& self, const std::vector<EscapeDecision>& script) -> void {
    if (out.size() >= budget) return;
    BranchPolicy pol = fallback;
    pol.script = script;
    Orbit o = integrate(p, horizon, dir, pol);
    if (decisions(o) > script.size() && script.size() < max_depth) {
      for (const auto& f : forks) {
        auto next = script;
        next.push_back(f);
        self(self, next);
        if (out.size() >= budget) return;
      }
      return;
    }
    out.push_back({std::move(pol), std::move(o)});
  };
  try {
    explore(explore, {});
  } catch (const Error&) {
    if (out.empty()) return {};
    throw;
  }
  return out;
}

}  // namespace filippov

#endif  // FILIPPOV_INTEGRATOR_HPP
