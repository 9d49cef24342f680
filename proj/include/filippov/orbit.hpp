#ifndef FILIPPOV_ORBIT_HPP
#define FILIPPOV_ORBIT_HPP

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "filippov/error.hpp"
#include "filippov/vec2.hpp"

namespace filippov {

/// Side of a switching curve: up is h > 0, down is h < 0.
enum class Side { up, down };

enum class SegmentKind { regular_arc, sliding_arc, crossing_event, escape_departure, terminal };

enum class TerminalReason {
  none,
  left_domain,
  double_tangency,
  pseudo_equilibrium,
  unclassifiable,
  step_underflow,
  evaluation_error,
};

enum class Direction { forward, backward };

inline const char* to_string(Side s) { return s == Side::up ? "up" : "down"; }
inline const char* to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

inline const char* to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::regular_arc: return "regular_arc";
    case SegmentKind::sliding_arc: return "sliding_arc";
    case SegmentKind::crossing_event: return "crossing_event";
    case SegmentKind::escape_departure: return "escape_departure";
    case SegmentKind::terminal: return "terminal";
  }
  return "?";
}

inline const char* to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::none: return "none";
    case TerminalReason::left_domain: return "left_domain";
    case TerminalReason::double_tangency: return "double_tangency_stop";
    case TerminalReason::pseudo_equilibrium: return "pseudo_equilibrium";
    case TerminalReason::unclassifiable: return "unclassifiable";
    case TerminalReason::step_underflow: return "step_underflow";
    case TerminalReason::evaluation_error: return "evaluation_error";
  }
  return "?";
}

struct Sample {
  double t = 0.0;
  Vec2 p;
};

struct OrbitSegment {
  SegmentKind kind = SegmentKind::regular_arc;
  int region = -1;        // regular_arc
  int curve = -1;         // sliding_arc, crossing_event, escape_departure
  bool escaping = false;  // sliding_arc running along an escaping arc
  Side side = Side::up;   // escape_departure
  TerminalReason reason = TerminalReason::none;
  std::string detail;     // terminal diagnostic
  double t_a = 0.0;
  double t_b = 0.0;
  std::vector<Sample> samples;

  Vec2 start() const { return samples.front().p; }
  Vec2 end() const { return samples.back().p; }
};

enum class ChoiceKind { escape_exit, slide_on, sliding_exit_at_tangency, double_tangency_stop };

inline const char* to_string(ChoiceKind k) {
  switch (k) {
    case ChoiceKind::escape_exit: return "escape_exit";
    case ChoiceKind::slide_on: return "slide_on";
    case ChoiceKind::sliding_exit_at_tangency: return "sliding_exit_at_tangency";
    case ChoiceKind::double_tangency_stop: return "double_tangency_stop";
  }
  return "?";
}

struct BranchChoice {
  Vec2 point;
  double t = 0.0;
  ChoiceKind kind = ChoiceKind::escape_exit;
  Side side = Side::up;
  double dwell = 0.0;
};

/// What to do at one escaping encounter: leave after `dwell` on `side`, or
/// ride the escaping arc to its end.
struct EscapeDecision {
  bool slide_on = false;
  double dwell = 0.0;
  Side side = Side::up;

  friend bool operator==(const EscapeDecision&, const EscapeDecision&) = default;
};

enum class PolicyKind { exit_immediately_up, exit_immediately_down, slide_until_tangency, dwell_then_exit };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::exit_immediately_up: return "exit_immediately_up";
    case PolicyKind::exit_immediately_down: return "exit_immediately_down";
    case PolicyKind::slide_until_tangency: return "slide_until_tangency";
    case PolicyKind::dwell_then_exit: return "dwell_then_exit";
  }
  return "?";
}

struct BranchPolicy {
  PolicyKind kind = PolicyKind::exit_immediately_up;
  double dwell = 0.0;
  Side side = Side::up;
  std::uint64_t seed = 0;
  // Decisions for the first encounters, in order; later encounters use `kind`.
  std::vector<EscapeDecision> script;

  static BranchPolicy make(PolicyKind kind, double dwell = 0.0, Side side = Side::up) {
    BranchPolicy p;
    p.kind = kind;
    p.dwell = dwell;
    p.side = side;
    return p;
  }
  static BranchPolicy exit_up() { return make(PolicyKind::exit_immediately_up); }
  static BranchPolicy exit_down() { return make(PolicyKind::exit_immediately_down, 0.0, Side::down); }
  static BranchPolicy slide() { return make(PolicyKind::slide_until_tangency); }
  static BranchPolicy dwell_exit(double dwell, Side side) {
    if (!(dwell >= 0.0)) throw ConfigError("dwell must be >= 0");
    return make(PolicyKind::dwell_then_exit, dwell, side);
  }

  EscapeDecision decide(std::size_t encounter) const {
    if (encounter < script.size()) return script[encounter];
    switch (kind) {
      case PolicyKind::exit_immediately_up: return {false, 0.0, Side::up};
      case PolicyKind::exit_immediately_down: return {false, 0.0, Side::down};
      case PolicyKind::slide_until_tangency: return {true, 0.0, Side::up};
      case PolicyKind::dwell_then_exit: return {false, dwell, side};
    }
    return {};
  }

  /// Compact name used by the CLI and in reports: exit_up, exit_down, slide,
  /// dwell:<t>:<up|down>.
  std::string name() const {
    switch (kind) {
      case PolicyKind::exit_immediately_up: return "exit_up";
      case PolicyKind::exit_immediately_down: return "exit_down";
      case PolicyKind::slide_until_tangency: return "slide";
      case PolicyKind::dwell_then_exit: {
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof buf, dwell);
        return "dwell:" + std::string(buf, r.ptr) + ":" + to_string(side);
      }
    }
    return "?";
  }

  static BranchPolicy parse(const std::string& s) {
    if (s == "exit_up" || s == "exit_immediately_up") return exit_up();
    if (s == "exit_down" || s == "exit_immediately_down") return exit_down();
    if (s == "slide" || s == "slide_until_tangency") return slide();
    if (s.rfind("dwell:", 0) == 0) {
      const auto colon = s.find(':', 6);
      if (colon != std::string::npos) {
        double d = 0.0;
        const char* first = s.data() + 6;
        const auto r = std::from_chars(first, s.data() + colon, d);
        const std::string side = s.substr(colon + 1);
        if (r.ec == std::errc() && r.ptr == s.data() + colon && (side == "up" || side == "down")) {
          return dwell_exit(d, side == "up" ? Side::up : Side::down);
        }
      }
    }
    throw ConfigError("unknown branch policy '" + s + "'");
  }
};

struct Orbit {
  Vec2 initial;
  Direction direction = Direction::forward;
  double horizon = 0.0;
  std::vector<OrbitSegment> segments;
  std::vector<BranchChoice> branches;

  TerminalReason terminal_reason() const {
    if (!segments.empty() && segments.back().kind == SegmentKind::terminal) return segments.back().reason;
    return TerminalReason::none;
  }
  double end_time() const { return segments.empty() ? 0.0 : segments.back().t_b; }
  Vec2 end_point() const { return segments.empty() ? initial : segments.back().end(); }

  /// Every sample in time order (duplicated segment joints included).
  std::vector<Sample> trace() const {
    std::vector<Sample> out;
    for (const auto& s : segments) out.insert(out.end(), s.samples.begin(), s.samples.end());
    return out;
  }
};

/// An orbit together with the policy that reproduces it.
struct Branch {
  BranchPolicy policy;
  Orbit orbit;
};

}  // namespace filippov

#endif  // FILIPPOV_ORBIT_HPP
