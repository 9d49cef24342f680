#ifndef FILIPPOV_ORBIT_IO_HPP
#define FILIPPOV_ORBIT_IO_HPP

#include <ostream>
#include <string>

#include "json.hpp"

#include "filippov/format.hpp"
#include "filippov/orbit.hpp"

namespace filippov {

using Json = nlohmann::ordered_json;

inline Json to_json(const Vec2& p) { return Json::array({p.x, p.y}); }

/// CSV trace: one row per sample, segment joints repeated.
inline void write_orbit_csv(const Orbit& orbit, std::ostream& out) {
  out << "t,x,y,segment_kind,segment_index\n";
  for (std::size_t i = 0; i < orbit.segments.size(); ++i) {
    const auto& seg = orbit.segments[i];
    for (const auto& s : seg.samples) {
      out << format_double(s.t) << ',' << format_double(s.p.x) << ',' << format_double(s.p.y) << ','
          << to_string(seg.kind) << ',' << i << '\n';
    }
  }
}

inline Json segment_json(const OrbitSegment& seg, std::size_t index) {
  Json j;
  j["index"] = index;
  j["kind"] = to_string(seg.kind);
  switch (seg.kind) {
    case SegmentKind::regular_arc: j["region"] = seg.region; break;
    case SegmentKind::sliding_arc:
      j["curve"] = seg.curve;
      j["escaping"] = seg.escaping;
      break;
    case SegmentKind::crossing_event: j["curve"] = seg.curve; break;
    case SegmentKind::escape_departure:
      j["curve"] = seg.curve;
      j["side"] = to_string(seg.side);
      break;
    case SegmentKind::terminal:
      j["reason"] = to_string(seg.reason);
      j["detail"] = seg.detail;
      break;
  }
  j["t_a"] = seg.t_a;
  j["t_b"] = seg.t_b;
  j["start"] = to_json(seg.start());
  j["end"] = to_json(seg.end());
  j["samples"] = seg.samples.size();
  return j;
}

inline Json branch_json(const BranchChoice& b) {
  Json j;
  j["t"] = b.t;
  j["point"] = to_json(b.point);
  j["kind"] = to_string(b.kind);
  if (b.kind == ChoiceKind::escape_exit || b.kind == ChoiceKind::sliding_exit_at_tangency) {
    j["side"] = to_string(b.side);
  }
  if (b.kind == ChoiceKind::escape_exit) j["dwell"] = b.dwell;
  return j;
}

inline Json policy_json(const BranchPolicy& p) {
  Json j;
  j["fallback"] = p.name();
  Json script = Json::array();
  for (const auto& d : p.script) {
    Json e;
    if (d.slide_on) {
      e["slide_on"] = true;
    } else {
      e["dwell"] = d.dwell;
      e["side"] = to_string(d.side);
    }
    script.push_back(std::move(e));
  }
  j["script"] = std::move(script);
  return j;
}

/// Summary: segments without their samples, branch record, terminal reason.
inline Json orbit_summary_json(const Orbit& orbit) {
  Json j;
  j["initial"] = to_json(orbit.initial);
  j["direction"] = to_string(orbit.direction);
  j["horizon"] = orbit.horizon;
  j["end_time"] = orbit.end_time();
  j["end_point"] = to_json(orbit.end_point());
  j["terminal_reason"] = to_string(orbit.terminal_reason());
  Json segs = Json::array();
  for (std::size_t i = 0; i < orbit.segments.size(); ++i) segs.push_back(segment_json(orbit.segments[i], i));
  j["segments"] = std::move(segs);
  Json br = Json::array();
  for (const auto& b : orbit.branches) br.push_back(branch_json(b));
  j["branches"] = std::move(br);
  return j;
}

}  // namespace filippov

#endif  // FILIPPOV_ORBIT_IO_HPP
