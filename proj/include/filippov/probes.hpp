#ifndef FILIPPOV_PROBES_HPP
#define FILIPPOV_PROBES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "filippov/coverage.hpp"
#include "filippov/integrator.hpp"

namespace filippov {

struct ProbeConfig {
  double horizon = 10.0;
  std::vector<double> dwell_grid{0.0};
  std::size_t max_depth = 1;
  std::size_t budget = 1000;  // orbits examined per probe
  int rings = 1;              // seed rings inside a disk besides its center
  double dt = 0.01;           // time grid for separation checks
};

/// Center of the disk followed by `rings` concentric rings of 6k points.
inline std::vector<Vec2> disk_points(const Disk& d, int rings) {
  std::vector<Vec2> out{d.center};
  constexpr double two_pi = 6.283185307179586;
  for (int r = 1; r <= rings; ++r) {
    const double rad = d.radius * r / (rings + 0.5);
    for (int k = 0; k < 6 * r; ++k) {
      const double a = two_pi * k / (6 * r);
      out.push_back(d.center + Vec2{rad * std::cos(a), rad * std::sin(a)});
    }
  }
  return out;
}

struct TransitivityResult {
  Disk u;
  Disk v;
  bool found = false;
  Vec2 seed;
  BranchPolicy policy;
  double entry_time = 0.0;
  std::size_t orbits = 0;  // orbits examined
  Orbit orbit;
};

/// Looks for a forward orbit from U, over every branch within the budget,
/// whose trace enters V.
inline TransitivityResult transitivity_probe(const Integrator& in, const Disk& u, const Disk& v,
                                             const ProbeConfig& cfg) {
  TransitivityResult res;
  res.u = u;
  res.v = v;
  const Domain& dom = in.system().domain();
  for (const Vec2& raw : disk_points(u, cfg.rings)) {
    if (res.orbits >= cfg.budget) break;
    const Vec2 seed = dom.canonical(raw);
    if (!dom.contains(seed)) continue;
    auto branches = in.enumerate(seed, cfg.horizon, cfg.budget - res.orbits, cfg.dwell_grid, cfg.max_depth);
    for (auto& b : branches) {
      ++res.orbits;
      if (auto t = first_entry(dom, b.orbit.trace(), v)) {
        res.found = true;
        res.seed = seed;
        res.policy = b.policy;
        res.entry_time = *t;
        res.orbit = std::move(b.orbit);
        return res;
      }
    }
  }
  return res;
}

/// Positions on the grid t = k dt while the orbit lasts.
inline std::vector<Vec2> resample(const Domain& dom, const Orbit& o, double dt) {
  std::vector<Vec2> out;
  const double end = o.end_time();
  std::size_t k = 0;
  for (const auto& seg : o.segments) {
    for (std::size_t i = 1; i < seg.samples.size(); ++i) {
      const Sample& a = seg.samples[i - 1];
      const Sample& b = seg.samples[i];
      for (double t = k * dt; t <= b.t && t <= end; t = (++k) * dt) {
        const double w = b.t > a.t ? std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0) : 0.0;
        out.push_back(dom.canonical(a.p + w * dom.displacement(a.p, b.p)));
      }
    }
  }
  return out;
}

struct SensitivityWitness {
  Vec2 x;
  Vec2 y;
  BranchPolicy policy_x;
  BranchPolicy policy_y;
  double t = 0.0;
  double distance = 0.0;  // at time t, from re-integrated orbits
};

struct SensitivityResult {
  Disk disk;
  double r = 0.0;
  std::optional<SensitivityWitness> witness;
  std::size_t orbits = 0;
};

/// Searches points x, y of the disk (x = y allowed) and branches through
/// them whose positions at a common time are more than r apart. A candidate
/// is accepted only after both orbits are integrated again up to that time
/// and their endpoints still separate by more than r.
inline SensitivityResult sensitivity_probe(const Integrator& in, const Disk& disk, double r, const ProbeConfig& cfg) {
  SensitivityResult res;
  res.disk = disk;
  res.r = r;
  const Domain& dom = in.system().domain();
  struct Entry {
    Vec2 start;
    BranchPolicy policy;
    std::vector<Vec2> path;
  };
  std::vector<Entry> entries;
  for (const Vec2& raw : disk_points(disk, cfg.rings)) {
    if (res.orbits >= cfg.budget) break;
    const Vec2 p = dom.canonical(raw);
    if (!dom.contains(p)) continue;
    for (auto& b : in.enumerate(p, cfg.horizon, cfg.budget - res.orbits, cfg.dwell_grid, cfg.max_depth)) {
      ++res.orbits;
      entries.push_back({p, std::move(b.policy), resample(dom, b.orbit, cfg.dt)});
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      const auto& a = entries[i];
      const auto& b = entries[j];
      const std::size_t n = std::min(a.path.size(), b.path.size());
      for (std::size_t k = 1; k < n; ++k) {
        if (dom.distance(a.path[k], b.path[k]) <= r) continue;
        const double t = k * cfg.dt;
        const Orbit oa = in.integrate(a.start, t, Direction::forward, a.policy);
        const Orbit ob = in.integrate(b.start, t, Direction::forward, b.policy);
        if (oa.end_time() < t - 1e-9 || ob.end_time() < t - 1e-9) break;
        const double d = dom.distance(oa.end_point(), ob.end_point());
        if (d > r) {
          res.witness = SensitivityWitness{a.start, b.start, a.policy, b.policy, t, d};
          return res;
        }
      }
    }
  }
  return res;
}

}  // namespace filippov

#endif  // FILIPPOV_PROBES_HPP
