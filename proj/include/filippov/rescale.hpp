#ifndef FILIPPOV_RESCALE_HPP
#define FILIPPOV_RESCALE_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "filippov/orbit.hpp"
#include "filippov/sigma.hpp"
#include "filippov/system.hpp"

namespace filippov {

/// Speed factor g(p) = prod_j min(1, (d(p, T_j) / rho)^2). It vanishes
/// exactly at the given points, so orbits reach them only as t -> infinity,
/// and equals 1 farther than rho from all of them.
inline SpeedFactor tangency_freeze_factor(const Domain& dom, std::vector<Vec2> points, double rho = 1.0) {
  if (!(rho > 0.0)) throw ConfigError("freeze radius must be > 0");
  return [dom, pts = std::move(points), rho](const Vec2& p) {
    double g = 1.0;
    for (const auto& t : pts) {
      const double d = dom.distance(p, t) / rho;
      g *= std::min(1.0, d * d);
    }
    return g;
  };
}

/// The system with every field slowed to a stop at each tangency point of
/// every curve. Orbits keep their traces; only the time parametrisation
/// changes.
inline FilippovSystem rescale_tangency_freeze(const FilippovSystem& sys, double rho = 1.0, int resolution = 2000) {
  std::vector<Vec2> pts;
  for (const auto& c : sys.curves()) {
    for (const auto& t : find_tangency_points(sys, c.id, resolution)) pts.push_back(t.position);
  }
  return sys.with_speed_factor(tangency_freeze_factor(sys.domain(), std::move(pts), rho));
}

namespace detail {

/// Trace points with chords subdivided to spacing at most `step`.
inline std::vector<Vec2> densify(const Domain& dom, const std::vector<Sample>& trace, double step) {
  std::vector<Vec2> out;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (k == 0) {
      out.push_back(trace[0].p);
      continue;
    }
    const Vec2 a = trace[k - 1].p;
    const Vec2 d = dom.displacement(a, trace[k].p);
    const int n = std::max(1, static_cast<int>(std::ceil(norm(d) / step)));
    for (int i = 1; i <= n; ++i) out.push_back(dom.canonical(a + (static_cast<double>(i) / n) * d));
  }
  return out;
}

inline double directed_hausdorff(const Domain& dom, const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double worst = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, dom.distance(p, q));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace detail

/// Hausdorff distance between two orbit traces, treated as polylines
/// sampled every `step`.
inline double trace_hausdorff(const Domain& dom, const Orbit& a, const Orbit& b, double step = 1e-3) {
  const auto pa = detail::densify(dom, a.trace(), step);
  const auto pb = detail::densify(dom, b.trace(), step);
  return std::max(detail::directed_hausdorff(dom, pa, pb), detail::directed_hausdorff(dom, pb, pa));
}

}  // namespace filippov

#endif  // FILIPPOV_RESCALE_HPP
