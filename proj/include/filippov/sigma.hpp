#ifndef FILIPPOV_SIGMA_HPP
#define FILIPPOV_SIGMA_HPP

// Points of the switching manifold: crossing, sliding, escaping, tangency and
// pseudo-equilibrium classes, the sliding vector field, and scans along each
// switching curve that locate tangencies and pseudo-equilibria.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "filippov/error.hpp"
#include "filippov/system.hpp"
#include "filippov/vec2.hpp"

namespace filippov {

inline constexpr double kLieDeadband = 1e-9;       // tau_c
inline constexpr double kPseudoEqTol = 1e-10;      // |Z_s| at a pseudo-equilibrium
inline constexpr double kTangencyRefineTol = 1e-12;
inline constexpr double kTangencyDedup = 1e-8;

enum class PointKind { crossing, sliding, escaping, tangency, pseudo_equilibrium };
enum class TangencyKind { none, regular, double_tangency };

inline const char* to_string(PointKind k) {
  switch (k) {
    case PointKind::crossing: return "crossing";
    case PointKind::sliding: return "sliding";
    case PointKind::escaping: return "escaping";
    case PointKind::tangency: return "tangency";
    case PointKind::pseudo_equilibrium: return "pseudo_equilibrium";
  }
  return "?";
}

/// Class of a point of Sigma with its witnesses L1 = Y1 h, L2 = Y2 h, where
/// Y1 is the field on h > 0 and Y2 the field on h < 0.
struct PointClass {
  PointKind kind = PointKind::crossing;
  TangencyKind tangency = TangencyKind::none;
  bool sliding_type = false;  // pseudo-equilibria: true inside a sliding arc, false inside an escaping arc
  double l1 = 0.0;
  double l2 = 0.0;

  bool sliding_or_escaping() const {
    return kind == PointKind::sliding || kind == PointKind::escaping || kind == PointKind::pseudo_equilibrium;
  }
};

/// Witness pair and both adjacent fields at a point.
struct SigmaLocal {
  Vec2 y1;
  Vec2 y2;
  Vec2 grad;
  double l1 = 0.0;
  double l2 = 0.0;
};

inline SigmaLocal sigma_local(const FilippovSystem& sys, int curve_id, const Vec2& p_in) {
  const Vec2 p = sys.domain().canonical(p_in);
  const auto& c = sys.curve(curve_id);
  SigmaLocal s;
  s.grad = c.gradient(p);
  s.y1 = sys.region_field(c.positive_region, p);
  s.y2 = sys.region_field(c.negative_region, p);
  s.l1 = dot(s.grad, s.y1);
  s.l2 = dot(s.grad, s.y2);
  if (!std::isfinite(s.l1) || !std::isfinite(s.l2)) throw EvaluationError("non-finite Lie derivative");
  return s;
}

/// Sign table only; no pseudo-equilibrium refinement.
inline PointClass classify_witnesses(double l1, double l2) {
  PointClass pc;
  pc.l1 = l1;
  pc.l2 = l2;
  const bool t1 = std::abs(l1) <= kLieDeadband;
  const bool t2 = std::abs(l2) <= kLieDeadband;
  if (t1 || t2) {
    pc.kind = PointKind::tangency;
    pc.tangency = (t1 && t2) ? TangencyKind::double_tangency : TangencyKind::regular;
  } else if ((l1 > 0.0) == (l2 > 0.0)) {
    pc.kind = PointKind::crossing;
  } else if (l1 < 0.0) {
    pc.kind = PointKind::sliding;
  } else {
    pc.kind = PointKind::escaping;
  }
  return pc;
}

/// Z_s = (L2 Y1 - L1 Y2) / (L2 - L1).
inline Vec2 sliding_field_quotient(const SigmaLocal& s) {
  const double den = s.l2 - s.l1;
  return (s.l2 * s.y1 - s.l1 * s.y2) / den;
}

/// lambda with Z_s = lambda Y1 + (1 - lambda) Y2.
inline double sliding_lambda(const SigmaLocal& s) { return s.l2 / (s.l2 - s.l1); }

inline Vec2 sliding_field_convex(const SigmaLocal& s) {
  const double lambda = sliding_lambda(s);
  return lambda * s.y1 + (1.0 - lambda) * s.y2;
}

/// Classifies a point of curve `curve_id`. Throws DomainError when p is not
/// on the curve (|h(p)| > kSigmaBand).
inline PointClass classify_point(const FilippovSystem& sys, int curve_id, const Vec2& p) {
  const auto& c = sys.curve(curve_id);
  const Vec2 q = sys.domain().canonical(p);
  if (std::abs(c.value(q)) > kSigmaBand) {
    throw DomainError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is not on curve " +
                      std::to_string(curve_id));
  }
  const SigmaLocal s = sigma_local(sys, curve_id, q);
  PointClass pc = classify_witnesses(s.l1, s.l2);
  if (pc.kind == PointKind::sliding || pc.kind == PointKind::escaping) {
    if (norm(sliding_field_quotient(s)) <= kPseudoEqTol) {
      pc.sliding_type = pc.kind == PointKind::sliding;
      pc.kind = PointKind::pseudo_equilibrium;
    }
  }
  return pc;
}

/// Filippov sliding vector field on curve `curve_id` at p. Defined on
/// sliding, escaping and pseudo-equilibrium points, and at regular
/// tangencies where it reduces to the tangent field.
inline Vec2 sliding_vector_field(const FilippovSystem& sys, int curve_id, const Vec2& p) {
  const SigmaLocal s = sigma_local(sys, curve_id, p);
  if (std::abs(s.l2 - s.l1) <= kLieDeadband) {
    throw DomainError("sliding field undefined: |L2 - L1| below deadband on curve " + std::to_string(curve_id));
  }
  const PointClass pc = classify_witnesses(s.l1, s.l2);
  if (pc.kind == PointKind::crossing) {
    throw DomainError("sliding field undefined at a crossing point of curve " + std::to_string(curve_id));
  }
  return sliding_field_quotient(s);
}

/// Newton projection onto h = 0 along grad h.
inline Vec2 project_to_curve(const FilippovSystem& sys, int curve_id, Vec2 p, int max_iter = 8) {
  const auto& c = sys.curve(curve_id);
  for (int it = 0; it < max_iter; ++it) {
    const double h = c.value(p);
    if (std::abs(h) <= 1e-15) break;
    const Vec2 g = c.gradient(p);
    const double gg = dot(g, g);
    if (std::sqrt(gg) < kMinGradient) throw DomainError("projection failure: grad h below regular-value threshold");
    p -= (h / gg) * g;
  }
  return sys.domain().canonical(p);
}

// ---------------------------------------------------------------------------
// Curve tracing

/// One connected piece of h_i = 0, sampled at (nearly) uniform arclength.
struct CurveComponent {
  int curve = 0;
  int index = 0;
  bool closed = false;
  double length = 0.0;
  std::vector<Vec2> points;  // closed: the last point connects back to the first
};

namespace detail {

inline std::vector<Vec2> curve_seeds(const FilippovSystem& sys, const SwitchingCurve& c, int n = 256) {
  const Domain& d = sys.domain();
  const double dx = d.width() / n, dy = d.height() / n;
  std::vector<Vec2> seeds;
  auto edge = [&](Vec2 a, Vec2 b) {
    double fa = c.value(a);
    const double fb = c.value(b);
    if (fa == 0.0) {
      seeds.push_back(a);
      return;
    }
    if ((fa > 0.0) == (fb > 0.0) || fb == 0.0) return;
    for (int it = 0; it < 60; ++it) {
      const Vec2 m = 0.5 * (a + b);
      const double fm = c.value(m);
      if ((fm > 0.0) == (fa > 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    seeds.push_back(0.5 * (a + b));
  };
  const int last = d.periodic() ? n : n + 1;
  for (int i = 0; i < last; ++i) {
    for (int j = 0; j < last; ++j) {
      const Vec2 p{d.x_min + i * dx, d.y_min + j * dy};
      if (d.periodic() || i < n) edge(p, p + Vec2{dx, 0.0});
      if (d.periodic() || j < n) edge(p, p + Vec2{0.0, dy});
    }
  }
  return seeds;
}

/// March along the curve from `start` with step `step` in direction `sign`
/// (+1 along perp(grad h)). Stops on closing the loop or leaving the domain.
struct MarchResult {
  std::vector<Vec2> points;
  bool closed = false;
};

inline MarchResult march(const FilippovSystem& sys, int curve_id, Vec2 start, double step, double sign,
                         std::size_t max_steps) {
  const Domain& d = sys.domain();
  const auto& c = sys.curve(curve_id);
  MarchResult r;
  r.points.push_back(start);
  Vec2 p = start;
  double travelled = 0.0;
  for (std::size_t k = 0; k < max_steps; ++k) {
    // Midpoint predictor keeps the step length accurate on curved arcs.
    const Vec2 t0 = sign * c.tangent(p);
    const Vec2 mid = project_to_curve(sys, curve_id, p + 0.5 * step * t0, 3);
    const Vec2 t1 = sign * c.tangent(mid);
    Vec2 next = p + step * t1;
    if (!d.periodic() && !d.contains(next)) {
      // Clip the last step to the rectangle so open components reach the boundary.
      const Vec2 v = next - p;
      double f = 1.0;
      if (v.x > 0) f = std::min(f, (d.x_max - p.x) / v.x);
      if (v.x < 0) f = std::min(f, (d.x_min - p.x) / v.x);
      if (v.y > 0) f = std::min(f, (d.y_max - p.y) / v.y);
      if (v.y < 0) f = std::min(f, (d.y_min - p.y) / v.y);
      const Vec2 edge = p + std::max(f, 0.0) * v;
      if (f > 1e-9) r.points.push_back(edge);
      return r;
    }
    next = project_to_curve(sys, curve_id, next, 8);
    travelled += step;
    if (travelled > 2.5 * step && d.distance(next, start) < 0.75 * step) {
      r.closed = true;
      return r;
    }
    r.points.push_back(next);
    p = next;
  }
  throw DomainError("curve tracing did not terminate for curve " + std::to_string(curve_id));
}

}  // namespace detail

/// Traces every component of curve `curve_id` and resamples each with
/// `resolution` points per component (step = component length / resolution).
inline std::vector<CurveComponent> trace_curve(const FilippovSystem& sys, int curve_id, int resolution) {
  if (resolution < 2) throw ConfigError("scan resolution must be >= 2");
  const Domain& d = sys.domain();
  const auto& c = sys.curve(curve_id);
  const double fine = std::min(d.width(), d.height()) / 1024.0;
  const std::size_t guard = 50'000'000 / std::max(resolution, 1) + 4'000'000;
  std::vector<Vec2> seeds = detail::curve_seeds(sys, c);
  std::vector<bool> used(seeds.size(), false);
  std::vector<CurveComponent> out;

  for (std::size_t s = 0; s < seeds.size(); ++s) {
    if (used[s]) continue;
    const Vec2 seed = project_to_curve(sys, curve_id, seeds[s], 20);
    auto fwd = detail::march(sys, curve_id, seed, fine, 1.0, guard);
    std::vector<Vec2> pts;
    bool closed = fwd.closed;
    if (closed) {
      pts = std::move(fwd.points);
    } else {
      auto bwd = detail::march(sys, curve_id, seed, fine, -1.0, guard);
      pts.assign(bwd.points.rbegin(), bwd.points.rend());
      pts.insert(pts.end(), fwd.points.begin() + 1, fwd.points.end());
    }
    // Mark every seed lying on this component.
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      if (used[k]) continue;
      for (const Vec2& q : pts) {
        if (d.distance(seeds[k], q) < 2.0 * fine) {
          used[k] = true;
          break;
        }
      }
    }
    used[s] = true;

    double length = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) length += d.distance(pts[k - 1], pts[k]);
    if (closed) length += d.distance(pts.back(), pts.front());

    CurveComponent comp;
    comp.curve = curve_id;
    comp.index = static_cast<int>(out.size());
    comp.closed = closed;
    comp.length = length;
    if (length <= 0.0) continue;
    const double step = length / resolution;
    if (closed) {
      auto re = detail::march(sys, curve_id, pts.front(), step, 1.0, static_cast<std::size_t>(resolution) + 2);
      comp.points = std::move(re.points);
      if (comp.points.size() > static_cast<std::size_t>(resolution)) comp.points.resize(static_cast<std::size_t>(resolution));
    } else {
      // Walk from the backward end towards the forward end.
      const Vec2 a = pts.front();
      const double dir = dot(c.tangent(a), d.displacement(a, pts.size() > 1 ? pts[1] : a)) >= 0.0 ? 1.0 : -1.0;
      auto re = detail::march(sys, curve_id, a, step, dir, static_cast<std::size_t>(resolution) + 4);
      comp.points = std::move(re.points);
    }
    out.push_back(std::move(comp));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tangencies and pseudo-equilibria

enum class TangentSide { positive, negative, both };
enum class FoldType { visible, invisible, degenerate };

inline const char* to_string(TangentSide s) {
  switch (s) {
    case TangentSide::positive: return "positive";
    case TangentSide::negative: return "negative";
    case TangentSide::both: return "both";
  }
  return "?";
}

inline const char* to_string(FoldType f) {
  switch (f) {
    case FoldType::visible: return "visible";
    case FoldType::invisible: return "invisible";
    case FoldType::degenerate: return "degenerate";
  }
  return "?";
}

struct TangencyPoint {
  Vec2 position;
  int curve = 0;
  int component = 0;
  TangentSide side = TangentSide::positive;
  double second_lie = 0.0;  // Y(Y h) of the tangent field (positive side when both)
  FoldType fold = FoldType::degenerate;
};

namespace detail {

/// Point at parameter s on the chord a -> b, projected onto the curve.
inline Vec2 chord_point(const FilippovSystem& sys, int curve_id, const Vec2& a, const Vec2& b, double s) {
  const Vec2 delta = sys.domain().displacement(a, b);
  return project_to_curve(sys, curve_id, a + s * delta, 8);
}

template <class F>
Vec2 bisect_on_chord(const FilippovSystem& sys, int curve_id, const Vec2& a, const Vec2& b, F&& f, double tol) {
  double lo = 0.0, hi = 1.0;
  double flo = f(a);
  Vec2 best = a;
  double best_val = std::abs(flo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vec2 pm = chord_point(sys, curve_id, a, b, mid);
    const double fm = f(pm);
    if (std::abs(fm) < best_val) {
      best_val = std::abs(fm);
      best = pm;
    }
    if (std::abs(fm) <= tol || hi - lo < 1e-16) return pm;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return best;
}

inline int sgn(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

inline FoldType fold_of(double second_lie, bool positive_side) {
  if (std::abs(second_lie) <= kLieDeadband) return FoldType::degenerate;
  // Visible when the tangent orbit curves back into its own region.
  const bool visible = positive_side ? second_lie > 0.0 : second_lie < 0.0;
  return visible ? FoldType::visible : FoldType::invisible;
}

/// Brackets sign changes of `value(point)` along a sampled component and
/// refines each one. Throws when a zero persists over >= 3 samples.
template <class F>
std::vector<Vec2> scan_roots(const FilippovSystem& sys, const CurveComponent& comp, F&& value, double deadband,
                             double tol, const char* what) {
  const auto& pts = comp.points;
  const std::size_t n = pts.size();
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = value(pts[k]);
  std::size_t run = 0;
  for (std::size_t k = 0; k < n + (comp.closed ? 2 : 0); ++k) {
    const std::size_t kk = k % n;
    run = std::abs(v[kk]) <= deadband ? run + 1 : 0;
    if (run >= 3) {
      throw DomainError(std::string(what) + " not isolated on curve " + std::to_string(comp.curve) + " near (" +
                        std::to_string(pts[kk].x) + ", " + std::to_string(pts[kk].y) + ")");
    }
  }
  std::vector<Vec2> roots;
  const std::size_t pairs = comp.closed ? n : (n > 0 ? n - 1 : 0);
  for (std::size_t k = 0; k < pairs; ++k) {
    const std::size_t k2 = (k + 1) % n;
    const int s1 = sgn(v[k]), s2 = sgn(v[k2]);
    if (s1 == 0) {
      roots.push_back(pts[k]);
    } else if (s2 != 0 && s1 != s2) {
      roots.push_back(bisect_on_chord(sys, comp.curve, pts[k], pts[k2], value, tol));
    }
  }
  if (!comp.closed && n > 0 && sgn(v[n - 1]) == 0) roots.push_back(pts[n - 1]);
  return roots;
}

}  // namespace detail

inline std::vector<TangencyPoint> find_tangency_points(const FilippovSystem& sys, int curve_id,
                                                        const std::vector<CurveComponent>& comps) {
  const auto& c = sys.curve(curve_id);
  std::vector<TangencyPoint> out;
  for (const auto& comp : comps) {
    for (int side = 0; side < 2; ++side) {
      const int rid = side == 0 ? c.positive_region : c.negative_region;
      auto lie = [&](const Vec2& p) { return sys.lie(curve_id, rid, p); };
      for (const Vec2& r : detail::scan_roots(sys, comp, lie, kLieDeadband, kTangencyRefineTol, "tangency")) {
        const TangentSide ts = side == 0 ? TangentSide::positive : TangentSide::negative;
        bool merged = false;
        for (auto& t : out) {
          if (sys.domain().distance(t.position, r) <= kTangencyDedup) {
            if (t.side != ts) t.side = TangentSide::both;
            merged = true;
            break;
          }
        }
        if (merged) continue;
        TangencyPoint t;
        t.position = r;
        t.curve = curve_id;
        t.component = comp.index;
        t.side = ts;
        t.second_lie = sys.second_lie(curve_id, rid, r);
        t.fold = detail::fold_of(t.second_lie, side == 0);
        out.push_back(t);
      }
    }
  }
  // A point where both fields are tangent is a double tangency.
  for (auto& t : out) {
    const SigmaLocal s = sigma_local(sys, curve_id, t.position);
    if (std::abs(s.l1) <= kLieDeadband && std::abs(s.l2) <= kLieDeadband) t.side = TangentSide::both;
  }
  return out;
}

inline std::vector<TangencyPoint> find_tangency_points(const FilippovSystem& sys, int curve_id, int resolution) {
  return find_tangency_points(sys, curve_id, trace_curve(sys, curve_id, resolution));
}

inline std::vector<Vec2> find_pseudo_equilibria(const FilippovSystem& sys, int curve_id,
                                                const std::vector<CurveComponent>& comps) {
  const auto& c = sys.curve(curve_id);
  std::vector<Vec2> out;
  for (const auto& comp : comps) {
    // Z_s . t restricted to sliding/escaping samples; elsewhere a NaN sentinel
    // breaks brackets.
    auto along = [&](const Vec2& p) {
      const SigmaLocal s = sigma_local(sys, curve_id, p);
      const PointClass pc = classify_witnesses(s.l1, s.l2);
      if (pc.kind != PointKind::sliding && pc.kind != PointKind::escaping) return std::nan("");
      return dot(sliding_field_quotient(s), c.tangent(p));
    };
    const auto& pts = comp.points;
    const std::size_t n = pts.size();
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = along(pts[k]);
    std::size_t run = 0;
    for (std::size_t k = 0; k < n + (comp.closed ? 2 : 0); ++k) {
      const std::size_t kk = k % n;
      run = (std::isfinite(v[kk]) && std::abs(v[kk]) <= kPseudoEqTol) ? run + 1 : 0;
      if (run >= 3) throw DomainError("pseudo-equilibrium not isolated on curve " + std::to_string(curve_id));
    }
    const std::size_t pairs = comp.closed ? n : (n > 0 ? n - 1 : 0);
    for (std::size_t k = 0; k < pairs; ++k) {
      const std::size_t k2 = (k + 1) % n;
      if (!std::isfinite(v[k]) || !std::isfinite(v[k2])) continue;
      Vec2 root;
      if (v[k] == 0.0) {
        root = pts[k];
      } else if (v[k2] != 0.0 && (v[k] > 0.0) != (v[k2] > 0.0)) {
        root = detail::bisect_on_chord(sys, curve_id, pts[k], pts[k2], along, 1e-13);
      } else {
        continue;
      }
      const SigmaLocal s = sigma_local(sys, curve_id, root);
      if (norm(sliding_field_quotient(s)) > kPseudoEqTol) continue;
      bool dup = false;
      for (const Vec2& q : out) dup = dup || sys.domain().distance(q, root) <= kTangencyDedup;
      if (!dup) out.push_back(root);
    }
  }
  return out;
}

inline std::vector<Vec2> find_pseudo_equilibria(const FilippovSystem& sys, int curve_id, int resolution) {
  return find_pseudo_equilibria(sys, curve_id, trace_curve(sys, curve_id, resolution));
}

// ---------------------------------------------------------------------------
// Decomposition into arcs of constant class

struct SigmaArc {
  PointKind kind = PointKind::crossing;
  int component = 0;
  Vec2 start;
  Vec2 end;
  bool whole_component = false;  // closed component with a single class
  std::size_t first = 0;         // index of the first sample in the component
  std::size_t samples = 0;
};

struct SigmaDecomposition {
  int curve = 0;
  int resolution = 0;
  std::vector<CurveComponent> components;
  std::vector<SigmaArc> arcs;
  std::vector<TangencyPoint> tangencies;
  std::vector<Vec2> pseudo_equilibria;

  std::size_t count(PointKind k) const {
    return static_cast<std::size_t>(std::count_if(arcs.begin(), arcs.end(), [k](const SigmaArc& a) { return a.kind == k; }));
  }
};

inline SigmaDecomposition sigma_decomposition(const FilippovSystem& sys, int curve_id, int resolution) {
  SigmaDecomposition dec;
  dec.curve = curve_id;
  dec.resolution = resolution;
  dec.components = trace_curve(sys, curve_id, resolution);
  dec.tangencies = find_tangency_points(sys, curve_id, dec.components);
  dec.pseudo_equilibria = find_pseudo_equilibria(sys, curve_id, dec.components);

  for (const auto& comp : dec.components) {
    const auto& pts = comp.points;
    const std::size_t n = pts.size();
    if (n == 0) continue;
    std::vector<PointKind> kinds(n);
    for (std::size_t k = 0; k < n; ++k) {
      const SigmaLocal s = sigma_local(sys, curve_id, pts[k]);
      PointKind kk = classify_witnesses(s.l1, s.l2).kind;
      // Samples that land on a tangency inherit the next class.
      kinds[k] = kk;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (kinds[k] != PointKind::tangency) continue;
      for (std::size_t j = 1; j < n; ++j) {
        const PointKind nk = kinds[(k + j) % n];
        if (nk != PointKind::tangency) {
          kinds[k] = nk;
          break;
        }
      }
    }
    // Boundary point between samples k and k+1: the tangency inside that chord.
    auto boundary = [&](std::size_t k) {
      const Vec2& a = pts[k];
      const Vec2& b = pts[(k + 1) % n];
      const double chord = sys.domain().distance(a, b);
      Vec2 best = sys.domain().canonical(a + 0.5 * sys.domain().displacement(a, b));
      double best_d = 1e300;
      for (const auto& t : dec.tangencies) {
        if (t.component != comp.index) continue;
        const double dd = sys.domain().distance(t.position, a) + sys.domain().distance(t.position, b);
        if (dd <= chord * 1.5 + 1e-12 && dd < best_d) {
          best_d = dd;
          best = t.position;
        }
      }
      return best;
    };

    std::vector<std::size_t> cuts;  // arc changes between k and k+1
    const std::size_t pairs = comp.closed ? n : n - 1;
    for (std::size_t k = 0; k < pairs; ++k) {
      if (kinds[k] != kinds[(k + 1) % n]) cuts.push_back(k);
    }
    if (cuts.empty()) {
      SigmaArc arc;
      arc.kind = kinds[0];
      arc.component = comp.index;
      arc.start = pts.front();
      arc.end = comp.closed ? pts.front() : pts.back();
      arc.whole_component = comp.closed;
      arc.samples = n;
      dec.arcs.push_back(arc);
      continue;
    }
    if (comp.closed) {
      for (std::size_t c = 0; c < cuts.size(); ++c) {
        const std::size_t from = cuts[c];
        const std::size_t to = cuts[(c + 1) % cuts.size()];
        SigmaArc arc;
        arc.kind = kinds[(from + 1) % n];
        arc.component = comp.index;
        arc.start = boundary(from);
        arc.end = boundary(to);
        arc.first = (from + 1) % n;
        arc.samples = (to + n - from) % n;
        if (arc.samples == 0) arc.samples = n;
        dec.arcs.push_back(arc);
      }
    } else {
      std::size_t first = 0;
      Vec2 start = pts.front();
      for (std::size_t cut : cuts) {
        SigmaArc arc;
        arc.kind = kinds[first];
        arc.component = comp.index;
        arc.start = start;
        arc.end = boundary(cut);
        arc.first = first;
        arc.samples = cut + 1 - first;
        dec.arcs.push_back(arc);
        first = cut + 1;
        start = arc.end;
      }
      SigmaArc arc;
      arc.kind = kinds[first];
      arc.component = comp.index;
      arc.start = start;
      arc.end = pts.back();
      arc.first = first;
      arc.samples = n - first;
      dec.arcs.push_back(arc);
    }
  }
  return dec;
}

/// Sample points of an arc, in curve order.
inline std::vector<Vec2> arc_points(const SigmaDecomposition& dec, const SigmaArc& arc) {
  std::vector<Vec2> out;
  for (const auto& comp : dec.components) {
    if (comp.index != arc.component) continue;
    const std::size_t n = comp.points.size();
    for (std::size_t k = 0; k < arc.samples && n > 0; ++k) out.push_back(comp.points[(arc.first + k) % n]);
  }
  return out;
}

}  // namespace filippov

#endif  // FILIPPOV_SIGMA_HPP
