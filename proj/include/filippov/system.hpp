#ifndef FILIPPOV_SYSTEM_HPP
#define FILIPPOV_SYSTEM_HPP

// The piecewise-smooth vector field Z: a domain cut by disjoint switching
// curves h_i = 0 into regions, each carrying its own smooth field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "filippov/domain.hpp"
#include "filippov/error.hpp"
#include "filippov/expr.hpp"
#include "filippov/vec2.hpp"

namespace filippov {

inline constexpr double kSigmaBand = 1e-9;        // |h| below this counts as on the curve
inline constexpr double kMinGradient = 1e-8;      // regular-value threshold for grad h
inline constexpr double kDisjointEps = 1e-6;      // two curves closer than this overlap

struct SwitchingCurve {
  int id = 0;
  expr::ScalarField h;
  expr::ScalarField h_x;
  expr::ScalarField h_y;
  int positive_region = 0;  // region on h > 0
  int negative_region = 0;  // region on h < 0

  SwitchingCurve() = default;
  SwitchingCurve(int id_, expr::ScalarField h_, int pos, int neg)
      : id(id_), h(std::move(h_)), h_x(h.derivative("x")), h_y(h.derivative("y")),
        positive_region(pos), negative_region(neg) {}

  double value(const Vec2& p) const { return h(p); }
  Vec2 gradient(const Vec2& p) const { return {h_x(p), h_y(p)}; }

  /// Unit tangent (grad h rotated by +90 degrees).
  Vec2 tangent(const Vec2& p) const {
    const Vec2 g = gradient(p);
    const double n = norm(g);
    if (n < kMinGradient) throw DomainError("gradient of h_" + std::to_string(id) + " vanishes: 0 is not a regular value");
    return perp(g) / n;
  }
};

struct SignCondition {
  int curve = 0;
  int sign = 1;  // +1 requires h > 0, -1 requires h < 0
};

struct RegionSpec {
  int id = 0;
  expr::PlanarField field;
  std::vector<SignCondition> membership;
};

/// Either a region id or a marker naming the curve the point lies on.
struct RegionLookup {
  bool on_sigma = false;
  int id = 0;  // region id, or curve id when on_sigma

  static RegionLookup region(int id) { return {false, id}; }
  static RegionLookup sigma(int curve) { return {true, curve}; }
  friend bool operator==(const RegionLookup&, const RegionLookup&) = default;
};

struct SigmaMarker {
  int curve = 0;
};

using FieldValue = std::variant<Vec2, SigmaMarker>;

/// Multiplies every region field; used by the tangency-freezing rescale.
using SpeedFactor = std::function<double(const Vec2&)>;

class FilippovSystem {
 public:
  FilippovSystem() = default;

  /// Builds and validates a system. Throws ConfigError on any model
  /// inconsistency found by the sampled load checks.
  FilippovSystem(Domain domain, std::vector<SwitchingCurve> curves, std::vector<RegionSpec> regions,
                 expr::Binding parameters, bool validate_model = true)
      : domain_(domain), curves_(std::move(curves)), regions_(std::move(regions)),
        parameters_(std::move(parameters)) {
    index();
    if (validate_model) validate();
    build_lie_cache();
  }

  const Domain& domain() const { return domain_; }
  const std::vector<SwitchingCurve>& curves() const { return curves_; }
  const std::vector<RegionSpec>& regions() const { return regions_; }
  const expr::Binding& parameters() const { return parameters_; }
  bool reversed() const { return reversed_; }
  bool rescaled() const { return static_cast<bool>(speed_); }

  const SwitchingCurve& curve(int id) const {
    auto it = curve_index_.find(id);
    if (it == curve_index_.end()) throw ConfigError("unknown curve id " + std::to_string(id));
    return curves_[it->second];
  }

  const RegionSpec& region(int id) const {
    auto it = region_index_.find(id);
    if (it == region_index_.end()) throw ConfigError("unknown region id " + std::to_string(id));
    return regions_[it->second];
  }

  bool has_curve(int id) const { return curve_index_.contains(id); }

  double speed_factor(const Vec2& p) const { return speed_ ? (*speed_)(p) : 1.0; }

  /// Field of region `id` at p, including the speed factor and time direction.
  Vec2 region_field(int id, const Vec2& p) const {
    Vec2 v = region(id).field(p);
    if (speed_) v *= (*speed_)(p);
    if (!is_finite(v)) throw EvaluationError("non-finite field value in region " + std::to_string(id));
    return v;
  }

  /// Region containing p, or the curve p lies on (|h| <= kSigmaBand).
  RegionLookup region_of(const Vec2& p_in) const {
    const Vec2 p = domain_.canonical(p_in);
    for (const auto& c : curves_) {
      if (std::abs(c.value(p)) <= kSigmaBand) return RegionLookup::sigma(c.id);
    }
    return RegionLookup::region(region_by_signs(p));
  }

  /// Region determined by the signs of all h_i at p; p must be off every curve.
  int region_by_signs(const Vec2& p) const {
    int found = -1;
    int matches = 0;
    for (const auto& r : regions_) {
      if (matches_region(r, p)) {
        ++matches;
        found = r.id;
      }
    }
    if (matches != 1) {
      throw ConfigError(std::string(matches == 0 ? "no region contains" : "ambiguous region membership at") +
                        " point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
    }
    return found;
  }

  bool in_region(int id, const Vec2& p) const { return matches_region(region(id), domain_.canonical(p)); }

  FieldValue field_at(const Vec2& p) const {
    if (!domain_.contains(p)) throw DomainError("left domain");
    const RegionLookup r = region_of(p);
    if (r.on_sigma) return SigmaMarker{r.id};
    return region_field(r.id, domain_.canonical(p));
  }

  /// grad h_curve(p) . Y(p) for an arbitrary planar field.
  static double lie_derivative(const expr::PlanarField& y, const SwitchingCurve& curve, const Vec2& p) {
    const double v = dot(curve.gradient(p), y(p));
    if (!std::isfinite(v)) throw EvaluationError("non-finite Lie derivative");
    return v;
  }

  /// Lie derivative of h_curve along the field of `region_id` (speed factor applied).
  double lie(int curve_id, int region_id, const Vec2& p) const {
    const Vec2 q = domain_.canonical(p);
    return dot(curve(curve_id).gradient(q), region_field(region_id, q));
  }

  /// Second Lie derivative Y(Y h). Exact at points where Y h = 0.
  double second_lie(int curve_id, int region_id, const Vec2& p) const {
    const Vec2 q = domain_.canonical(p);
    const auto& ld = lie_data(curve_id, region_id);
    Vec2 y = region(region_id).field(q);
    const double g = speed_factor(q);
    return g * g * (ld.d_x(q) * y.x + ld.d_y(q) * y.y);
  }

  /// Same system with every field negated: orbits run backward in time.
  FilippovSystem time_reversed() const {
    FilippovSystem out = *this;
    for (auto& r : out.regions_) r.field = r.field.negated();
    out.reversed_ = !reversed_;
    out.build_lie_cache();
    return out;
  }

  /// Same system with every field multiplied by `factor`.
  FilippovSystem with_speed_factor(SpeedFactor factor) const {
    FilippovSystem out = *this;
    out.speed_ = std::make_shared<const SpeedFactor>(std::move(factor));
    return out;
  }

 private:
  struct LieData {
    expr::ScalarField d_x;  // d/dx of (grad h . Y)
    expr::ScalarField d_y;
  };
  using LieCache = std::map<std::pair<int, int>, LieData>;

  const LieData& lie_data(int curve_id, int region_id) const {
    auto it = lie_cache_->find(std::make_pair(curve_id, region_id));
    if (it == lie_cache_->end()) {
      throw ConfigError("region " + std::to_string(region_id) + " is not adjacent to curve " + std::to_string(curve_id));
    }
    return it->second;
  }

  // Gradients of grad h . Y for every (curve, adjacent region) pair.
  void build_lie_cache() {
    namespace s = expr::simplify;
    auto cache = std::make_shared<LieCache>();
    for (const auto& c : curves_) {
      for (int rid : {c.positive_region, c.negative_region}) {
        if (!region_index_.contains(rid)) continue;
        const auto& f = region(rid).field;
        auto node = s::add(s::mul(c.h_x.expression().root_ptr(), f.component_x.expression().root_ptr()),
                           s::mul(c.h_y.expression().root_ptr(), f.component_y.expression().root_ptr()));
        expr::Expression l(node, c.h.expression().shared_symbols());
        cache->emplace(std::make_pair(c.id, rid),
                       LieData{expr::ScalarField(expr::differentiate(l, "x"), parameters_),
                               expr::ScalarField(expr::differentiate(l, "y"), parameters_)});
      }
    }
    lie_cache_ = std::move(cache);
  }

  bool matches_region(const RegionSpec& r, const Vec2& p) const {
    for (const auto& cond : r.membership) {
      const double h = curve(cond.curve).value(p);
      if (cond.sign > 0 ? !(h > 0.0) : !(h < 0.0)) return false;
    }
    return true;
  }

  void index() {
    curve_index_.clear();
    region_index_.clear();
    for (std::size_t i = 0; i < curves_.size(); ++i) {
      if (!curve_index_.emplace(curves_[i].id, i).second) {
        throw ConfigError("duplicate curve id " + std::to_string(curves_[i].id));
      }
    }
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      if (!region_index_.emplace(regions_[i].id, i).second) {
        throw ConfigError("duplicate region id " + std::to_string(regions_[i].id));
      }
    }
  }

  void validate() const;

  Domain domain_;
  std::vector<SwitchingCurve> curves_;
  std::vector<RegionSpec> regions_;
  expr::Binding parameters_;
  std::map<int, std::size_t> curve_index_;
  std::map<int, std::size_t> region_index_;
  std::shared_ptr<const SpeedFactor> speed_;
  std::shared_ptr<const LieCache> lie_cache_ = std::make_shared<LieCache>();
  bool reversed_ = false;
};

// ---------------------------------------------------------------------------
// Load-time validation by sampling

namespace detail {

/// Newton iteration for a common zero of two curves, started at `p`.
inline std::optional<Vec2> common_zero(const SwitchingCurve& a, const SwitchingCurve& b, Vec2 p) {
  for (int it = 0; it < 30; ++it) {
    const double fa = a.value(p);
    const double fb = b.value(p);
    if (std::abs(fa) < 1e-12 && std::abs(fb) < 1e-12) return p;
    const Vec2 ga = a.gradient(p);
    const Vec2 gb = b.gradient(p);
    const double det = cross(ga, gb);
    if (std::abs(det) < 1e-14) return std::nullopt;
    const Vec2 step{(fa * gb.y - fb * ga.y) / det, (ga.x * fb - gb.x * fa) / det};
    p -= step;
    if (!is_finite(p)) return std::nullopt;
  }
  if (std::abs(a.value(p)) < kDisjointEps && std::abs(b.value(p)) < kDisjointEps) return p;
  return std::nullopt;
}

/// True when the foot of p on curve a also lies on curve b.
inline bool shares_points(const SwitchingCurve& a, const SwitchingCurve& b, Vec2 p) {
  for (int it = 0; it < 30; ++it) {
    const Vec2 g = a.gradient(p);
    const double gg = dot(g, g);
    if (!(gg > 0.0)) return false;
    p -= (a.value(p) / gg) * g;
    if (!is_finite(p)) return false;
  }
  if (std::abs(a.value(p)) > 1e-12 * (1.0 + norm(a.gradient(p)))) return false;
  const double gb = norm(b.gradient(p));
  return gb > 0.0 && std::abs(b.value(p)) / gb < kDisjointEps;
}

}  // namespace detail

inline void FilippovSystem::validate() const {
  const std::string ctx = "system validation: ";
  for (const auto& c : curves_) {
    if (c.positive_region == c.negative_region) {
      throw ConfigError(ctx + "curve " + std::to_string(c.id) + " has the same region on both sides");
    }
    (void)region(c.positive_region);
    (void)region(c.negative_region);
  }
  for (const auto& r : regions_) {
    for (const auto& cond : r.membership) {
      const auto& c = curve(cond.curve);
      if (cond.sign > 0 && c.negative_region == r.id) {
        throw ConfigError(ctx + "region " + std::to_string(r.id) + " requires h_" + std::to_string(c.id) +
                          " > 0 but the curve places it on the negative side");
      }
      if (cond.sign < 0 && c.positive_region == r.id) {
        throw ConfigError(ctx + "region " + std::to_string(r.id) + " requires h_" + std::to_string(c.id) +
                          " < 0 but the curve places it on the positive side");
      }
    }
  }

  constexpr int n = 256;
  const double dx = domain_.width() / n;
  const double dy = domain_.height() / n;
  const int nodes = domain_.periodic() ? n : n + 1;
  auto node = [&](int i, int j) { return Vec2{domain_.x_min + i * dx, domain_.y_min + j * dy}; };

  // h values on the grid, per curve.
  std::vector<std::vector<double>> hv(curves_.size(), std::vector<double>(static_cast<std::size_t>(nodes * nodes)));
  for (std::size_t k = 0; k < curves_.size(); ++k) {
    for (int i = 0; i < nodes; ++i) {
      for (int j = 0; j < nodes; ++j) {
        try {
          hv[k][static_cast<std::size_t>(i * nodes + j)] = curves_[k].value(node(i, j));
        } catch (const EvaluationError& e) {
          throw ConfigError(ctx + "h_" + std::to_string(curves_[k].id) + ": " + e.what());
        }
      }
    }
  }
  auto at = [&](std::size_t k, int i, int j) {
    if (domain_.periodic()) {
      i %= nodes;
      j %= nodes;
    }
    return hv[k][static_cast<std::size_t>(i * nodes + j)];
  };

  // Regular value: refine sign changes along grid edges and check grad h.
  for (std::size_t k = 0; k < curves_.size(); ++k) {
    const auto& c = curves_[k];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int dir = 0; dir < 2; ++dir) {
          const int i2 = dir == 0 ? i + 1 : i;
          const int j2 = dir == 0 ? j : j + 1;
          double fa = at(k, i, j);
          const double fb = at(k, i2, j2);
          if (!((fa <= 0.0 && fb > 0.0) || (fa >= 0.0 && fb < 0.0) || fa == 0.0)) continue;
          Vec2 a = node(i, j);
          Vec2 b = node(i2, j2);
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
          const Vec2 root = 0.5 * (a + b);
          if (norm(c.gradient(root)) < kMinGradient) {
            throw ConfigError(ctx + "0 is not a regular value of h_" + std::to_string(c.id) + " near (" +
                              std::to_string(root.x) + ", " + std::to_string(root.y) + ")");
          }
        }
      }
    }
  }

  // Pairwise disjointness.
  for (std::size_t a = 0; a < curves_.size(); ++a) {
    for (std::size_t b = a + 1; b < curves_.size(); ++b) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          auto changes = [&](std::size_t k) {
            const double v[4] = {at(k, i, j), at(k, i + 1, j), at(k, i, j + 1), at(k, i + 1, j + 1)};
            bool pos = false, neg = false;
            for (double x : v) {
              pos = pos || x >= 0.0;
              neg = neg || x <= 0.0;
            }
            return pos && neg;
          };
          if (!changes(a) || !changes(b)) continue;
          const Vec2 centre = node(i, j) + Vec2{0.5 * dx, 0.5 * dy};
          if (detail::shares_points(curves_[a], curves_[b], centre)) {
            throw ConfigError(ctx + "curves " + std::to_string(curves_[a].id) + " and " +
                              std::to_string(curves_[b].id) + " overlap");
          }
          if (auto z = detail::common_zero(curves_[a], curves_[b], centre)) {
            if (std::abs(z->x - centre.x) <= 2.0 * dx && std::abs(z->y - centre.y) <= 2.0 * dy) {
              throw ConfigError(ctx + "curves " + std::to_string(curves_[a].id) + " and " +
                                std::to_string(curves_[b].id) + " intersect near (" + std::to_string(z->x) +
                                ", " + std::to_string(z->y) + ")");
            }
          }
        }
      }
    }
  }

  // Region membership on grid nodes and random points.
  std::map<int, int> hits;
  auto check_point = [&](const Vec2& p) {
    for (const auto& c : curves_) {
      if (std::abs(c.value(p)) <= kSigmaBand) return;
    }
    int id = 0;
    try {
      id = region_by_signs(p);
    } catch (const ConfigError& e) {
      throw ConfigError(ctx + e.what());
    }
    ++hits[id];
    try {
      (void)region(id).field(p);
    } catch (const EvaluationError& e) {
      throw ConfigError(ctx + "field of region " + std::to_string(id) + ": " + e.what());
    }
  };
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) check_point(node(i, j));
  }
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> ux(domain_.x_min, domain_.x_max);
  std::uniform_real_distribution<double> uy(domain_.y_min, domain_.y_max);
  for (int s = 0; s < 10000; ++s) {
    const Vec2 p{ux(rng), uy(rng)};
    for (std::size_t a = 0; a < curves_.size(); ++a) {
      for (std::size_t b = a + 1; b < curves_.size(); ++b) {
        if (std::abs(curves_[a].value(p)) < kDisjointEps && std::abs(curves_[b].value(p)) < kDisjointEps) {
          throw ConfigError(ctx + "curves " + std::to_string(curves_[a].id) + " and " +
                            std::to_string(curves_[b].id) + " overlap");
        }
      }
    }
    check_point(p);
  }
  for (const auto& r : regions_) {
    if (hits[r.id] == 0) throw ConfigError(ctx + "region " + std::to_string(r.id) + " is empty on the domain");
  }

  // On the torus every function must be periodic.
  if (domain_.periodic()) {
    auto periodic = [&](const expr::ScalarField& f, const std::string& what) {
      for (int s = 0; s <= 64; ++s) {
        const double tx = domain_.x_min + domain_.width() * s / 64.0;
        const double ty = domain_.y_min + domain_.height() * s / 64.0;
        const double pairs[2][2] = {{f(domain_.x_min, ty), f(domain_.x_max, ty)},
                                    {f(tx, domain_.y_min), f(tx, domain_.y_max)}};
        for (const auto& pr : pairs) {
          if (std::abs(pr[0] - pr[1]) > 1e-9 * (1.0 + std::abs(pr[0]))) {
            throw ConfigError(ctx + what + " is not periodic on the flat torus");
          }
        }
      }
    };
    for (const auto& c : curves_) periodic(c.h, "h_" + std::to_string(c.id));
    for (const auto& r : regions_) {
      periodic(r.field.component_x, "field x-component of region " + std::to_string(r.id));
      periodic(r.field.component_y, "field y-component of region " + std::to_string(r.id));
    }
  }
}

// ---------------------------------------------------------------------------
// Construction from expression text

struct CurveDef {
  int id = 0;
  std::string h;
  int positive_region = 0;
  int negative_region = 0;
};

struct RegionDef {
  int id = 0;
  std::string field_x;
  std::string field_y;
  std::vector<SignCondition> membership;
};

inline FilippovSystem make_system(const Domain& domain, const std::vector<CurveDef>& curves,
                                  const std::vector<RegionDef>& regions, const expr::Binding& parameters = {},
                                  bool validate_model = true) {
  std::vector<SwitchingCurve> cs;
  for (const auto& c : curves) {
    cs.emplace_back(c.id, expr::make_scalar(c.h, parameters), c.positive_region, c.negative_region);
  }
  std::vector<RegionSpec> rs;
  for (const auto& r : regions) {
    rs.push_back({r.id, expr::make_planar(r.field_x, r.field_y, parameters), r.membership});
  }
  return FilippovSystem(domain, std::move(cs), std::move(rs), parameters, validate_model);
}

}  // namespace filippov

#endif  // FILIPPOV_SYSTEM_HPP
