#ifndef FILIPPOV_DOMAIN_HPP
#define FILIPPOV_DOMAIN_HPP

#include <cmath>
#include <string>

#include "filippov/error.hpp"
#include "filippov/vec2.hpp"

namespace filippov {

enum class DomainKind { plane_rect, flat_torus };

inline const char* to_string(DomainKind k) {
  return k == DomainKind::plane_rect ? "plane_rect" : "flat_torus";
}

/// Axis-aligned rectangle, either open-ended (orbits leaving it are
/// truncated) or identified at opposite edges (flat torus).
struct Domain {
  DomainKind kind = DomainKind::plane_rect;
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  static Domain make(DomainKind kind, double x_min, double x_max, double y_min, double y_max) {
    if (!(x_max > x_min) || !(y_max > y_min) || !std::isfinite(x_min) || !std::isfinite(x_max) ||
        !std::isfinite(y_min) || !std::isfinite(y_max)) {
      throw ConfigError("domain bounds must satisfy x_max > x_min and y_max > y_min");
    }
    return {kind, x_min, x_max, y_min, y_max};
  }

  bool periodic() const { return kind == DomainKind::flat_torus; }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }

  /// Largest distance between two points, in the quotient metric on the torus.
  double diameter() const {
    if (periodic()) return std::hypot(0.5 * width(), 0.5 * height());
    return std::hypot(width(), height());
  }

  static double wrap(double v, double lo, double len) {
    double r = std::fmod(v - lo, len);
    if (r < 0.0) r += len;
    if (r >= len) r -= len;
    return lo + r;
  }

  /// Canonical representative; identity on the plane.
  Vec2 canonical(const Vec2& p) const {
    if (!periodic()) return p;
    return {wrap(p.x, x_min, width()), wrap(p.y, y_min, height())};
  }

  bool contains(const Vec2& p) const {
    if (periodic()) return std::isfinite(p.x) && std::isfinite(p.y);
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }

  /// Shortest displacement from a to b.
  Vec2 displacement(const Vec2& a, const Vec2& b) const {
    Vec2 d = b - a;
    if (periodic()) {
      d.x -= width() * std::round(d.x / width());
      d.y -= height() * std::round(d.y / height());
    }
    return d;
  }

  double distance(const Vec2& a, const Vec2& b) const { return norm(displacement(a, b)); }
};

}  // namespace filippov

#endif  // FILIPPOV_DOMAIN_HPP
