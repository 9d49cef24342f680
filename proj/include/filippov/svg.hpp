#ifndef FILIPPOV_SVG_HPP
#define FILIPPOV_SVG_HPP

#include <charconv>
#include <sstream>
#include <string>
#include <vector>

#include "filippov/orbit.hpp"
#include "filippov/sigma.hpp"

namespace filippov {

struct PortraitOptions {
  int width = 640;
  int height = 640;
  int margin = 32;
  int legend_height = 110;
};

namespace detail {

inline std::string fixed3(double v) {
  char buf[48];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
  std::string s(buf, r.ptr);
  if (s == "-0.000") s = "0.000";
  return s;
}

class Canvas {
 public:
  Canvas(const Domain& dom, const PortraitOptions& o) : dom_(dom), o_(o) {}

  double sx(double x) const { return o_.margin + (x - dom_.x_min) / dom_.width() * (o_.width - 2.0 * o_.margin); }
  double sy(double y) const {
    return o_.margin + (dom_.y_max - y) / dom_.height() * (o_.height - 2.0 * o_.margin);
  }
  std::string pt(const Vec2& p) const { return fixed3(sx(p.x)) + "," + fixed3(sy(p.y)); }

  /// Splits a point sequence where it wraps around the torus.
  std::vector<std::vector<Vec2>> runs(const std::vector<Vec2>& pts) const {
    std::vector<std::vector<Vec2>> out;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const bool wrapped = k > 0 && norm(dom_.displacement(pts[k - 1], pts[k]) - (pts[k] - pts[k - 1])) > 1e-12;
      if (k == 0 || wrapped) out.emplace_back();
      out.back().push_back(pts[k]);
    }
    return out;
  }

  /// One <path> element; torus wraps start a new subpath.
  void path(std::ostream& os, const std::vector<Vec2>& pts, const std::string& cls, const std::string& style) const {
    std::string d;
    for (const auto& r : runs(pts)) {
      for (std::size_t k = 0; k < r.size(); ++k) d += (d.empty() ? "" : " ") + std::string(k ? "L" : "M") + pt(r[k]);
      if (r.size() == 1) d += " L" + pt(r[0]);
    }
    if (d.empty()) return;
    os << "  <path class=\"" << cls << "\" fill=\"none\" " << style << " d=\"" << d << "\"/>\n";
  }

 private:
  Domain dom_;
  PortraitOptions o_;
};

inline const char* kCrossingStyle = "stroke=\"#555555\" stroke-width=\"1\"";
inline const char* kSlidingStyle = "stroke=\"#1f5fbf\" stroke-width=\"4\"";
inline const char* kEscapingStyle = "stroke=\"#c0392b\" stroke-width=\"4\" stroke-dasharray=\"8,5\"";
inline const char* kOrbitStyle = "stroke=\"#2e8b57\" stroke-width=\"1\" stroke-opacity=\"0.8\"";

}  // namespace detail

/// Phase portrait of a system as an SVG 1.1 document: switching-curve arcs
/// styled by class, tangency circles, pseudo-equilibrium dots, orbit traces
/// and a legend below the plot area.
inline std::string render_portrait(const Domain& dom, const std::vector<SigmaDecomposition>& decs,
                                   const std::vector<Orbit>& orbits, const PortraitOptions& o = {}) {
  if (o.width <= 2 * o.margin || o.height <= 2 * o.margin) throw ConfigError("portrait canvas too small");
  const detail::Canvas cv(dom, o);
  const bool empty = decs.empty() && orbits.empty();
  const int total_h = o.height + o.legend_height;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << o.width << "\" height=\"" << total_h
     << "\" viewBox=\"0 0 " << o.width << ' ' << total_h << "\">\n"
     << "  <rect x=\"0\" y=\"0\" width=\"" << o.width << "\" height=\"" << total_h << "\" fill=\"white\"/>\n";

  if (!empty) {
    os << "  <rect x=\"" << o.margin << "\" y=\"" << o.margin << "\" width=\"" << o.width - 2 * o.margin
       << "\" height=\"" << o.height - 2 * o.margin << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\""
       << (dom.periodic() ? " stroke-dasharray=\"2,3\"" : "") << "/>\n";
    for (const auto& orbit : orbits) {
      std::vector<Vec2> pts;
      for (const auto& s : orbit.trace()) pts.push_back(s.p);
      cv.path(os, pts, "orbit", detail::kOrbitStyle);
    }
    for (const auto& dec : decs) {
      for (const auto& arc : dec.arcs) {
        const char* style = arc.kind == PointKind::sliding    ? detail::kSlidingStyle
                            : arc.kind == PointKind::escaping ? detail::kEscapingStyle
                                                              : detail::kCrossingStyle;
        const std::string cls = std::string("arc-") + to_string(arc.kind);
        auto pts = arc_points(dec, arc);
        if (arc.whole_component && !pts.empty()) pts.push_back(pts.front());
        cv.path(os, pts, cls, style);
      }
      for (const auto& t : dec.tangencies) {
        os << "  <circle class=\"tangency\" cx=\"" << detail::fixed3(cv.sx(t.position.x)) << "\" cy=\""
           << detail::fixed3(cv.sy(t.position.y)) << "\" r=\"5\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
      }
      for (const auto& p : dec.pseudo_equilibria) {
        os << "  <circle class=\"pseudo-equilibrium\" cx=\"" << detail::fixed3(cv.sx(p.x)) << "\" cy=\"" << detail::fixed3(cv.sy(p.y))
           << "\" r=\"4\" fill=\"black\"/>\n";
      }
    }
  }

  // Legend.
  const int lx = o.margin, ly = o.height + 8;
  struct Entry {
    const char* label;
    const char* style;
    int marker;  // 0 line, 1 open circle, 2 dot
  };
  const Entry entries[] = {{"crossing", detail::kCrossingStyle, 0},  {"sliding", detail::kSlidingStyle, 0},
                           {"escaping", detail::kEscapingStyle, 0},  {"orbit", detail::kOrbitStyle, 0},
                           {"tangency", "", 1},                     {"pseudo-equilibrium", "", 2}};
  os << "  <g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int i = 0; i < 6; ++i) {
    const int col = i / 3, row = i % 3;
    const int x = lx + col * 220, y = ly + 16 + row * 28;
    const auto& e = entries[i];
    if (e.marker == 0) {
      os << "    <line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 36 << "\" y2=\"" << y << "\" " << e.style
         << "/>\n";
    } else if (e.marker == 1) {
      os << "    <circle cx=\"" << x + 18 << "\" cy=\"" << y << "\" r=\"5\" fill=\"none\" stroke=\"black\" "
         << "stroke-width=\"1.5\"/>\n";
    } else {
      os << "    <circle cx=\"" << x + 18 << "\" cy=\"" << y << "\" r=\"4\" fill=\"black\"/>\n";
    }
    os << "    <text x=\"" << x + 46 << "\" y=\"" << y + 4 << "\">" << e.label << "</text>\n";
  }
  os << "  </g>\n</svg>\n";
  return os.str();
}

}  // namespace filippov

#endif  // FILIPPOV_SVG_HPP
