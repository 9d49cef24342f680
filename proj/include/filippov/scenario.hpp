#ifndef FILIPPOV_SCENARIO_HPP
#define FILIPPOV_SCENARIO_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "filippov/json_util.hpp"
#include "filippov/report.hpp"
#include "filippov/system.hpp"

namespace filippov {

inline constexpr int kScenarioSchemaVersion = 1;

struct Scenario {
  std::string name;
  Domain domain;
  expr::Binding parameters;
  std::vector<CurveDef> curves;
  std::vector<RegionDef> regions;
  DiagnosticsConfig diagnostics;
  FilippovSystem system;
};

namespace detail {

inline void check_expression(const std::string& text, const expr::Binding& params, const std::string& path) {
  try {
    expr::make_scalar(text, params);
  } catch (const ParseError& e) {
    throw ConfigError(path + ": expression error: " + e.what());
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace detail

/// Builds a scenario from its JSON document. Errors name the offending
/// field, e.g. "regions[1].field[0]: expression error: ...".
inline Scenario parse_scenario(const nlohmann::json& doc) {
  namespace jp = jsonpath;
  if (!doc.is_object()) jp::fail("scenario", "expected an object");
  const auto version = jp::integer(jp::require(doc, "schema_version", ""), "schema_version");
  if (version != kScenarioSchemaVersion) {
    jp::fail("schema_version", "unsupported version " + std::to_string(version));
  }
  struct {
    std::string name;
    Domain domain;
    expr::Binding parameters;
    std::vector<CurveDef> curves;
    std::vector<RegionDef> regions;
    DiagnosticsConfig diagnostics;
  } s;
  s.name = jp::string(jp::require(doc, "name", ""), "name");

  const auto& dom = jp::require(doc, "domain", "");
  const std::string kind = jp::string(jp::require(dom, "kind", "domain"), "domain.kind");
  DomainKind dk = DomainKind::plane_rect;
  if (kind == "flat_torus") {
    dk = DomainKind::flat_torus;
  } else if (kind != "plane_rect") {
    jp::fail("domain.kind", "expected \"plane_rect\" or \"flat_torus\"");
  }
  const auto& b = jp::array(jp::require(dom, "bounds", "domain"), "domain.bounds");
  if (b.size() != 4) jp::fail("domain.bounds", "expected [x_min, x_max, y_min, y_max]");
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) v[i] = jp::number(b[i], jp::index("domain.bounds", i));
  try {
    s.domain = Domain::make(dk, v[0], v[1], v[2], v[3]);
  } catch (const Error& e) {
    jp::fail("domain.bounds", e.what());
  }

  if (auto it = doc.find("parameters"); it != doc.end()) {
    if (!it->is_object()) jp::fail("parameters", "expected an object");
    for (auto p = it->begin(); p != it->end(); ++p) {
      s.parameters[p.key()] = jp::number(p.value(), jp::join("parameters", p.key()));
    }
  }

  if (auto it = doc.find("curves"); it != doc.end()) {
    const auto& cs = jp::array(*it, "curves");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string path = jp::index("curves", i);
      CurveDef c;
      c.id = static_cast<int>(jp::integer(jp::require(cs[i], "id", path), jp::join(path, "id")));
      c.h = jp::string(jp::require(cs[i], "h", path), jp::join(path, "h"));
      c.positive_region = static_cast<int>(
          jp::integer(jp::require(cs[i], "positive_region", path), jp::join(path, "positive_region")));
      c.negative_region = static_cast<int>(
          jp::integer(jp::require(cs[i], "negative_region", path), jp::join(path, "negative_region")));
      detail::check_expression(c.h, s.parameters, jp::join(path, "h"));
      s.curves.push_back(std::move(c));
    }
  }

  const auto& rs = jp::array(jp::require(doc, "regions", ""), "regions");
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const std::string path = jp::index("regions", i);
    RegionDef r;
    r.id = static_cast<int>(jp::integer(jp::require(rs[i], "id", path), jp::join(path, "id")));
    const std::string fpath = jp::join(path, "field");
    const auto& f = jp::array(jp::require(rs[i], "field", path), fpath);
    if (f.size() != 2) jp::fail(fpath, "expected [fx, fy]");
    r.field_x = jp::string(f[0], jp::index(fpath, 0));
    r.field_y = jp::string(f[1], jp::index(fpath, 1));
    detail::check_expression(r.field_x, s.parameters, jp::index(fpath, 0));
    detail::check_expression(r.field_y, s.parameters, jp::index(fpath, 1));
    if (auto m = rs[i].find("membership"); m != rs[i].end()) {
      const std::string mpath = jp::join(path, "membership");
      const auto& ms = jp::array(*m, mpath);
      for (std::size_t k = 0; k < ms.size(); ++k) {
        const std::string cpath = jp::index(mpath, k);
        SignCondition sc;
        sc.curve = static_cast<int>(jp::integer(jp::require(ms[k], "curve", cpath), jp::join(cpath, "curve")));
        sc.sign = static_cast<int>(jp::integer(jp::require(ms[k], "sign", cpath), jp::join(cpath, "sign")));
        if (sc.sign != 1 && sc.sign != -1) jp::fail(jp::join(cpath, "sign"), "expected 1 or -1");
        r.membership.push_back(sc);
      }
    }
    s.regions.push_back(std::move(r));
  }

  if (auto it = doc.find("diagnostics"); it != doc.end()) s.diagnostics = parse_diagnostics(*it, "diagnostics");

  try {
    FilippovSystem sys = make_system(s.domain, s.curves, s.regions, s.parameters);
    return Scenario{s.name, s.domain, s.parameters, s.curves, s.regions, s.diagnostics, std::move(sys)};
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("system validation: ") + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": JSON parse error: " + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace filippov

#endif  // FILIPPOV_SCENARIO_HPP
