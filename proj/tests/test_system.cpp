#include <gtest/gtest.h>

#include <random>
#include <variant>

#include "filippov/system.hpp"
#include "systems.hpp"

using namespace filippov;
using filippov::test_support::half_plane;
using filippov::test_support::torus_belt;

TEST(Domain, TorusCanonicalAndDistance) {
  const Domain d = Domain::make(DomainKind::flat_torus, 0, 1, 0, 1);
  const Vec2 c = d.canonical({2.25, -0.5});
  EXPECT_DOUBLE_EQ(c.x, 0.25);
  EXPECT_DOUBLE_EQ(c.y, 0.5);
  EXPECT_NEAR(d.distance({0.05, 0.5}, {0.95, 0.5}), 0.1, 1e-15);
  EXPECT_NEAR(d.diameter(), std::sqrt(0.5), 1e-15);
  EXPECT_THROW(Domain::make(DomainKind::plane_rect, 1, 0, 0, 1), ConfigError);
}

TEST(RegionOf, SignsAndBand) {
  const auto sys = half_plane("1", "-1", "1", "1");
  EXPECT_EQ(sys.region_of({0.3, 0.5}), RegionLookup::region(1));
  EXPECT_EQ(sys.region_of({0.3, -0.5}), RegionLookup::region(2));
  EXPECT_EQ(sys.region_of({0.3, 0.0}), RegionLookup::sigma(0));
  EXPECT_EQ(sys.region_of({0.3, -1e-12}), RegionLookup::sigma(0));
}

TEST(LieDerivative, Examples) {
  const expr::Binding ab{{"a", 0.7}, {"b", -2.5}};
  const SwitchingCurve flat(0, expr::make_scalar("y", ab), 1, 2);
  const auto y = expr::make_planar("a", "b", ab);
  EXPECT_DOUBLE_EQ(FilippovSystem::lie_derivative(y, flat, {0.2, 0.9}), -2.5);

  const SwitchingCurve circle(0, expr::make_scalar("x^2 + y^2 - 1", {}), 1, 2);
  EXPECT_DOUBLE_EQ(FilippovSystem::lie_derivative(expr::make_planar("-y", "x", {}), circle, {1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(FilippovSystem::lie_derivative(expr::make_planar("1", "0", {}), circle, {1, 0}), 2.0);
}

TEST(FieldAt, LookupMarkerAndDomainExit) {
  const auto sys = half_plane("1", "-1", "1", "1");
  const FieldValue v = sys.field_at({0, 1});
  ASSERT_TRUE(std::holds_alternative<Vec2>(v));
  EXPECT_EQ(std::get<Vec2>(v), (Vec2{1, -1}));
  const FieldValue m = sys.field_at({0, 0});
  ASSERT_TRUE(std::holds_alternative<SigmaMarker>(m));
  EXPECT_EQ(std::get<SigmaMarker>(m).curve, 0);
  EXPECT_THROW(sys.field_at({5, 0}), DomainError);
}

TEST(FieldAt, EqualsOwningRegionExpression) {
  const auto sys = half_plane("sin(x)*y", "x - y^2", "exp(x)", "cos(y)");
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{u(rng), u(rng)};
    const Vec2 v = std::get<Vec2>(sys.field_at(p));
    if (p.y > 0) {
      EXPECT_EQ(v, (Vec2{std::sin(p.x) * p.y, p.x - p.y * p.y}));
    } else {
      EXPECT_EQ(v, (Vec2{std::exp(p.x), std::cos(p.y)}));
    }
  }
}

TEST(Validation, IntersectingCurvesNameBothIds) {
  const Domain dom = Domain::make(DomainKind::plane_rect, -1, 1, -1, 1);
  try {
    make_system(dom, {{3, "y", 1, 2}, {7, "x", 1, 2}},
                {{1, "1", "0", {{3, +1}}}, {2, "1", "0", {{3, -1}}}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("curves 3 and 7"), std::string::npos) << msg;
  }
}

TEST(Validation, RegularValueAndRegions) {
  const Domain dom = Domain::make(DomainKind::plane_rect, -1, 1, -1, 1);
  EXPECT_THROW(make_system(dom, {{0, "y^3", 1, 2}}, {{1, "1", "0", {{0, +1}}}, {2, "1", "0", {{0, -1}}}}),
               ConfigError);
  // Region 2 is never matched.
  EXPECT_THROW(make_system(dom, {{0, "y", 1, 2}}, {{1, "1", "0", {}}, {2, "1", "0", {{0, -1}}}}), ConfigError);
  // Same region on both sides.
  EXPECT_THROW(make_system(dom, {{0, "y", 1, 1}}, {{1, "1", "0", {}}}), ConfigError);
  // Membership sign contradicts the side map.
  EXPECT_THROW(make_system(dom, {{0, "y", 1, 2}}, {{1, "1", "0", {{0, -1}}}, {2, "1", "0", {{0, +1}}}}),
               ConfigError);
  // A non-finite field is caught while sampling.
  EXPECT_THROW(make_system(dom, {{0, "y", 1, 2}}, {{1, "1/(x - x)", "0", {{0, +1}}}, {2, "1", "0", {{0, -1}}}}),
               ConfigError);
}

TEST(Validation, TorusRequiresPeriodicFunctions) {
  EXPECT_NO_THROW(torus_belt("1", "-1", "1", "1"));
  EXPECT_THROW(torus_belt("x", "-1", "1", "1"), ConfigError);
  const Domain torus = Domain::make(DomainKind::flat_torus, 0, 1, 0, 1);
  EXPECT_THROW(make_system(torus, {{0, "y - 0.5", 1, 2}}, {{1, "1", "0", {{0, +1}}}, {2, "1", "0", {{0, -1}}}}),
               ConfigError);
}

TEST(TorusInvariance, RegionAndLieUnderPeriodShift) {
  const auto sys = torus_belt("0.3 + sin(2*pi*x)", "-1", "0.6", "cos(2*pi*x)");
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    const Vec2 p{u(rng), u(rng)};
    for (const Vec2 shift : {Vec2{1, 0}, Vec2{0, 1}, Vec2{-3, 2}}) {
      const Vec2 q = p + shift;
      if (std::abs(std::sin(2 * M_PI * p.y)) < 1e-6) continue;
      EXPECT_EQ(sys.region_of(p), sys.region_of(q));
      for (int rid : {1, 2}) EXPECT_NEAR(sys.lie(0, rid, p), sys.lie(0, rid, q), 1e-12);
    }
  }
}

TEST(TimeReversal, NegatesFields) {
  const auto sys = half_plane("1", "-1", "2", "x");
  const auto rev = sys.time_reversed();
  EXPECT_TRUE(rev.reversed());
  EXPECT_EQ(rev.region_field(1, {0.2, 0.5}), (Vec2{-1, 1}));
  EXPECT_EQ(rev.region_field(2, {0.2, -0.5}), (Vec2{-2, -0.2}));
  EXPECT_DOUBLE_EQ(rev.second_lie(0, 2, {0.2, 0}), sys.second_lie(0, 2, {0.2, 0}));
}
