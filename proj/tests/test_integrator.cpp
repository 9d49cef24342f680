#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "filippov/integrator.hpp"
#include "filippov/orbit_io.hpp"
#include "systems.hpp"

using namespace filippov;
using namespace filippov::test_support;

namespace {

const OrbitSegment* first_of(const Orbit& o, SegmentKind k) {
  for (const auto& s : o.segments) {
    if (s.kind == k) return &s;
  }
  return nullptr;
}

}  // namespace

TEST(IntegrateRegular, LinearHitsCurve) {
  const Integrator in(half_plane("0", "-1", "0", "-1", box(2)));
  const RegularResult r = in.integrate_regular({0, 1}, 1, 5.0);
  ASSERT_EQ(r.hit, RegularHit::curve);
  EXPECT_EQ(r.curve, 0);
  EXPECT_NEAR(r.segment.t_b, 1.0, 1e-9);
  EXPECT_NEAR(r.segment.end().x, 0.0, 1e-12);
  EXPECT_LE(std::abs(r.segment.end().y), kEventTol);
}

TEST(IntegrateRegular, NoCurveReachesTMax) {
  const Integrator in(half_plane("1", "0", "1", "0", box(3)));
  const RegularResult r = in.integrate_regular({0, 0.5}, 1, 2.0);
  EXPECT_EQ(r.hit, RegularHit::none);
  EXPECT_DOUBLE_EQ(r.segment.t_b, 2.0);
  EXPECT_NEAR(r.segment.end().x, 2.0, 1e-12);
  EXPECT_NEAR(r.segment.end().y, 0.5, 1e-12);
}

TEST(IntegrateRegular, CircleClosesAfterTwoPi) {
  const Integrator in(smooth_plane("-y", "x"));
  const RegularResult r = in.integrate_regular({1, 0}, 1, 2 * M_PI);
  EXPECT_EQ(r.hit, RegularHit::none);
  // Closed form: (cos t, sin t).
  EXPECT_LE(norm(r.segment.end() - Vec2{1, 0}), 1e-7);
  for (const Sample& s : r.segment.samples) {
    EXPECT_LE(norm(s.p - Vec2{std::cos(s.t), std::sin(s.t)}), 1e-7);
  }
}

TEST(IntegrateRegular, LeavesPlaneDomain) {
  const Integrator in(smooth_plane("1", "0", 1.0));
  const RegularResult r = in.integrate_regular({0, 0}, 1, 5.0);
  ASSERT_EQ(r.hit, RegularHit::left_domain);
  EXPECT_NEAR(r.segment.t_b, 1.0, 1e-9);
  EXPECT_NEAR(r.segment.end().x, 1.0, 1e-9);
}

TEST(HandleSigmaEvent, CrossingSlidingAndVisibleFold) {
  const BranchPolicy pol = BranchPolicy::exit_up();
  const Integrator cross(half_plane("1", "-1", "1", "-1", box(2)));
  SigmaAction a = cross.handle_sigma_event(0, {1, 0}, 1, pol);
  EXPECT_EQ(a.kind, SigmaAction::Kind::enter_region);
  EXPECT_EQ(a.region, 2);
  ASSERT_TRUE(a.marker.has_value());
  EXPECT_EQ(a.marker->kind, SegmentKind::crossing_event);

  const Integrator slide(half_plane("1", "-1", "1", "1", box(2)));
  a = slide.handle_sigma_event(0, {1, 0}, 1, pol);
  EXPECT_EQ(a.kind, SigmaAction::Kind::slide);
  EXPECT_FALSE(a.escaping);

  // Y1 = (1, x) has a visible fold at the origin: Y1(Y1 h) = 1 > 0.
  const auto sys = half_plane("1", "x", "1", "1", box(2));
  const Integrator fold(sys);
  a = fold.handle_sigma_event(0, {0, 0}, 1, pol);
  EXPECT_EQ(a.kind, SigmaAction::Kind::enter_region);
  EXPECT_EQ(a.region, 1);
  // delta-step oracle: h = y grows along Y1 from the fold (y(t) = t^2 / 2).
  const RegularResult r = fold.integrate_regular({0, 0}, 1, 0.1);
  for (std::size_t i = 1; i < r.segment.samples.size(); ++i) EXPECT_GT(r.segment.samples[i].p.y, 0.0);
  EXPECT_NEAR(r.segment.end().y, 0.005, 1e-10);
}

TEST(HandleSigmaEvent, EscapingFollowsPolicy) {
  const Integrator in(half_plane("1", "1", "1", "-1", box(2)));
  SigmaAction a = in.handle_sigma_event(0, {0, 0}, -1, BranchPolicy::exit_down());
  EXPECT_EQ(a.kind, SigmaAction::Kind::enter_region);
  EXPECT_EQ(a.region, 2);
  ASSERT_TRUE(a.choice.has_value());
  EXPECT_EQ(a.choice->kind, ChoiceKind::escape_exit);
  a = in.handle_sigma_event(0, {0, 0}, -1, BranchPolicy::dwell_exit(0.3, Side::up));
  EXPECT_EQ(a.kind, SigmaAction::Kind::slide);
  EXPECT_TRUE(a.escaping);
  EXPECT_DOUBLE_EQ(a.slide_limit, 0.3);
}

TEST(HandleSigmaEvent, DoubleTangencyIsTerminal) {
  const Integrator in(half_plane("1", "x", "1", "-x", box(2)));
  const SigmaAction a = in.handle_sigma_event(0, {0, 0}, 1, BranchPolicy::exit_up());
  EXPECT_EQ(a.kind, SigmaAction::Kind::terminal);
  EXPECT_EQ(a.reason, TerminalReason::double_tangency);
}

TEST(IntegrateSliding, ConstantSlide) {
  const Integrator in(half_plane("1", "-1", "1", "1", box(4)));
  const SlidingResult r = in.integrate_sliding(0, {0, 0}, 3.0);
  EXPECT_EQ(r.exit, SlidingExit::t_max);
  EXPECT_NEAR(r.segment.end().x, 3.0, 1e-9);
  EXPECT_NEAR(r.segment.end().y, 0.0, 1e-12);
}

TEST(IntegrateSliding, ExitsAtFold) {
  const auto sys = half_plane("1", "x", "1", "1", box(2));
  const Integrator in(sys);
  const SlidingResult r = in.integrate_sliding(0, {-1, 0}, 5.0);
  ASSERT_EQ(r.exit, SlidingExit::tangency);
  EXPECT_EQ(r.tangent_region, 1);
  // Oracle: dense scan of L1 along the slide (Z_s = (1, 0) so x(t) = t - 1).
  double fold = NAN;
  for (int i = 0; i < 200000; ++i) {
    const double x = -1.0 + i * 1e-5;
    if (sys.lie(0, 1, {x, 0}) >= 0.0) {
      fold = x;
      break;
    }
  }
  EXPECT_NEAR(r.segment.end().x, fold, 2e-5);
  EXPECT_NEAR(r.segment.end().x, 0.0, 1e-8);
  EXPECT_NEAR(r.segment.t_b, 1.0, 1e-8);
}

TEST(IntegrateSliding, ApproachesPseudoEquilibrium) {
  const Integrator in(half_plane("-x", "-1", "-x", "1", box(2)));
  const SlidingResult r = in.integrate_sliding(0, {1, 0}, 100.0);
  ASSERT_EQ(r.exit, SlidingExit::pseudo_eq);
  EXPECT_LE(std::abs(r.segment.end().x), 1e-6);
  // Exponential approach x(t) = exp(-t) along the way.
  for (const Sample& s : r.segment.samples) EXPECT_NEAR(s.p.x, std::exp(-s.t), 1e-8);
}

TEST(IntegrateFilippov, RegularThenSliding) {
  const Integrator in(half_plane("1", "-1", "1", "1", box(4)));
  const Orbit o = in.integrate({0, 1}, 3.0, Direction::forward, BranchPolicy::exit_up());
  ASSERT_GE(o.segments.size(), 2u);
  EXPECT_EQ(o.segments[0].kind, SegmentKind::regular_arc);
  EXPECT_NEAR(o.segments[0].t_b, 1.0, 1e-9);
  EXPECT_NEAR(o.segments[0].end().x, 1.0, 1e-9);
  EXPECT_EQ(o.segments[1].kind, SegmentKind::sliding_arc);
  EXPECT_NEAR(o.end_point().x, 3.0, 1e-9);
  EXPECT_NEAR(o.end_point().y, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(o.end_time(), 3.0);
}

TEST(IntegrateFilippov, StraightThroughCrossing) {
  const Integrator in(half_plane("1", "-1", "1", "-1", box(4)));
  const Orbit o = in.integrate({0, 1}, 2.0, Direction::forward, BranchPolicy::exit_up());
  const OrbitSegment* c = first_of(o, SegmentKind::crossing_event);
  ASSERT_NE(c, nullptr);
  EXPECT_NEAR(c->start().x, 1.0, 1e-9);
  EXPECT_NEAR(o.end_point().x, 2.0, 1e-9);
  EXPECT_NEAR(o.end_point().y, -1.0, 1e-9);
}

TEST(IntegrateFilippov, TorusSlidingWraps) {
  const Integrator in(torus_belt("1", "-1", "1", "1"));
  const Orbit o = in.integrate({0, 0}, 2.5, Direction::forward, BranchPolicy::exit_up());
  ASSERT_EQ(o.segments.size(), 1u);
  EXPECT_EQ(o.segments[0].kind, SegmentKind::sliding_arc);
  EXPECT_NEAR(o.end_point().x, 0.5, 1e-9);
  EXPECT_NEAR(o.end_point().y, 0.0, 1e-12);
}

TEST(IntegrateFilippov, BackwardSwapsSlidingAndEscaping) {
  // Forward the belt y = 0 is sliding; backward it is escaping and the
  // policy decides the exit.
  const Integrator in(torus_belt("1", "-1", "1", "1"));
  const Orbit up = in.integrate({0.2, 0}, 0.2, Direction::backward, BranchPolicy::exit_up());
  ASSERT_EQ(up.branches.size(), 1u);
  EXPECT_EQ(up.branches[0].kind, ChoiceKind::escape_exit);
  // Reversed region-1 field is (-1, 1): straight line.
  EXPECT_NEAR(up.end_point().x, 0.0, 1e-9);
  EXPECT_NEAR(up.end_point().y, 0.2, 1e-9);
  const Orbit down = in.integrate({0.2, 0}, 0.2, Direction::backward, BranchPolicy::exit_down());
  EXPECT_NEAR(down.end_point().x, 0.0, 1e-9);
  EXPECT_NEAR(down.end_point().y, 0.8, 1e-9);
}

namespace {

/// Checks the segment-level invariants on one orbit; returns the number of
/// events checked.
int check_invariants(const FilippovSystem& sys, const Orbit& o) {
  const Domain& d = sys.domain();
  int events = 0;
  for (std::size_t i = 0; i < o.segments.size(); ++i) {
    const OrbitSegment& s = o.segments[i];
    EXPECT_FALSE(s.samples.empty());
    EXPECT_DOUBLE_EQ(s.samples.front().t, s.t_a);
    EXPECT_DOUBLE_EQ(s.samples.back().t, s.t_b);
    if (i > 0) {
      EXPECT_DOUBLE_EQ(o.segments[i - 1].t_b, s.t_a);
      EXPECT_LE(d.distance(o.segments[i - 1].end(), s.start()), 1e-9);
    }
    if (s.kind == SegmentKind::regular_arc) {
      // No sign change of any h between stored samples.
      for (const auto& c : sys.curves()) {
        int sign = 0;
        for (std::size_t k = 1; k + 1 < s.samples.size(); ++k) {
          const double v = c.value(s.samples[k].p);
          EXPECT_GT(std::abs(v), kSigmaBand) << "interior sample on curve " << c.id;
          const int sg = v > 0 ? 1 : -1;
          if (sign != 0) {
            EXPECT_EQ(sg, sign) << "sign change inside a regular arc";
          }
          sign = sg;
        }
      }
      const bool ends_on_sigma = i + 1 < o.segments.size() && o.segments[i + 1].kind != SegmentKind::terminal;
      if (ends_on_sigma) {
        double hmin = 1e300;
        for (const auto& c : sys.curves()) hmin = std::min(hmin, std::abs(c.value(s.end())));
        EXPECT_LE(hmin, kEventTol);
        ++events;
      }
    }
    if (s.kind == SegmentKind::sliding_arc) {
      const auto& c = sys.curve(s.curve);
      for (const auto& smp : s.samples) EXPECT_LE(std::abs(c.value(smp.p)), kSlidingBand);
      for (std::size_t k = 1; k + 1 < s.samples.size(); ++k) {
        const PointClass pc = classify_point(sys, s.curve, s.samples[k].p);
        EXPECT_TRUE(pc.sliding_or_escaping()) << to_string(pc.kind);
        if (pc.kind != PointKind::pseudo_equilibrium) {
          EXPECT_EQ(pc.kind == PointKind::escaping, s.escaping);
        }
      }
    }
  }
  return events;
}

}  // namespace

TEST(IntegratorInvariants, ChaoticTorusRandomStarts) {
  const auto sys = chaotic_torus();
  const Integrator in(sys);
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  const BranchPolicy pols[] = {BranchPolicy::exit_up(), BranchPolicy::exit_down(), BranchPolicy::slide(),
                               BranchPolicy::dwell_exit(0.2, Side::down)};
  int events = 0;
  for (int i = 0; i < 40; ++i) {
    const Vec2 p{u(rng), u(rng)};
    for (Direction dir : {Direction::forward, Direction::backward}) {
      const Orbit o = in.integrate(p, 15.0, dir, pols[i % 4]);
      EXPECT_EQ(o.terminal_reason(), TerminalReason::none);
      EXPECT_DOUBLE_EQ(o.end_time(), 15.0);
      events += check_invariants(in.system(dir), o);
    }
  }
  EXPECT_GT(events, 200);
}

TEST(IntegratorInvariants, TighterToleranceMovesEndpointsLittle) {
  const auto sys = chaotic_torus();
  IntegratorOptions tight;
  tight.tol.rtol *= 0.1;
  tight.tol.atol *= 0.1;
  const Integrator a(sys), b(sys, tight);
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10; ++i) {
    const Vec2 p{u(rng), u(rng)};
    const Orbit oa = a.integrate(p, 10.0, Direction::forward, BranchPolicy::dwell_exit(0.1, Side::up));
    const Orbit ob = b.integrate(p, 10.0, Direction::forward, BranchPolicy::dwell_exit(0.1, Side::up));
    ASSERT_EQ(oa.segments.size(), ob.segments.size());
    for (std::size_t k = 0; k < oa.segments.size(); ++k) {
      EXPECT_LE(sys.domain().distance(oa.segments[k].end(), ob.segments[k].end()), 1e-6);
    }
  }
}

TEST(IntegratorInvariants, EmpiricalOrderOnCircle) {
  // Error of the end point against the closed form for fixed steps: halving
  // the step must shrink the error by at least 2^4.
  const auto sys = smooth_plane("-y", "x");
  auto err = [&](double rtol) {
    IntegratorOptions opt;
    opt.tol.rtol = rtol;
    opt.tol.atol = rtol * 1e-2;
    const Integrator in(sys, opt);
    const RegularResult r = in.integrate_regular({1, 0}, 1, 2 * M_PI);
    return std::pair{norm(r.segment.end() - Vec2{1, 0}), r.segment.samples.size() - 1};
  };
  const auto [e1, n1] = err(1e-6);
  const auto [e2, n2] = err(1e-9);
  const double order = std::log(e1 / e2) / std::log(static_cast<double>(n2) / n1);
  EXPECT_GE(order, 4.0) << e1 << " " << e2 << " " << n1 << " " << n2;
}

TEST(IntegratorInvariants, ForwardThenBackwardReturns) {
  const auto sys = chaotic_torus();
  const Integrator in(sys);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.45);
  for (int i = 0; i < 20; ++i) {
    const Vec2 p{u(rng), u(rng)};
    const RegularResult f = in.integrate_regular(p, 1, 0.04);
    ASSERT_EQ(f.hit, RegularHit::none);
    const RegularResult b = in.integrate_regular(f.segment.end(), 1, 0.04, Direction::backward);
    EXPECT_LE(sys.domain().distance(b.segment.end(), p), 1e-7);
  }
}

TEST(IntegratorInvariants, Deterministic) {
  const Integrator in(chaotic_torus());
  auto dump = [&] {
    const Orbit o = in.integrate({0.7, 0.8}, 12.0, Direction::forward, BranchPolicy::dwell_exit(0.25, Side::down));
    std::ostringstream csv;
    write_orbit_csv(o, csv);
    return csv.str() + orbit_summary_json(o).dump();
  };
  EXPECT_EQ(dump(), dump());
}

TEST(EnumerateBranches, EscapingStartForksThreeWays) {
  const Integrator in(half_plane("1", "1", "1", "-1", box(2)));
  const auto orbits = in.enumerate_branches({0, 0}, 0.5, 3, {0.0});
  ASSERT_EQ(orbits.size(), 3u);
  EXPECT_GT(orbits[0].end_point().y, 0.4);
  EXPECT_LT(orbits[1].end_point().y, -0.4);
  EXPECT_EQ(orbits[2].segments[0].kind, SegmentKind::sliding_arc);
  EXPECT_TRUE(orbits[2].segments[0].escaping);
}

TEST(EnumerateBranches, NoEscapingMeansOneOrbit) {
  const Integrator in(half_plane("1", "-1", "1", "1", box(4)));
  for (std::size_t budget : {1u, 5u, 100u}) {
    EXPECT_EQ(in.enumerate_branches({0, 1}, 2.0, budget, {0.0, 0.1}).size(), 1u);
  }
}

TEST(EnumerateBranches, ForkTreeCount) {
  const Integrator in(chaotic_torus());
  const std::vector<double> grid{0.0, 0.1};
  const Vec2 start{0.3, 0.25};
  // Fork oracle: each encounter splits into 2 * |grid| + 1 children; a
  // depth-1 child contributes 5 leaves when its orbit reaches a second
  // encounter before the horizon and 1 otherwise.
  std::vector<EscapeDecision> forks;
  for (double d : grid) {
    forks.push_back({false, d, Side::up});
    forks.push_back({false, d, Side::down});
  }
  forks.push_back({true, 0.0, Side::up});
  for (double horizon : {1.5, 3.0, 30.0}) {
    std::size_t expected = 0;
    const Orbit root = in.integrate(start, horizon, Direction::forward, BranchPolicy::exit_up());
    if (root.branches.empty()) {
      expected = 1;
    } else {
      for (const auto& f : forks) {
        BranchPolicy p = BranchPolicy::exit_up();
        p.script = {f};
        const Orbit o = in.integrate(start, horizon, Direction::forward, p);
        std::size_t decisions = 0;
        for (const auto& b : o.branches) decisions += b.kind == ChoiceKind::escape_exit || b.kind == ChoiceKind::slide_on;
        expected += decisions >= 2 ? forks.size() : 1;
      }
    }
    EXPECT_EQ(in.enumerate_branches(start, horizon, 100, grid, 2).size(), expected) << horizon;
    if (horizon == 30.0) {
      EXPECT_EQ(expected, 25u);
    }
  }
  EXPECT_EQ(in.enumerate_branches(start, 30.0, 7, grid, 2).size(), 7u);
}
