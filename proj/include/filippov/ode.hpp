#ifndef FILIPPOV_ODE_HPP
#define FILIPPOV_ODE_HPP

// Dormand-Prince 5(4) with the standard fourth-order continuous extension.

#include <algorithm>
#include <cmath>

#include "filippov/vec2.hpp"

namespace filippov::ode {

struct Tolerance {
  double rtol = 1e-10;
  double atol = 1e-12;
};

/// One attempted step from (t, y) with size h. Holds everything needed for
/// dense output on [t, t + h].
struct Step {
  double t = 0.0;
  double h = 0.0;
  Vec2 y0, y1;
  Vec2 k1, k7;  // derivative at both ends (FSAL)
  Vec2 r3, r4, r5;
  double error = 0.0;  // scaled RMS error estimate, accept when <= 1

  Vec2 at(double theta) const {
    const double s = 1.0 - theta;
    const Vec2 r2 = y1 - y0;
    return y0 + theta * (r2 + s * (r3 + theta * (r4 + s * r5)));
  }
  Vec2 at_time(double tt) const { return at(h == 0.0 ? 0.0 : (tt - t) / h); }
};

template <class F>
Step dopri_step(const F& f, double t, const Vec2& y, const Vec2& k1, double h, const Tolerance& tol) {
  constexpr double a21 = 1.0 / 5.0;
  constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                   a65 = -5103.0 / 18656.0;
  constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                   a76 = 11.0 / 84.0;
  constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                   e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                   d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                   d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  const Vec2 k2 = f(y + h * (a21 * k1));
  const Vec2 k3 = f(y + h * (a31 * k1 + a32 * k2));
  const Vec2 k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vec2 k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vec2 k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  const Vec2 y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
  const Vec2 k7 = f(y1);

  Step s;
  s.t = t;
  s.h = h;
  s.y0 = y;
  s.y1 = y1;
  s.k1 = k1;
  s.k7 = k7;
  const Vec2 err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  const double sx = tol.atol + tol.rtol * std::max(std::abs(y.x), std::abs(y1.x));
  const double sy = tol.atol + tol.rtol * std::max(std::abs(y.y), std::abs(y1.y));
  s.error = std::sqrt(0.5 * ((err.x / sx) * (err.x / sx) + (err.y / sy) * (err.y / sy)));
  if (!std::isfinite(s.error)) s.error = 1e300;

  const Vec2 diff = y1 - y;
  s.r3 = h * k1 - diff;
  s.r4 = diff - h * k7 - s.r3;
  s.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
  return s;
}

/// Step-size update factor from a scaled error estimate.
inline double step_factor(double error) {
  if (error <= 0.0) return 5.0;
  return std::clamp(0.9 * std::pow(error, -0.2), 0.2, 5.0);
}

}  // namespace filippov::ode

#endif  // FILIPPOV_ODE_HPP
