#ifndef FILIPPOV_COVERAGE_HPP
#define FILIPPOV_COVERAGE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

#include "filippov/format.hpp"
#include "filippov/integrator.hpp"
#include "filippov/orbit.hpp"
#include "filippov/sigma.hpp"

namespace filippov {

/// Runs fn(i) for i in [0, n) on a small thread pool. Callers write results
/// into per-index slots, so the outcome does not depend on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < threads; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct Disk {
  Vec2 center;
  double radius = 0.0;
};

/// Earliest time at which the sampled trace comes within the disk, if any.
/// Consecutive samples are joined by chords (with minimal-image wrap on the
/// torus).
inline std::optional<double> first_entry(const Domain& dom, const std::vector<Sample>& trace, const Disk& disk) {
  if (trace.empty()) return std::nullopt;
  if (dom.distance(trace.front().p, disk.center) < disk.radius) return trace.front().t;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const Vec2 a = trace[k - 1].p;
    const Vec2 b = a + dom.displacement(a, trace[k].p);
    const Vec2 c = a + dom.displacement(a, disk.center);
    double s = 0.0;
    if (detail::segment_distance(a, b, c, s) >= disk.radius) continue;
    // First parameter where |a + s (b - a) - c| = radius.
    const Vec2 d = b - a;
    const Vec2 f = a - c;
    const double qa = dot(d, d);
    const double qb = 2.0 * dot(f, d);
    const double qc = dot(f, f) - disk.radius * disk.radius;
    if (qa > 0.0 && qc > 0.0) s = std::clamp((-qb - std::sqrt(std::max(0.0, qb * qb - 4 * qa * qc))) / (2 * qa), 0.0, 1.0);
    else if (qc <= 0.0) s = 0.0;
    return trace[k - 1].t + s * (trace[k].t - trace[k - 1].t);
  }
  return std::nullopt;
}

/// Linear interpolation of the orbit position at time t.
inline Vec2 position_at(const Domain& dom, const Orbit& orbit, double t) {
  for (const auto& seg : orbit.segments) {
    if (t > seg.t_b || seg.samples.size() < 2) continue;
    for (std::size_t k = 1; k < seg.samples.size(); ++k) {
      const Sample& a = seg.samples[k - 1];
      const Sample& b = seg.samples[k];
      if (t <= b.t) {
        const double w = b.t > a.t ? (t - a.t) / (b.t - a.t) : 0.0;
        return dom.canonical(a.p + w * dom.displacement(a.p, b.p));
      }
    }
  }
  return orbit.end_point();
}

/// n x n cell grid over the domain with per-cell hit flags.
class GridCoverage {
 public:
  GridCoverage(const Domain& dom, int n) : dom_(dom), n_(n), hits_(static_cast<std::size_t>(n) * n, 0) {
    if (n < 1) throw ConfigError("grid resolution must be >= 1");
  }

  int resolution() const { return n_; }
  const Domain& domain() const { return dom_; }
  bool hit(int i, int j) const { return hits_[index(i, j)] != 0; }
  std::size_t hit_count() const { return static_cast<std::size_t>(std::count(hits_.begin(), hits_.end(), 1)); }
  double fraction() const { return static_cast<double>(hit_count()) / static_cast<double>(hits_.size()); }

  void mark(const Vec2& p_in) {
    const Vec2 p = dom_.canonical(p_in);
    if (!dom_.contains(p)) return;
    const int i = std::clamp(static_cast<int>((p.x - dom_.x_min) / dom_.width() * n_), 0, n_ - 1);
    const int j = std::clamp(static_cast<int>((p.y - dom_.y_min) / dom_.height() * n_), 0, n_ - 1);
    hits_[index(i, j)] = 1;
  }

  /// Marks every cell met by the chord from a to b.
  void mark_chord(const Vec2& a, const Vec2& b_in) {
    const Vec2 d = dom_.displacement(a, b_in);
    const double cell = std::min(dom_.width(), dom_.height()) / n_;
    const int steps = std::max(1, static_cast<int>(std::ceil(norm(d) / (0.25 * cell))));
    for (int k = 0; k <= steps; ++k) mark(a + (static_cast<double>(k) / steps) * d);
  }

  void mark_orbit(const Orbit& o) {
    for (const auto& seg : o.segments) {
      mark(seg.samples.front().p);
      for (std::size_t k = 1; k < seg.samples.size(); ++k) mark_chord(seg.samples[k - 1].p, seg.samples[k].p);
    }
  }

  void merge(const GridCoverage& other) {
    for (std::size_t k = 0; k < hits_.size(); ++k) hits_[k] |= other.hits_[k];
  }

  /// Rows from bottom (j = 0) to top; columns i = 0..n-1; 1 marks a hit.
  void write_csv(std::ostream& out) const {
    out << "j,i,x_center,y_center,hit\n";
    for (int j = 0; j < n_; ++j) {
      for (int i = 0; i < n_; ++i) {
        const double xc = dom_.x_min + (i + 0.5) * dom_.width() / n_;
        const double yc = dom_.y_min + (j + 0.5) * dom_.height() / n_;
        out << j << ',' << i << ',' << format_double(xc) << ',' << format_double(yc) << ',' << (hit(i, j) ? 1 : 0)
            << '\n';
      }
    }
  }

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n_ + i; }

  Domain dom_;
  int n_;
  std::vector<std::uint8_t> hits_;
};

/// Forward and backward orbits from every seed under every policy, traced on
/// an n x n grid.
inline GridCoverage saturate(const Integrator& in, const std::vector<Vec2>& seeds, double horizon,
                             const std::vector<BranchPolicy>& policies, int n) {
  if (seeds.empty()) throw ConfigError("saturate needs at least one seed");
  if (policies.empty()) throw ConfigError("saturate needs at least one policy");
  const Domain& dom = in.system().domain();
  const std::size_t jobs = seeds.size() * policies.size() * 2;
  std::vector<GridCoverage> partial(jobs, GridCoverage(dom, n));
  parallel_for(jobs, [&](std::size_t k) {
    const std::size_t seed = k / (policies.size() * 2);
    const std::size_t pol = (k / 2) % policies.size();
    const Direction dir = k % 2 == 0 ? Direction::forward : Direction::backward;
    partial[k].mark_orbit(in.integrate(seeds[seed], horizon, dir, policies[pol]));
  });
  GridCoverage total(dom, n);
  for (const auto& g : partial) total.merge(g);
  return total;
}

/// Evenly spaced seeds on the sliding (and, if requested, escaping) arcs of
/// every curve, `per_arc` per arc, excluding arc endpoints.
inline std::vector<Vec2> sigma_seeds(const FilippovSystem& sys, int per_arc, bool include_escaping = true,
                                     int resolution = 2000) {
  std::vector<Vec2> out;
  for (const auto& c : sys.curves()) {
    const SigmaDecomposition dec = sigma_decomposition(sys, c.id, resolution);
    for (const auto& arc : dec.arcs) {
      const bool use = arc.kind == PointKind::sliding || (include_escaping && arc.kind == PointKind::escaping);
      const std::vector<Vec2> pts = arc_points(dec, arc);
      if (!use || pts.size() < 3) continue;
      for (int k = 0; k < per_arc; ++k) {
        const std::size_t idx = 1 + (pts.size() - 2) * static_cast<std::size_t>(2 * k + 1) / (2 * per_arc);
        out.push_back(pts[std::min(idx, pts.size() - 2)]);
      }
    }
  }
  return out;
}

}  // namespace filippov

#endif  // FILIPPOV_COVERAGE_HPP
