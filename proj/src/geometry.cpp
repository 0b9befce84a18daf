#include "borderdef/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace borderdef {

namespace {

void require_valid_pair(const Point2& attacker, const Point2& defender, double nu) {
  if (!attacker.finite() || !defender.finite() || !std::isfinite(nu)) {
    throw std::invalid_argument("apollonius_circle: non-finite input");
  }
  if (!(nu > 1.0)) {
    throw std::invalid_argument("apollonius_circle: speed ratio must exceed 1, got " + std::to_string(nu));
  }
}

struct Candidate {
  Point2 p;
  std::size_t index;
};

}  // namespace

Circle apollonius_circle(const Point2& attacker, const Point2& defender, double nu) {
  require_valid_pair(attacker, defender, nu);
  const double nu2 = nu * nu;
  const double denom = nu2 - 1.0;
  Circle c;
  c.center = {(nu2 * attacker.x - defender.x) / denom, (nu2 * attacker.y - defender.y) / denom};
  c.radius = nu * distance(attacker, defender) / denom;
  // With coincident agents the formula collapses onto the attacker; pin it exactly.
  if (c.radius == 0.0) c.center = attacker;
  return c;
}

NashSolution nash_payoff_single(const Point2& attacker, const Point2& defender, double nu) {
  const Circle c = apollonius_circle(attacker, defender, nu);
  NashSolution s;
  s.intercept_point = c.bottom();
  s.unclamped = s.intercept_point.y;
  s.clamped = s.unclamped < 0.0;
  s.payoff = std::max(0.0, s.unclamped);
  return s;
}

CircleIntersections circle_pair_intersections(const Circle& a, const Circle& b) {
  CircleIntersections out;
  const Point2 delta = b.center - a.center;
  const double d = delta.norm();
  const double tol = 1e-12 * std::max(1.0, a.radius + b.radius);

  if (d <= tol) {
    out.degenerate = std::abs(a.radius - b.radius) <= tol;
    return out;
  }
  const double outer_gap = d - (a.radius + b.radius);
  const double inner_gap = std::abs(a.radius - b.radius) - d;
  if (outer_gap > tol || inner_gap > tol) return out;

  const Point2 u = delta * (1.0 / d);
  const double along = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
  const Point2 foot = a.center + u * along;
  if (outer_gap >= -tol || inner_gap >= -tol) {
    out.points.push_back(foot);
    return out;
  }
  const double h = std::sqrt(std::max(0.0, a.radius * a.radius - along * along));
  const Point2 n{-u.y, u.x};
  out.points.push_back(foot + n * h);
  out.points.push_back(foot - n * h);
  return out;
}

bool inside_disk(const Circle& c, const Point2& p, double eps) {
  return (p - c.center).squared_norm() <= c.radius * c.radius + eps;
}

NashSolution nash_payoff_multi(const PursuitConfig& config) {
  const auto& defenders = config.capture_defenders;
  if (defenders.empty()) throw NoCaptureCapability();
  if (defenders.size() == 1) {
    return nash_payoff_single(config.attacker, defenders[0].position, defenders[0].speed_ratio);
  }

  std::vector<Circle> disks;
  disks.reserve(defenders.size());
  for (const auto& d : defenders) disks.push_back(apollonius_circle(config.attacker, d.position, d.speed_ratio));

  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < disks.size(); ++i) candidates.push_back({disks[i].bottom(), i});
  for (std::size_t i = 0; i < disks.size(); ++i) {
    for (std::size_t j = i + 1; j < disks.size(); ++j) {
      for (const Point2& p : circle_pair_intersections(disks[i], disks[j]).points) candidates.push_back({p, i});
    }
  }

  const auto feasible = [&](const Point2& p) {
    return std::all_of(disks.begin(), disks.end(), [&](const Circle& c) { return inside_disk(c, p); });
  };

  std::vector<Candidate> kept;
  for (const auto& c : candidates) {
    if (feasible(c.p)) kept.push_back(c);
  }
  if (kept.empty()) throw InvariantViolation("nash_payoff_multi: no feasible candidate point");

  double min_y = kept.front().p.y;
  for (const auto& c : kept) min_y = std::min(min_y, c.p.y);

  const Candidate* best = nullptr;
  for (const auto& c : kept) {
    if (c.p.y > min_y + kFeasibilityEps) continue;
    if (best == nullptr || c.p.x < best->p.x || (c.p.x == best->p.x && c.index < best->index)) best = &c;
  }

  NashSolution s;
  s.intercept_point = best->p;
  s.unclamped = best->p.y;
  s.clamped = s.unclamped < 0.0;
  s.payoff = std::max(0.0, s.unclamped);
  return s;
}

double nash_payoff_oracle(const PursuitConfig& config, int grid_resolution) {
  if (config.capture_defenders.empty()) throw NoCaptureCapability();
  if (grid_resolution < 100) throw std::invalid_argument("nash_payoff_oracle: grid_resolution must be >= 100");

  std::vector<Circle> disks;
  for (const auto& d : config.capture_defenders) {
    disks.push_back(apollonius_circle(config.attacker, d.position, d.speed_ratio));
  }

  // The feasible set lies inside every disk's bounding box.
  double x_min = -std::numeric_limits<double>::infinity();
  double x_max = std::numeric_limits<double>::infinity();
  double y_min = x_min;
  double y_max = x_max;
  for (const auto& c : disks) {
    x_min = std::max(x_min, c.center.x - c.radius);
    x_max = std::min(x_max, c.center.x + c.radius);
    y_min = std::max(y_min, c.center.y - c.radius);
    y_max = std::min(y_max, c.center.y + c.radius);
  }
  const double span = std::max(x_max - x_min, y_max - y_min);

  const auto inside_all = [&](const Point2& p) {
    return std::all_of(disks.begin(), disks.end(), [&](const Circle& c) { return inside_disk(c, p, 0.0); });
  };

  // The attacker's own cell is always feasible.
  double best = config.attacker.y;
  if (span > 0.0) {
    const double h = span / grid_resolution;
    for (int i = 0; i <= grid_resolution; ++i) {
      const double x = x_min + i * h;
      // Column scan: grid points in this column inside every disk form a
      // contiguous run; find the lowest by interval intersection, then test
      // the neighbouring grid points directly.
      double lo = y_min;
      double hi = y_max;
      bool empty = false;
      for (const auto& c : disks) {
        const double dx = x - c.center.x;
        const double rem = c.radius * c.radius - dx * dx;
        if (rem < 0.0) {
          empty = true;
          break;
        }
        const double half = std::sqrt(rem);
        lo = std::max(lo, c.center.y - half);
        hi = std::min(hi, c.center.y + half);
      }
      if (empty || lo > hi + h) continue;
      const long j0 = static_cast<long>(std::ceil((lo - y_min) / h));
      for (long j = std::max(0L, j0 - 1); j <= j0 + 1; ++j) {
        const Point2 p{x, y_min + j * h};
        if (p.y < best && inside_all(p)) {
          best = p.y;
          break;
        }
      }
    }
  }
  return std::max(0.0, best);
}

double GridSpec::x_at(int i) const { return x_min + (i + 0.5) * (x_max - x_min) / nx; }
double GridSpec::y_at(int j) const { return y_min + (j + 0.5) * (y_max - y_min) / ny; }

Landscape payoff_landscape(const PursuitConfig& fixed, double varying_defender_nu, const GridSpec& grid) {
  if (grid.nx < 1 || grid.ny < 1) throw std::invalid_argument("payoff_landscape: resolution must be positive");
  Landscape out;
  out.grid = grid;
  out.values.assign(static_cast<std::size_t>(grid.nx) * grid.ny, kLandscapeSentinel);
  PursuitConfig config = fixed;
  config.capture_defenders.push_back({});
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      config.capture_defenders.back() = {{grid.x_at(i), grid.y_at(j)}, varying_defender_nu};
      try {
        out.values[static_cast<std::size_t>(j) * grid.nx + i] = nash_payoff_multi(config).payoff;
      } catch (const std::exception&) {
        ++out.failures;
      }
    }
  }
  return out;
}

}  // namespace borderdef
