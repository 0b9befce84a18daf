// Apollonius-circle geometry and Nash payoff solvers for the pursuit phase.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace borderdef {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point2&) const = default;

  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

struct Circle {
  Point2 center;
  double radius = 0.0;

  Point2 bottom() const { return {center.x, center.y - radius}; }
};

struct CaptureDefender {
  Point2 position;
  double speed_ratio = 0.0;
};

struct PursuitConfig {
  Point2 attacker;
  std::vector<CaptureDefender> capture_defenders;
};

struct NashSolution {
  double payoff = 0.0;
  Point2 intercept_point;
  /// Unclamped minimum of p_y over the dominance region.
  double unclamped = 0.0;
  bool clamped = false;
};

/// Raised when no defender with capture capability is available.
class NoCaptureCapability : public std::invalid_argument {
 public:
  NoCaptureCapability() : std::invalid_argument("no capture capability: defender list is empty") {}
};

/// Raised when the candidate enumeration produces no feasible point, which the
/// containment of the attacker in every disk rules out.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Squared-distance slack for feasibility tests on the unit-domain scale.
inline constexpr double kFeasibilityEps = 1e-9;

Circle apollonius_circle(const Point2& attacker, const Point2& defender, double nu);

NashSolution nash_payoff_single(const Point2& attacker, const Point2& defender, double nu);

struct CircleIntersections {
  std::vector<Point2> points;
  /// Set for concentric circles of equal radius (infinitely many common points).
  bool degenerate = false;
};

CircleIntersections circle_pair_intersections(const Circle& a, const Circle& b);

bool inside_disk(const Circle& c, const Point2& p, double eps = kFeasibilityEps);

NashSolution nash_payoff_multi(const PursuitConfig& config);

/// Brute-force minimum of p_y over grid points lying inside every disk.
double nash_payoff_oracle(const PursuitConfig& config, int grid_resolution);

struct GridSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  int nx = 2;
  int ny = 2;

  /// Cell-center coordinates; a single cell sits at the middle of its range.
  double x_at(int i) const;
  double y_at(int j) const;
};

struct Landscape {
  GridSpec grid;
  /// Row-major, ny rows of nx values; row j is y_at(j).
  std::vector<double> values;
  std::size_t failures = 0;

  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.nx + i]; }
};

inline constexpr double kLandscapeSentinel = std::numeric_limits<double>::quiet_NaN();

/// Payoff as a function of the position of one extra defender added to `fixed`.
Landscape payoff_landscape(const PursuitConfig& fixed, double varying_defender_nu, const GridSpec& grid);

}  // namespace borderdef
