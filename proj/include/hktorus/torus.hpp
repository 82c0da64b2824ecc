#pragma once

#include <cmath>
#include <string>

#include "hktorus/error.hpp"

namespace hktorus {

/// Perimeter and influence radius of the circle R/pZ.
struct CircleParams {
  double p = 10.0;
  double r = 1.0;

  /// Validating factory: p > 0 and 0 < r <= p/2.
  static CircleParams make(double p, double r) {
    if (!std::isfinite(p) || !std::isfinite(r)) {
      throw Error(ErrorCode::NonFinite, "perimeter and radius must be finite");
    }
    if (p <= 0.0) {
      throw Error(ErrorCode::NonPositivePerimeter,
                  "perimeter must be positive, got " + std::to_string(p));
    }
    if (r <= 0.0 || r > p / 2.0) {
      throw Error(ErrorCode::InvalidRadius,
                  "radius must lie in (0, p/2], got " + std::to_string(r));
    }
    return CircleParams{p, r};
  }

  /// r < p/6: the regime in which the gap-vector and velocity identities hold.
  bool strict_sixth() const noexcept { return r < p / 6.0; }

  friend bool operator==(const CircleParams&, const CircleParams&) = default;
};

/// A point of R/pZ held by its representative in [0, p).
class TorusPoint {
 public:
  TorusPoint() = default;

  double rep() const noexcept { return rep_; }
  double perimeter() const noexcept { return p_; }

  friend bool operator==(const TorusPoint& a, const TorusPoint& b) noexcept {
    return a.rep_ == b.rep_ && a.p_ == b.p_;
  }

  friend TorusPoint canonicalize(double x, double p);

 private:
  TorusPoint(double rep, double p) : rep_(rep), p_(p) {}

  double rep_ = 0.0;
  double p_ = 1.0;
};

inline TorusPoint canonicalize(double x, double p) {
  if (!std::isfinite(x) || !std::isfinite(p)) {
    throw Error(ErrorCode::NonFinite, "cannot place a non-finite value on the circle");
  }
  if (p <= 0.0) {
    throw Error(ErrorCode::NonPositivePerimeter,
                "perimeter must be positive, got " + std::to_string(p));
  }
  double rep = std::fmod(x, p);
  if (rep < 0.0) rep += p;
  // rep + p can round up to p for tiny negative inputs.
  // Also folds -0.0 into +0.0.
  if (rep >= p || rep == 0.0) rep = 0.0;
  return TorusPoint(rep, p);
}

namespace detail {
inline void require_same_circle(const TorusPoint& x, const TorusPoint& y) {
  if (x.perimeter() != y.perimeter()) {
    throw Error(ErrorCode::PerimeterMismatch,
                "points live on circles of perimeter " + std::to_string(x.perimeter()) +
                    " and " + std::to_string(y.perimeter()));
  }
}
}  // namespace detail

/// Signed displacement from x to y: the element of y - x lying in ]-p/2, p/2].
/// Antipodal points give +p/2.
inline double torus_vect(const TorusPoint& x, const TorusPoint& y) {
  detail::require_same_circle(x, y);
  const double p = x.perimeter();
  double d = y.rep() - x.rep();
  if (d > p / 2.0) {
    d -= p;
  } else if (d <= -p / 2.0) {
    d += p;
  }
  return d;
}

/// Length of the shorter arc between x and y, in [0, p/2].
inline double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  return std::abs(torus_vect(x, y));
}

/// Chart onto ]-p/2, p/2]; used to order the initial configuration.
inline double phi(const TorusPoint& x) noexcept {
  const double p = x.perimeter();
  return x.rep() > p / 2.0 ? x.rep() - p : x.rep();
}

}  // namespace hktorus
