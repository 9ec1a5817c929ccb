#pragma once

// Planar precurved centerline of the inner tube, described as a graph y = f(x)
// with x running from the distal end of the outer tube (x = 0) to the inner
// tube's tip at full relative insertion (x = x_max_total).
//
// Sign convention: positive curvature bends the tube toward -y, i.e.
//   kappa(x) = -f''(x) / (1 + f'(x)^2)^(3/2).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ctrkit/error.hpp"
#include "ctrkit/numerics.hpp"

namespace ctrkit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Anything with a curvature field over [0, x_max_total] and an arc-length
/// measure on it. Kinematics and torsion are written against this.
template <class C>
concept PlanarCurve = requires(const C& c, double x) {
  { c.curvature(x) } -> std::convertible_to<double>;
  { c.arc_length(x, x) } -> std::convertible_to<double>;
  { c.x_max_total() } -> std::convertible_to<double>;
  { c.arc_total() } -> std::convertible_to<double>;
};

namespace detail {

inline double domain_slack(double x_max) { return 1e-9 * std::max(1.0, x_max); }

inline double checked_abscissa(double x, double x_max, const char* what) {
  const double slack = domain_slack(x_max);
  if (!(x >= -slack && x <= x_max + slack)) {
    std::ostringstream os;
    os << what << ": x=" << x << " outside [0, " << x_max << "]";
    throw Error(ErrorCode::DomainError, os.str());
  }
  return std::clamp(x, 0.0, x_max);
}

inline void check_interval(double& x1, double& x2, double x_max) {
  if (x1 > x2) {
    std::ostringstream os;
    os << "arc_length: reversed bounds (" << x1 << " > " << x2 << ")";
    throw Error(ErrorCode::DomainError, os.str());
  }
  x1 = checked_abscissa(x1, x_max, "arc_length");
  x2 = checked_abscissa(x2, x_max, "arc_length");
}

inline double graph_curvature(double slope, double second) {
  const double g = 1.0 + slope * slope;
  return -second / (g * std::sqrt(g));
}

}  // namespace detail

/// Dense polynomial a0 + a1 x + ... + ak x^k.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients)
      : c_(std::move(coefficients)) {}

  const std::vector<double>& coefficients() const { return c_; }
  std::size_t size() const { return c_.size(); }

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  double derivative(double x) const {
    double acc = 0.0;
    for (std::size_t k = c_.size(); k-- > 1;) acc = acc * x + double(k) * c_[k];
    return acc;
  }

  double second_derivative(double x) const {
    double acc = 0.0;
    for (std::size_t k = c_.size(); k-- > 2;)
      acc = acc * x + double(k) * double(k - 1) * c_[k];
    return acc;
  }

 private:
  std::vector<double> c_;
};

/// The characterized inner-tube shape. Immutable after construction.
class PlanarShape {
 public:
  PlanarShape(std::vector<double> coefficients, double x_max_total)
      : f_(std::move(coefficients)), x_max_(x_max_total) {
    if (f_.size() < 3)
      throw Error(ErrorCode::InvalidArgument,
                  "PlanarShape: polynomial degree must be >= 2");
    for (double a : f_.coefficients())
      if (!std::isfinite(a))
        throw Error(ErrorCode::InvalidArgument,
                    "PlanarShape: non-finite coefficient");
    if (!(x_max_total > 0.0) || !std::isfinite(x_max_total))
      throw Error(ErrorCode::InvalidArgument,
                  "PlanarShape: x_max_total must be > 0");
    arc_total_ = raw_arc_length(0.0, x_max_);
  }

  const std::vector<double>& coefficients() const { return f_.coefficients(); }
  std::size_t degree() const { return f_.size() - 1; }
  double x_max_total() const { return x_max_; }
  double arc_total() const { return arc_total_; }

  double f(double x) const { return f_(x); }
  double slope(double x) const { return f_.derivative(x); }
  double second_derivative(double x) const { return f_.second_derivative(x); }

  double curvature(double x) const {
    x = detail::checked_abscissa(x, x_max_, "curvature");
    return detail::graph_curvature(f_.derivative(x), f_.second_derivative(x));
  }

  double arc_length(double x1, double x2) const {
    detail::check_interval(x1, x2, x_max_);
    return raw_arc_length(x1, x2);
  }

 private:
  double raw_arc_length(double x1, double x2) const {
    return numerics::integrate_smooth(
        [this](double x) {
          const double d = f_.derivative(x);
          return std::sqrt(1.0 + d * d);
        },
        x1, x2);
  }

  Polynomial f_;
  double x_max_ = 0.0;
  double arc_total_ = 0.0;
};

/// Graph of a circular arc of radius R that starts tangent to the x-axis at
/// the origin and bends toward -y: f(x) = -(R - sqrt(R^2 - x^2)).
/// x_max_total may reach R (vertical tangent at the end).
class CircularGraph {
 public:
  CircularGraph(double radius, double x_max_total)
      : r_(radius), x_max_(x_max_total) {
    if (!(radius > 0.0) || !(x_max_total > 0.0) || x_max_total > radius)
      throw Error(ErrorCode::InvalidArgument,
                  "CircularGraph: need 0 < x_max_total <= radius");
    arc_total_ = arc_length(0.0, x_max_);
  }

  double radius() const { return r_; }
  double x_max_total() const { return x_max_; }
  double arc_total() const { return arc_total_; }

  double f(double x) const { return -(r_ - std::sqrt(r_ * r_ - x * x)); }
  double slope(double x) const { return -x / std::sqrt(r_ * r_ - x * x); }
  double second_derivative(double x) const {
    const double q = r_ * r_ - x * x;
    return -r_ * r_ / (q * std::sqrt(q));
  }

  double curvature(double x) const {
    x = detail::checked_abscissa(x, x_max_, "curvature");
    return detail::graph_curvature(slope(x), second_derivative(x));
  }

  double arc_length(double x1, double x2) const {
    detail::check_interval(x1, x2, x_max_);
    return numerics::integrate_endpoint_singular(
        [this](double x) {
          const double d = slope(x);
          return std::sqrt(1.0 + d * d);
        },
        x1, x2);
  }

 private:
  double r_;
  double x_max_;
  double arc_total_ = 0.0;
};

/// Constant-curvature reference curve parameterized directly by arc length,
/// so x coincides with arc and composition of equal-kappa segments is exact.
class ConstantCurvatureShape {
 public:
  ConstantCurvatureShape(double kappa, double arc) : kappa_(kappa), arc_(arc) {
    if (!(arc > 0.0))
      throw Error(ErrorCode::InvalidArgument,
                  "ConstantCurvatureShape: arc must be > 0");
  }

  double kappa() const { return kappa_; }
  double x_max_total() const { return arc_; }
  double arc_total() const { return arc_; }

  double curvature(double x) const {
    detail::checked_abscissa(x, arc_, "curvature");
    return kappa_;
  }
  double arc_length(double x1, double x2) const {
    detail::check_interval(x1, x2, arc_);
    return x2 - x1;
  }
  double solve_x_min(double s) const { return arc_ - s; }

 private:
  double kappa_;
  double arc_;
};

// Free-function forms of the shape queries.

template <PlanarCurve C>
double curvature(const C& curve, double x) {
  return curve.curvature(x);
}

template <PlanarCurve C>
double arc_length(const C& curve, double x1, double x2) {
  return curve.arc_length(x1, x2);
}

namespace detail {

inline double checked_arc(double s, double arc_total, const char* what) {
  const double slack = domain_slack(arc_total);
  if (!(s >= -slack && s <= arc_total + slack)) {
    std::ostringstream os;
    os << what << ": arc " << s << " outside [0, " << arc_total << "]";
    throw Error(ErrorCode::NoBracket, os.str());
  }
  return std::clamp(s, 0.0, arc_total);
}

}  // namespace detail

/// Lower abscissa x_min with arc_length(x_min, x_max_total) == s: the part of
/// the precurved region exposed beyond the outer tube at insertion s.
template <PlanarCurve C>
double solve_x_min(const C& curve, double s) {
  const double x_max = curve.x_max_total();
  s = detail::checked_arc(s, curve.arc_total(), "solve_x_min");
  if (s == 0.0) return x_max;
  if (s == curve.arc_total()) return 0.0;
  if constexpr (requires { curve.solve_x_min(s); }) {
    return curve.solve_x_min(s);
  } else {
    return numerics::find_root(
        [&](double x) { return curve.arc_length(x, x_max) - s; }, 0.0, x_max,
        "solve_x_min");
  }
}

/// Abscissa reached after arc length `sigma` measured from x = 0.
template <PlanarCurve C>
double x_at_arc(const C& curve, double sigma) {
  sigma = detail::checked_arc(sigma, curve.arc_total(), "x_at_arc");
  if (sigma == 0.0) return 0.0;
  if (sigma == curve.arc_total()) return curve.x_max_total();
  if constexpr (requires { curve.solve_x_min(sigma); }) {
    return sigma;  // arc-parameterized
  } else {
    return numerics::find_root(
        [&](double x) { return curve.arc_length(0.0, x) - sigma; }, 0.0,
        curve.x_max_total(), "x_at_arc");
  }
}

/// Digitized centerline points, x strictly increasing.
class CenterlineSamples {
 public:
  explicit CenterlineSamples(std::vector<Point2> points)
      : points_(std::move(points)) {
    if (points_.size() < 2)
      throw Error(ErrorCode::InvalidArgument,
                  "CenterlineSamples: need at least 2 points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y))
        throw Error(ErrorCode::InvalidArgument,
                    "CenterlineSamples: non-finite coordinate");
      if (i > 0 && !(points_[i].x > points_[i - 1].x)) {
        std::ostringstream os;
        os << "CenterlineSamples: x not strictly increasing at index " << i;
        throw Error(ErrorCode::InvalidArgument, os.str());
      }
    }
  }

  std::span<const Point2> points() const { return points_; }
  std::size_t size() const { return points_.size(); }

 private:
  std::vector<Point2> points_;
};

/// Least-squares polynomial fit of the centerline. The abscissa is scaled to
/// u = x / x_last before building the Vandermonde system; coefficients are
/// mapped back to x on output. x_max_total is the last sample's x.
inline PlanarShape fit_centerline(const CenterlineSamples& samples,
                                  int degree = 4) {
  if (degree < 2)
    throw Error(ErrorCode::InvalidArgument, "fit_centerline: degree must be >= 2");
  const auto pts = samples.points();
  const auto terms = static_cast<std::size_t>(degree) + 1;
  if (pts.size() < terms) {
    std::ostringstream os;
    os << "fit_centerline: " << pts.size() << " points cannot determine a degree-"
       << degree << " polynomial";
    throw Error(ErrorCode::FitFailure, os.str());
  }
  const double x_max = pts.back().x;
  if (!(x_max > 0.0))
    throw Error(ErrorCode::FitFailure,
                "fit_centerline: last sample must have x > 0");

  const auto rows = static_cast<Eigen::Index>(pts.size());
  const auto cols = static_cast<Eigen::Index>(terms);
  Eigen::MatrixXd vander(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double u = pts[static_cast<std::size_t>(i)].x / x_max;
    double p = 1.0;
    for (Eigen::Index k = 0; k < cols; ++k, p *= u) vander(i, k) = p;
    rhs(i) = pts[static_cast<std::size_t>(i)].y;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vander);
  qr.setThreshold(1e-12);
  if (qr.rank() < cols)
    throw Error(ErrorCode::FitFailure,
                "fit_centerline: rank-deficient Vandermonde system");
  const Eigen::VectorXd scaled = qr.solve(rhs);

  std::vector<double> coeffs(terms);
  double scale = 1.0;
  for (std::size_t k = 0; k < terms; ++k, scale *= x_max)
    coeffs[k] = scaled(static_cast<Eigen::Index>(k)) / scale;
  return PlanarShape(std::move(coeffs), x_max);
}

}  // namespace ctrkit
