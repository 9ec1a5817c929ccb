#pragma once

// Thin wrappers over Boost.Math quadrature and bracketed root finding, with
// the tolerances the geometry code relies on pinned in one place.

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "ctrkit/error.hpp"

namespace ctrkit::numerics {

/// Relative tolerance handed to the adaptive quadrature. On the millimetre
/// scales used here this keeps absolute error well under 1e-10 mm.
inline constexpr double kQuadratureRelTol = 1e-13;

/// Adaptive Gauss-Kronrod (7/15) for smooth integrands.
template <class F>
double integrate_smooth(F&& f, double a, double b) {
  if (a == b) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  // Integrate over [-1, 1]: Boost compares an error estimate taken on the
  // unit interval with a tolerance scaled by the interval, so short
  // intervals would otherwise always bisect to full depth.
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  return gauss_kronrod<double, 15>::integrate(
      [&](double t) { return half * f(mid + half * t); }, -1.0, 1.0, 20,
      kQuadratureRelTol);
}

/// Tanh-sinh, for integrands with integrable endpoint singularities
/// (e.g. arc length of a graph with a vertical tangent).
template <class F>
double integrate_endpoint_singular(F&& f, double a, double b) {
  if (a == b) return 0.0;
  // Non-const: the const overload is not usable in Boost 1.74.
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  return integrator.integrate(std::forward<F>(f), a, b, 1e-14);
}

/// Root of `f` on [lo, hi] by TOMS 748. `f(lo)` and `f(hi)` must bracket.
/// Iterates until the bracket is at machine precision, so the residual is
/// limited only by the conditioning of `f`.
template <class F>
double find_root(F&& f, double lo, double hi, const char* what = "root") {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi)) {
    std::ostringstream os;
    os << what << ": no sign change on [" << lo << ", " << hi
       << "] (f(lo)=" << flo << ", f(hi)=" << fhi << ")";
    throw Error(ErrorCode::NoBracket, os.str());
  }
  std::uintmax_t max_iter = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(
      std::numeric_limits<double>::digits - 2);
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol,
                                                   max_iter);
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

}  // namespace ctrkit::numerics
