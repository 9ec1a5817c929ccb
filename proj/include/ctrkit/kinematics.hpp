#pragma once

// Forward kinematics of the two-tube robot. The outer tube is rigid and
// straight; the exposed part of the inner tube is the distal arc of its
// characterized precurve, chained as discrete constant-curvature segments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ctrkit/error.hpp"
#include "ctrkit/tube_shape.hpp"

namespace ctrkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// 4x4 homogeneous rigid transform (millimetres).
class Transform {
 public:
  Transform() : m_(Mat4::Identity()) {}
  explicit Transform(const Mat4& m) : m_(m) {}
  Transform(const Mat3& rotation, const Vec3& translation) : m_(Mat4::Identity()) {
    m_.topLeftCorner<3, 3>() = rotation;
    m_.topRightCorner<3, 1>() = translation;
  }

  static Transform identity() { return Transform(); }

  const Mat4& matrix() const { return m_; }
  Mat3 rotation() const { return m_.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return m_.topRightCorner<3, 1>(); }

  Transform operator*(const Transform& rhs) const { return Transform(m_ * rhs.m_); }
  Vec3 apply(const Vec3& p) const { return rotation() * p + translation(); }

  Transform inverse() const {
    const Mat3 rt = rotation().transpose();
    return Transform(rt, -rt * translation());
  }

  /// Rigid-transform invariants: orthonormal rotation, det +1, (0,0,0,1) row.
  bool is_rigid(double tol = 1e-9) const {
    const Mat3 r = rotation();
    if ((r.transpose() * r - Mat3::Identity()).norm() >= tol) return false;
    if (std::abs(r.determinant() - 1.0) >= tol) return false;
    return (m_.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).norm() < tol;
  }

 private:
  Mat4 m_;
};

struct JointConfig {
  double d = 0.0;      ///< outer-tube translation along z [mm]
  double s = 0.0;      ///< inner-tube insertion beyond the outer tube [mm]
  double theta = 0.0;  ///< inner-tube axial rotation [rad]

  friend bool operator==(const JointConfig&, const JointConfig&) = default;
};

struct JointLimits {
  double d_min = 0.0;
  double d_max = 85.0;
};

/// Where kappa is sampled on each grid cell. LeftEndpoint is the literal
/// product rule (kappa at x_{j-1}); Midpoint is second-order accurate.
enum class CurvatureSampling { LeftEndpoint, Midpoint };

inline constexpr int kDefaultSegments = 100;

namespace detail {

// Below this |kappa * ds| the closed form loses digits to cancellation.
inline constexpr double kSmallBend = 1e-7;

inline Transform arc_transform(double kappa, double ds) {
  const double a = kappa * ds;
  const double c = std::cos(a);
  const double s = std::sin(a);
  double ty, tz;
  if (std::abs(a) < kSmallBend) {
    ty = -kappa * ds * ds / 2.0;
    tz = ds;
  } else {
    ty = (c - 1.0) / kappa;
    tz = s / kappa;
  }
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return Transform(r, Vec3(0.0, ty, tz));
}

}  // namespace detail

/// Transform across a circular element of curvature `kappa` and length `ds`:
/// bend about the local x-axis, translation in the local y-z plane.
inline Transform segment_transform(double kappa, double ds) {
  if (ds < 0.0)
    throw Error(ErrorCode::DomainError, "segment_transform: ds must be >= 0");
  return detail::arc_transform(kappa, ds);
}

/// Closed-form constant-curvature transform over arc `s`.
inline Transform constant_curvature_transform(double kappa, double s) {
  if (s < 0.0)
    throw Error(ErrorCode::DomainError,
                "constant_curvature_transform: s must be >= 0");
  return detail::arc_transform(kappa, s);
}

/// Rotation theta about z composed with translation d along z.
inline Transform base_transform(double d, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return Transform(r, Vec3(0.0, 0.0, d));
}

struct ShapeTransformOptions {
  int segments = kDefaultSegments;
  CurvatureSampling sampling = CurvatureSampling::LeftEndpoint;
};

namespace detail {

/// Chains the n segment transforms from x_min to x_max (proximal to distal,
/// right-multiplied). Calls `visit(k, T_partial)` for k = 0..n when given.
template <PlanarCurve C, class Visit>
Transform chain_exposed(const C& curve, double s, const ShapeTransformOptions& opt,
                        Visit&& visit) {
  if (opt.segments < 1)
    throw Error(ErrorCode::InvalidArgument, "shape_transform: n must be >= 1");
  Transform t;
  visit(0, t);
  if (s <= 0.0) {
    for (int k = 1; k <= opt.segments; ++k) visit(k, t);
    return t;
  }
  const double x_max = curve.x_max_total();
  const double x_min = solve_x_min(curve, s);
  const double n = static_cast<double>(opt.segments);
  double x_prev = x_min;
  for (int j = 1; j <= opt.segments; ++j) {
    const double x_j =
        j == opt.segments ? x_max : x_min + (double(j) / n) * (x_max - x_min);
    const double x_k = opt.sampling == CurvatureSampling::LeftEndpoint
                           ? x_prev
                           : 0.5 * (x_prev + x_j);
    t = t * detail::arc_transform(curve.curvature(x_k),
                                  curve.arc_length(x_prev, x_j));
    visit(j, t);
    x_prev = x_j;
  }
  return t;
}

}  // namespace detail

/// Pose of the inner tube's tip relative to the distal end of the outer tube
/// at insertion `s` (0 <= s <= arc_total).
template <PlanarCurve C>
Transform shape_transform(const C& curve, double s,
                          const ShapeTransformOptions& opt = {}) {
  return detail::chain_exposed(curve, s, opt, [](int, const Transform&) {});
}

template <PlanarCurve C>
Transform shape_transform(const C& curve, double s, int n) {
  return shape_transform(curve, s, ShapeTransformOptions{n, CurvatureSampling::LeftEndpoint});
}

struct ForwardResult {
  Transform tip;
  std::vector<Vec3> backbone;  ///< grid-node positions, base (outer tube tip) first
};

template <PlanarCurve C>
ForwardResult forward_kinematics(const C& curve, const JointConfig& q,
                                 const ShapeTransformOptions& opt = {}) {
  if (!(q.s >= -detail::domain_slack(curve.arc_total()) &&
        q.s <= curve.arc_total() + detail::domain_slack(curve.arc_total())))
    throw Error(ErrorCode::DomainError, "forward_kinematics: s outside [0, arc_total]");
  const Transform base = base_transform(q.d, q.theta);
  ForwardResult out;
  out.backbone.reserve(static_cast<std::size_t>(opt.segments) + 1);
  const Transform local = detail::chain_exposed(
      curve, std::clamp(q.s, 0.0, curve.arc_total()), opt,
      [&](int, const Transform& partial) {
        out.backbone.push_back(base.apply(partial.translation()));
      });
  out.tip = base * local;
  return out;
}

// --- Shape comparison metrics -------------------------------------------------

/// Distance from p to the polyline through `poly`.
inline double distance_to_polyline(const Vec3& p, std::span<const Vec3> poly) {
  if (poly.empty())
    throw Error(ErrorCode::InvalidArgument, "distance_to_polyline: empty polyline");
  double best = (p - poly.front()).norm();
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const Vec3 a = poly[i - 1];
    const Vec3 ab = poly[i] - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, (p - (a + t * ab)).norm());
  }
  return best;
}

/// Points every `step` of arc length along a polyline, starting at its first
/// vertex and including the last vertex.
inline std::vector<Vec3> resample_by_arc(std::span<const Vec3> poly, double step) {
  std::vector<Vec3> out;
  if (poly.empty()) return out;
  out.push_back(poly.front());
  double carried = 0.0;  // arc consumed since the last emitted station
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const Vec3 a = poly[i - 1];
    const Vec3 b = poly[i];
    const double len = (b - a).norm();
    double pos = step - carried;
    while (pos <= len) {
      out.push_back(a + (b - a) * (pos / len));
      pos += step;
    }
    carried = len - (pos - step);
  }
  if ((out.back() - poly.back()).norm() > 1e-9) out.push_back(poly.back());
  return out;
}

struct ShapeErrorStats {
  double mean = 0.0;
  double stddev = 0.0;
  double max = 0.0;
  std::size_t stations = 0;
};

/// Shape discrepancy between an observed centerline and a model backbone:
/// at each `step` mm station along the observed curve, the minimum distance
/// to the model polyline; reports mean, standard deviation and maximum.
inline ShapeErrorStats shape_error(std::span<const Vec3> observed,
                                   std::span<const Vec3> model, double step = 1.0) {
  const auto stations = resample_by_arc(observed, step);
  ShapeErrorStats st;
  st.stations = stations.size();
  if (stations.empty()) return st;
  std::vector<double> d;
  d.reserve(stations.size());
  for (const auto& p : stations) d.push_back(distance_to_polyline(p, model));
  double sum = 0.0;
  for (double v : d) sum += v;
  st.mean = sum / double(d.size());
  double var = 0.0;
  for (double v : d) var += (v - st.mean) * (v - st.mean);
  st.stddev = d.size() > 1 ? std::sqrt(var / double(d.size() - 1)) : 0.0;
  st.max = *std::max_element(d.begin(), d.end());
  return st;
}

}  // namespace ctrkit
