#pragma once

// Target -> joint configuration for the planar-precurve robot, torsional
// compensation of the rotation command, and rotate-then-translate sequencing.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctrkit/error.hpp"
#include "ctrkit/kinematics.hpp"
#include "ctrkit/numerics.hpp"
#include "ctrkit/torsion.hpp"
#include "ctrkit/tube_shape.hpp"

namespace ctrkit {

struct TorsionContext {
  TubeSpec tube;
  MaterialModel material;
  TorsionOptions options;
};

/// sign(v) with sign(0) = 0.
inline double signum(double v) { return double((v > 0.0) - (v < 0.0)); }

/// Rotation command corrected for the twist the inner tube will lose to
/// friction. Advancing moves (s_curr < s_nom) use the deflection at the new
/// insertion; retracting or holding moves use the current one. No rotation
/// (theta_nom == theta_curr) adds nothing.
template <class Phi>
double compensate(double theta_nom, double s_nom, double theta_curr, double s_curr,
                  Phi&& phi) {
  const double dir = signum(theta_nom - theta_curr);
  if (dir == 0.0) return theta_nom;
  return theta_nom + dir * phi(s_curr < s_nom ? s_nom : s_curr);
}

enum class ActionKind { Rotate, Translate };

struct MoveAction {
  ActionKind kind;
  double theta = 0.0;  ///< rotate: commanded inner-tube angle [rad]
  double d = 0.0;      ///< translate: outer-tube position [mm]
  double s = 0.0;      ///< translate: inner-tube insertion [mm]
};

struct MovePlan {
  JointConfig nominal;        ///< uncompensated IK solution
  double theta_command = 0.0;
  double s_command = 0.0;
  double d_command = 0.0;
  double phi = 0.0;           ///< deflection used for compensation [rad]
  std::vector<MoveAction> sequence;

  friend bool operator==(const MovePlan& a, const MovePlan& b) {
    if (!(a.nominal == b.nominal) || a.theta_command != b.theta_command ||
        a.s_command != b.s_command || a.d_command != b.d_command || a.phi != b.phi ||
        a.sequence.size() != b.sequence.size())
      return false;
    for (std::size_t i = 0; i < a.sequence.size(); ++i) {
      const auto& x = a.sequence[i];
      const auto& y = b.sequence[i];
      if (x.kind != y.kind || x.theta != y.theta || x.d != y.d || x.s != y.s) return false;
    }
    return true;
  }
};

/// Read-only planning context for one shape. Tabulates the planar reach of
/// the tip over s once; IK solves against the exact forward model.
template <PlanarCurve C>
class Planner {
 public:
  static constexpr int kReachTable = 256;

  Planner(C curve, JointLimits limits = {}, ShapeTransformOptions fk = {},
          std::optional<TorsionContext> torsion = std::nullopt)
      : curve_(std::move(curve)), limits_(limits), fk_(fk), torsion_(std::move(torsion)) {
    if (!(limits_.d_min <= limits_.d_max))
      throw Error(ErrorCode::InvalidArgument, "Planner: d_min > d_max");
    const double s_max = curve_.arc_total();
    s_grid_.resize(kReachTable + 1);
    reach_.resize(kReachTable + 1);
    const Vec3 full = planar_tip(s_max);
    side_ = full.y() < 0.0 ? -1.0 : 1.0;
    for (int k = 0; k <= kReachTable; ++k) {
      s_grid_[k] = k == kReachTable ? s_max : s_max * double(k) / kReachTable;
      reach_[k] = side_ * planar_tip(s_grid_[k]).y();
    }
    monotone_ = true;
    int best = 0;
    for (int k = 1; k <= kReachTable; ++k) {
      if (!(reach_[k] > reach_[k - 1])) monotone_ = false;
      if (reach_[k] > reach_[best]) best = k;
    }
    peak_s_ = s_grid_[best];
    max_reach_ = reach_[best];
    if (!monotone_ && best > 0 && best < kReachTable) refine_peak(best);
    peak_z_ = planar_tip(peak_s_).z();
    tip_z_lo_ = tip_z_hi_ = peak_z_;
    for (int k = 0; k <= kReachTable; ++k) {
      const double z = planar_tip(s_grid_[k]).z();
      tip_z_lo_ = std::min(tip_z_lo_, z);
      tip_z_hi_ = std::max(tip_z_hi_, z);
    }
  }

  const C& curve() const { return curve_; }
  const JointLimits& limits() const { return limits_; }
  const ShapeTransformOptions& fk_options() const { return fk_; }
  const std::optional<TorsionContext>& torsion() const { return torsion_; }

  /// -1 when the precurve bends the tip toward -y of the tube frame.
  double bend_side() const { return side_; }
  bool reach_is_monotone() const { return monotone_; }
  /// Largest radial distance from the z-axis the tip can reach [mm].
  double max_reach() const { return max_reach_; }

  /// Tip position in the tube's bending plane (x = 0) at insertion s, d = 0.
  Vec3 planar_tip(double s) const { return shape_transform(curve_, s, fk_).translation(); }

  /// Signed radial reach toward the bend side.
  double radial_reach(double s) const { return side_ * planar_tip(s).y(); }

  ForwardResult forward(const JointConfig& q) const {
    return forward_kinematics(curve_, q, fk_);
  }

  /// Nominal (uncompensated) joint configuration reaching `target`.
  JointConfig solve_ik(const Vec3& target) const {
    const double rho = std::hypot(target.x(), target.y());
    JointConfig q;
    if (rho > max_reach_ * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "target radial distance " << rho << " mm exceeds achievable reach "
         << max_reach_ << " mm";
      throw Error(ErrorCode::Unreachable, os.str());
    }
    if (rho == 0.0) {
      q.s = 0.0;
      q.theta = 0.0;
    } else {
      q.theta = std::atan2(-side_ * target.x(), side_ * target.y());
      q.s = solve_insertion(rho);
    }
    q.d = target.z() - planar_tip(q.s).z();
    const double slack = 1e-9;
    if (q.d < limits_.d_min - slack || q.d > limits_.d_max + slack) {
      std::ostringstream os;
      os << "target z " << target.z() << " mm needs outer-tube travel " << q.d
         << " mm outside [" << limits_.d_min << ", " << limits_.d_max << "]";
      throw Error(ErrorCode::Unreachable, os.str());
    }
    q.d = std::clamp(q.d, limits_.d_min, limits_.d_max);
    return q;
  }

  /// Insertion whose planar reach is rho (first crossing), rho <= max_reach().
  double insertion_for_reach(double rho) const {
    if (rho <= 0.0) return 0.0;
    return solve_insertion(rho);
  }

  /// Closest configuration in the workspace sense: radial distance clamped to
  /// the reach, outer-tube travel clamped to its limits. Never throws for
  /// finite targets.
  JointConfig nearest_config(const Vec3& target) const {
    const double rho = std::hypot(target.x(), target.y());
    JointConfig q;
    if (rho >= max_reach_) {
      q.s = peak_s_;
    } else {
      q.s = insertion_for_reach(rho);
    }
    q.theta = rho == 0.0 ? 0.0 : std::atan2(-side_ * target.x(), side_ * target.y());
    q.d = std::clamp(target.z() - planar_tip(q.s).z(), limits_.d_min, limits_.d_max);
    return q;
  }

  /// Tip height at the reach maximum, and the range of tip heights over s (d = 0).
  double peak_tip_z() const { return peak_z_; }
  double tip_z_min() const { return tip_z_lo_; }
  double tip_z_max() const { return tip_z_hi_; }
  double peak_insertion() const { return peak_s_; }

  bool reachable(const Vec3& target) const {
    try {
      solve_ik(target);
      return true;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Unreachable) return false;
      throw;
    }
  }

  /// Torsional deflection at insertion s; zero when no torsion model is set.
  double phi(double s) const {
    if (!torsion_) return 0.0;
    return torsional_deflection(curve_, s, torsion_->tube, torsion_->material,
                                torsion_->options);
  }

  double compensate(double theta_nom, double s_nom, double theta_curr,
                    double s_curr) const {
    return ctrkit::compensate(theta_nom, s_nom, theta_curr, s_curr,
                              [this](double s) { return phi(s); });
  }

  MovePlan plan_move(const JointConfig& current, const Vec3& target) const {
    MovePlan plan;
    plan.nominal = solve_ik(target);
    plan.s_command = plan.nominal.s;
    plan.d_command = plan.nominal.d;
    plan.theta_command =
        compensate(plan.nominal.theta, plan.nominal.s, current.theta, current.s);
    plan.phi = std::abs(plan.theta_command - plan.nominal.theta);
    plan.sequence.push_back({ActionKind::Rotate, plan.theta_command, current.d, current.s});
    plan.sequence.push_back(
        {ActionKind::Translate, plan.theta_command, plan.d_command, plan.s_command});
    return plan;
  }

 private:
  // First insertion at which the radial reach equals rho.
  double solve_insertion(double rho) const {
    auto g = [&](double s) { return radial_reach(s) - rho; };
    if (rho >= max_reach_) return peak_s_;
    if (monotone_) return numerics::find_root(g, 0.0, curve_.arc_total(), "solve_ik");
    for (int k = 1; k <= kReachTable; ++k) {
      if (reach_[k] >= rho)
        return numerics::find_root(g, s_grid_[k - 1], s_grid_[k], "solve_ik");
    }
    // rho lies between the last tabulated value and the refined peak.
    int lo = 0;
    while (lo < kReachTable && s_grid_[lo + 1] < peak_s_) ++lo;
    return numerics::find_root(g, s_grid_[lo], peak_s_, "solve_ik");
  }

  // Golden-section search for the reach maximum around table node k.
  void refine_peak(int k) {
    double a = s_grid_[k - 1], b = s_grid_[k + 1];
    const double inv_gold = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
      const double c = b - inv_gold * (b - a);
      const double d = a + inv_gold * (b - a);
      if (radial_reach(c) > radial_reach(d)) b = d; else a = c;
    }
    const double s = 0.5 * (a + b);
    const double r = radial_reach(s);
    if (r > max_reach_) {
      peak_s_ = s;
      max_reach_ = r;
    }
  }

  C curve_;
  JointLimits limits_;
  ShapeTransformOptions fk_;
  std::optional<TorsionContext> torsion_;
  std::vector<double> s_grid_;
  std::vector<double> reach_;
  double side_ = -1.0;
  bool monotone_ = true;
  double max_reach_ = 0.0;
  double peak_s_ = 0.0;
  double peak_z_ = 0.0;
  double tip_z_lo_ = 0.0;
  double tip_z_hi_ = 0.0;
};

/// Rotation actually achieved by a tube that loses phi to friction: the tube
/// lags its command by the deflection in the direction of travel.
template <PlanarCurve C>
double twisted_theta(const Planner<C>& planner, double theta_cmd, double theta_curr,
                     double s_curr, double s_target) {
  const double dir = signum(theta_cmd - theta_curr);
  return theta_cmd - dir * planner.phi(std::max(s_curr, s_target));
}

}  // namespace ctrkit
