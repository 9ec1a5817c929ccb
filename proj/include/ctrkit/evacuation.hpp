#pragma once

// Iterative clot evacuation on a voxel phantom: choose a target, plan the
// move with torsion compensation, execute it (optionally through the motor
// simulator), aspirate around the tip, repeat until the residual is small.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ctrkit/error.hpp"
#include "ctrkit/inverse_kinematics.hpp"
#include "ctrkit/kinematics.hpp"
#include "ctrkit/motor_control.hpp"
#include "ctrkit/phantom.hpp"

namespace ctrkit {

struct AspirationParams {
  double radius = 4.0;      ///< capture radius around the tip [mm]
  double dwell = 3.0;       ///< maximum time spent per target [s]
  double rate_ml_s = 0.1;   ///< aspiration rate (6 mL/min)
};

/// Removes occupied voxels whose centers lie within `radius` of `tip_image`,
/// nearest first, at most rate * dwell worth of volume. Returns the linear
/// indices removed, in removal order.
inline std::vector<std::size_t> aspirate(ClotPhantom& ph, const Vec3& tip_image,
                                         const AspirationParams& a) {
  if (!(a.radius > 0.0) || !(a.dwell >= 0.0) || !(a.rate_ml_s >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "aspirate: radius > 0, dwell and rate >= 0");
  const auto cap = static_cast<std::size_t>(
      std::floor(a.rate_ml_s * a.dwell * 1000.0 / ph.voxel_volume_mm3() + 1e-9));
  std::vector<std::pair<double, std::size_t>> hits;
  const auto& dims = ph.dims();
  int lo[3], hi[3];
  for (int ax = 0; ax < 3; ++ax) {
    const double rel = (tip_image(ax) - ph.origin()(ax)) / ph.spacing()(ax);
    const double span = a.radius / ph.spacing()(ax);
    lo[ax] = std::max(0, int(std::floor(rel - span)));
    hi[ax] = std::min(dims[ax] - 1, int(std::ceil(rel + span)));
  }
  const double r2 = a.radius * a.radius;
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const std::size_t n = ph.linear(i, j, k);
        if (!ph.at_linear(n)) continue;
        const double d2 = (ph.center(i, j, k) - tip_image).squaredNorm();
        if (d2 <= r2) hits.emplace_back(d2, n);
      }
  std::sort(hits.begin(), hits.end());
  if (hits.size() > cap) hits.resize(cap);
  std::vector<std::size_t> removed;
  removed.reserve(hits.size());
  for (const auto& [d2, n] : hits) {
    ph.set_linear(n, false);
    removed.push_back(n);
  }
  return removed;
}

/// 6-connected components of the occupied voxels, largest first (ties by the
/// smallest linear index).
inline std::vector<std::vector<std::size_t>> clot_clusters(const ClotPhantom& ph) {
  std::vector<int> label(ph.size(), -1);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < ph.size(); ++seed) {
    if (!ph.at_linear(seed) || label[seed] >= 0) continue;
    const int id = int(out.size());
    out.emplace_back();
    stack.push_back(seed);
    label[seed] = id;
    while (!stack.empty()) {
      const std::size_t n = stack.back();
      stack.pop_back();
      out.back().push_back(n);
      const VoxelIndex v = ph.unlinear(n);
      const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
      for (const auto& o : nb) {
        const int i = v.i + o[0], j = v.j + o[1], k = v.k + o[2];
        if (!ph.in_bounds(i, j, k)) continue;
        const std::size_t m = ph.linear(i, j, k);
        if (ph.at_linear(m) && label[m] < 0) {
          label[m] = id;
          stack.push_back(m);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

struct MotorSetup {
  ControllerParams rot_params = ControllerParams::rotational();
  ControllerParams trans_params = ControllerParams::translational();
  MotorPlant rot_plant = MotorPlant::rotational();
  MotorPlant trans_plant = MotorPlant::translational();
  double mm_per_rev = 1.0;  ///< translational lead-screw advance per output revolution
  SimOptions sim{};
};

struct EvacuationPolicy {
  AspirationParams aspiration;
  double stop_ml = 15.0;
  std::size_t max_targets = 1000;
  int stall_limit = 3;            ///< consecutive targets with no removal
  double far_slab_mm = 3.0;       ///< thickness of the far end used for the first target
  bool compensate_torsion = true;
  bool torsion_plant = true;      ///< executed rotation loses phi to friction
  std::optional<MotorSetup> motors;  ///< run joint moves through the motor simulator
};

/// Workspace projection of a robot-frame point and its tip position.
template <PlanarCurve C>
Vec3 projected_tip(const Planner<C>& planner, const Vec3& p) {
  return planner.forward(planner.nearest_config(p)).tip.translation();
}

/// Caches, per voxel, the distance from its center to the tip placed at the
/// voxel's workspace projection.
template <PlanarCurve C>
class CaptureMap {
 public:
  CaptureMap(const Planner<C>& planner, const ClotPhantom& ph, const Transform& image_to_robot)
      : planner_(planner), ph_(ph), reg_(image_to_robot) {}

  Vec3 robot_center(std::size_t n) const { return reg_.apply(ph_.center(ph_.unlinear(n))); }

  double distance(std::size_t n) {
    if (auto it = cache_.find(n); it != cache_.end()) return it->second;
    const Vec3 c = robot_center(n);
    const double rho = std::hypot(c.x(), c.y());
    const auto& lim = planner_.limits();
    double d;
    if (rho >= planner_.max_reach()) {
      const double z0 = planner_.peak_tip_z();
      const double dz = c.z() - std::clamp(c.z(), z0 + lim.d_min, z0 + lim.d_max);
      d = std::hypot(rho - planner_.max_reach(), dz);
    } else if (c.z() - planner_.tip_z_max() >= lim.d_min &&
               c.z() - planner_.tip_z_min() <= lim.d_max) {
      d = 0.0;
    } else {
      d = (projected_tip(planner_, c) - c).norm();
    }
    cache_.emplace(n, d);
    return d;
  }

 private:
  const Planner<C>& planner_;
  const ClotPhantom& ph_;
  Transform reg_;
  std::unordered_map<std::size_t, double> cache_;
};

/// Far end of the clot's long axis, seen from the robot (robot frame): the
/// centroid of the occupied voxels within `slab` of the extreme projection.
inline std::optional<Vec3> far_end_point(const ClotPhantom& ph, const Transform& image_to_robot,
                                         double slab) {
  if (ph.count() == 0) return std::nullopt;
  std::vector<Vec3> pts;
  pts.reserve(ph.count());
  for (std::size_t n = 0; n < ph.size(); ++n)
    if (ph.at_linear(n)) pts.push_back(image_to_robot.apply(ph.center(ph.unlinear(n))));
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= double(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 axis = eig.eigenvectors().col(2);
  // No dominant axis (e.g. a sphere): look along the line of sight instead.
  const auto& ev = eig.eigenvalues();
  if (ev(2) - ev(1) <= 1e-3 * ev(2) && mean.norm() > 0.0) axis = mean.normalized();
  // Point the axis away from the robot (origin); fall back to +z.
  const double away = axis.dot(mean);
  if (away < 0.0 || (away == 0.0 && axis.z() < 0.0)) axis = -axis;
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) top = std::max(top, axis.dot(p - mean));
  Vec3 sum = Vec3::Zero();
  std::size_t m = 0;
  for (const auto& p : pts)
    if (axis.dot(p - mean) >= top - slab) {
      sum += p;
      ++m;
    }
  return sum / double(m);
}

/// Target for one cluster: the capturable voxel nearest its centroid,
/// projected into the workspace. Empty when no voxel of the cluster is
/// within the capture radius of the workspace.
template <PlanarCurve C>
std::optional<Vec3> cluster_target(const Planner<C>& planner, CaptureMap<C>& capture,
                                   const std::vector<std::size_t>& cluster, double radius) {
  Vec3 centroid = Vec3::Zero();
  for (std::size_t n : cluster) centroid += capture.robot_center(n);
  centroid /= double(cluster.size());
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(cluster.size());
  for (std::size_t n : cluster)
    order.emplace_back((capture.robot_center(n) - centroid).squaredNorm(), n);
  std::sort(order.begin(), order.end());
  for (const auto& [d2, n] : order)
    if (capture.distance(n) <= radius) return projected_tip(planner, capture.robot_center(n));
  return std::nullopt;
}

/// Ordered target list without aspiration: the far end of the long axis,
/// then one target per cluster, largest first. Throws Unreachable when no
/// voxel can be brought within the capture radius.
template <PlanarCurve C>
std::vector<Vec3> plan_targets(const ClotPhantom& ph, const Transform& image_to_robot,
                               const Planner<C>& planner, const EvacuationPolicy& policy = {}) {
  std::vector<Vec3> out;
  if (ph.count() == 0) return out;
  CaptureMap<C> capture(planner, ph, image_to_robot);
  const auto clusters = clot_clusters(ph);
  for (const auto& cl : clusters)
    if (auto t = cluster_target(planner, capture, cl, policy.aspiration.radius))
      out.push_back(*t);
  if (out.empty())
    throw Error(ErrorCode::Unreachable,
                "plan_targets: no clot voxel lies within the capture radius of the workspace");
  out.insert(out.begin(),
             projected_tip(planner, *far_end_point(ph, image_to_robot, policy.far_slab_mm)));
  return out;
}

struct TargetLog {
  std::size_t index = 0;
  Vec3 target = Vec3::Zero();
  JointConfig nominal;
  double theta_command = 0.0;
  JointConfig achieved;
  Vec3 tip = Vec3::Zero();
  double tip_error = 0.0;      ///< |tip - target| [mm]
  std::size_t removed_voxels = 0;
  double residual_ml = 0.0;
  double elapsed_s = 0.0;      ///< cumulative
};

struct EvacuationReport {
  double initial_ml = 0.0;
  double final_ml = 0.0;
  std::size_t initial_voxels = 0;
  std::size_t final_voxels = 0;
  std::size_t removed_voxels = 0;
  std::size_t n_targets = 0;
  double elapsed_sim_time = 0.0;
  bool success = false;  ///< final_ml < 15 mL
  bool stalled = false;
  std::string termination;  ///< target_reached | exhausted | stalled | iteration_limit
  std::vector<TargetLog> log;
};

inline constexpr double kResidualCriterionMl = 15.0;

namespace detail {

inline double radians_to_counts(double rad, const MotorPlant& p) {
  return rad / (2.0 * std::numbers::pi) * p.counts_per_rev;
}

// Executes one joint move on the simulated motors; returns the elapsed time
// and overwrites `reached` with the quantized final joint values.
inline double run_motor(double from, double to, double counts_per_unit, const MotorPlant& plant,
                        const ControllerParams& params, const SimOptions& sim, double& reached) {
  const auto start = std::llround(from * counts_per_unit);
  const auto goal = std::llround(to * counts_per_unit);
  SimOptions o = sim;
  o.start = start;
  o.record_every = std::numeric_limits<int>::max();
  const MotorTrace tr = simulate_move(goal, plant, params, o);
  reached = double(goal - tr.final_error) / counts_per_unit;
  return tr.final_time;
}

}  // namespace detail

/// The evacuation loop. `phantom` is consumed in place (image frame);
/// `image_to_robot` maps it into the robot frame.
template <PlanarCurve C>
EvacuationReport run_evacuation(ClotPhantom& phantom, const Transform& image_to_robot,
                                const Planner<C>& planner, const EvacuationPolicy& policy = {}) {
  if (!image_to_robot.is_rigid(1e-6))
    throw Error(ErrorCode::InvalidArgument, "run_evacuation: registration is not rigid");
  if (planner.torsion() && policy.aspiration.radius < planner.torsion()->tube.r_id)
    throw Error(ErrorCode::InvalidArgument,
                "run_evacuation: capture radius smaller than the tube's inner radius");
  EvacuationReport rep;
  rep.initial_voxels = phantom.count();
  rep.initial_ml = phantom.volume_ml();
  const Transform robot_to_image = image_to_robot.inverse();
  CaptureMap<C> capture(planner, phantom, image_to_robot);

  JointConfig current;  // home
  int idle = 0;
  bool first = true;
  auto finish = [&](const char* why) {
    rep.termination = why;
    rep.final_voxels = phantom.count();
    rep.final_ml = phantom.volume_ml();
    rep.removed_voxels = rep.initial_voxels - rep.final_voxels;
    rep.success = rep.final_ml < kResidualCriterionMl;
    return rep;
  };

  while (true) {
    if (phantom.volume_ml() < policy.stop_ml) return finish("target_reached");
    if (phantom.count() == 0) return finish("exhausted");
    if (rep.n_targets >= policy.max_targets) return finish("iteration_limit");

    std::optional<Vec3> target;
    if (first) {
      first = false;
      target = projected_tip(planner, *far_end_point(phantom, image_to_robot, policy.far_slab_mm));
    } else {
      for (const auto& cl : clot_clusters(phantom))
        if ((target = cluster_target(planner, capture, cl, policy.aspiration.radius))) break;
    }
    if (!target) {
      // Nothing left within reach: a clean finish only if something was removed.
      if (phantom.count() == rep.initial_voxels) {
        rep.stalled = true;
        return finish("stalled");
      }
      return finish("exhausted");
    }

    TargetLog entry;
    entry.index = rep.n_targets;
    entry.target = *target;
    const MovePlan plan = planner.plan_move(current, *target);
    entry.nominal = plan.nominal;
    entry.theta_command = policy.compensate_torsion ? plan.theta_command : plan.nominal.theta;

    double move_time = 0.0;
    JointConfig reached{plan.d_command, plan.s_command, entry.theta_command};
    if (policy.motors) {
      const MotorSetup& m = *policy.motors;
      const double rot_cpu = detail::radians_to_counts(1.0, m.rot_plant);
      const double lin_cpu = m.trans_plant.counts_per_rev / m.mm_per_rev;
      move_time += detail::run_motor(current.theta, entry.theta_command, rot_cpu, m.rot_plant,
                                     m.rot_params, m.sim, reached.theta);
      // The two translational axes move together after the rotation.
      const double td = detail::run_motor(current.d, plan.d_command, lin_cpu, m.trans_plant,
                                          m.trans_params, m.sim, reached.d);
      const double ts = detail::run_motor(current.s, plan.s_command, lin_cpu, m.trans_plant,
                                          m.trans_params, m.sim, reached.s);
      move_time += std::max(td, ts);
      reached.s = std::clamp(reached.s, 0.0, planner.curve().arc_total());
    }
    if (policy.torsion_plant && planner.torsion())
      reached.theta = twisted_theta(planner, reached.theta, current.theta, current.s, reached.s);
    entry.achieved = reached;
    entry.tip = planner.forward(reached).tip.translation();
    entry.tip_error = (entry.tip - *target).norm();

    const auto removed = aspirate(phantom, robot_to_image.apply(entry.tip), policy.aspiration);
    const double removed_ml = double(removed.size()) * phantom.voxel_volume_mm3() / 1000.0;
    const double aspirate_time =
        policy.aspiration.rate_ml_s > 0.0
            ? std::min(policy.aspiration.dwell, removed_ml / policy.aspiration.rate_ml_s)
            : policy.aspiration.dwell;
    rep.elapsed_sim_time += move_time + aspirate_time;
    entry.removed_voxels = removed.size();
    entry.residual_ml = phantom.volume_ml();
    entry.elapsed_s = rep.elapsed_sim_time;
    rep.log.push_back(entry);
    ++rep.n_targets;
    current = reached;

    idle = removed.empty() ? idle + 1 : 0;
    if (idle >= policy.stall_limit) {
      rep.stalled = true;
      return finish("stalled");
    }
  }
}

}  // namespace ctrkit
