#pragma once

// Three-region variable-gain PD law for the pneumatic motors and a
// discrete-time plant: transport delay, valve dead-band, first-order lag,
// quadrature-encoder quantization.

#include <cmath>
#include <cstdint>
#include <deque>
#include <sstream>
#include <vector>

#include "ctrkit/error.hpp"

namespace ctrkit {

struct ControllerParams {
  double delta = 11.0;         ///< Region I tolerance [counts]
  double err_thresh = 1000.0;  ///< Region II/III boundary [counts]
  double v_start = 9.0;        ///< breakaway voltage from rest [V]
  double v_deadband = 3.5;     ///< voltage that keeps a moving motor moving [V]
  double kp_const = 11.5;
  double kd = 4000.0;
  double ki = 0.0;
  double v_range = 20.0;
  int resolution_bits = 16;
  /// Motion detection: encoder sampled every omega_period seconds, the motor
  /// counts as moving when it changed by >= 1 count over omega_window samples.
  double omega_period = 0.1;
  int omega_window = 3;
  /// false: Kp = kp_const in every region (Region I still zeroes output only
  /// when scheduling is on).
  bool scheduling = true;

  double scale() const { return v_range / std::ldexp(1.0, resolution_bits); }

  static ControllerParams rotational() { return {}; }
  static ControllerParams translational() {
    ControllerParams p;
    p.v_start = 6.4;
    p.v_deadband = 3.0;
    p.kp_const = 9.8;
    return p;
  }

  void validate() const {
    if (!(delta > 0.0 && delta < err_thresh))
      throw Error(ErrorCode::InvalidArgument, "ControllerParams: need 0 < delta < err_thresh");
    if (!(v_deadband > 0.0 && v_deadband <= v_start && v_start <= 10.0))
      throw Error(ErrorCode::InvalidArgument,
                  "ControllerParams: need 0 < v_deadband <= v_start <= 10");
    if (!(kp_const >= 0.0) || !(kd >= 0.0) || !(ki >= 0.0))
      throw Error(ErrorCode::InvalidArgument, "ControllerParams: gains must be >= 0");
    if (!(v_range > 0.0) || resolution_bits < 1 || resolution_bits > 32)
      throw Error(ErrorCode::InvalidArgument, "ControllerParams: bad DAC description");
    if (!(omega_period > 0.0) || omega_window < 1)
      throw Error(ErrorCode::InvalidArgument, "ControllerParams: bad motion window");
  }
};

struct MotorPlant {
  double nominal_speed_rpm = 11000.0;
  double gear_ratio = 400.0;
  double counts_per_rev = 4000.0;
  double transport_delay = 0.352;  ///< [s]
  double plant_deadband = 1.70;    ///< valve offset from center with no motion [V]
  double time_constant = 0.05;     ///< [s]
  double valve_center = 5.0;       ///< [V]; the valve spans 0..2*center

  /// Output-shaft speed at full valve opening [counts/s].
  double full_speed() const {
    return nominal_speed_rpm / 60.0 / gear_ratio * counts_per_rev;
  }

  static MotorPlant rotational() { return {}; }
  static MotorPlant translational() {
    MotorPlant p;
    p.gear_ratio = 100.0;
    p.plant_deadband = 1.48;
    return p;
  }

  void validate() const {
    if (!(nominal_speed_rpm > 0.0) || !(gear_ratio > 0.0) || !(counts_per_rev > 0.0) ||
        !(time_constant > 0.0) || !(valve_center > 0.0))
      throw Error(ErrorCode::InvalidArgument, "MotorPlant: parameters must be positive");
    if (!(transport_delay >= 0.0))
      throw Error(ErrorCode::InvalidArgument, "MotorPlant: transport_delay must be >= 0");
    if (!(plant_deadband >= 0.0 && plant_deadband < valve_center))
      throw Error(ErrorCode::InvalidArgument,
                  "MotorPlant: need 0 <= plant_deadband < valve_center");
  }

  /// Steady-state shaft rate for a valve voltage [counts/s].
  double drive_rate(double valve_voltage) const {
    const double off = valve_voltage - valve_center;
    const double mag = std::max(0.0, std::abs(off) - plant_deadband);
    if (mag == 0.0) return 0.0;
    return std::copysign(mag / (valve_center - plant_deadband) * full_speed(), off);
  }
};

enum class Region : int { I = 1, II = 2, III = 3 };

inline Region region_of(double err, const ControllerParams& p) {
  const double a = std::abs(err);
  if (a <= p.delta) return Region::I;
  if (a <= p.err_thresh) return Region::II;
  return Region::III;
}

/// Proportional gain for error `err` [counts]; `omega` is the measured shaft
/// rate, zero meaning stationary. In Region II the gain makes |V| equal to
/// V_start (stationary) or V_db (moving) regardless of |err|.
inline double gain_schedule(double err, double omega, const ControllerParams& p) {
  if (!p.scheduling) return p.kp_const;
  switch (region_of(err, p)) {
    case Region::I:
      return 0.0;
    case Region::II:
      return (omega == 0.0 ? p.v_start : p.v_deadband) / (std::abs(err) * p.scale());
    case Region::III:
      return p.kp_const;
  }
  return 0.0;
}

/// V = (Kp err + Kd d_err) * 20/2^16, saturated to +-10 V. d_err is the error
/// change over one servo sample.
inline double command_voltage(double err, double d_err, double kp,
                              const ControllerParams& p) {
  const double v = (kp * err + p.kd * d_err) * p.scale();
  const double lim = p.v_range / 2.0;
  return std::clamp(v, -lim, lim);
}

/// Bipolar command to the 0..10 V valve input.
inline double differential_map(double v_bipolar) {
  if (!(v_bipolar >= -10.0 && v_bipolar <= 10.0))
    throw Error(ErrorCode::DomainError, "differential_map: input outside [-10, 10] V");
  return v_bipolar / 2.0 + 5.0;
}

/// One controller evaluation.
struct ControlOutput {
  Region region = Region::I;
  double kp = 0.0;
  double voltage = 0.0;
};

inline ControlOutput control_law(double err, double d_err, double omega,
                                 const ControllerParams& p) {
  ControlOutput out;
  out.region = region_of(err, p);
  if (p.scheduling && out.region == Region::I) return out;  // all gains zero
  out.kp = gain_schedule(err, omega, p);
  out.voltage = command_voltage(err, d_err, out.kp, p);
  return out;
}

struct TraceSample {
  double t = 0.0;
  std::int64_t position = 0;  ///< encoder [counts]
  std::int64_t err = 0;
  double voltage = 0.0;       ///< bipolar controller output [V]
  Region region = Region::I;
};

struct SimOptions {
  double dt = 0.001;
  double t_max = 60.0;
  std::int64_t start = 0;  ///< initial encoder count
  /// Stop once the loop is provably at rest: no drive left in the delay line,
  /// residual coast under 1e-3 counts, motion window stationary.
  bool stop_when_quiescent = true;
  int record_every = 1;
};

struct MotorTrace {
  std::vector<TraceSample> samples;
  bool settled = false;
  double settle_time = -1.0;     ///< first stationary entry into Region I [s]
  bool oscillated = false;       ///< left Region I after settling
  double first_band_entry = -1.0;
  bool entered_band_moving = false;  ///< reached Region I while still moving
  std::int64_t final_error = 0;
  double final_time = 0.0;
  bool quiescent_exit = false;
};

/// Closed-loop step response from `opt.start` to `setpoint` (counts).
inline MotorTrace simulate_move(std::int64_t setpoint, const MotorPlant& plant,
                                const ControllerParams& params, const SimOptions& opt = {}) {
  plant.validate();
  params.validate();
  if (!(opt.dt > 0.0) || !(opt.t_max > 0.0))
    throw Error(ErrorCode::InvalidArgument, "simulate_move: dt and t_max must be > 0");
  if (plant.transport_delay > 0.0 && opt.dt > plant.transport_delay / 10.0)
    throw Error(ErrorCode::InvalidArgument,
                "simulate_move: dt must be <= transport_delay / 10");
  if (opt.record_every < 1)
    throw Error(ErrorCode::InvalidArgument, "simulate_move: record_every must be >= 1");

  const auto delay_steps = static_cast<std::size_t>(std::llround(plant.transport_delay / opt.dt));
  const auto omega_steps =
      std::max<std::int64_t>(1, std::llround(params.omega_period / opt.dt));
  const auto steps = static_cast<std::int64_t>(std::ceil(opt.t_max / opt.dt - 1e-9));

  std::deque<double> line(delay_steps, 0.0);  // commands in flight (bipolar V)
  std::deque<std::int64_t> window(static_cast<std::size_t>(params.omega_window) + 1,
                                  opt.start);
  double pos = double(opt.start);
  double rate = 0.0;
  std::int64_t prev_err = setpoint - opt.start;
  std::size_t live_commands = 0;  // entries in `line` that drive the plant

  MotorTrace tr;
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = double(k) * opt.dt;
    const auto enc = static_cast<std::int64_t>(std::floor(pos + 0.5));
    const std::int64_t err = setpoint - enc;
    if (k % omega_steps == 0) {
      window.pop_front();
      window.push_back(enc);
    }
    const double omega = std::llabs(window.back() - window.front()) >= 1
                             ? double(window.back() - window.front()) /
                                   (params.omega_window * params.omega_period)
                             : 0.0;
    const double d_err = double(err - prev_err);
    prev_err = err;

    const ControlOutput u = control_law(double(err), d_err, omega, params);

    if (u.region == Region::I) {
      if (tr.first_band_entry < 0.0) tr.first_band_entry = t;
      // The sampled window can lag a fast start; also require the encoder to
      // be unchanged since the window began.
      if (!tr.settled && omega == 0.0 && enc == window.front()) {
        tr.settled = true;
        tr.settle_time = t;
      } else if (!tr.settled) {
        tr.entered_band_moving = true;
      }
    } else if (tr.settled) {
      tr.oscillated = true;
    }
    if (k % opt.record_every == 0) tr.samples.push_back({t, enc, err, u.voltage, u.region});

    // Transport delay: the valve sees the command issued delay_steps ago.
    double applied = u.voltage;
    if (delay_steps > 0) {
      line.push_back(u.voltage);
      if (plant.drive_rate(differential_map(u.voltage)) != 0.0) ++live_commands;
      applied = line.front();
      line.pop_front();
      if (plant.drive_rate(differential_map(applied)) != 0.0) --live_commands;
    }
    const double target_rate = plant.drive_rate(differential_map(applied));
    rate += (target_rate - rate) * opt.dt / plant.time_constant;
    pos += rate * opt.dt;

    tr.final_time = t + opt.dt;
    if (opt.stop_when_quiescent && live_commands == 0 && target_rate == 0.0 &&
        omega == 0.0 && d_err == 0.0 &&
        std::abs(rate) * plant.time_constant < 1e-3 &&
        std::llround(std::floor(pos + 0.5)) == enc) {
      tr.quiescent_exit = true;
      break;
    }
  }
  tr.final_error = setpoint - static_cast<std::int64_t>(std::floor(pos + 0.5));
  if (tr.settled && std::llabs(tr.final_error) > std::llround(params.delta))
    tr.oscillated = true;
  return tr;
}

struct LimitCycleReport {
  int sign_changes = 0;
  double amplitude = 0.0;  ///< max |err| over the window [counts]
  bool sustained = false;
};

/// Looks for a persistent oscillation about the setpoint in the last
/// `window_s` seconds of a trace: at least two error sign changes with
/// amplitude beyond delta. A trace that stopped early has no tail motion.
inline LimitCycleReport detect_limit_cycle(const MotorTrace& tr, double delta,
                                           double window_s = 10.0) {
  LimitCycleReport rep;
  if (tr.samples.empty()) return rep;
  const double t0 = tr.samples.back().t - window_s;
  int prev_sign = 0;
  for (const auto& s : tr.samples) {
    if (s.t < t0) continue;
    rep.amplitude = std::max(rep.amplitude, double(std::llabs(s.err)));
    const int sg = (s.err > 0) - (s.err < 0);
    if (sg != 0) {
      if (prev_sign != 0 && sg != prev_sign) ++rep.sign_changes;
      prev_sign = sg;
    }
  }
  rep.sustained = !tr.quiescent_exit && rep.sign_changes >= 2 && rep.amplitude > delta;
  return rep;
}

}  // namespace ctrkit
