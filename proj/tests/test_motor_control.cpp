#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ctrkit/motor_control.hpp"

using namespace ctrkit;

namespace {
const ControllerParams kRot = ControllerParams::rotational();
const ControllerParams kTrans = ControllerParams::translational();
const double kScale = 20.0 / 65536.0;
}  // namespace

TEST(GainSchedule, RegionIIsZero) {
  EXPECT_EQ(gain_schedule(5.0, 0.0, kRot), 0.0);
  EXPECT_EQ(gain_schedule(-11.0, 3.0, kRot), 0.0);
}

TEST(GainSchedule, MovingGainAtThreshold) {
  EXPECT_NEAR(gain_schedule(1000.0, 1.0, kTrans), 9.8, 0.05);
  EXPECT_NEAR(gain_schedule(1000.0, 1.0, kRot), 11.5, 0.05);
}

TEST(GainSchedule, RegionIIArithmetic) {
  EXPECT_NEAR(gain_schedule(500.0, 1.0, kTrans), 3.0 / (500.0 * kScale), 1e-12);
  EXPECT_NEAR(gain_schedule(500.0, 1.0, kTrans), 19.66, 0.01);
  EXPECT_NEAR(gain_schedule(-500.0, 0.0, kTrans), 6.4 / (500.0 * kScale), 1e-12);
}

TEST(GainSchedule, RegionIIIUsesConstantGain) {
  EXPECT_EQ(gain_schedule(1001.0, 1.0, kRot), kRot.kp_const);
  EXPECT_EQ(gain_schedule(-40000.0, 0.0, kTrans), kTrans.kp_const);
}

TEST(GainSchedule, ContinuousAtThreshold) {
  for (const auto& p : {kRot, kTrans})
    EXPECT_LT(std::abs(gain_schedule(p.err_thresh, 1.0, p) - p.kp_const), 0.1);
}

TEST(GainSchedule, ConstantModeIgnoresRegions) {
  ControllerParams p = kRot;
  p.scheduling = false;
  EXPECT_EQ(gain_schedule(3.0, 0.0, p), p.kp_const);
  EXPECT_EQ(gain_schedule(600.0, 1.0, p), p.kp_const);
}

TEST(CommandVoltage, Examples) {
  EXPECT_NEAR(command_voltage(1000.0, 0.0, 9.8, kTrans), 2.99, 0.005);
  EXPECT_EQ(command_voltage(0.0, 0.0, 11.5, kRot), 0.0);
  EXPECT_EQ(command_voltage(1e7, 0.0, 11.5, kRot), 10.0);
  EXPECT_EQ(command_voltage(-1e7, 0.0, 11.5, kRot), -10.0);
}

TEST(CommandVoltage, RegionIIFlatLine) {
  for (const auto& p : {kRot, kTrans}) {
    for (int e = 12; e <= 1000; e += 7) {
      for (double sign : {1.0, -1.0}) {
        const double err = sign * e;
        const double moving = command_voltage(err, 0.0, gain_schedule(err, 1.0, p), p);
        const double still = command_voltage(err, 0.0, gain_schedule(err, 0.0, p), p);
        EXPECT_NEAR(std::abs(moving), p.v_deadband, 1e-12);
        EXPECT_NEAR(std::abs(still), p.v_start, 1e-12);
      }
    }
  }
}

TEST(DifferentialMap, Examples) {
  EXPECT_EQ(differential_map(0.0), 5.0);
  EXPECT_EQ(differential_map(10.0), 10.0);
  EXPECT_EQ(differential_map(-10.0), 0.0);
  EXPECT_EQ(differential_map(6.0), 8.0);
  EXPECT_THROW(differential_map(10.5), Error);
}

TEST(Plant, DeadBandIsMonotone) {
  const MotorPlant p = MotorPlant::rotational();
  EXPECT_EQ(p.drive_rate(5.0), 0.0);
  EXPECT_EQ(p.drive_rate(5.0 + 1.69), 0.0);
  EXPECT_EQ(p.drive_rate(5.0 - 1.69), 0.0);
  EXPECT_GT(p.drive_rate(5.0 + 1.75), 0.0);
  EXPECT_LT(p.drive_rate(5.0 - 1.75), 0.0);
  double prev = 0.0;
  for (double v = 5.0; v <= 10.0; v += 0.05) {
    EXPECT_GE(p.drive_rate(v), prev);
    prev = p.drive_rate(v);
  }
  EXPECT_NEAR(p.drive_rate(10.0), p.full_speed(), 1e-9);
}

TEST(ControlLaw, BandZeroesEverything) {
  const auto out = control_law(4.0, 3.0, 2.0, kRot);
  EXPECT_EQ(out.region, Region::I);
  EXPECT_EQ(out.voltage, 0.0);
}

TEST(Simulate, SetpointInsideBandDoesNothing) {
  const auto tr = simulate_move(5, MotorPlant::rotational(), kRot);
  EXPECT_TRUE(tr.settled);
  EXPECT_EQ(tr.settle_time, 0.0);
  EXPECT_EQ(tr.final_error, 5);
  for (const auto& s : tr.samples) {
    EXPECT_EQ(s.voltage, 0.0);
    EXPECT_EQ(s.position, 0);
  }
}

TEST(Simulate, RotationalMoveSettles) {
  const MotorPlant plant = MotorPlant::rotational();
  const auto sp = std::llround(144.0 / 360.0 * plant.counts_per_rev);
  const auto tr = simulate_move(sp, plant, kRot);
  EXPECT_TRUE(tr.settled);
  EXPECT_FALSE(tr.oscillated);
  EXPECT_LE(std::llabs(tr.final_error), 11);
  EXPECT_FALSE(detect_limit_cycle(tr, kRot.delta).sustained);
}

TEST(Simulate, RandomSetpointsSettleWithoutOscillation) {
  std::mt19937_64 rng(99);
  SimOptions opt;
  opt.t_max = 120.0;
  opt.record_every = 100;
  for (int axis = 0; axis < 2; ++axis) {
    const MotorPlant plant = axis ? MotorPlant::translational() : MotorPlant::rotational();
    const ControllerParams& params = axis ? kTrans : kRot;
    const double span = 10.0 * plant.counts_per_rev;
    std::uniform_real_distribution<double> u(-span, span);
    for (int i = 0; i < 50; ++i) {
      const auto sp = std::llround(u(rng));
      const auto tr = simulate_move(sp, plant, params, opt);
      EXPECT_TRUE(tr.settled) << "axis " << axis << " setpoint " << sp;
      EXPECT_FALSE(tr.oscillated) << "axis " << axis << " setpoint " << sp;
      EXPECT_LE(std::llabs(tr.final_error), std::llround(params.delta));
    }
  }
}

TEST(Simulate, ConstantGainStallsShortOfTarget) {
  ControllerParams p = kRot;
  p.scheduling = false;
  const auto tr = simulate_move(1600, MotorPlant::rotational(), p);
  EXPECT_FALSE(tr.settled);
  EXPECT_GT(std::llabs(tr.final_error), 11);
  EXPECT_TRUE(tr.quiescent_exit);
}

TEST(Simulate, HighConstantGainLimitCycles) {
  ControllerParams p = kRot;
  p.scheduling = false;
  p.kp_const = 1000.0;
  SimOptions opt;
  opt.t_max = 30.0;
  opt.stop_when_quiescent = false;
  const auto tr = simulate_move(1600, MotorPlant::rotational(), p, opt);
  const auto lc = detect_limit_cycle(tr, p.delta);
  EXPECT_TRUE(lc.sustained);
  EXPECT_GE(lc.sign_changes, 2);
  EXPECT_GT(lc.amplitude, p.delta);
}

TEST(Simulate, DeterministicTrace) {
  const auto a = simulate_move(-2500, MotorPlant::translational(), kTrans);
  const auto b = simulate_move(-2500, MotorPlant::translational(), kTrans);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].position, b.samples[i].position);
    EXPECT_EQ(a.samples[i].voltage, b.samples[i].voltage);
  }
}

TEST(Simulate, ValidatesInputs) {
  SimOptions bad;
  bad.dt = 0.1;
  EXPECT_THROW(simulate_move(100, MotorPlant::rotational(), kRot, bad), Error);
  ControllerParams p = kRot;
  p.v_deadband = 9.5;
  EXPECT_THROW(simulate_move(100, MotorPlant::rotational(), p), Error);
  MotorPlant m;
  m.plant_deadband = 6.0;
  EXPECT_THROW(simulate_move(100, m, kRot), Error);
}
