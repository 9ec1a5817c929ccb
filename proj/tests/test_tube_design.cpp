#include <cmath>

#include <gtest/gtest.h>

#include "ctrkit/config.hpp"
#include "ctrkit/tube_design.hpp"

using namespace ctrkit;

namespace {

TubePair pair_with(double inner_r_od, double outer_r_id) {
  TubePair p;
  p.inner.geometry = {inner_r_od, inner_r_od - 1.0, 300.0, 29.0};
  p.outer.geometry = {outer_r_id + 1.0, outer_r_id, 250.0, 250.0};
  return p;
}

// Dense scan plus bisection on the wall-contact residual.
double scan_root(double s_max, double r, double d_y) {
  auto g = [&](double k) { return (std::cos(k * s_max) - 1.0) / k - r * std::cos(k * s_max) + d_y; };
  const int n = 200000;
  const double hi = std::numbers::pi / s_max;
  double a = hi / n;
  for (int i = 2; i <= n; ++i) {
    double b = hi * i / n;
    if ((g(a) > 0) != (g(b) > 0)) {
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        ((g(a) > 0) == (g(m) > 0) ? a : b) = m;
      }
      return 0.5 * (a + b);
    }
    a = b;
  }
  return NAN;
}

}  // namespace

TEST(MaxPrecurvature, StrainLimitedRadius) {
  MaterialModel m;
  m.strain_limit = 0.10;
  EXPECT_NEAR(1.0 / max_precurvature(m, 3.0), 30.0, 1e-12);
  EXPECT_NEAR(max_precurvature(m, 1.1), 0.0909090909, 1e-9);
  m.strain_limit = 0.0;
  EXPECT_EQ(max_precurvature(m, 3.0, 0.004), 0.004);
  EXPECT_THROW(max_precurvature(m, 0.0), Error);
}

TEST(MaxPrecurvature, ClosesWithFiberStrain) {
  MaterialModel m;
  for (double klim : {0.0, 0.001, 0.01}) {
    const double k = max_precurvature(m, 3.0, klim);
    EXPECT_NEAR(fiber_strain(3.0, k - klim), m.strain_limit, 1e-15);
  }
}

TEST(KappaLimit, ZeroClearanceGivesZero) {
  EXPECT_EQ(kappa_limit(pair_with(3.0, 3.0), 29.0), 0.0);
}

TEST(KappaLimit, VanishesContinuouslyWithClearance) {
  double prev = 0.0;
  for (double c : {1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0}) {
    const double k = kappa_limit(pair_with(3.0, 3.0 + c / 2.0), 29.0);
    EXPECT_GE(k, prev);
    prev = k;
  }
  EXPECT_LT(kappa_limit(pair_with(3.0, 3.0 + 5e-7), 29.0), 1e-5);
}

TEST(KappaLimit, MatchesDenseScan) {
  const TubePair loose = pair_with(3.0, 4.0);
  EXPECT_NEAR(loose.clearance(), 2.0, 1e-15);
  const double oracle = scan_root(29.0, 3.0, 8.0 - 3.0);
  EXPECT_NEAR(kappa_limit(loose, 29.0), oracle, 1e-8);
}

TEST(KappaLimit, RejectsInterference) {
  EXPECT_THROW(kappa_limit(pair_with(3.0, 2.9), 29.0), Error);
  EXPECT_THROW(kappa_limit(pair_with(3.0, 3.1), 0.0), Error);
}

TEST(BendingReport, RatioEqualsBendAngle) {
  for (const auto& row : comparison_table<PlanarShape>(nullptr)) {
    ASSERT_TRUE(row.roc_mm.has_value());
    EXPECT_NEAR(row.report.force / row.report.stiffness, row.loc_mm / *row.roc_mm, 1e-12)
        << row.label;
    EXPECT_NEAR(row.report.force / row.report.stiffness, 1.35, 1e-3);
  }
  const auto ref = reference_tube();
  const auto r = bending_report(ref, TubeSpec{3, 2, 300, ref.arc_total()}, MaterialModel{});
  EXPECT_NEAR(r.force / r.stiffness, std::abs(r.bend_angle), 1e-12);
}

TEST(BendingReport, BeamTheoryOracle) {
  const TubeSpec t{3.0, 2.0, 300.0, 27.0};
  const MaterialModel m;
  const double I = std::numbers::pi * (81.0 - 16.0) / 4.0;
  const auto r = bending_report(t, m, 20.0, 27.0);
  EXPECT_NEAR(r.force, 4000.0 * I * (1.0 / 20.0) / 27.0, 1e-9);
  EXPECT_NEAR(bending_report(t, m, 1e12, 27.0).force, 0.0, 1e-6);
  EXPECT_THROW(bending_report(t, m, 0.0, 27.0), Error);
}

TEST(BendingReport, NitinolFarStifferThanNylon) {
  const auto rows = comparison_table<PlanarShape>(nullptr);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[1].report.force / rows[2].report.force, 74.0 / 4.0, 1e-9);
  EXPECT_GT(rows[1].report.stiffness, rows[0].report.stiffness);
}

TEST(BendingReport, CharacterizedRowIncluded) {
  const auto ref = reference_tube();
  const auto rows = comparison_table(&ref);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_FALSE(rows[3].roc_mm.has_value());
  EXPECT_GT(rows[3].report.force, 0.0);
}

TEST(CyclingRetention, Examples) {
  EXPECT_TRUE(cycling_retention_check(32.4, 33.4, 0.05));
  EXPECT_TRUE(cycling_retention_check(30.0, 30.0));
  EXPECT_FALSE(cycling_retention_check(30.0, 40.0, 0.05));
  EXPECT_THROW(cycling_retention_check(0.0, 30.0), Error);
}
