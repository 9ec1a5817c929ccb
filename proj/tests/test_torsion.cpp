#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ctrkit/config.hpp"
#include "ctrkit/torsion.hpp"

using namespace ctrkit;

namespace {

constexpr double kPi = std::numbers::pi;

const TubeSpec kNylon{3.0, 2.0, 300.0, 29.0};
const MaterialModel kMat{};

// Annulus area moment, by hand.
double annulus_I(double ro, double ri) { return kPi * (std::pow(ro, 4) - std::pow(ri, 4)) / 4.0; }

// Straightening force on an n-cell grid, written out independently.
template <class C>
double brute_force(const C& curve, double s, int n) {
  const double s_max = curve.arc_total();
  const double a = s_max - s;
  if (a <= 0.0) return 0.0;
  const double x_hi = x_at_arc(curve, a);
  const double EI = kMat.elastic_modulus() * annulus_I(kNylon.r_od, kNylon.r_id);
  double f = 0.0;
  for (int j = 0; j < n; ++j) {
    const double x0 = x_hi * j / n, x1 = x_hi * (j + 1) / n;
    f += EI * std::abs(curve.curvature(x0)) * curve.arc_length(x0, x1);
  }
  return f / (s_max * s_max);
}

}  // namespace

TEST(FiberStrain, Examples) {
  EXPECT_EQ(fiber_strain(0.0, 0.3), 0.0);
  EXPECT_NEAR(fiber_strain(3.0, 0.05), 0.15, 1e-15);
  EXPECT_NEAR(fiber_strain(3.0, 1.0 / 30.0), 0.10, 1e-15);
}

TEST(EnergyDensity, QuadraticInStrain) {
  EXPECT_EQ(strain_energy_density(0.0, kMat), 0.0);
  EXPECT_NEAR(strain_energy_density(0.1, kMat), 20.0, 1e-12);
  EXPECT_NEAR(strain_energy_density(0.06, kMat), 4.0 * strain_energy_density(0.03, kMat), 1e-12);
}

TEST(EnergyDensity, WarnsBeyondElasticLimit) {
  Diagnostics d;
  strain_energy_density(0.05, kMat, &d);
  EXPECT_TRUE(d.warnings.empty());
  strain_energy_density(0.12, kMat, &d);
  EXPECT_EQ(d.warnings.size(), 1u);
}

TEST(SegmentEnergy, StraightIsZero) {
  EXPECT_EQ(segment_energy(0.0, 3.0, kNylon, kMat), 0.0);
}

TEST(SegmentEnergy, AnnulusOracle) {
  const double I = annulus_I(3.0, 2.0);
  EXPECT_NEAR(I, 51.05, 0.01);
  const double expect = 4000.0 * 0.0025 * I / 2.0;
  EXPECT_NEAR(segment_energy(0.05, 1.0, kNylon, kMat), expect, 1e-3 * expect);
  EXPECT_NEAR(segment_energy_closed_form(0.05, 1.0, kNylon, kMat), expect, 1e-9 * expect);
}

TEST(SegmentEnergy, NumericMatchesClosedFormOnRandomDraws) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> k(-0.1, 0.1), ro(0.5, 5.0), frac(0.1, 0.9), ds(0.01, 2.0);
  for (int i = 0; i < 20; ++i) {
    const double r_o = ro(rng);
    const TubeSpec t{r_o, r_o * frac(rng), 300.0, 29.0};
    const double kk = k(rng), d = ds(rng);
    for (auto el : {AreaElement::Polar, AreaElement::Literal}) {
      const double num = segment_energy(kk, d, t, kMat, el);
      const double cf = segment_energy_closed_form(kk, d, t, kMat, el);
      EXPECT_NEAR(num, cf, 1e-6 * std::abs(cf)) << "draw " << i;
    }
  }
}

TEST(SegmentEnergy, LiteralElementDiffers) {
  const double polar = segment_energy(0.03, 1.0, kNylon, kMat, AreaElement::Polar);
  const double literal = segment_energy(0.03, 1.0, kNylon, kMat, AreaElement::Literal);
  EXPECT_NEAR(literal / polar, (4.0 / 3.0) * (27.0 - 8.0) / (81.0 - 16.0), 1e-9);
}

TEST(SegmentEnergy, GradientMatchesFiniteDifference) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> k(-0.08, 0.08), ds(0.05, 1.5);
  for (int i = 0; i < 50; ++i) {
    const double kk = k(rng), d = ds(rng), h = 1e-5;
    const double fd = (segment_energy(kk + h, d, kNylon, kMat) - segment_energy(kk - h, d, kNylon, kMat)) /
                      (2.0 * h);
    const double an = segment_energy_gradient(kk, d, kNylon, kMat);
    EXPECT_NEAR(fd, an, 1e-6 * std::abs(an) + 1e-9) << "draw " << i;
  }
}

TEST(StraighteningForce, ZeroAtFullExtensionAndForStraightTube) {
  const auto ref = reference_tube();
  EXPECT_EQ(straightening_force(ref, ref.arc_total(), kNylon, kMat).force, 0.0);
  const PlanarShape straight({0.0, 0.0, 0.0}, 29.0);
  for (double s : {0.0, 10.0, 20.0})
    EXPECT_EQ(straightening_force(straight, s, kNylon, kMat).force, 0.0);
}

TEST(StraighteningForce, NonNegativeAndNonIncreasing) {
  const auto ref = reference_tube();
  double prev = INFINITY;
  for (int i = 0; i <= 58; ++i) {
    const double s = ref.arc_total() * i / 58;
    const double f = straightening_force(ref, s, kNylon, kMat).force;
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, prev + 1e-9);
    prev = f;
  }
}

TEST(StraighteningForce, MatchesFineGrid) {
  const auto ref = reference_tube();
  for (int n : {100, 10000}) {
    const double f = straightening_force(ref, 14.5, kNylon, kMat, TorsionOptions{n}).force;
    const double oracle = brute_force(ref, 14.5, n);
    EXPECT_NEAR(f, oracle, 1e-9 * oracle) << "n=" << n;
  }
  // The default grid is first order: within 1% of the converged value.
  const double coarse = straightening_force(ref, 14.5, kNylon, kMat).force;
  const double fine = brute_force(ref, 14.5, 10000);
  EXPECT_NEAR(coarse, fine, 0.01 * fine);
}

TEST(StraighteningForce, UniformArcClosedForm) {
  // Fully constrained constant-curvature arc of length L: F = E I kappa / L.
  const ConstantCurvatureShape c(1.0 / 20.0, 27.0);
  const double f = straightening_force(c, 0.0, kNylon, kMat).force;
  EXPECT_NEAR(f, kMat.elastic_modulus() * annulus_I(3, 2) / 20.0 / 27.0, 1e-9);
  EXPECT_THROW(straightening_force(c, 28.0, kNylon, kMat), Error);
}

TEST(ResistiveTorque, Examples) {
  EXPECT_EQ(resistive_torque(0.0, kNylon, kMat), 0.0);
  EXPECT_NEAR(resistive_torque(10.0, kNylon, kMat), 5.1, 1e-12);
  EXPECT_NEAR(resistive_torque(20.0, kNylon, kMat), 2.0 * resistive_torque(10.0, kNylon, kMat), 1e-12);
  EXPECT_THROW(resistive_torque(-1.0, kNylon, kMat), Error);
}

TEST(Deflection, PolarMoment) {
  EXPECT_NEAR(kNylon.polar_moment(), kPi * (1296.0 - 256.0) / 32.0, 1e-12);
  EXPECT_NEAR(kNylon.polar_moment(), 102.1, 0.05);
}

TEST(Deflection, ZeroAtFullExtension) {
  const auto ref = reference_tube();
  EXPECT_EQ(torsional_deflection(ref, ref.arc_total(), kNylon, kMat), 0.0);
}

TEST(Deflection, HandComputedAtMidInsertion) {
  const auto ref = reference_tube();
  const auto st = torsion_state(ref, 14.5, kNylon, kMat);
  const double T = 0.17 * st.load.force * 3.0;
  const double phi = T * (300.0 - st.load.resultant_location - 14.5) /
                     (kNylon.polar_moment() * kMat.shear_modulus());
  EXPECT_NEAR(st.phi, phi, 1e-12 * phi);
}

TEST(Deflection, GridRefinementChangesLessThanOnePercent) {
  const auto ref = reference_tube();
  for (double s : {0.0, 5.0, 14.5, 22.0}) {
    const double a = torsional_deflection(ref, s, kNylon, kMat, {100});
    const double b = torsional_deflection(ref, s, kNylon, kMat, {200});
    EXPECT_LT(std::abs(a - b), 0.01 * std::abs(b)) << "s=" << s;
  }
}

TEST(Deflection, ContinuousAndFlatAtTheEnds) {
  const auto ref = reference_tube();
  const double L = ref.arc_total();
  auto phi = [&](double s) { return torsional_deflection(ref, s, kNylon, kMat); };
  for (int i = 0; i < 290; ++i) {
    const double s = L * i / 290, h = L / 290;
    EXPECT_LT(std::abs(phi(s + h) - phi(s)), 0.005);
  }
  auto slope = [&](double s) { return std::abs(phi(s + 0.25) - phi(s - 0.25)) / 0.5; };
  const double mid = slope(L / 2.0);
  EXPECT_LT(slope(0.25), mid);
  EXPECT_LT(slope(L - 0.25), mid);
}
