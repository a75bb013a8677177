#include <atomint/magnetic.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace atomint;

namespace {

constexpr double pi_ = std::numbers::pi;

// Closed form of the angular integral: 1 + 2 pi / (3 sqrt 3) * 2.
const double c_exact = 1.0 + 4.0 * pi_ / (3.0 * std::sqrt(3.0));

std::vector<double> sweep(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

}  // namespace

TEST(AngularIntegral, MatchesClosedForm) {
  EXPECT_NEAR(dipole_angular_integral(), c_exact, 1e-10);
  EXPECT_NEAR(dipole_angular_integral(), 3.42, 0.01);
}

TEST(ZeemanPhase, ThousandsOfRadiansOverTheArms) {
  MagneticScenario sc;
  const auto li = lithium7();
  EXPECT_DOUBLE_EQ(zeeman_phase(sc, li, 2.0, 0.0, 1060.0), 0.0);
  const double per_m = zeeman_phase(sc, li, 2.0, 1.0, 1060.0);
  EXPECT_NEAR(per_m, 2.0e3, 0.2e3);
  EXPECT_NEAR(zeeman_phase(sc, li, 2.0, 1.0, 2120.0), per_m / 2.0, 1e-9 * per_m);
  EXPECT_NEAR(zeeman_phase(sc, li, 1.0, 1.0, 1060.0), -per_m, 1e-9 * per_m);
  EXPECT_THROW(zeeman_phase(sc, li, 2.0, 1.0, 0.0), DomainError);
}

TEST(ZeemanPhase, HomogeneousFieldGivesNoPathDifference) {
  MagneticScenario upper, lower;
  const auto li = lithium7();
  for (double m = -2.0; m <= 2.0; m += 1.0) {
    EXPECT_DOUBLE_EQ(zeeman_phase(upper, li, 2.0, m, 1060.0) - zeeman_phase(lower, li, 2.0, m, 1060.0), 0.0);
  }
}

TEST(ZeemanPhase, VanishingFieldRejected) {
  MagneticScenario sc;
  sc.field = {{0.0, 0.5, 1.0}, {4e-5, 0.0, 4e-5}};
  EXPECT_THROW(zeeman_phase(sc, lithium7(), 2.0, 1.0, 1060.0), DomainError);
}

TEST(GradientPhase, Scalings) {
  const double base = gradient_phase_at(50e-6, 1.0, 0.2, 0.5, 1060.0);
  EXPECT_GT(base, 0.0);
  EXPECT_DOUBLE_EQ(gradient_phase_at(50e-6, 0.0, 0.2, 0.5, 1060.0), 0.0);
  EXPECT_NEAR(gradient_phase_at(50e-6, 3.0, 0.2, 0.5, 1060.0), 3.0 * base, 1e-12 * base);
  EXPECT_NEAR(gradient_phase_at(100e-6, 1.0, 0.2, 0.5, 1060.0), 2.0 * base, 1e-12 * base);
  EXPECT_NEAR(gradient_phase_at(50e-6, 1.0, 0.4, 0.5, 1060.0), base / 8.0, 1e-12 * base);
  EXPECT_THROW(gradient_phase_at(50e-6, 1.0, 0.0, 0.5, 1060.0), DomainError);
}

TEST(GradientPhase, InverseSquareVelocity) {
  MagneticScenario sc;
  sc.dipole_moment = 1.75;
  sc.dipole_distance = 0.2;
  const InterferometerGeometry geom;
  const auto li = lithium7();
  const double phi = gradient_phase(sc, 1, 1060.0, li, geom);
  EXPECT_GT(phi, 0.0);
  EXPECT_NEAR(gradient_phase(sc, 1, 2120.0, li, geom) / phi, 0.25, 1e-9);
  EXPECT_NEAR(gradient_phase(sc, 2, 1060.0, li, geom) / phi, 2.0, 1e-9);
}

TEST(SublevelVisibility, ZerosAndRevival) {
  EXPECT_DOUBLE_EQ(sublevel_visibility(0.0), 1.0);
  EXPECT_NEAR(sublevel_visibility(pi_ / 2.0), 0.0, 1e-15);
  EXPECT_NEAR(sublevel_visibility(pi_), 0.0, 1e-15);
  EXPECT_NEAR(sublevel_visibility(2.0 * pi_), 1.0, 1e-15);
}

TEST(SublevelVisibility, EvenPeriodicAndFactorized) {
  for (int i = 0; i <= 4000; ++i) {
    const double phi = -10.0 + 20.0 * i / 4000.0;
    const double v = sublevel_visibility(phi);
    EXPECT_NEAR(v, std::cos(phi) * (1.0 + std::cos(phi)) / 2.0, 1e-14);
    EXPECT_NEAR(v, sublevel_visibility(-phi), 1e-14);
    EXPECT_NEAR(v, sublevel_visibility(phi + 2.0 * pi_), 1e-13);
  }
}

TEST(SublevelVisibility, ExplicitSublevelSumMatches) {
  const auto levels = uniform_sublevels(lithium7());
  ASSERT_EQ(levels.size(), 8u);
  double total = 0.0;
  for (const auto& l : levels) total += l.population;
  EXPECT_NEAR(total, 1.0, 1e-15);
  for (int i = 0; i <= 200; ++i) {
    const double phi = 0.05 * i;
    EXPECT_NEAR(sublevel_visibility(phi, levels), sublevel_visibility(phi), 1e-14);
  }
}

TEST(AveragedVisibility, ZeroSpreadIsSublevelLaw) {
  for (int i = 0; i <= 100; ++i) {
    const double phi = 0.1 * i;
    EXPECT_DOUBLE_EQ(averaged_visibility(phi, 0.0).value, sublevel_visibility(phi));
    EXPECT_NEAR(averaged_visibility(phi, 1e-7).value, sublevel_visibility(phi), 1e-10);
  }
}

TEST(AveragedVisibility, FirstRevivalValue) {
  const double beta = 4.0 * pi_ * 0.111;
  const double expected = (2.0 + 4.0 * std::exp(-beta * beta / 4.0) + 2.0 * std::exp(-beta * beta)) / 8.0;
  const auto r = averaged_visibility(2.0 * pi_, 0.111);
  EXPECT_NEAR(r.value, expected, 1e-14);
  EXPECT_NEAR(r.value, 0.593, 0.001);
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_FALSE(averaged_visibility(2.0 * pi_, 0.35).diagnostics.empty());
}

// Measured gap between the closed form and the velocity average for phi_m <= 3 pi.
TEST(AveragedVisibility, ClosedFormAgainstVelocityQuadrature) {
  const std::pair<double, double> bounds[] = {{0.03, 0.008}, {0.08, 0.02}, {0.111, 0.03}, {0.15, 0.065}};
  for (const auto& [a, tol] : bounds) {
    const auto dist = VelocityDistribution::from_relative(1060.0, a, 48);
    for (int i = 0; i <= 60; ++i) {
      const double phi = 3.0 * pi_ * i / 60.0;
      EXPECT_NEAR(averaged_visibility(phi, a).value, averaged_visibility_quadrature(phi, dist), tol)
          << "a=" << a << " phi=" << phi;
    }
  }
}

TEST(RevivalCurve, LimitsAndMonotonicPeak) {
  const auto flat = revival_curve({0.0, 2.0 * pi_}, 1.0, 0.0, 0.62);
  EXPECT_DOUBLE_EQ(flat[0].visibility, 0.62);
  EXPECT_NEAR(flat[1].visibility, 0.62, 1e-12);
  double last = 1.0;
  for (double a : {0.0, 0.05, 0.1, 0.15, 0.2, 0.25}) {
    double peak = 0.0;
    for (const auto& p : revival_curve(sweep(4.5, 7.5, 601), 1.0, a, 1.0)) peak = std::max(peak, p.visibility);
    if (a > 0.0) EXPECT_LT(peak, 1.0);
    EXPECT_LE(peak, last + 1e-12);
    last = peak;
  }
}

TEST(VelocitySpread, NoiselessRecoveryIsExact) {
  std::vector<RevivalMeasurement> pts;
  for (const auto& p : revival_curve(sweep(0.1, 8.0, 80), 1.0, 0.111, 0.62)) {
    pts.push_back({p.current, p.visibility, 0.01});
  }
  const auto fit = extract_velocity_spread(pts);
  EXPECT_NEAR(fit.alpha_over_u, 0.111, 1e-6);
  EXPECT_NEAR(fit.k_phi, 1.0, 1e-6);
  EXPECT_NEAR(fit.v0, 0.62, 1e-6);
  EXPECT_LT(fit.chi2, 1e-8);
  EXPECT_GT(fit.sigma_alpha_over_u, 0.0);
}

TEST(VelocitySpread, SynthesizedSweepBelowNominalSpread) {
  const auto pts = synthesize_revival(sweep(0.1, 8.0, 80), 1.0, 0.111, 0.845, {}, 7);
  const auto fit = extract_velocity_spread(pts);
  EXPECT_LT(fit.alpha_over_u, 0.133);
  EXPECT_NEAR(fit.alpha_over_u, 0.111, 5.0 * fit.sigma_alpha_over_u + 1e-3);
  EXPECT_NEAR(fit.k_phi, 1.0, 0.02);
}

TEST(VelocitySpread, DegenerateSweepRejected) {
  std::vector<RevivalMeasurement> pts;
  for (const auto& p : revival_curve(sweep(0.0, 0.5, 20), 1.0, 0.111, 0.62)) pts.push_back({p.current, p.visibility, 0.01});
  EXPECT_THROW(extract_velocity_spread(pts), IllConditionedFit);
  pts.resize(5);
  EXPECT_THROW(extract_velocity_spread(pts), IllConditionedFit);
}
