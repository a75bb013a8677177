#include <atomint/interferometer.hpp>
#include <atomint/slit_model.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace atomint;

namespace {

std::array<GratingConfig, 3> ideal(int p, double tau = 3.0) {
  const double qs = design_pulse(p, tau, PulseTarget::splitter);
  const double qm = design_pulse(p, tau, PulseTarget::mirror);
  return {GratingConfig{p, qs, tau}, GratingConfig{p, qm, tau}, GratingConfig{p, qs, tau}};
}

}  // namespace

TEST(TwoBeamVisibility, ValuesAndSymmetry) {
  EXPECT_DOUBLE_EQ(two_beam_visibility(1.0), 1.0);
  EXPECT_NEAR(two_beam_visibility(0.5), 2.0 * std::sqrt(0.5) / 1.5, 1e-15);
  EXPECT_EQ(two_beam_visibility(0.0), 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 1000; ++i) {
    const double rho = std::exp(u(rng));
    EXPECT_NEAR(two_beam_visibility(rho), two_beam_visibility(1.0 / rho), 1e-12);
  }
  EXPECT_THROW(two_beam_visibility(-1.0), DomainError);
}

TEST(Geometry, DefaultsFromLayout) {
  const InterferometerGeometry g;
  EXPECT_NEAR(g.L12(), 0.605, 1e-12);
  EXPECT_NEAR(g.L23(), 0.605, 1e-12);
  EXPECT_NEAR(g.L34(), 0.40, 1e-12);
  EXPECT_NEAR(g.L04(), 2.54, 1e-12);
  EXPECT_NEAR(g.grating_period, 335.48e-9, 0.01e-9);
  auto bad = g;
  bad.z_M2 = bad.z_M1;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(BeamTree, IdentityGratingsLeaveOneBeam) {
  const auto tree = enumerate_beams(grating_maps({GratingConfig{1, 0, 0}, {1, 0, 0}, {1, 0, 0}}, {}), 1, 1e-4);
  int lit = 0;
  for (const auto& l : tree.leaves) {
    if (std::norm(l.amplitude) > 0.0) {
      ++lit;
      EXPECT_EQ(l.orders, (std::array<int, 3>{0, 0, 0}));
      EXPECT_NEAR(std::norm(l.amplitude), 1.0, 1e-15);
      EXPECT_EQ(l.position(3.0, 1e-4, {}), 0.0);
    }
  }
  EXPECT_EQ(lit, 1);
  EXPECT_TRUE(tree.diagnostics.empty());
}

TEST(BeamTree, IdealMachZehnderHasNoStrayFlux) {
  for (int p = 1; p <= 3; ++p) {
    const auto tree = enumerate_beams(grating_maps(ideal(p), {}), p, 1e-4);
    EXPECT_EQ(tree.leaves.size(), 8u);
    EXPECT_NEAR(tree.total_flux, 1.0, 1e-12);
    EXPECT_NEAR(tree.stray_flux(), 0.0, 1e-12);
    EXPECT_NEAR(tree.port_b1() + tree.port_b2(), 1.0, 1e-12);
  }
}

TEST(BeamTree, FluxConservedForRandomUnitaryGratings) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    std::array<TwoLevelMap, 3> maps;
    for (auto& m : maps) m = two_level_map(1, u(rng), 2.0 * u(rng), u(rng) - 1.0);
    const auto tree = enumerate_beams(maps, 1, 1e-4);
    EXPECT_NEAR(tree.total_flux, 1.0, 1e-12);
    EXPECT_TRUE(tree.diagnostics.empty());
  }
}

TEST(BeamTree, NonUnitaryMapWarnsWithDeficit) {
  auto maps = grating_maps(ideal(1), {});
  maps[1][1][0] *= 0.9;
  maps[1][0][0] *= 0.9;
  const auto tree = enumerate_beams(maps, 1, 1e-4);
  EXPECT_FALSE(tree.diagnostics.empty());
  EXPECT_LT(tree.total_flux, 1.0);
}

TEST(BeamTree, DetectorSlitSeparationAndStrayCrossings) {
  const auto li = lithium7();
  const InterferometerGeometry g;
  const double tb = bragg_angle(li, 1060.0, li.transition_wavelength, 1);
  const auto tree = enumerate_beams(grating_maps(ideal(1), g), 1, 2.0 * tb);
  const double sep = tree.leaf("B2u").position(g.z_SD, 2.0 * tb, g) - tree.leaf("B1u").position(g.z_SD, 2.0 * tb, g);
  EXPECT_NEAR(std::abs(sep), 2.0 * tb * g.L34(), 1e-15);
  EXPECT_NEAR(std::abs(sep), 64e-6, 1e-6);
  // Upper and lower paths recombine on M3.
  EXPECT_NEAR(tree.leaf("B1u").position(g.z_M3, 1.0, g), tree.leaf("B1l").position(g.z_M3, 1.0, g), 1e-12);
  const auto crossings = stray_crossings(tree, g);
  ASSERT_FALSE(crossings.empty());
  for (const auto& c : crossings) {
    const double d = c.z - g.z_M3;
    EXPECT_TRUE(std::abs(d - g.L12()) < 1e-9 || std::abs(d - g.L23()) < 1e-9) << d;
  }
}

TEST(FringeSignal, PeriodCommonModeAndComplementarity) {
  const InterferometerGeometry g;
  for (int p = 1; p <= 3; ++p) {
    auto gr = ideal(p);
    const auto base = fringe_signal(gr, g);
    EXPECT_NEAR(base.b1 + base.b2, 1.0, 1e-12);
    auto shifted = gr;
    shifted[2].x_position += g.grating_period / p;  // lambda_L / (2p)
    EXPECT_NEAR(fringe_signal(shifted, g).b1, base.b1, 1e-9);
    auto common = gr;
    for (auto& x : common) x.x_position += 1.234e-7;
    EXPECT_NEAR(fringe_signal(common, g).b1, base.b1, 1e-9);
    auto half = gr;
    half[2].x_position += 0.5 * g.grating_period / p;
    EXPECT_NEAR(fringe_signal(half, g).b1, base.b2, 1e-9);
    for (int k = 0; k < 16; ++k) {
      auto h = gr;
      h[2].x_position = k * 0.07e-6;
      const auto s = fringe_signal(h, g);
      EXPECT_NEAR(s.b1 + s.b2, 1.0, 1e-12);
    }
  }
}

TEST(FringeSignal, PhaseIndependentOfVelocity) {
  const InterferometerGeometry g;
  auto gr = ideal(1);
  gr[0].x_position = 3e-8;
  gr[2].x_position = -5e-8;
  const double phi = fringe_signal(gr, g).phase;
  EXPECT_NEAR(phi, g.k_G() * (0.0 - 3e-8 + 5e-8), 1e-12);
}

TEST(Tilt, LawValuesSymmetryAndZero) {
  const InterferometerGeometry g;
  EXPECT_EQ(tilt_visibility(0, 0, 0, 1, g), 1.0);
  for (int p = 1; p <= 3; ++p) {
    const double zero = pi / (2.0 * p * g.k_G() * g.h_D);
    EXPECT_NEAR(tilt_visibility(0, zero, 0, p, g), 0.0, 1e-12);
    EXPECT_NEAR(tilt_visibility(0, 0.3 * zero, 0, p, g), tilt_visibility(0, -0.3 * zero, 0, p, g), 1e-15);
  }
  // Depends on the mirrors only through 2 t2 - t1 - t3.
  EXPECT_NEAR(tilt_visibility(1e-6, 2e-6, 3e-6, 1, g), 1.0, 1e-12);
  EXPECT_THROW(tilt_visibility(0, 2e-3, 0, 1, g), DomainError);
}

TEST(Tilt, SecondOrderFallsTwiceAsFast) {
  const InterferometerGeometry g;
  const double t = 1e-7;
  const double s1 = 1.0 - tilt_visibility(0, t, 0, 1, g);
  const double s2 = 1.0 - tilt_visibility(0, t / 2.0, 0, 2, g);
  EXPECT_NEAR(s1, s2, 1e-12);
}

TEST(Tilt, GaussianApodizationMatchesCurvatureAndHasNoZeros) {
  const InterferometerGeometry g;
  TiltOptions opt;
  opt.apodization = Apodization::gaussian;
  const double t = 2e-7;
  EXPECT_NEAR(1.0 - tilt_visibility(0, t, 0, 1, g, opt), 1.0 - tilt_visibility(0, t, 0, 1, g), 2e-3);
  const double zero = pi / (2.0 * g.k_G() * g.h_D);
  EXPECT_GT(tilt_visibility(0, zero, 0, 1, g, opt), 1e-3);
}

TEST(Mismatch, LawValuesAndCompression) {
  const InterferometerGeometry g;
  EXPECT_EQ(mismatch_visibility(0.0, 1, g), 1.0);
  const double zero = 2.0 * pi * g.L04() / (g.k_G() * g.e_D);
  EXPECT_NEAR(mismatch_visibility(zero, 1, g), 0.0, 1e-12);
  for (double d : {1e-4, 7e-4, 2e-3}) {
    EXPECT_NEAR(mismatch_visibility(d, 2, g), mismatch_visibility(2.0 * d, 1, g), 1e-14);
    EXPECT_NEAR(mismatch_visibility(d, 1, g), mismatch_visibility(-d, 1, g), 1e-15);
  }
}

TEST(VelocityAverage, ReducesAndPreserves) {
  const auto f = [](double v) { return std::sin(v / 300.0); };
  EXPECT_EQ(velocity_average(f, {1060.0, 0.0}), f(1060.0));
  EXPECT_NEAR(velocity_average([](double) { return 0.37; }, VelocityDistribution::from_relative(1060.0, 0.133)), 0.37,
              1e-14);
  const auto vec = velocity_average([](double v) { return std::vector<double>{v, 2.0 * v}; },
                                    VelocityDistribution::from_relative(1060.0, 0.133));
  EXPECT_NEAR(vec[1], 2.0 * vec[0], 1e-9);
}

TEST(SlitModel, DetectorWidthRegimes) {
  SlitModelConfig cfg;
  cfg.gratings = ideal(1, 3.744);
  cfg.beam = VelocityDistribution::from_relative(1060.0, 0.133, 8);
  cfg.source_samples = 24;
  cfg.collimation_samples = 24;
  const auto li = lithium7();
  const InterferometerGeometry g;
  const auto prof = detector_plane_profile(li, g, cfg);
  EXPECT_NEAR(prof.b1_b2_separation, 64e-6, 1e-6);
  const auto tiny = prof.read(1e-7);
  EXPECT_LT(tiny.mean_intensity, 1e-2 * prof.read(40e-6).mean_intensity);
  const double v5 = prof.read(5e-6).visibility, v60 = prof.read(60e-6).visibility;
  EXPECT_GT(v5, 0.85);
  EXPECT_LT(std::abs(v60 - v5) / v5, 0.05);
  EXPECT_LT(prof.read(150e-6).visibility, 0.5 * v5);
  // Growth slows once B1 is fully collected.
  const double initial = prof.read(10e-6).mean_intensity / 10e-6;
  const double later = (prof.read(133e-6).mean_intensity - prof.read(123e-6).mean_intensity) / 10e-6;
  EXPECT_LT(later, 0.75 * initial);
  EXPECT_GT(later, 0.3 * initial);
}

TEST(SlitModel, CollimationWidthBands) {
  SlitModelConfig cfg;
  cfg.gratings = ideal(1, 3.744);
  cfg.beam = VelocityDistribution::from_relative(1060.0, 0.133, 6);
  cfg.source_samples = 16;
  cfg.collimation_samples = 16;
  const auto r = slit_scan(SlitAxis::collimation, {5e-6, 20e-6, 50e-6, 90e-6}, lithium7(), {}, cfg);
  EXPECT_LT(r[0].mean_intensity, r[1].mean_intensity);
  EXPECT_LT(r[1].mean_intensity, r[2].mean_intensity);
  EXPECT_GT(r[1].visibility, r[2].visibility);
}

TEST(SlitModel, MonteCarloAgreesWithGrid) {
  SlitModelConfig cfg;
  cfg.gratings = ideal(1, 3.744);
  cfg.beam = VelocityDistribution::from_relative(1060.0, 0.133, 6);
  cfg.source_samples = 24;
  cfg.collimation_samples = 24;
  const auto grid = detector_plane_profile(lithium7(), {}, cfg).read(40e-6);
  cfg.sampling = RaySampling::monte_carlo;
  cfg.source_samples = 96;
  cfg.collimation_samples = 96;
  cfg.seed = 4;
  const auto mc = detector_plane_profile(lithium7(), {}, cfg).read(40e-6);
  EXPECT_NEAR(mc.visibility, grid.visibility, 0.02);
  EXPECT_NEAR(mc.mean_intensity / grid.mean_intensity, 1.0, 0.05);
  const auto again = detector_plane_profile(lithium7(), {}, cfg).read(40e-6);
  EXPECT_EQ(again.visibility, mc.visibility);
}
