#pragma once

// Geometric (straight-ray) model of the collimated beam through the three
// gratings, used to study how slit widths trade signal against visibility.
//
// Rays are defined by one point in S0 and one in S1. Each ray runs through the
// two-order beam tree with the off-Bragg two-level map set by its incidence
// error, and every leaf lands at a transverse position in the detector-slit
// plane. The B1 and B2 pairs interfere; everything else adds as intensity.
// For a sweep of x3 the signal at each landing point is A + 2 Re(C e^{-i phi}),
// so a slit collects I_0 = sum A and V = |sum C| / sum A.

#include <atomint/bragg.hpp>
#include <atomint/interferometer.hpp>
#include <atomint/kinematics.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace atomint {

enum class RaySampling { grid, monte_carlo };

struct SlitModelConfig {
  std::array<GratingConfig, 3> gratings;
  VelocityDistribution beam;
  int source_samples = 48;
  int collimation_samples = 48;
  RaySampling sampling = RaySampling::grid;
  std::uint64_t seed = 0;
};

struct DetectorPlaneProfile {
  struct Hit {
    double distance;  // |x - slit centre|
    double incoherent;
    cplx coherent;
  };
  std::vector<Hit> hits;  // sorted by distance
  double center = 0.0;    // slit centre (nominal B1 position)
  double b1_b2_separation = 0.0;
  double total_flux = 0.0;

  struct Reading {
    double width;
    double mean_intensity;
    double visibility;
  };

  // Slit of full width `width` centred on B1.
  [[nodiscard]] Reading read(double width) const {
    double a = 0.0;
    cplx c = 0.0;
    for (const auto& h : hits) {
      if (h.distance > 0.5 * width) break;
      a += h.incoherent;
      c += h.coherent;
    }
    return {width, a, a > 0.0 ? std::abs(c) / a : 0.0};
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::vector<double> slit_points(double width, int n, RaySampling mode, std::mt19937_64& rng) {
  std::vector<double> xs;
  if (width <= 0.0 || n < 1) return xs;
  if (mode == RaySampling::grid) {
    for (int i = 0; i < n; ++i) xs.push_back(width * ((i + 0.5) / n - 0.5));
  } else {
    std::uniform_real_distribution<double> u(-0.5 * width, 0.5 * width);
    for (int i = 0; i < n; ++i) xs.push_back(u(rng));
  }
  return xs;
}

}  // namespace detail

// Per-ray landing points in the detector-slit plane. Flux unit: one ray
// bundle of 1 um x 1 um through S0 x S1 at unit velocity weight.
inline DetectorPlaneProfile detector_plane_profile(const Species& species,
                                                   const InterferometerGeometry& geom,
                                                   const SlitModelConfig& cfg) {
  geom.validate();
  const int p = cfg.gratings[1].order;
  const double u = cfg.beam.mean;
  const double lambda = species.transition_wavelength;
  const double theta_u = bragg_angle(species, u, lambda, 1);
  const double collimation_length = geom.z_S1 - geom.z_S0;

  DetectorPlaneProfile profile;
  profile.center = 2.0 * p * theta_u * geom.L12();
  profile.b1_b2_separation = 2.0 * p * theta_u * geom.L34();

  std::mt19937_64 rng(detail::splitmix64(cfg.seed));
  const auto xa = detail::slit_points(geom.e_0, cfg.source_samples, cfg.sampling, rng);
  const auto xb = detail::slit_points(geom.e_1, cfg.collimation_samples, cfg.sampling, rng);
  if (xa.empty() || xb.empty()) return profile;
  const double ray_weight = (geom.e_0 / static_cast<double>(xa.size())) *
                            (geom.e_1 / static_cast<double>(xb.size())) * 1e12;

  const auto nodes = velocity_nodes(cfg.beam);
  for (const auto& [v, wv] : nodes) {
    const double theta_b = bragg_angle(species, v, lambda, 1);
    const double deflection = 2.0 * p * theta_b;
    for (double a : xa) {
      for (double b : xb) {
        const double angle = (b - a) / collimation_length;
        const double x_sd = a + angle * (geom.z_SD - geom.z_S0);
        std::array<TwoLevelMap, 3> maps;
        for (std::size_t j = 0; j < 3; ++j) {
          const auto& g = cfg.gratings[j];
          const double dev = (angle + g.tilt_y + p * (theta_b - theta_u)) / theta_b;
          maps[j] = two_level_map(p, g.q, g.tau, dev);
        }
        const auto tree = enumerate_beams(maps, p, deflection);
        const double w = wv * ray_weight;
        profile.total_flux += w;
        auto land = [&](const BeamNode& n) { return x_sd + n.position(geom.z_SD, deflection, geom); };
        for (const auto& leaf : tree.leaves) {
          if (leaf.label == "stray") {
            profile.hits.push_back({std::abs(land(leaf) - profile.center), w * std::norm(leaf.amplitude), 0.0});
          }
        }
        // Lower-path leaves pick up exp(+i phi3) from M3 relative to the upper ones
        // for B1; for B2 the upper leaf carries exp(-i phi3). Both give C = a_u conj(a_l).
        for (const auto& [up, low] : {std::pair{"B1u", "B1l"}, std::pair{"B2u", "B2l"}}) {
          const auto& nu = tree.leaf(up);
          const auto& nl = tree.leaf(low);
          const double x = 0.5 * (land(nu) + land(nl));
          profile.hits.push_back({std::abs(x - profile.center),
                                  w * (std::norm(nu.amplitude) + std::norm(nl.amplitude)),
                                  2.0 * w * nu.amplitude * std::conj(nl.amplitude)});
        }
      }
    }
  }
  std::sort(profile.hits.begin(), profile.hits.end(),
            [](const auto& l, const auto& r) { return l.distance < r.distance; });
  return profile;
}

enum class SlitAxis { detector, collimation };

// I_0 and V against the detector slit width e_D or the collimation slit width e_1.
inline std::vector<DetectorPlaneProfile::Reading> slit_scan(SlitAxis axis, const std::vector<double>& widths,
                                                            const Species& species,
                                                            const InterferometerGeometry& geom,
                                                            const SlitModelConfig& cfg) {
  std::vector<DetectorPlaneProfile::Reading> out;
  if (axis == SlitAxis::detector) {
    const auto profile = detector_plane_profile(species, geom, cfg);
    for (double w : widths) out.push_back(profile.read(w));
    return out;
  }
  for (std::size_t i = 0; i < widths.size(); ++i) {
    auto g = geom;
    g.e_1 = widths[i];
    auto c = cfg;
    c.seed = detail::splitmix64(cfg.seed + i);
    auto r = detector_plane_profile(species, g, c).read(geom.e_D);
    r.width = widths[i];
    out.push_back(r);
  }
  return out;
}

}  // namespace atomint
