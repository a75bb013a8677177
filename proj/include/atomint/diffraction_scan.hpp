#pragma once

// Transmitted (order 0) intensity of a collimated beam through one standing
// wave while the mirror is rotated about y.

#include <atomint/bragg.hpp>
#include <atomint/kinematics.hpp>
#include <atomint/propagator.hpp>

#include <cmath>
#include <vector>

namespace atomint {

// Angular distribution defined by two slits: uniform in position over both.
struct Collimation {
  double source_width = 0.0;       // m
  double collimation_width = 0.0;  // m
  double distance = 0.78;          // m between the slits
  int samples = 7;                 // per slit

  struct Ray {
    double angle;
    double weight;
  };

  [[nodiscard]] std::vector<Ray> rays() const {
    const auto positions = [this](double width) {
      std::vector<double> xs;
      if (width <= 0.0) return std::vector<double>{0.0};
      for (int i = 0; i < samples; ++i) xs.push_back(width * ((i + 0.5) / samples - 0.5));
      return xs;
    };
    const auto a = positions(source_width);
    const auto b = positions(collimation_width);
    std::vector<Ray> out;
    const double w = 1.0 / static_cast<double>(a.size() * b.size());
    for (double xa : a) {
      for (double xb : b) out.push_back({(xb - xa) / distance, w});
    }
    return out;
  }
};

enum class ScanModel { propagator, closed_form };

struct DiffractionScanConfig {
  double theta_min = -3e-4;  // rad, mirror rotation
  double theta_max = 4e-4;
  int points = 141;
  double q = 0.0;
  double tau = 0.0;
  PulseProfile profile = PulseProfile::square;
  ScanModel model = ScanModel::propagator;
  int truncation = 4;         // minimum N; raised to cover the incidence momentum
};

struct ScanPoint {
  double theta_y;
  double transmitted;
};

namespace detail {
// Order-0 population for incidence momentum kx (units of k_L).
inline double transmitted_fraction(double kx, const DiffractionScanConfig& cfg) {
  if (cfg.q == 0.0 || cfg.tau == 0.0) return 1.0;
  if (cfg.model == ScanModel::closed_form) {
    // Nearest Bragg order; the two-level model transfers population out of order 0.
    const int p = static_cast<int>(std::lround(std::abs(kx)));
    if (p < 1 || p > 3) return 1.0;
    const double deviation = std::abs(kx) - p;
    const auto u = two_level_map(p, cfg.q, cfg.tau, deviation);
    return std::norm(u[0][0]);
  }
  const int n = std::max(cfg.truncation, minimum_truncation(kx) + 1);
  PropagatorOptions opt;
  opt.max_truncation = n + 12;
  return bloch_propagate(kx, cfg.q, cfg.tau, n, cfg.profile, opt).population(0);
}
}  // namespace detail

// Transmitted fraction vs mirror angle, averaged over velocity nodes and rays.
// Incidence theta maps to k_x = theta / theta_B1(v), so order p is at p theta_B1.
inline std::vector<ScanPoint> diffraction_scan(const Species& species, const VelocityDistribution& beam,
                                               const Collimation& collimation,
                                               const DiffractionScanConfig& cfg) {
  if (cfg.points < 2) throw DomainError("diffraction scan needs at least 2 points");
  const auto nodes = velocity_nodes(beam);
  const auto rays = collimation.rays();
  std::vector<ScanPoint> out;
  out.reserve(static_cast<std::size_t>(cfg.points));
  for (int i = 0; i < cfg.points; ++i) {
    const double theta = cfg.theta_min + (cfg.theta_max - cfg.theta_min) * i / (cfg.points - 1);
    double acc = 0.0;
    for (const auto& [v, wv] : nodes) {
      const double theta_b = bragg_angle(species, v, species.transition_wavelength, 1);
      for (const auto& ray : rays) {
        acc += wv * ray.weight * detail::transmitted_fraction((theta + ray.angle) / theta_b, cfg);
      }
    }
    out.push_back({theta, acc});
  }
  return out;
}

}  // namespace atomint
