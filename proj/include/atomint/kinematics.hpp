#pragma once

// Beam kinematics: matter wavelengths, Bragg angles, recoil scale, and the
// quadrature used for every velocity average in the library.

#include <atomint/constants.hpp>
#include <atomint/errors.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace atomint {

enum class BeamProfile { gaussian, flat_top };

struct LaserField {
  double wavelength = 670.961e-9;  // m
  double detuning = 0.0;           // rad/s, laser minus atomic frequency
  double power = 0.0;              // W
  double waist = 0.0;              // m; 1/e^2 radius (gaussian) or radius (flat top)
  BeamProfile profile = BeamProfile::gaussian;

  // Detunings closer than this many natural widths are flagged.
  static constexpr double min_detuning_widths = 50.0;

  void validate(const Species& species, Diagnostics* diag = nullptr) const {
    if (!(wavelength > 0.0)) throw DomainError("laser wavelength must be positive");
    if (!(waist > 0.0)) throw DomainError("laser waist must be positive");
    if (!(power >= 0.0)) throw DomainError("laser power must be non-negative");
    if (diag && std::abs(detuning) < min_detuning_widths * species.natural_width) {
      diag->warn("detuning is within 50 natural widths of resonance");
    }
  }
};

// Gaussian longitudinal velocity distribution P(v) ~ exp(-(v-u)^2/alpha^2).
struct VelocityDistribution {
  double mean = 1060.0;   // u, m/s
  double width = 0.0;     // alpha, m/s
  int quadrature_order = 16;

  static VelocityDistribution from_relative(double u, double alpha_over_u, int order = 16) {
    return {u, alpha_over_u * u, order};
  }

  [[nodiscard]] double relative_width() const { return width / mean; }

  void validate() const {
    if (!(mean > 0.0)) throw DomainError("mean velocity must be positive");
    if (!(width >= 0.0 && width < mean)) throw DomainError("velocity width must satisfy 0 <= alpha < u");
    if (quadrature_order < 1) throw DomainError("quadrature order must be >= 1");
  }
};

struct VelocityNode {
  double velocity;  // m/s
  double weight;
};

struct VelocityNodes {
  std::vector<VelocityNode> nodes;
  Diagnostics diagnostics;

  [[nodiscard]] auto begin() const { return nodes.begin(); }
  [[nodiscard]] auto end() const { return nodes.end(); }
  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

inline double de_broglie_wavelength(const Species& species, double v) {
  if (!(v > 0.0)) throw DomainError("de Broglie wavelength needs v > 0");
  return si::planck / (species.mass * v);
}

// Order-p Bragg incidence angle p * lambda_dB / lambda_L (small-angle).
inline double bragg_angle(const Species& species, double v, double laser_wavelength, int p) {
  if (p <= 0) throw DomainError("Bragg order must be >= 1");
  if (!(laser_wavelength > 0.0)) throw DomainError("laser wavelength must be positive");
  return p * de_broglie_wavelength(species, v) / laser_wavelength;
}

inline double bragg_angle(const Species& species, double v, const LaserField& laser, int p) {
  return bragg_angle(species, v, laser.wavelength, p);
}

inline double recoil_frequency(const Species& species, double laser_wavelength) {
  const double k = two_pi / laser_wavelength;
  return si::hbar * k * k / (2.0 * species.mass);
}

inline double recoil_frequency(const Species& species, const LaserField& laser) {
  return recoil_frequency(species, laser.wavelength);
}

// Gauss-Hermite nodes for weight exp(-x^2) via Golub-Welsch, weights normalized to 1.
inline std::vector<VelocityNode> gauss_hermite(int order) {
  if (order < 1) throw DomainError("quadrature order must be >= 1");
  const auto n = static_cast<Eigen::Index>(order);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  std::vector<VelocityNode> out(static_cast<std::size_t>(order));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v0 = solver.eigenvectors()(0, i);
    out[static_cast<std::size_t>(i)] = {solver.eigenvalues()(i), v0 * v0};
    total += v0 * v0;
  }
  for (auto& node : out) node.weight /= total;
  // Symmetrize: the exact rule is even, round-off is not.
  for (std::size_t i = 0, j = out.size() - 1; i < j; ++i, --j) {
    const double x = 0.5 * (out[j].velocity - out[i].velocity);
    const double w = 0.5 * (out[i].weight + out[j].weight);
    out[i] = {-x, w};
    out[j] = {x, w};
  }
  if (out.size() % 2 == 1) out[out.size() / 2].velocity = 0.0;
  return out;
}

// Quadrature nodes over P(v); nodes at v <= 0 are dropped and the rest renormalized.
inline VelocityNodes velocity_nodes(const VelocityDistribution& dist) {
  dist.validate();
  VelocityNodes result;
  if (dist.relative_width() > 0.5) {
    result.diagnostics.warn("alpha/u > 0.5: narrow-distribution closed forms are not valid");
  }
  if (dist.width == 0.0) {
    result.nodes.push_back({dist.mean, 1.0});
    return result;
  }
  double kept = 0.0;
  for (const auto& [x, w] : gauss_hermite(dist.quadrature_order)) {
    const double v = dist.mean + dist.width * x;
    if (v <= 0.0) continue;
    result.nodes.push_back({v, w});
    kept += w;
  }
  for (auto& node : result.nodes) node.weight /= kept;
  return result;
}

}  // namespace atomint
