#pragma once

// Closed-form Bragg diffraction on one laser standing wave.
//
// Dimensionless units: depth q = V0 / (4 hbar w_rec), time tau = w_rec t_int.
// In these units the coupling between |k_x> and |k_x + 2 k_L> is exactly q,
// and the two-level reduction for order p couples |-p k_L> and |+p k_L> with
// q^p / d_p.

#include <atomint/constants.hpp>
#include <atomint/errors.hpp>
#include <atomint/kinematics.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <optional>

namespace atomint {

using cplx = std::complex<double>;

struct PhysicalGrating {
  LaserField laser;
  double velocity = 1060.0;  // m/s, transit velocity used for tau
};

struct GratingConfig {
  int order = 1;             // p
  double q = 0.0;
  double tau = 0.0;
  double tilt_y = 0.0;       // rad, rotation about y (changes Bragg incidence)
  double tilt_z = 0.0;       // rad, rotation about z (changes grating line direction)
  double x_position = 0.0;   // m
  std::optional<PhysicalGrating> physical;

  void validate() const {
    if (order < 1 || order > 4) throw UnsupportedOrder(order);
    if (!(q >= 0.0)) throw DomainError("grating depth q must be >= 0");
    if (!(tau >= 0.0)) throw DomainError("grating duration tau must be >= 0");
  }
};

// Coefficient d_p of the effective p-th order coupling; defined for p <= 3.
inline double bragg_coefficient(int p) {
  switch (p) {
    case 1: return 1.0;
    case 2: return 4.0;
    case 3: return 64.0;
    default: throw UnsupportedOrder(p);
  }
}

struct Dimensionless {
  double q;
  double tau;
  double potential_sign;  // +1 blue detuning (repulsive), -1 red
};

// Light-shift convention: V0 = hbar W1^2 / delta, W1^2 = gamma^2 I / (2 I_sat).
// Gaussian beams: I = 2P/(pi w0^2), t_int = sqrt(pi/2) w0 / v (equal-area flat top).
// Flat top of radius w0: I = P/(pi w0^2), t_int = 2 w0 / v.
inline Dimensionless dimensionless_from_physical(const LaserField& laser, const Species& species,
                                                 double v) {
  if (laser.detuning == 0.0) throw DomainError("resonant light (delta = 0) is outside the model");
  if (!(v > 0.0)) throw DomainError("velocity must be positive");
  laser.validate(species);
  const double area = pi * laser.waist * laser.waist;
  double intensity = 0.0;
  double t_int = 0.0;
  if (laser.profile == BeamProfile::gaussian) {
    intensity = 2.0 * laser.power / area;
    t_int = std::sqrt(pi / 2.0) * laser.waist / v;
  } else {
    intensity = laser.power / area;
    t_int = 2.0 * laser.waist / v;
  }
  const double gamma = species.natural_width;
  const double rabi_sq = gamma * gamma * intensity / (2.0 * species.saturation_intensity);
  const double v0_over_hbar = rabi_sq / laser.detuning;
  const double w_rec = recoil_frequency(species, laser);
  return {std::abs(v0_over_hbar) / (4.0 * w_rec), w_rec * t_int,
          laser.detuning > 0.0 ? 1.0 : -1.0};
}

inline GratingConfig grating_from_physical(int order, const LaserField& laser, const Species& species,
                                           double v) {
  const auto d = dimensionless_from_physical(laser, species, v);
  GratingConfig g;
  g.order = order;
  g.q = d.q;
  g.tau = d.tau;
  g.physical = PhysicalGrating{laser, v};
  return g;
}

// Pulse area q^p tau / d_p of the two-level Rabi rotation.
inline double pulse_area(int p, double q, double tau) {
  return std::pow(q, p) / bragg_coefficient(p) * tau;
}

inline double rabi_probability(const GratingConfig& g) {
  if (g.order < 1 || g.order > 3) throw UnsupportedOrder(g.order);
  const double s = std::sin(pulse_area(g.order, g.q, g.tau));
  return s * s;
}

enum class PulseTarget { mirror, splitter };

// Smallest q giving a 100 % mirror (area pi/2) or a 50-50 splitter (area pi/4).
inline double design_pulse(int p, double tau, PulseTarget target) {
  if (!(tau > 0.0)) throw DomainError("design_pulse needs tau > 0");
  const double area = target == PulseTarget::mirror ? pi / 2.0 : pi / 4.0;
  return std::pow(area * bragg_coefficient(p) / tau, 1.0 / p);
}

struct SpontaneousEmission {
  double probability;
  bool clamped;
};

inline SpontaneousEmission spontaneous_emission_probability(const GratingConfig& g,
                                                            const Species& species,
                                                            double detuning) {
  if (detuning == 0.0) throw DomainError("spontaneous emission estimate needs delta != 0");
  const double raw = g.q * g.tau * species.natural_width / std::abs(detuning);
  if (raw > 1.0) return {1.0, true};
  return {raw, false};
}

// Two-level propagator on {|0>: incident, |1>: diffracted by +2p k_L}, indexed u[to][from].
// `deviation` is the offset of the incident momentum from -p k_L in units of k_L,
// i.e. the incidence error divided by the first-order Bragg angle.
using TwoLevelMap = std::array<std::array<cplx, 2>, 2>;

inline TwoLevelMap two_level_map(int p, double q, double tau, double deviation) {
  const double omega = 2.0 * std::pow(q, p) / bragg_coefficient(p);
  const double delta = -4.0 * p * deviation;  // E_0 - E_1 in recoil units
  const double w = std::hypot(omega, delta);
  TwoLevelMap u{};
  if (w == 0.0) {
    u[0][0] = u[1][1] = 1.0;
    return u;
  }
  const double c = std::cos(0.5 * w * tau);
  const double s = std::sin(0.5 * w * tau) / w;
  const cplx i{0.0, 1.0};
  u[0][0] = c - i * s * delta;
  u[1][1] = c + i * s * delta;
  u[0][1] = u[1][0] = -i * s * omega;
  return u;
}

// Generalized Rabi formula; `angle_error` is the incidence error in rad.
inline double off_bragg_probability(const GratingConfig& g, double angle_error,
                                    const Species& species, double v) {
  if (g.order < 1 || g.order > 3) throw UnsupportedOrder(g.order);
  const double theta_b = bragg_angle(species, v, species.transition_wavelength, 1);
  const double x = angle_error / theta_b;
  const double omega = 2.0 * std::pow(g.q, g.order) / bragg_coefficient(g.order);
  const double delta = 4.0 * g.order * x;
  const double w2 = omega * omega + delta * delta;
  if (w2 == 0.0) return 0.0;
  const double s = std::sin(0.5 * std::sqrt(w2) * g.tau);
  return omega * omega / w2 * s * s;
}

}  // namespace atomint
