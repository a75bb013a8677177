#pragma once

#include <atomint/errors.hpp>

#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace atomint {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// SI 2019 exact values and CODATA 2018 recommended values.
namespace si {
inline constexpr double planck = 6.62607015e-34;             // J s
inline constexpr double hbar = planck / two_pi;              // J s
inline constexpr double bohr_magneton = 9.2740100783e-24;    // J/T
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // N/A^2
inline constexpr double atomic_mass_unit = 1.66053906660e-27;    // kg
inline constexpr double speed_of_light = 299792458.0;            // m/s
}  // namespace si

// Hyperfine level F with its Lande factor (nuclear moment neglected).
struct HyperfineLevel {
  double F;
  double g_F;
};

struct Species {
  std::string name;
  double mass = 0.0;                   // kg
  double transition_wavelength = 0.0;  // m, resonance line used for the standing waves
  double natural_width = 0.0;          // rad/s
  double saturation_intensity = 0.0;   // W/m^2
  double nuclear_spin = 0.0;
  double abundance = 0.0;              // natural isotopic fraction
  std::vector<HyperfineLevel> ground_levels;

  // Throws DomainError when a field violates its physical range.
  void validate() const {
    if (!(mass > 0.0)) throw DomainError(name + ": mass must be positive");
    if (!(transition_wavelength > 0.0)) throw DomainError(name + ": wavelength must be positive");
    if (!(natural_width > 0.0)) throw DomainError(name + ": natural width must be positive");
    if (!(saturation_intensity > 0.0)) throw DomainError(name + ": saturation intensity must be positive");
    if (!(abundance >= 0.0 && abundance <= 1.0)) throw DomainError(name + ": abundance outside [0,1]");
  }

  [[nodiscard]] double lande(double F) const {
    for (const auto& lvl : ground_levels) {
      if (lvl.F == F) return lvl.g_F;
    }
    throw DomainError(name + ": no ground hyperfine level F=" + std::to_string(F));
  }
};

// 7Li, D2 line. Mass from AME2016, line data from the standard lithium tables.
inline Species lithium7() {
  return Species{
      .name = "Li7",
      .mass = 7.0160034366 * si::atomic_mass_unit,
      .transition_wavelength = 670.961e-9,
      .natural_width = two_pi * 5.9e6,
      .saturation_intensity = 25.4,
      .nuclear_spin = 1.5,
      .abundance = 0.925,
      .ground_levels = {{1.0, -0.5}, {2.0, 0.5}},
  };
}

inline Species lithium6() {
  return Species{
      .name = "Li6",
      .mass = 6.0151228874 * si::atomic_mass_unit,
      .transition_wavelength = 670.977e-9,
      .natural_width = two_pi * 5.9e6,
      .saturation_intensity = 25.4,
      .nuclear_spin = 1.0,
      .abundance = 0.075,
      .ground_levels = {{0.5, -2.0 / 3.0}, {1.5, 2.0 / 3.0}},
  };
}

inline Species species_by_name(std::string_view name) {
  if (name == "Li7") return lithium7();
  if (name == "Li6") return lithium6();
  throw DomainError("unknown species '" + std::string(name) + "'");
}

}  // namespace atomint
