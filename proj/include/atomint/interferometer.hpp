#pragma once

// Three-grating Mach-Zehnder: geometry, beam tree, port signals, and the
// closed-form visibility losses for tilted gratings and unequal spacings.

#include <atomint/bragg.hpp>
#include <atomint/constants.hpp>
#include <atomint/errors.hpp>
#include <atomint/kinematics.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <type_traits>
#include <vector>

namespace atomint {

// Element positions are distances from the nozzle along the beam axis (m).
struct InterferometerGeometry {
  double grating_period = 670.961e-9 / 2.0;  // a = lambda_L / 2
  double z_S0 = 0.485;
  double z_S1 = 1.265;
  double z_M1 = 1.415;
  double z_M2 = 2.020;
  double z_M3 = 2.625;
  double z_SD = 3.025;
  double z_D = 3.375;
  double e_0 = 20e-6;       // source slit width
  double e_1 = 12e-6;       // collimation slit width
  double e_D = 40e-6;       // detector slit width
  double h_D = 2.9e-3;      // useful detector height
  double source_to_detector = 0.0;  // L04; 0 selects z_SD - z_S0

  [[nodiscard]] double k_G() const { return two_pi / grating_period; }
  [[nodiscard]] double L12() const { return z_M2 - z_M1; }
  [[nodiscard]] double L23() const { return z_M3 - z_M2; }
  [[nodiscard]] double L34() const { return z_SD - z_M3; }
  [[nodiscard]] double L04() const {
    return source_to_detector > 0.0 ? source_to_detector : z_SD - z_S0;
  }

  void validate() const {
    if (!(grating_period > 0.0)) throw DomainError("grating period must be positive");
    if (!(L12() > 0.0) || !(L23() > 0.0)) throw DomainError("grating spacings must be positive");
    if (!(z_S0 < z_S1 && z_S1 < z_M1 && z_M3 < z_SD)) {
      throw DomainError("elements must be ordered S0 < S1 < M1 < M2 < M3 < SD");
    }
    if (!(e_0 >= 0.0 && e_1 >= 0.0 && e_D >= 0.0 && h_D > 0.0)) {
      throw DomainError("slit widths must be >= 0 and h_D > 0");
    }
  }

  static InterferometerGeometry with_grating_period_for(const Species& s) {
    InterferometerGeometry g;
    g.grating_period = s.transition_wavelength / 2.0;
    return g;
  }
};

inline double two_beam_visibility(double rho) {
  if (!(rho >= 0.0)) throw DomainError("intensity ratio must be >= 0");
  return 2.0 * std::sqrt(rho) / (1.0 + rho);
}

// Mean intensity, visibility and background of I = I_B + I_0 (1 + V cos phi).
struct FringeModel {
  double mean_intensity = 0.0;  // I_0, counts/s
  double visibility = 0.0;      // V
  double background = 0.0;      // I_B, counts/s

  [[nodiscard]] double rate(double phase) const {
    return background + mean_intensity * (1.0 + visibility * std::cos(phase));
  }

  void validate() const {
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw DomainError("visibility outside [0,1]");
    if (!(mean_intensity >= 0.0 && background >= 0.0)) throw DomainError("intensities must be >= 0");
  }
};

// Grating as seen by the beam tree: a two-level map with the position phase
// p k_G x_j attached to the diffraction terms.
inline TwoLevelMap with_position_phase(TwoLevelMap u, double phase) {
  const cplx e{std::cos(phase), std::sin(phase)};
  u[1][0] *= std::conj(e);  // 0 -> 1 : order +p
  u[0][1] *= e;             // 1 -> 0 : order -p
  return u;
}

struct BeamNode {
  std::array<int, 3> orders{};  // signed diffraction order at M1, M2, M3
  cplx amplitude{};
  int final_state = 0;          // 0: undeflected direction (B1 side), 1: deflected
  std::string label;            // "B1u", "B1l", "B2u", "B2l", or "stray"
  // Transverse offset from the undeflected ray, in units of the deflection
  // angle: offset(z) = deflection * lever(z).
  std::array<int, 3> state_after{};

  [[nodiscard]] double lever(double z, const InterferometerGeometry& g) const {
    const std::array<double, 4> zs{g.z_M1, g.z_M2, g.z_M3, 1e300};
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) {
      if (state_after[static_cast<std::size_t>(j)] == 1 && z > zs[static_cast<std::size_t>(j)]) {
        acc += std::min(z, zs[static_cast<std::size_t>(j) + 1]) - zs[static_cast<std::size_t>(j)];
      }
    }
    return acc;
  }
  [[nodiscard]] double position(double z, double deflection, const InterferometerGeometry& g) const {
    return deflection * lever(z, g);
  }
  [[nodiscard]] double direction(double z, double deflection, const InterferometerGeometry& g) const {
    int state = 0;
    const std::array<double, 3> zs{g.z_M1, g.z_M2, g.z_M3};
    for (int j = 0; j < 3; ++j) {
      if (z > zs[static_cast<std::size_t>(j)]) state = state_after[static_cast<std::size_t>(j)];
    }
    return deflection * state;
  }
};

struct BeamTree {
  std::vector<BeamNode> leaves;  // 8 leaves, history bits (M1, M2, M3), 1 = diffracted
  double total_flux = 0.0;
  double deflection = 0.0;       // 2 p theta_B, rad
  int order = 1;
  Diagnostics diagnostics;

  [[nodiscard]] const BeamNode& leaf(const std::string& label) const {
    for (const auto& l : leaves) {
      if (l.label == label) return l;
    }
    throw std::out_of_range("no beam labelled " + label);
  }

  // Coherent output port intensities at the current grating positions.
  [[nodiscard]] double port_b1() const { return std::norm(leaf("B1u").amplitude + leaf("B1l").amplitude); }
  [[nodiscard]] double port_b2() const { return std::norm(leaf("B2u").amplitude + leaf("B2l").amplitude); }
  [[nodiscard]] double stray_flux() const {
    double s = 0.0;
    for (const auto& l : leaves) {
      if (l.label == "stray") s += std::norm(l.amplitude);
    }
    return s;
  }
};

namespace detail {
inline double unitarity_defect(const TwoLevelMap& u) {
  double worst = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      cplx s = std::conj(u[0][static_cast<std::size_t>(a)]) * u[0][static_cast<std::size_t>(b)] +
               std::conj(u[1][static_cast<std::size_t>(a)]) * u[1][static_cast<std::size_t>(b)];
      worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}
}  // namespace detail

// Enumerates the 2^3 paths of the two-order beam tree for an atom entering in
// state 0. `deflection` is the angle 2 p theta_B between the two directions.
inline BeamTree enumerate_beams(const std::array<TwoLevelMap, 3>& gratings, int p, double deflection) {
  BeamTree tree;
  tree.order = p;
  tree.deflection = deflection;
  for (int j = 0; j < 3; ++j) {
    const double d = detail::unitarity_defect(gratings[static_cast<std::size_t>(j)]);
    if (d > 1e-12) {
      tree.diagnostics.warn("grating " + std::to_string(j + 1) + " is not unitary (defect " +
                            std::to_string(d) + ")");
    }
  }
  for (int bits = 0; bits < 8; ++bits) {
    BeamNode node;
    int state = 0;
    cplx amp = 1.0;
    for (int j = 0; j < 3; ++j) {
      const bool diffract = (bits >> (2 - j)) & 1;
      const int next = diffract ? 1 - state : state;
      amp *= gratings[static_cast<std::size_t>(j)][static_cast<std::size_t>(next)][static_cast<std::size_t>(state)];
      node.orders[static_cast<std::size_t>(j)] = diffract ? (state == 0 ? p : -p) : 0;
      node.state_after[static_cast<std::size_t>(j)] = next;
      state = next;
    }
    node.amplitude = amp;
    node.final_state = state;
    const int o1 = node.orders[0], o2 = node.orders[1], o3 = node.orders[2];
    if (o1 == p && o2 == -p && o3 == 0) node.label = "B1u";
    else if (o1 == 0 && o2 == p && o3 == -p) node.label = "B1l";
    else if (o1 == p && o2 == -p && o3 == p) node.label = "B2u";
    else if (o1 == 0 && o2 == p && o3 == 0) node.label = "B2l";
    else node.label = "stray";
    tree.total_flux += std::norm(amp);
    tree.leaves.push_back(std::move(node));
  }
  const double deficit = 1.0 - tree.total_flux;
  if (std::abs(deficit) > 1e-12) {
    tree.diagnostics.warn("beam tree flux deficit " + std::to_string(deficit));
  }
  return tree;
}

// Two-level maps of three gratings at exact Bragg incidence, with position phases.
inline std::array<TwoLevelMap, 3> grating_maps(const std::array<GratingConfig, 3>& g,
                                               const InterferometerGeometry& geom) {
  std::array<TwoLevelMap, 3> maps;
  for (std::size_t j = 0; j < 3; ++j) {
    const int p = g[j].order;
    maps[j] = with_position_phase(two_level_map(p, g[j].q, g[j].tau, 0.0),
                                  p * geom.k_G() * g[j].x_position);
  }
  return maps;
}

struct StrayCrossing {
  std::size_t stray_index;
  std::string main_beam;  // "B1" or "B2"
  double z;               // m from the nozzle
};

// Points downstream of M3 where a stray leaf crosses the centre line of B1 or B2.
inline std::vector<StrayCrossing> stray_crossings(const BeamTree& tree, const InterferometerGeometry& geom) {
  std::vector<StrayCrossing> out;
  const double z3 = geom.z_M3;
  for (std::size_t i = 0; i < tree.leaves.size(); ++i) {
    const auto& s = tree.leaves[i];
    if (s.label != "stray") continue;
    for (const char* main : {"B1u", "B2u"}) {
      const auto& m = tree.leaf(main);
      if (m.final_state == s.final_state) continue;  // parallel
      // lever(z) is affine beyond M3: lever(z) = lever(z3) + state * (z - z3)
      const double ds = s.lever(z3, geom), dm = m.lever(z3, geom);
      const double slope = static_cast<double>(s.final_state - m.final_state);
      const double z = z3 + (dm - ds) / slope;
      if (z > z3) out.push_back({i, std::string(main, 2), z});
    }
  }
  return out;
}

struct PortSignal {
  double b1 = 0.0;
  double b2 = 0.0;
  double phase = 0.0;  // p k_G (2 x2 - x1 - x3)
  double stray = 0.0;
};

// Port intensities for three gratings at positions x1, x2, x3 (aligned, Delta k_G = 0).
inline PortSignal fringe_signal(const std::array<GratingConfig, 3>& gratings,
                                const InterferometerGeometry& geom) {
  const int p = gratings[1].order;
  const auto tree = enumerate_beams(grating_maps(gratings, geom), p, 0.0);
  PortSignal s;
  s.b1 = tree.port_b1();
  s.b2 = tree.port_b2();
  s.stray = tree.stray_flux();
  s.phase = p * geom.k_G() *
            (2.0 * gratings[1].x_position - gratings[0].x_position - gratings[2].x_position);
  return s;
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

enum class Apodization { none, gaussian };

struct TiltOptions {
  Apodization apodization = Apodization::none;
  // RMS height of the gaussian weight; 0 selects h_D / sqrt(3), which matches
  // the curvature of the flat-profile law at zero tilt.
  double gaussian_rms = 0.0;
};

// Visibility fraction for rotations of the three mirrors about z.
// The flat-profile law uses sinc(Delta k_y h_D) exactly as it is usually quoted.
inline double tilt_visibility(double tilt1, double tilt2, double tilt3, int p,
                              const InterferometerGeometry& geom, const TiltOptions& opt = {}) {
  for (double t : {tilt1, tilt2, tilt3}) {
    if (!(std::abs(t) < 1e-3)) throw DomainError("tilt_visibility valid for |theta_z| < 1 mrad");
  }
  const double dk = p * geom.k_G() * (2.0 * tilt2 - tilt1 - tilt3);
  if (opt.apodization == Apodization::gaussian) {
    const double s = opt.gaussian_rms > 0.0 ? opt.gaussian_rms : geom.h_D / std::sqrt(3.0);
    return std::exp(-0.5 * dk * dk * s * s);
  }
  return std::abs(sinc(dk * geom.h_D));
}

// Visibility fraction for unequal grating spacings, Delta L = L23 - L12.
inline double mismatch_visibility(double delta_l, int p, const InterferometerGeometry& geom) {
  const double scale = p * geom.k_G() * delta_l / (2.0 * geom.L04());
  return std::abs(sinc(scale * geom.e_0) * sinc(scale * geom.e_D));
}

// Weighted sum of a velocity-dependent observable over the beam's quadrature
// nodes. Works for scalars, complex values and std::vector<double> curves.
template <typename F>
auto velocity_average(F&& observable, const VelocityDistribution& dist) {
  const auto nodes = velocity_nodes(dist);
  using R = std::decay_t<decltype(observable(dist.mean))>;
  R acc{};
  bool first = true;
  for (const auto& [v, w] : nodes) {
    R value = observable(v);
    if constexpr (std::is_arithmetic_v<R> || std::is_same_v<R, cplx>) {
      acc += w * value;
    } else {
      if (first) acc = R(value.size());
      for (std::size_t i = 0; i < value.size(); ++i) acc[i] += w * value[i];
    }
    first = false;
  }
  return acc;
}

}  // namespace atomint
