#pragma once

// Zeeman phases along the two arms, the phase splay between hyperfine
// sublevels caused by a field gradient, and the resulting visibility loss and
// revivals, with and without velocity averaging.

#include <atomint/constants.hpp>
#include <atomint/errors.hpp>
#include <atomint/interferometer.hpp>
#include <atomint/kinematics.hpp>
#include <atomint/least_squares.hpp>
#include <atomint/signal.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace atomint {

// Field modulus sampled along the path; linear between samples.
struct FieldProfile {
  std::vector<double> s;  // m
  std::vector<double> b;  // T

  static FieldProfile uniform(double field, double length) { return {{0.0, length}, {field, field}}; }

  void validate() const {
    if (s.size() != b.size() || s.size() < 2) throw DomainError("field profile needs >= 2 matching samples");
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!(b[i] > 0.0)) throw DomainError("field modulus must stay > 0 along the path");
      if (i > 0 && !(s[i] > s[i - 1])) throw DomainError("field profile abscissae must increase");
    }
  }

  [[nodiscard]] double line_integral() const {
    double acc = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) acc += 0.5 * (b[i] + b[i - 1]) * (s[i] - s[i - 1]);
    return acc;
  }
};

struct MagneticScenario {
  FieldProfile field = FieldProfile::uniform(4e-5, 1.21);
  double dipole_moment = 0.0;   // A m^2, along x
  double dipole_distance = 7.5e-3;  // m from the atomic paths
  double dipole_z = 2.020;      // m from the nozzle, where the arm separation is taken
  double g_F = 0.5;             // |g_F| of the sublevels (opposite signs for F=1, F=2 in 7Li)

  void validate() const {
    field.validate();
    if (!(dipole_distance > 0.0)) throw DomainError("dipole distance must be positive");
  }
};

// Adiabatic Zeeman phase of (F, M_F) along one path.
inline double zeeman_phase(const MagneticScenario& sc, const Species& species, double F, double m_f,
                           double v) {
  if (!(v > 0.0)) throw DomainError("zeeman_phase needs v > 0");
  sc.field.validate();
  return species.lande(F) * si::bohr_magneton * m_f / (si::hbar * v) * sc.field.line_integral();
}

// Integral of sqrt(3 cos^2 t + 1) cos t over [-pi/2, pi/2], adaptive Simpson.
inline double dipole_angular_integral(double tol = 1e-13) {
  const auto f = [](double t) { return std::sqrt(3.0 * std::cos(t) * std::cos(t) + 1.0) * std::cos(t); };
  const std::function<double(double, double, double, double, double, double, int)> step =
      [&](double a, double b, double fa, double fm, double fb, double whole, int depth) -> double {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
      return left + right + (left + right - whole) / 15.0;
    }
    return step(a, m, fa, flm, fm, left, depth - 1) + step(m, b, fm, frm, fb, right, depth - 1);
  };
  const double a = -pi / 2.0, b = pi / 2.0;
  const double fa = f(a), fb = f(b), fm = f(0.0);
  return step(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 40);
}

// Arm separation at axial position z for order p and velocity v (linear
// opening between M1 and M2, closing between M2 and M3).
inline double arm_separation(double z, int p, double v, const Species& species,
                             const InterferometerGeometry& geom) {
  const double deflection = 2.0 * bragg_angle(species, v, species.transition_wavelength, p);
  if (z <= geom.z_M1 || z >= geom.z_M3) return 0.0;
  if (z <= geom.z_M2) return deflection * (z - geom.z_M1);
  return deflection * (geom.z_M3 - z) * geom.L12() / geom.L23();
}

// Gradient phase for an explicit arm separation (m).
inline double gradient_phase_at(double separation, double dipole_moment, double dipole_distance,
                                double g_F, double v) {
  if (!(v > 0.0)) throw DomainError("gradient_phase needs v > 0");
  if (!(dipole_distance > 0.0)) throw DomainError("dipole distance must be positive");
  const double gradient_integral = si::vacuum_permeability * dipole_moment /
                                   (two_pi * std::pow(dipole_distance, 3)) * dipole_angular_integral();
  return g_F * si::bohr_magneton / (si::hbar * v) * separation * gradient_integral;
}

// Sublevel phase splay phi for order p at velocity v; scales as v^-2.
inline double gradient_phase(const MagneticScenario& sc, int p, double v, const Species& species,
                             const InterferometerGeometry& geom) {
  return gradient_phase_at(arm_separation(sc.dipole_z, p, v, species, geom), sc.dipole_moment,
                           sc.dipole_distance, sc.g_F, v);
}

struct Sublevel {
  double F;
  double m_f;
  double sign;        // sign of g_F
  double population;
};

// Ground sublevels of a species with equal populations (8 for 7Li).
inline std::vector<Sublevel> uniform_sublevels(const Species& species) {
  std::vector<Sublevel> out;
  for (const auto& lvl : species.ground_levels) {
    for (double m = -lvl.F; m <= lvl.F + 1e-9; m += 1.0) out.push_back({lvl.F, m, lvl.g_F > 0 ? 1.0 : -1.0, 0.0});
  }
  for (auto& s : out) s.population = 1.0 / static_cast<double>(out.size());
  return out;
}

// Signed contrast (fraction of V0) of the sublevel-summed fringes.
inline double sublevel_visibility(double phi, const std::vector<Sublevel>& levels) {
  double acc = 0.0;
  for (const auto& l : levels) acc += l.population * std::cos(l.sign * l.m_f * phi);
  return acc;
}

// Equal populations over the 8 sublevels of 7Li: (2 + 4 cos phi + 2 cos 2 phi) / 8.
inline double sublevel_visibility(double phi) {
  return (2.0 + 4.0 * std::cos(phi) + 2.0 * std::cos(2.0 * phi)) / 8.0;
}

struct AveragedVisibility {
  double value;
  Diagnostics diagnostics;
};

// Closed form: cos(k phi) -> cos(k phi_m) exp(-k^2 beta^2 / 4), beta = 2 phi_m alpha/u.
inline AveragedVisibility averaged_visibility(double phi_m, double alpha_over_u) {
  AveragedVisibility out{0.0, {}};
  if (alpha_over_u > 0.3) out.diagnostics.warn("alpha/u > 0.3: use the velocity-quadrature average");
  const double beta = 2.0 * phi_m * alpha_over_u;
  const double b2 = beta * beta;
  out.value = (2.0 + 4.0 * std::cos(phi_m) * std::exp(-b2 / 4.0) + 2.0 * std::cos(2.0 * phi_m) * std::exp(-b2)) / 8.0;
  return out;
}

// Direct average of the sublevel law over velocity nodes with phi(v) = phi_m (u/v)^2.
inline double averaged_visibility_quadrature(double phi_m, const VelocityDistribution& dist) {
  return velocity_average([&](double v) {
    const double r = dist.mean / v;
    return sublevel_visibility(phi_m * r * r);
  }, dist);
}

struct RevivalPoint {
  double current;     // A
  double visibility;  // measured-style |V|, absolute
};

// Visibility against coil current with phi_m = k_phi I; measured contrast is |V|.
inline std::vector<RevivalPoint> revival_curve(const std::vector<double>& currents, double k_phi,
                                               double alpha_over_u, double v0) {
  std::vector<RevivalPoint> out;
  out.reserve(currents.size());
  for (double i : currents) {
    out.push_back({i, v0 * std::abs(averaged_visibility(k_phi * i, alpha_over_u).value)});
  }
  return out;
}

struct RevivalMeasurement {
  double current;     // A
  double visibility;
  double sigma;       // > 0
};

struct RevivalCounting {
  double mean_intensity = 23710.0;  // counts/s
  double background = 2000.0;       // counts/s
  double counting_time = 0.1;       // s
  int fringe_points = 200;          // bins per trace, three fringes
};

// Revival data as an experiment would produce it: at every current a
// Poisson fringe trace is synthesized and fitted for |V| and its sigma.
// The fringe phase law is taken as calibrated.
inline std::vector<RevivalMeasurement> synthesize_revival(const std::vector<double>& currents, double k_phi,
                                                          double alpha_over_u, double v0,
                                                          const RevivalCounting& c, std::uint64_t seed) {
  if (c.fringe_points < 8) throw DomainError("revival traces need at least 8 bins");
  const PhaseLaw phase{{0.0, two_pi * 3.0 / (c.fringe_points - 1)}};
  std::vector<double> drive;
  for (int i = 0; i < c.fringe_points; ++i) drive.push_back(i);
  std::vector<RevivalMeasurement> out;
  for (std::size_t i = 0; i < currents.size(); ++i) {
    const double v = std::min(1.0, v0 * std::abs(averaged_visibility(k_phi * currents[i], alpha_over_u).value));
    const FringeModel m{c.mean_intensity, v, c.background};
    const auto trace = synthesize_counts(m, drive, phase, c.counting_time, detail::splitmix64(seed + i));
    FringeFitOptions fo;
    fo.known_background = c.background;
    fo.fixed_phase = phase;
    const auto fit = fit_fringes(trace, fo);
    out.push_back({currents[i], fit.visibility, fit.sigma("V")});
  }
  return out;
}

struct VelocitySpreadFit {
  double alpha_over_u = 0.0, sigma_alpha_over_u = 0.0;
  double k_phi = 0.0, sigma_k_phi = 0.0;  // rad/A
  double v0 = 0.0, sigma_v0 = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double chi2 = 0.0;
  int dof = 0;
};

// Weighted fit of V0 |avg(k_phi I, alpha/u)| to measured revival data.
inline VelocitySpreadFit extract_velocity_spread(const std::vector<RevivalMeasurement>& pts,
                                                 const LeastSquaresOptions& solver = {}) {
  if (pts.size() < 8) throw IllConditionedFit("revival fit needs at least 8 points");
  double i_max = 0.0, v_max = 0.0, v_min = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    if (!(p.sigma > 0.0)) throw DomainError("revival points need sigma > 0");
    i_max = std::max(i_max, std::abs(p.current));
    v_max = std::max(v_max, p.visibility);
    v_min = std::min(v_min, p.visibility);
  }
  if (!(v_max > 0.0) || v_min > 0.5 * v_max) {
    throw IllConditionedFit("revival sweep does not reach the first visibility zero");
  }
  const auto m = static_cast<Eigen::Index>(pts.size());
  const auto model = [](double i, const Eigen::VectorXd& x) {
    return x(0) * std::abs(averaged_visibility(x(1) * i, x(2)).value);
  };
  const auto sse_of = [&](const Eigen::VectorXd& x) {
    double acc = 0.0;
    for (const auto& p : pts) {
      const double r = (p.visibility - model(p.current, x)) / p.sigma;
      acc += r * r;
    }
    return acc;
  };
  // The first zero (phi = pi/2) must fall inside the sweep.
  Eigen::VectorXd best(3);
  double best_sse = std::numeric_limits<double>::infinity();
  for (int ik = 0; ik <= 120; ++ik) {
    const double k = 0.5 * pi / i_max * std::pow(16.0, ik / 120.0);
    for (double a : {0.02, 0.06, 0.1, 0.14, 0.18, 0.24}) {
      Eigen::VectorXd x(3);
      x << v_max, k, a;
      double num = 0.0, den = 0.0;
      for (const auto& p : pts) {
        const double f = model(p.current, x) / v_max;
        num += f * p.visibility / (p.sigma * p.sigma);
        den += f * f / (p.sigma * p.sigma);
      }
      if (den > 0.0) x(0) = num / den;
      const double sse = sse_of(x);
      if (sse < best_sse) {
        best_sse = sse;
        best = x;
      }
    }
  }
  LeastSquaresProblem prob;
  prob.residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& p = pts[static_cast<std::size_t>(i)];
      r(i) = (p.visibility - model(p.current, x)) / p.sigma;
    }
    return r;
  };
  prob.lower = Eigen::Vector3d(0.0, 1e-12, 0.0);
  prob.upper = Eigen::Vector3d(2.0, std::numeric_limits<double>::infinity(), 0.5);
  const auto ls = solve_least_squares(prob, best, solver);
  VelocitySpreadFit out;
  out.v0 = ls.parameters(0);
  out.k_phi = ls.parameters(1);
  out.alpha_over_u = ls.parameters(2);
  out.covariance = ls.covariance;
  out.sigma_v0 = ls.sigma(0);
  out.sigma_k_phi = ls.sigma(1);
  out.sigma_alpha_over_u = ls.sigma(2);
  out.chi2 = ls.chi2;
  out.dof = ls.dof;
  if (out.k_phi * i_max < 0.5 * pi) throw IllConditionedFit("fitted sweep does not reach the first zero");
  return out;
}

}  // namespace atomint
