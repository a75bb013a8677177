#pragma once

// Synthetic detector traces and the fits that recover fringe parameters,
// figure of merit and phase sensitivity from them.

#include <atomint/errors.hpp>
#include <atomint/interferometer.hpp>
#include <atomint/least_squares.hpp>
#include <atomint/slit_model.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace atomint {

enum class Provenance { synthetic, external };

struct CountSample {
  double drive;
  std::int64_t counts;
};

struct CountTrace {
  std::vector<CountSample> samples;
  double counting_time = 0.1;  // T_c, s
  std::uint64_t seed = 0;
  Provenance provenance = Provenance::synthetic;

  void validate() const {
    if (!(counting_time > 0.0)) throw DomainError("counting time must be > 0");
    for (const auto& s : samples) {
      if (s.counts < 0) throw DomainError("counts must be >= 0");
    }
  }
};

// phi(x) = sum_k c_k x^k, x in drive units.
struct PhaseLaw {
  std::vector<double> coefficients{0.0, 1.0};

  [[nodiscard]] double operator()(double x) const {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
};

struct BurstNoise {
  bool enabled = false;
  double probability = 0.01;  // per bin
  double scale = 50.0;        // Pareto minimum, counts
  double shape = 1.5;
};

inline CountTrace synthesize_counts(const FringeModel& model, const std::vector<double>& sweep,
                                    const PhaseLaw& phase, double counting_time, std::uint64_t seed,
                                    const BurstNoise& bursts = {}) {
  if (sweep.size() < 2) throw DomainError("sweep needs at least 2 points");
  if (!(counting_time > 0.0)) throw DomainError("counting time must be > 0");
  model.validate();
  CountTrace trace;
  trace.counting_time = counting_time;
  trace.seed = seed;
  trace.provenance = Provenance::synthetic;
  std::mt19937_64 rng(detail::splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double x : sweep) {
    const double mean = model.rate(phase(x)) * counting_time;
    std::int64_t n = 0;
    if (mean > 0.0) {
      std::poisson_distribution<std::int64_t> pois(mean);
      n = pois(rng);
    }
    if (bursts.enabled && unit(rng) < bursts.probability) {
      const double u = 1.0 - unit(rng);
      n += static_cast<std::int64_t>(std::floor(bursts.scale / std::pow(u, 1.0 / bursts.shape)));
    }
    trace.samples.push_back({x, n});
  }
  return trace;
}

// Evenly spaced drive values over [from, to].
inline std::vector<double> linear_sweep(double from, double to, int points) {
  if (points < 2) throw DomainError("sweep needs at least 2 points");
  std::vector<double> xs;
  for (int i = 0; i < points; ++i) xs.push_back(from + (to - from) * i / (points - 1));
  return xs;
}

struct FringeFitOptions {
  int phase_degree = 2;
  std::optional<double> known_background;    // counts/s
  std::optional<CountTrace> background_trace;  // recorded with the beam on but fringes off
  std::optional<PhaseLaw> fixed_phase;       // skip fitting the phase law; V may then come out signed
  bool reweight = true;                      // refit with model-based Poisson weights
  LeastSquaresOptions solver{};
};

struct FitResult {
  double background = 0.0;      // I_B, counts/s
  double mean_intensity = 0.0;  // I_0, counts/s
  double visibility = 0.0;      // V
  PhaseLaw phase;               // in drive units
  std::vector<std::string> parameter_names;
  Eigen::VectorXd parameters;   // same order as parameter_names
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  bool visibility_at_bound = false;

  [[nodiscard]] double sigma(const std::string& name) const {
    for (std::size_t i = 0; i < parameter_names.size(); ++i) {
      if (parameter_names[i] == name) return std::sqrt(covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    }
    throw DomainError("no fit parameter named " + name);
  }
  // Drive period of the linear phase term.
  [[nodiscard]] double period() const {
    if (phase.coefficients.size() < 2 || phase.coefficients[1] == 0.0) return 0.0;
    return two_pi / std::abs(phase.coefficients[1]);
  }
};

namespace detail {

// b_j = sum_k a_k s^-k C(k, j) (-c)^(k-j): polynomial in t = (x - c)/s rewritten in x.
inline Eigen::MatrixXd polynomial_rebase(int degree, double center, double scale) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(degree + 1, degree + 1);
  for (int k = 0; k <= degree; ++k) {
    double binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      if (j > 0) binom = binom * (k - j + 1) / j;
      m(j, k) = binom * std::pow(-center, k - j) / std::pow(scale, k);
    }
  }
  return m;
}

// Strongest Fourier component of the centred data over t in [-1, 1], in rad per unit t.
inline double dominant_frequency(const std::vector<double>& t, const std::vector<double>& y) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  const auto power = [&](double w) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) acc += (y[i] - mean) * std::polar(1.0, -w * t[i]);
    return std::norm(acc);
  };
  const double w_max = pi * std::max(2.0, static_cast<double>(t.size()) / 4.0);
  double best_w = pi, best = -1.0;
  for (double w = 0.5 * pi; w <= w_max; w += 0.02 * pi) {
    const double pw = power(w);
    if (pw > best) {
      best = pw;
      best_w = w;
    }
  }
  double lo = best_w - 0.02 * pi, hi = best_w + 0.02 * pi;
  for (int i = 0; i < 60; ++i) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (power(a) > power(b)) hi = b; else lo = a;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Poisson-weighted fit of N = T_c (I_B + I_0 (1 + V cos phi(x))).
inline FitResult fit_fringes(const CountTrace& trace, const FringeFitOptions& opt = {}) {
  trace.validate();
  const auto n_pts = trace.samples.size();
  if (n_pts < 6) throw IllConditionedFit("fringe fit needs at least 6 samples");
  const bool fit_phase = !opt.fixed_phase.has_value();
  const int degree = fit_phase ? opt.phase_degree : 0;
  if (fit_phase && degree < 1) throw DomainError("phase polynomial degree must be >= 1");
  const bool fit_background = !opt.known_background && opt.background_trace;
  if (!opt.known_background && !opt.background_trace) {
    throw IllConditionedFit("background must be supplied or measured: it is degenerate with I_0");
  }

  double x_min = trace.samples.front().drive, x_max = x_min;
  for (const auto& s : trace.samples) {
    x_min = std::min(x_min, s.drive);
    x_max = std::max(x_max, s.drive);
  }
  const double center = 0.5 * (x_min + x_max);
  const double scale = 0.5 * (x_max - x_min);
  if (!(scale > 0.0)) throw IllConditionedFit("drive values do not span an interval");

  const double tc = trace.counting_time;
  std::vector<double> t(n_pts), y(n_pts), sig(n_pts);
  for (std::size_t i = 0; i < n_pts; ++i) {
    t[i] = (trace.samples[i].drive - center) / scale;
    y[i] = static_cast<double>(trace.samples[i].counts);
    sig[i] = std::sqrt(std::max(y[i], 1.0));
  }
  std::vector<double> yb, sigb;
  double tb = 0.0;
  if (fit_background) {
    opt.background_trace->validate();
    tb = opt.background_trace->counting_time;
    for (const auto& s : opt.background_trace->samples) {
      yb.push_back(static_cast<double>(s.counts));
      sigb.push_back(std::sqrt(std::max(yb.back(), 1.0)));
    }
    if (yb.empty()) throw IllConditionedFit("background trace is empty");
  }

  // Initial values.
  double ib0 = 0.0;
  if (opt.known_background) {
    ib0 = *opt.known_background;
  } else {
    for (double v : yb) ib0 += v;
    ib0 /= static_cast<double>(yb.size()) * tb;
  }
  const int n_phase = fit_phase ? degree + 1 : 0;
  const int n_par = 2 + n_phase + (fit_background ? 1 : 0);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n_par);
  {
    double w = 0.0, c0 = 0.0;
    std::vector<double> phi0(n_pts);
    if (fit_phase) {
      w = detail::dominant_frequency(t, y);
      for (std::size_t i = 0; i < n_pts; ++i) phi0[i] = w * t[i];
    } else {
      for (std::size_t i = 0; i < n_pts; ++i) phi0[i] = (*opt.fixed_phase)(trace.samples[i].drive);
    }
    Eigen::MatrixXd a(n_pts, 3);
    Eigen::VectorXd b(n_pts);
    for (std::size_t i = 0; i < n_pts; ++i) {
      a(i, 0) = 1.0;
      a(i, 1) = std::cos(phi0[i]);
      a(i, 2) = std::sin(phi0[i]);
      b(i) = y[i] / tc;
    }
    const Eigen::Vector3d lin = a.colPivHouseholderQr().solve(b);
    const double i0 = std::max(lin(0) - ib0, 1e-3 * std::max(lin(0), 1.0));
    double amp = std::hypot(lin(1), lin(2));
    if (fit_phase) {
      c0 = std::atan2(-lin(2), lin(1));
    } else {
      amp = lin(1);  // projection on the known phase
    }
    x0(0) = i0;
    x0(1) = std::clamp(amp / i0, fit_phase ? 0.0 : -1.0, 1.0);
    if (fit_phase) {
      x0(2) = c0;
      x0(3) = w;
    }
    if (fit_background) x0(n_par - 1) = ib0;
  }

  std::vector<double> fixed_phi;
  if (!fit_phase) {
    for (const auto& s : trace.samples) fixed_phi.push_back((*opt.fixed_phase)(s.drive));
  }
  const auto phase_at = [&](const Eigen::VectorXd& p, std::size_t i) {
    if (!fit_phase) return fixed_phi[i];
    double acc = 0.0;
    for (int k = degree; k >= 0; --k) acc = acc * t[i] + p(2 + k);
    return acc;
  };
  const auto background_of = [&](const Eigen::VectorXd& p) { return fit_background ? p(n_par - 1) : ib0; };
  const auto m_total = static_cast<Eigen::Index>(n_pts + yb.size());

  LeastSquaresProblem prob;
  prob.residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m_total);
    const double ib = background_of(p);
    for (std::size_t i = 0; i < n_pts; ++i) {
      const double mu = tc * (ib + p(0) * (1.0 + p(1) * std::cos(phase_at(p, i))));
      r(static_cast<Eigen::Index>(i)) = (y[i] - mu) / sig[i];
    }
    for (std::size_t i = 0; i < yb.size(); ++i) {
      r(static_cast<Eigen::Index>(n_pts + i)) = (yb[i] - tb * ib) / sigb[i];
    }
    return r;
  };
  prob.jacobian = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(m_total, n_par);
    for (std::size_t i = 0; i < n_pts; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double phi = phase_at(p, i);
      const double c = std::cos(phi), s = std::sin(phi);
      j(row, 0) = -tc * (1.0 + p(1) * c) / sig[i];
      j(row, 1) = -tc * p(0) * c / sig[i];
      double tk = 1.0;
      for (int k = 0; k < n_phase; ++k) {
        j(row, 2 + k) = tc * p(0) * p(1) * s * tk / sig[i];
        tk *= t[i];
      }
      if (fit_background) j(row, n_par - 1) = -tc / sig[i];
    }
    for (std::size_t i = 0; i < yb.size(); ++i) {
      j(static_cast<Eigen::Index>(n_pts + i), n_par - 1) = -tb / sigb[i];
    }
    return j;
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  prob.lower = Eigen::VectorXd::Constant(n_par, -inf);
  prob.upper = Eigen::VectorXd::Constant(n_par, inf);
  prob.lower(0) = 0.0;
  // With a fixed phase law an inverted fringe shows up as a negative V.
  prob.lower(1) = fit_phase ? 0.0 : -1.0;
  prob.upper(1) = 1.0;
  if (fit_background) prob.lower(n_par - 1) = 0.0;

  auto ls = solve_least_squares(prob, x0, opt.solver);
  if (opt.reweight) {
    // Second pass with the fitted means as Poisson variances.
    const double ib = background_of(ls.parameters);
    for (std::size_t i = 0; i < n_pts; ++i) {
      const double mu = tc * (ib + ls.parameters(0) * (1.0 + ls.parameters(1) * std::cos(phase_at(ls.parameters, i))));
      sig[i] = std::sqrt(std::max(mu, 1.0));
    }
    for (auto& s : sigb) s = std::sqrt(std::max(tb * ib, 1.0));
    ls = solve_least_squares(prob, ls.parameters, opt.solver);
  }

  FitResult out;
  out.mean_intensity = ls.parameters(0);
  out.visibility = std::abs(ls.parameters(1));
  out.background = background_of(ls.parameters);
  out.chi2 = ls.chi2;
  out.dof = ls.dof;
  out.iterations = ls.iterations;
  out.visibility_at_bound = ls.at_bound[1];

  // Report the phase law in drive units; covariance follows the same linear map.
  Eigen::MatrixXd map = Eigen::MatrixXd::Identity(n_par, n_par);
  if (fit_phase) {
    map.block(2, 2, n_phase, n_phase) = detail::polynomial_rebase(degree, center, scale);
  }
  out.parameters = map * ls.parameters;
  out.covariance = map * ls.covariance * map.transpose();
  out.parameter_names = {"I0", "V"};
  if (fit_phase) {
    out.phase.coefficients.assign(out.parameters.data() + 2, out.parameters.data() + 2 + n_phase);
    for (int k = 0; k < n_phase; ++k) out.parameter_names.push_back("c" + std::to_string(k));
  } else {
    out.phase = *opt.fixed_phase;
  }
  if (fit_background) out.parameter_names.push_back("IB");

  const double span = std::abs(out.phase(x_max) - out.phase(x_min)) / two_pi;
  if (fit_phase && span < 1.5) {
    throw DomainError("trace spans fewer than 1.5 fringes (" + std::to_string(span) + ")");
  }
  return out;
}

inline double figure_of_merit(double mean_intensity, double visibility) {
  return mean_intensity * visibility * visibility;
}

// Shot-noise phase uncertainty at mid-fringe after integrating for `time`
// seconds: sqrt(I_0 + I_B) / (I_0 V sqrt(time)). With time = 1 s this is
// the value in rad/sqrt(Hz).
inline double phase_sensitivity(double mean_intensity, double visibility, double background,
                                double time = 1.0) {
  if (visibility == 0.0) throw DomainError("V = 0: phase sensitivity is infinite");
  if (!(mean_intensity > 0.0) || !(visibility > 0.0)) throw DomainError("phase sensitivity needs I0 > 0 and V > 0");
  if (!(background >= 0.0) || !(time > 0.0)) throw DomainError("phase sensitivity needs I_B >= 0 and time > 0");
  return std::sqrt(mean_intensity + background) / (mean_intensity * visibility * std::sqrt(time));
}

// ---- sinc-envelope fits ---------------------------------------------------

enum class SincLaw { tilt, mismatch };

struct DefectPoint {
  double defect;      // theta_z (rad) or z (m)
  double visibility;
  double sigma = 0.0;  // 0: unweighted
};

struct SincFitOptions {
  SincLaw law = SincLaw::tilt;
  int order = 1;  // p used to build the law
  InterferometerGeometry geometry{};
  bool fit_scale = true;
  LeastSquaresOptions solver{};
};

struct SincFit {
  double v0 = 0.0, sigma_v0 = 0.0;
  double center = 0.0, sigma_center = 0.0;  // theta_0 (tilt) or z_c (mismatch)
  double scale = 1.0, sigma_scale = 0.0;    // argument scale relative to the order-p law
  double zero = 0.0, sigma_zero = 0.0;      // distance from the centre to the first zero
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int dof = 0;
};

namespace detail {

// Unit-scale envelope of the law as a function of the offset from the centre.
inline double sinc_envelope(const SincFitOptions& o, double s, double d) {
  const auto& g = o.geometry;
  if (o.law == SincLaw::tilt) return std::abs(sinc(s * 2.0 * o.order * g.k_G() * g.h_D * d));
  const double a = s * o.order * g.k_G() / (2.0 * g.L04());
  return std::abs(sinc(a * g.e_0 * d) * sinc(a * g.e_D * d));
}

inline double first_zero(const SincFitOptions& o, double s) {
  const auto& g = o.geometry;
  if (o.law == SincLaw::tilt) return pi / (s * 2.0 * o.order * g.k_G() * g.h_D);
  return pi * 2.0 * g.L04() / (s * o.order * g.k_G() * std::max(g.e_0, g.e_D));
}

}  // namespace detail

// V = V0 |law(scale * (d - centre))|. The result does not depend on the order of the points.
inline SincFit fit_sinc(std::vector<DefectPoint> pts, const SincFitOptions& opt = {}) {
  if (pts.size() < 6) throw IllConditionedFit("sinc fit needs at least 6 points");
  opt.geometry.validate();
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.defect != b.defect ? a.defect < b.defect : a.visibility < b.visibility;
  });
  double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    vmax = std::max(vmax, p.visibility);
    vmin = std::min(vmin, p.visibility);
  }
  if (!(vmax > 0.0) || (vmax - vmin) < 0.1 * vmax) {
    throw IllConditionedFit("sinc fit: the points do not span enough of the envelope");
  }
  const bool weighted = std::all_of(pts.begin(), pts.end(), [](const auto& p) { return p.sigma > 0.0; });
  const auto m = static_cast<Eigen::Index>(pts.size());
  const double d_lo = pts.front().defect, d_hi = pts.back().defect;
  const double span = d_hi - d_lo;

  // Coarse grid for the centre and scale; V0 is linear.
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector3d x0(vmax, 0.5 * (d_lo + d_hi), 1.0);
  const double zero_unit = detail::first_zero(opt, 1.0);
  for (int ic = 0; ic <= 40; ++ic) {
    const double c = d_lo + span * ic / 40.0;
    for (int is = 0; is <= (opt.fit_scale ? 80 : 0); ++is) {
      const double s = opt.fit_scale ? zero_unit / span * std::pow(10.0, -1.0 + 2.5 * is / 80.0) : 1.0;
      double num = 0.0, den = 0.0;
      for (const auto& p : pts) {
        const double f = detail::sinc_envelope(opt, s, p.defect - c);
        const double w = weighted ? 1.0 / (p.sigma * p.sigma) : 1.0;
        num += w * f * p.visibility;
        den += w * f * f;
      }
      if (den <= 0.0) continue;
      const double v0 = num / den;
      double sse = 0.0;
      for (const auto& p : pts) {
        const double w = weighted ? 1.0 / (p.sigma * p.sigma) : 1.0;
        const double r = p.visibility - v0 * detail::sinc_envelope(opt, s, p.defect - c);
        sse += w * r * r;
      }
      if (sse < best) {
        best = sse;
        x0 = Eigen::Vector3d(v0, c, s);
      }
    }
  }

  const int n_par = opt.fit_scale ? 3 : 2;
  // Work with the centre in units of the span for conditioning.
  const double cu = span;
  LeastSquaresProblem prob;
  prob.residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(m);
    const double s = opt.fit_scale ? x(2) : 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& p = pts[static_cast<std::size_t>(i)];
      const double w = weighted ? p.sigma : 1.0;
      r(i) = (p.visibility - x(0) * detail::sinc_envelope(opt, s, p.defect - x(1) * cu)) / w;
    }
    return r;
  };
  Eigen::VectorXd start(n_par);
  start(0) = x0(0);
  start(1) = x0(1) / cu;
  if (opt.fit_scale) start(2) = x0(2);
  constexpr double inf = std::numeric_limits<double>::infinity();
  prob.lower = Eigen::VectorXd::Constant(n_par, -inf);
  prob.upper = Eigen::VectorXd::Constant(n_par, inf);
  prob.lower(0) = 0.0;
  if (opt.fit_scale) prob.lower(2) = 1e-12;
  auto solver = opt.solver;
  solver.scale_covariance = !weighted;
  const auto ls = solve_least_squares(prob, start, solver);

  SincFit out;
  Eigen::MatrixXd map = Eigen::MatrixXd::Identity(n_par, n_par);
  map(1, 1) = cu;
  out.covariance = map * ls.covariance * map.transpose();
  out.v0 = ls.parameters(0);
  out.sigma_v0 = std::sqrt(out.covariance(0, 0));
  out.center = ls.parameters(1) * cu;
  out.sigma_center = std::sqrt(out.covariance(1, 1));
  if (opt.fit_scale) {
    out.scale = ls.parameters(2);
    out.sigma_scale = std::sqrt(out.covariance(2, 2));
  }
  out.zero = detail::first_zero(opt, out.scale);
  out.sigma_zero = out.zero * out.sigma_scale / out.scale;
  out.chi2 = ls.chi2;
  out.dof = ls.dof;
  return out;
}

}  // namespace atomint
