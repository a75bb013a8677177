#pragma once

// Truncated plane-wave propagator for an atom crossing a standing wave
// V = V0 cos^2(k_L x). In recoil units the Hamiltonian on the momenta
// k_x + 2n (n = -N..N, units of k_L) is
//
//   H_nn = (k_x + 2n)^2 + 2 q(tau),   H_n,n+1 = H_n+1,n = q(tau).
//
// Each step applies the exact exponential of a Hermitian generator, so the
// evolution is unitary to round-off for any step size.

#include <atomint/errors.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace atomint {

enum class PulseProfile { square, gaussian };

struct AmplitudeVector {
  double center_momentum = 0.0;  // k_x in units of k_L
  int truncation = 0;            // N
  std::vector<std::complex<double>> amplitudes;  // index n + N

  [[nodiscard]] std::complex<double> amplitude(int n) const {
    if (n < -truncation || n > truncation) return 0.0;
    return amplitudes[static_cast<std::size_t>(n + truncation)];
  }
  [[nodiscard]] double population(int n) const { return std::norm(amplitude(n)); }
  [[nodiscard]] double norm() const {
    double s = 0.0;
    for (const auto& c : amplitudes) s += std::norm(c);
    return s;
  }
};

struct PropagatorOptions {
  bool check_convergence = true;
  int max_truncation = 40;
  double convergence_tolerance = 1e-6;  // max change of any |c_n|^2 when N -> N+2
  double step_tolerance = 1e-10;        // gaussian profile: step-halving agreement
};

namespace detail {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline Eigen::MatrixXd bloch_hamiltonian(double kx, double q, int n_trunc) {
  const int dim = 2 * n_trunc + 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const double k = kx + 2.0 * (i - n_trunc);
    h(i, i) = k * k + 2.0 * q;
    if (i + 1 < dim) h(i, i + 1) = h(i + 1, i) = q;
  }
  return h;
}

// exp(-i K t) psi for Hermitian K.
template <typename Matrix>
CVector apply_exponential(const Matrix& k, double t, const CVector& psi) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  const auto& vecs = es.eigenvectors();
  CVector coeff = vecs.adjoint() * psi;
  for (Eigen::Index i = 0; i < coeff.size(); ++i) {
    coeff(i) *= std::exp(std::complex<double>(0.0, -es.eigenvalues()(i) * t));
  }
  return vecs * coeff;
}

// Gaussian temporal profile with the same area as a square pulse of length tau.
inline double gaussian_envelope(double t, double tau) {
  return std::exp(-std::numbers::pi * t * t / (tau * tau));
}

// Fourth-order Magnus integration over [-3 tau, 3 tau] with `steps` steps.
inline CVector propagate_gaussian(double kx, double q, double tau, int n_trunc, int steps,
                                  CVector psi) {
  const double t0 = -3.0 * tau;
  const double h = 6.0 * tau / steps;
  const double c = std::sqrt(3.0) / 6.0;
  const Eigen::MatrixXd h_unit = bloch_hamiltonian(kx, 1.0, n_trunc) - bloch_hamiltonian(kx, 0.0, n_trunc);
  const Eigen::MatrixXd h_kin = bloch_hamiltonian(kx, 0.0, n_trunc);
  for (int s = 0; s < steps; ++s) {
    const double ta = t0 + (s + 0.5 - c) * h;
    const double tb = t0 + (s + 0.5 + c) * h;
    const Eigen::MatrixXd h1 = h_kin + q * gaussian_envelope(ta, tau) * h_unit;
    const Eigen::MatrixXd h2 = h_kin + q * gaussian_envelope(tb, tau) * h_unit;
    const Eigen::MatrixXd comm = h2 * h1 - h1 * h2;  // real antisymmetric
    CMatrix k = (0.5 * (h1 + h2)).cast<std::complex<double>>();
    k += std::complex<double>(0.0, -std::sqrt(3.0) / 12.0 * h) * comm.cast<std::complex<double>>();
    psi = apply_exponential(k, h, psi);
  }
  return psi;
}

inline AmplitudeVector propagate_fixed(double kx, double q, double tau, int n_trunc,
                                       PulseProfile profile, const PropagatorOptions& opt) {
  const int dim = 2 * n_trunc + 1;
  CVector psi = CVector::Zero(dim);
  psi(n_trunc) = 1.0;
  if (q != 0.0 && tau != 0.0) {
    if (profile == PulseProfile::square) {
      psi = apply_exponential(bloch_hamiltonian(kx, q, n_trunc), tau, psi);
    } else {
      // Step count: resolve the fastest kinetic beat, then halve until stable.
      const double e_max = std::pow(std::abs(kx) + 2.0 * n_trunc, 2) + 4.0 * q;
      int steps = std::max(64, static_cast<int>(std::ceil(6.0 * tau * std::sqrt(e_max))));
      CVector coarse = propagate_gaussian(kx, q, tau, n_trunc, steps, psi);
      for (int iter = 0; iter < 12; ++iter) {
        steps *= 2;
        CVector fine = propagate_gaussian(kx, q, tau, n_trunc, steps, psi);
        const double change = (fine.cwiseAbs2() - coarse.cwiseAbs2()).cwiseAbs().maxCoeff();
        coarse = std::move(fine);
        if (change < opt.step_tolerance) break;
      }
      psi = std::move(coarse);
    }
  }
  AmplitudeVector out;
  out.center_momentum = kx;
  out.truncation = n_trunc;
  out.amplitudes.assign(psi.data(), psi.data() + psi.size());
  return out;
}

}  // namespace detail

// Smallest truncation whose basis reaches |k_x| + 2 (the order-p partner and one spare).
inline int minimum_truncation(double kx) {
  return static_cast<int>(std::ceil(std::abs(kx))) + 2;
}

// Propagates |k_x> through a standing wave of depth q and duration tau.
// With convergence checking on, N is increased in steps of 2 until the
// populations stop changing; TruncationError reports a failure.
inline AmplitudeVector bloch_propagate(double kx, double q, double tau, int n_trunc,
                                       PulseProfile profile = PulseProfile::square,
                                       const PropagatorOptions& opt = {}) {
  if (!std::isfinite(kx) || !std::isfinite(q) || !std::isfinite(tau)) {
    throw DomainError("bloch_propagate needs finite k_x, q, tau");
  }
  if (n_trunc < minimum_truncation(kx)) {
    throw DomainError("truncation N must be at least |k_x| + 2");
  }
  AmplitudeVector current = detail::propagate_fixed(kx, q, tau, n_trunc, profile, opt);
  if (!opt.check_convergence) return current;
  double change = 0.0;
  for (int n = n_trunc; n + 2 <= opt.max_truncation; n += 2) {
    AmplitudeVector next = detail::propagate_fixed(kx, q, tau, n + 2, profile, opt);
    change = 0.0;
    for (int m = -(n + 2); m <= n + 2; ++m) {
      change = std::max(change, std::abs(next.population(m) - current.population(m)));
    }
    if (change < opt.convergence_tolerance) return current;
    current = std::move(next);
  }
  throw TruncationError("momentum basis did not converge", current.truncation, change);
}

}  // namespace atomint
