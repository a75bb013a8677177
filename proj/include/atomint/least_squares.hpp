#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) for small dense problems.

#include <atomint/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace atomint {

struct LeastSquaresProblem {
  // Weighted residuals (data - model) / sigma for a parameter vector.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
  // Optional analytic Jacobian of the residuals; central differences otherwise.
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  Eigen::VectorXd lower;  // empty: unbounded
  Eigen::VectorXd upper;
};

struct LeastSquaresOptions {
  int max_iterations = 300;
  double relative_tolerance = 1e-14;
  double initial_damping = 1e-3;
  bool scale_covariance = false;  // multiply by chi2/dof (sigmas not known absolutely)
};

struct LeastSquaresResult {
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  std::vector<bool> at_bound;

  [[nodiscard]] double sigma(Eigen::Index i) const { return std::sqrt(covariance(i, i)); }
};

namespace detail {

inline Eigen::MatrixXd numeric_jacobian(const LeastSquaresProblem& prob, const Eigen::VectorXd& x,
                                        Eigen::Index m) {
  Eigen::MatrixXd jac(m, x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(std::abs(x(j)), 1e-3);
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    jac.col(j) = (prob.residuals(xp) - prob.residuals(xm)) / (2.0 * h);
  }
  return jac;
}

inline Eigen::VectorXd clamp_to(const Eigen::VectorXd& x, const LeastSquaresProblem& prob) {
  if (prob.lower.size() == 0) return x;
  return x.cwiseMax(prob.lower).cwiseMin(prob.upper);
}

}  // namespace detail

inline LeastSquaresResult solve_least_squares(const LeastSquaresProblem& prob, Eigen::VectorXd x,
                                              const LeastSquaresOptions& opt = {}) {
  x = detail::clamp_to(x, prob);
  Eigen::VectorXd r = prob.residuals(x);
  const Eigen::Index m = r.size();
  const Eigen::Index n = x.size();
  if (m <= n) throw IllConditionedFit("fewer data points than parameters");
  double chi2 = r.squaredNorm();
  double lambda = opt.initial_damping;
  auto jac_at = [&](const Eigen::VectorXd& p) {
    return prob.jacobian ? prob.jacobian(p) : detail::numeric_jacobian(prob, p, m);
  };
  Eigen::MatrixXd jac = jac_at(x);
  int it = 0;
  bool converged = false;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index i = 0; i < n; ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-30);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd trial = detail::clamp_to(x + step, prob);
      const Eigen::VectorXd rt = prob.residuals(trial);
      const double chi2_t = rt.squaredNorm();
      if (std::isfinite(chi2_t) && chi2_t <= chi2) {
        const double drop = chi2 - chi2_t;
        const double dx = (trial - x).norm() / std::max(x.norm(), 1e-300);
        x = trial;
        r = rt;
        chi2 = chi2_t;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (drop <= opt.relative_tolerance * std::max(chi2, 1e-300) || dx < 1e-15 || chi2 == 0.0) {
          converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No downhill step at any damping: at a (possibly constrained) minimum.
      converged = true;
    }
    if (converged) break;
    jac = jac_at(x);
  }
  if (!converged) throw ConvergenceError("least squares did not converge", chi2);

  LeastSquaresResult res;
  res.parameters = x;
  res.chi2 = chi2;
  res.dof = static_cast<int>(m - n);
  res.iterations = it + 1;
  res.at_bound.assign(static_cast<std::size_t>(n), false);
  if (prob.lower.size() != 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      res.at_bound[static_cast<std::size_t>(i)] = x(i) == prob.lower(i) || x(i) == prob.upper(i);
    }
  }
  jac = jac_at(x);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jtj, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(n - 1) / sv(0) < 1e-14) {
    throw IllConditionedFit("normal matrix is singular: data do not constrain all parameters");
  }
  res.covariance = svd.solve(Eigen::MatrixXd::Identity(n, n));
  res.covariance = 0.5 * (res.covariance + res.covariance.transpose());
  if (opt.scale_covariance && res.dof > 0) res.covariance *= chi2 / res.dof;
  return res;
}

}  // namespace atomint
