// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace qfc {

struct LmOptions {
  double relative_tolerance = 1e-9;
  int max_iterations = 200;
  double initial_damping = 1e-3;
  /// Typical magnitude per parameter; sets finite-difference steps. Empty = 1.
  Eigen::VectorXd typical;
};

struct LmResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd jtj;  // J^T J at x
};

/// Central-difference Jacobian of a residual function.
template <class Residuals>
Eigen::MatrixXd numeric_jacobian(Residuals& residuals, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& typical, Eigen::Index rows) {
  Eigen::MatrixXd jac(rows, x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double scale = typical.size() == x.size() ? typical(j) : 1.0;
    const double h = 1e-6 * std::max(std::abs(x(j)), std::abs(scale));
    Eigen::VectorXd up = x, down = x;
    up(j) += h;
    down(j) -= h;
    jac.col(j) = (residuals(up) - residuals(down)) / (up(j) - down(j));
  }
  return jac;
}

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal scaling)
/// minimizing |r(x)|^2. `residuals` maps Eigen::VectorXd -> Eigen::VectorXd.
///
/// Stops when an accepted step lowers the cost by less than
/// relative_tolerance * cost, or when every parameter moves by less than
/// relative_tolerance relative to its magnitude.
template <class Residuals>
LmResult levenberg_marquardt(Residuals&& residuals, Eigen::VectorXd x0,
                             const LmOptions& options = {}) {
  LmResult result;
  result.x = std::move(x0);
  Eigen::VectorXd r = residuals(result.x);
  result.cost = r.squaredNorm();
  if (!std::isfinite(result.cost)) return result;

  double damping = options.initial_damping;
  const double tol = options.relative_tolerance;
  const Eigen::VectorXd& typical = options.typical;

  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    const Eigen::MatrixXd jac = numeric_jacobian(residuals, result.x, typical, r.size());
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= std::numeric_limits<double>::min()) {
      result.converged = true;
      break;
    }

    bool accepted = false;
    while (damping < 1e20) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index j = 0; j < a.rows(); ++j)
        a(j, j) += damping * std::max(jtj(j, j), 1e-300);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        damping *= 10.0;
        continue;
      }
      const Eigen::VectorXd trial = result.x + step;
      const Eigen::VectorXd r_trial = residuals(trial);
      const double cost_trial = r_trial.squaredNorm();
      if (std::isfinite(cost_trial) && cost_trial <= result.cost) {
        const double drop = result.cost - cost_trial;
        bool small_step = true;
        for (Eigen::Index j = 0; j < step.size(); ++j) {
          const double scale = typical.size() == step.size() ? std::abs(typical(j)) : 1.0;
          if (std::abs(step(j)) > tol * (std::abs(result.x(j)) + tol * scale)) small_step = false;
        }
        result.x = trial;
        r = r_trial;
        result.cost = cost_trial;
        damping = std::max(damping / 10.0, 1e-12);
        accepted = true;
        if (drop <= tol * cost_trial || small_step) result.converged = true;
        break;
      }
      damping *= 10.0;
    }
    // No downhill step at any damping: x is a numerical minimum.
    if (!accepted) result.converged = true;
    if (result.converged) break;
  }
  const Eigen::MatrixXd jac = numeric_jacobian(residuals, result.x, typical, r.size());
  result.jtj = jac.transpose() * jac;
  return result;
}

}  // namespace qfc
