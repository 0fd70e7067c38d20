#pragma once

#include <functional>

#include <Eigen/Dense>

namespace doebench {

struct NelderMeadOptions {
  int max_iterations = 500;
  double f_tol = 1e-8;  // stop when the simplex value spread is below f_tol * (|f_best| + f_tol)
  double x_tol = 1e-8;  // ... or its diameter is below this
  double initial_step = 0.5;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

/// Box-constrained Nelder-Mead; trial points are clamped into [lo, hi].
/// Non-finite objective values are treated as +infinity.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, const NelderMeadOptions& opts = {});

}  // namespace doebench
