#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace doebench {

enum class KernelFamily { Gaussian, Exponential, PowerExponential, Matern52, Matern32 };

const char* to_string(KernelFamily f);

struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  Eigen::VectorXd theta;  // per-coordinate lengthscales, > 0
  double t = 2.0;         // PowerExponential exponent in (0, 2]
};

/// One-dimensional correlation at absolute distance r >= 0.
double kernel_1d(KernelFamily family, double r, double theta, double t);

/// Product over coordinates of kernel_1d.
double kernel_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> x2);

/// Correlation matrix of the rows of x (unit diagonal).
Eigen::MatrixXd correlation_matrix(const KernelSpec& k, const Eigen::MatrixXd& x);

/// Correlations between rows of a (rows) and rows of b (columns).
Eigen::MatrixXd cross_correlation(const KernelSpec& k, const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b);

enum class GpTrend { Constant, QuadraticStepwise };

const char* to_string(GpTrend t);

/// Regression basis of the GP mean: an intercept, or a fixed subset of
/// quadratic terms (see quadratic_expansion) chosen by stepwise AIC.
struct TrendBasis {
  GpTrend trend = GpTrend::Constant;
  std::vector<int> columns;  // QuadraticStepwise only

  static TrendBasis constant();
  static TrendBasis stepwise(const Eigen::MatrixXd& x01, const Eigen::VectorXd& y);

  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& x01) const;
};

/// Nugget rule: 1e-8 times the sample variance of the training responses.
double default_nugget(const Eigen::VectorXd& y);

/// Profiled negative log-likelihood. The nugget g enters the correlation
/// matrix as R = K + (g / var(y)) I; tau^2 and the trend coefficients are
/// profiled out (GLS). Throws NotPositiveDefinite when R cannot be factorized.
double gp_neg_loglik(const KernelSpec& k, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     double nugget, const Eigen::MatrixXd& trend_basis);

class GpModel {
 public:
  /// Conditions the GP on (x, y) for fixed lengthscales.
  GpModel(KernelSpec kernel, TrendBasis trend, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
          double nugget);

  /// Kriging mean.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x_star) const;

  const KernelSpec& kernel() const { return kernel_; }
  const TrendBasis& trend() const { return trend_; }
  double tau2() const { return tau2_; }
  double nugget() const { return nugget_; }
  double neg_loglik() const { return nll_; }
  const Eigen::VectorXd& trend_coefficients() const { return beta_; }

 private:
  KernelSpec kernel_;
  TrendBasis trend_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd weights_;  // R^{-1} (y - F beta)
  double tau2_ = 0.0;
  double nugget_ = 0.0;
  double nll_ = 0.0;
};

struct GpMleOptions {
  int restarts = 5;
  int max_iterations = 500;
  double theta_lo = 0.1;
  double theta_hi = 2.0;
  double start_lo = 0.1;  // random starts are drawn log-uniformly in [start_lo, start_hi]
  double start_hi = 2.0;
  double initial_step = 0.7;  // simplex edge in log theta
};

struct GpMleResult {
  KernelSpec kernel;
  double neg_loglik = 0.0;
  std::vector<double> start_values;  // objective at each start's initial point
  std::vector<double> final_values;  // objective at each start's optimum
  int evaluations = 0;
};

/// Multi-start Nelder-Mead over log theta within [theta_lo, theta_hi].
GpMleResult gp_mle(KernelFamily family, double t, const Eigen::MatrixXd& x,
                   const Eigen::VectorXd& y, double nugget, const TrendBasis& trend,
                   std::uint64_t seed, const GpMleOptions& opts = {});

}  // namespace doebench
