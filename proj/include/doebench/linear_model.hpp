#pragma once

#include <vector>

#include <Eigen/Dense>

namespace doebench {

struct LeastSquaresFit {
  Eigen::VectorXd coefficients;
  double rss = 0.0;
  bool full_rank = false;
};

/// Least squares via column-pivoted QR. full_rank is false (and the fit is
/// unusable) when the columns are numerically dependent.
LeastSquaresFit least_squares(const Eigen::MatrixXd& f, const Eigen::VectorXd& y);

/// n log(RSS/n) + 2k, with RSS floored to keep exact fits finite.
double aic(double rss, Eigen::Index n, Eigen::Index k, double rss_floor);

struct StepwiseResult {
  std::vector<int> columns;  // ascending; always contains 0
  double aic = 0.0;
  int steps = 0;
};

/// Bidirectional stepwise AIC over the columns of `candidates`, starting
/// from (and always keeping) column 0 as the intercept. Candidate models
/// with dependent columns are skipped.
StepwiseResult stepwise_select(const Eigen::MatrixXd& candidates, const Eigen::VectorXd& y);

/// Quadratic LM fitted by stepwise selection over the full second-order basis.
class QuadraticLm {
 public:
  /// Throws RankDeficient when the full quadratic basis is not estimable on
  /// the training rows.
  QuadraticLm(const Eigen::MatrixXd& x01, const Eigen::VectorXd& y);

  Eigen::VectorXd predict(const Eigen::MatrixXd& x01) const;

  const std::vector<int>& terms() const { return terms_; }
  const Eigen::VectorXd& coefficients() const { return beta_; }

 private:
  std::vector<int> terms_;
  Eigen::VectorXd beta_;
};

/// Columns `cols` of m.
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& cols);

}  // namespace doebench
