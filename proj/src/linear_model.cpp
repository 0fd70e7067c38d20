#include "doebench/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "doebench/designgen.hpp"
#include "doebench/errors.hpp"

namespace doebench {

namespace {
constexpr double kRankThreshold = 1e-10;
constexpr double kAicImprovement = 1e-10;
constexpr int kMaxSteps = 200;
}  // namespace

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

LeastSquaresFit least_squares(const Eigen::MatrixXd& f, const Eigen::VectorXd& y) {
  LeastSquaresFit out;
  if (f.cols() > f.rows()) return out;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(f);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < f.cols()) return out;
  out.coefficients = qr.solve(y);
  out.rss = (y - f * out.coefficients).squaredNorm();
  out.full_rank = true;
  return out;
}

double aic(double rss, Eigen::Index n, Eigen::Index k, double rss_floor) {
  const double r = std::max(rss, rss_floor);
  return static_cast<double>(n) * std::log(r / static_cast<double>(n)) + 2.0 * static_cast<double>(k);
}

StepwiseResult stepwise_select(const Eigen::MatrixXd& candidates, const Eigen::VectorXd& y) {
  const Eigen::Index n = candidates.rows();
  const int m = static_cast<int>(candidates.cols());
  const double floor = 1e-24 * std::max(1.0, y.squaredNorm());

  StepwiseResult res;
  res.columns = {0};
  auto score = [&](const std::vector<int>& cols) {
    const auto fit = least_squares(select_columns(candidates, cols), y);
    if (!fit.full_rank) return std::numeric_limits<double>::infinity();
    return aic(fit.rss, n, static_cast<Eigen::Index>(cols.size()), floor);
  };
  res.aic = score(res.columns);

  for (; res.steps < kMaxSteps; ++res.steps) {
    double best = res.aic;
    std::vector<int> best_cols;
    std::vector<char> in(static_cast<std::size_t>(m), 0);
    for (int c : res.columns) in[static_cast<std::size_t>(c)] = 1;
    for (int c = 1; c < m; ++c) {
      std::vector<int> trial = res.columns;
      if (in[static_cast<std::size_t>(c)]) {
        trial.erase(std::find(trial.begin(), trial.end(), c));
      } else {
        trial.insert(std::upper_bound(trial.begin(), trial.end(), c), c);
      }
      const double s = score(trial);
      if (s < best - kAicImprovement) {
        best = s;
        best_cols = std::move(trial);
      }
    }
    if (best_cols.empty()) break;
    res.columns = std::move(best_cols);
    res.aic = best;
  }
  return res;
}

QuadraticLm::QuadraticLm(const Eigen::MatrixXd& x01, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd full = model_matrix(x01);
  if (!least_squares(full, y).full_rank)
    throw RankDeficient("LM: full quadratic model is not estimable on the training design");
  terms_ = stepwise_select(full, y).columns;
  beta_ = least_squares(select_columns(full, terms_), y).coefficients;
}

Eigen::VectorXd QuadraticLm::predict(const Eigen::MatrixXd& x01) const {
  return select_columns(model_matrix(x01), terms_) * beta_;
}

}  // namespace doebench
