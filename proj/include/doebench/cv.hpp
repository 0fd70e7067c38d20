#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace doebench {

using Fold = std::vector<Eigen::Index>;

/// Random partition of {0..n-1} into k folds whose sizes differ by at most one
/// (the first n % k folds get the extra element). Throws BadK unless 2 <= k <= n.
std::vector<Fold> kfold_split(Eigen::Index n, int k, std::uint64_t seed);

/// Complement of a fold in {0..n-1}, ascending.
Fold complement(const Fold& fold, Eigen::Index n);

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const Fold& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

inline Eigen::VectorXd take(const Eigen::VectorXd& y, const Fold& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(idx[i]);
  return out;
}

}  // namespace doebench
