#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace doebench {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  std::vector<int> in_bag_counts;  // bootstrap multiplicity of each training row

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

struct ForestParams {
  int n_trees = 2000;
  int mtry = 2;
  int node_size = 5;  // nodes with at most this many samples are leaves
};

/// One variance-reduction tree grown on a bootstrap sample drawn from `seed`.
RegressionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& p,
                         std::uint64_t seed);

class RandomForest {
 public:
  RandomForest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& p,
               std::uint64_t seed);

  /// Mean tree prediction over the first n_trees trees (all trees when n_trees < 0).
  Eigen::VectorXd predict(const Eigen::MatrixXd& x_star, int n_trees = -1) const;

  /// Out-of-bag mean squared error using the first n_trees trees; rows that are
  /// in every such bootstrap sample are skipped.
  double oob_mse(int n_trees = -1) const;

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }

 private:
  ForestParams params_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  std::vector<RegressionTree> trees_;
};

namespace kernels {
// Grows trees in parallel; tree t uses a seed derived from (seed, t).
std::vector<RegressionTree> grow_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const ForestParams& p, std::uint64_t seed);
}  // namespace kernels

namespace serial {
std::vector<RegressionTree> grow_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const ForestParams& p, std::uint64_t seed);
}  // namespace serial

}  // namespace doebench
