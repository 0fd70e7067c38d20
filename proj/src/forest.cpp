#include "doebench/forest.hpp"

#include <algorithm>
#include <numeric>

#include "doebench/rng.hpp"

namespace doebench {

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int k = 0;
  while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(k)];
    k = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(k)].value;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t left_count = 0;
};

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& p, Rng& rng)
      : x_(x), y_(y), p_(p), rng_(rng) {}

  void grow(std::vector<int> sample, RegressionTree& tree) {
    tree_ = &tree;
    build(sample);
  }

 private:
  int build(std::vector<int>& idx) {
    const int id = static_cast<int>(tree_->nodes.size());
    tree_->nodes.emplace_back();
    double sum = 0.0;
    for (int i : idx) sum += y_(i);
    tree_->nodes[static_cast<std::size_t>(id)].value = sum / static_cast<double>(idx.size());
    if (static_cast<int>(idx.size()) <= p_.node_size) return id;

    const Split s = best_split(idx);
    if (s.feature < 0) return id;
    auto mid = std::partition(idx.begin(), idx.end(), [&](int i) { return x_(i, s.feature) <= s.threshold; });
    std::vector<int> left(idx.begin(), mid), right(mid, idx.end());
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(left);
    const int r = build(right);
    TreeNode& nd = tree_->nodes[static_cast<std::size_t>(id)];
    nd.feature = s.feature;
    nd.threshold = s.threshold;
    nd.left = l;
    nd.right = r;
    return id;
  }

  Split best_split(const std::vector<int>& idx) {
    const int d = static_cast<int>(x_.cols());
    std::vector<int> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    // Partial Fisher-Yates: the first mtry entries are a uniform sample.
    const int m = std::clamp(p_.mtry, 1, d);
    for (int k = 0; k < m; ++k) {
      const auto j = k + static_cast<int>(uniform_index(rng_, static_cast<std::uint64_t>(d - k)));
      std::swap(features[static_cast<std::size_t>(k)], features[static_cast<std::size_t>(j)]);
    }

    const double n = static_cast<double>(idx.size());
    double total = 0.0;
    for (int i : idx) total += y_(i);
    Split best;
    std::vector<int> order(idx);
    for (int k = 0; k < m; ++k) {
      const int f = features[static_cast<std::size_t>(k)];
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return x_(a, f) < x_(b, f) || (x_(a, f) == x_(b, f) && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t c = 0; c + 1 < order.size(); ++c) {
        left_sum += y_(order[c]);
        const double xa = x_(order[c], f), xb = x_(order[c + 1], f);
        if (xa == xb) continue;
        const double nl = static_cast<double>(c + 1), nr = n - nl;
        const double right_sum = total - left_sum;
        // SSE reduction up to a constant: sum_L^2/n_L + sum_R^2/n_R - total^2/n.
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - total * total / n;
        if (gain > best.gain + 1e-12 * (1.0 + std::abs(best.gain))) {
          best.feature = f;
          best.threshold = 0.5 * (xa + xb);
          best.gain = gain;
          best.left_count = c + 1;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const ForestParams& p_;
  Rng& rng_;
  RegressionTree* tree_ = nullptr;
};

std::uint64_t tree_seed(std::uint64_t seed, int t) {
  return derive_seed({seed, hash_string("tree"), static_cast<std::uint64_t>(t)});
}

}  // namespace

RegressionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& p,
                         std::uint64_t seed) {
  Rng rng(seed);
  const auto n = static_cast<std::uint64_t>(y.size());
  RegressionTree tree;
  tree.in_bag_counts.assign(n, 0);
  std::vector<int> sample(n);
  for (auto& s : sample) {
    s = static_cast<int>(uniform_index(rng, n));
    ++tree.in_bag_counts[static_cast<std::size_t>(s)];
  }
  std::sort(sample.begin(), sample.end());
  TreeGrower(x, y, p, rng).grow(std::move(sample), tree);
  return tree;
}

namespace kernels {
std::vector<RegressionTree> grow_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const ForestParams& p, std::uint64_t seed) {
  std::vector<RegressionTree> trees(static_cast<std::size_t>(p.n_trees));
#pragma omp parallel for schedule(dynamic, 16)
  for (int t = 0; t < p.n_trees; ++t) trees[static_cast<std::size_t>(t)] = grow_tree(x, y, p, tree_seed(seed, t));
  return trees;
}
}  // namespace kernels

namespace serial {
std::vector<RegressionTree> grow_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const ForestParams& p, std::uint64_t seed) {
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(p.n_trees));
  for (int t = 0; t < p.n_trees; ++t) trees.push_back(grow_tree(x, y, p, tree_seed(seed, t)));
  return trees;
}
}  // namespace serial

RandomForest::RandomForest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& p,
                           std::uint64_t seed)
    : params_(p), x_(x), y_(y), trees_(kernels::grow_forest(x, y, p, seed)) {}

Eigen::VectorXd RandomForest::predict(const Eigen::MatrixXd& x_star, int n_trees) const {
  const std::size_t m = n_trees < 0 ? trees_.size() : std::min(trees_.size(), static_cast<std::size_t>(n_trees));
  Eigen::VectorXd out(x_star.rows());
  for (Eigen::Index i = 0; i < x_star.rows(); ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < m; ++t) s += trees_[t].predict(x_star.row(i));
    out(i) = s / static_cast<double>(m);
  }
  return out;
}

double RandomForest::oob_mse(int n_trees) const {
  const std::size_t m = n_trees < 0 ? trees_.size() : std::min(trees_.size(), static_cast<std::size_t>(n_trees));
  double sse = 0.0;
  int used = 0;
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    double s = 0.0;
    int k = 0;
    for (std::size_t t = 0; t < m; ++t) {
      if (trees_[t].in_bag_counts[static_cast<std::size_t>(i)] > 0) continue;
      s += trees_[t].predict(x_.row(i));
      ++k;
    }
    if (k == 0) continue;
    const double e = s / k - y_(i);
    sse += e * e;
    ++used;
  }
  return used > 0 ? sse / used : 0.0;
}

}  // namespace doebench
