#include "doebench/sampling.hpp"

#include <numeric>
#include <vector>

namespace doebench {

namespace {

Eigen::MatrixXd lhd_impl(Eigen::Index n, Eigen::Index d, Rng& rng, bool jitter) {
  Eigen::MatrixXd x(n, d);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = jitter ? uniform01(rng) : 0.5;
      x(i, j) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + u) * inv_n;
    }
  }
  return x;
}

}  // namespace

Eigen::MatrixXd random_lhd(Eigen::Index n, Eigen::Index d, Rng& rng) {
  return lhd_impl(n, d, rng, true);
}

Eigen::MatrixXd midpoint_lhd(Eigen::Index n, Eigen::Index d, Rng& rng) {
  return lhd_impl(n, d, rng, false);
}

}  // namespace doebench
