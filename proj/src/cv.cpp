#include "doebench/cv.hpp"

#include <algorithm>
#include <numeric>

#include "doebench/errors.hpp"
#include "doebench/rng.hpp"

namespace doebench {

std::vector<Fold> kfold_split(Eigen::Index n, int k, std::uint64_t seed) {
  if (k < 2 || k > n) throw BadK("kfold_split: need 2 <= k <= n");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(derive_seed({seed, hash_string("kfold")}));
  shuffle(order.begin(), order.end(), rng);
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  const Eigen::Index base = n / k;
  const Eigen::Index extra = n % k;
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const Eigen::Index size = base + (f < extra ? 1 : 0);
    folds[static_cast<std::size_t>(f)].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                              order.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(size)));
    std::sort(folds[static_cast<std::size_t>(f)].begin(), folds[static_cast<std::size_t>(f)].end());
    pos += static_cast<std::size_t>(size);
  }
  return folds;
}

Fold complement(const Fold& fold, Eigen::Index n) {
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (auto i : fold) in[static_cast<std::size_t>(i)] = 1;
  Fold out;
  out.reserve(static_cast<std::size_t>(n) - fold.size());
  for (Eigen::Index i = 0; i < n; ++i)
    if (!in[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

}  // namespace doebench
