#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "doebench/cv.hpp"
#include "doebench/errors.hpp"
#include "doebench/optim.hpp"

using namespace doebench;

TEST_CASE("kfold split sizes, partition and determinism") {
  const auto folds = kfold_split(52, 5, 17);
  REQUIRE(folds.size() == 5);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.size());
  CHECK(sizes == std::vector<std::size_t>{11, 11, 10, 10, 10});
  std::set<Eigen::Index> all;
  for (const auto& f : folds) {
    CHECK(std::is_sorted(f.begin(), f.end()));
    for (auto i : f) CHECK(all.insert(i).second);
  }
  CHECK(all.size() == 52);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 51);
  CHECK(kfold_split(52, 5, 17) == folds);
  CHECK(kfold_split(52, 5, 18) != folds);
  for (int n = 2; n <= 30; ++n)
    for (int k = 2; k <= n; ++k) {
      const auto fs = kfold_split(n, k, 1);
      std::size_t lo = n, hi = 0, total = 0;
      for (const auto& f : fs) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
        total += f.size();
      }
      CHECK(hi - lo <= 1);
      CHECK(total == static_cast<std::size_t>(n));
    }
  CHECK_THROWS_AS(kfold_split(10, 1, 1), BadK);
  CHECK_THROWS_AS(kfold_split(4, 5, 1), BadK);
}

TEST_CASE("fold complement and row selection") {
  const Fold f{1, 3};
  CHECK(complement(f, 5) == Fold{0, 2, 4});
  Eigen::MatrixXd x(4, 2);
  x << 0, 1, 2, 3, 4, 5, 6, 7;
  const Eigen::MatrixXd s = take_rows(x, Fold{2, 0});
  CHECK(s(0, 0) == 4);
  CHECK(s(1, 1) == 1);
  Eigen::VectorXd y(4);
  y << 9, 8, 7, 6;
  CHECK(take(y, Fold{3})(0) == 6);
}

TEST_CASE("Nelder-Mead minimizes inside the box") {
  auto rosen = [](const Eigen::VectorXd& x) { return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2); };
  NelderMeadOptions o;
  o.max_iterations = 5000;
  o.f_tol = 1e-14;
  o.x_tol = 1e-10;
  const auto r = nelder_mead(rosen, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5), o);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.value <= r.initial_value);

  auto bowl = [](const Eigen::VectorXd& x) { return (x.array() - 3.0).square().sum(); };
  const auto b = nelder_mead(bowl, Eigen::Vector2d(0, 0), Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  CHECK(b.x(0) <= 1.0);
  CHECK(b.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(b.x(1) == doctest::Approx(1.0).epsilon(1e-6));

  auto holes = [](const Eigen::VectorXd& x) { return x(0) < 0 ? NAN : (x(0) - 0.5) * (x(0) - 0.5); };
  const auto h = nelder_mead(holes, Eigen::VectorXd::Constant(1, 0.1), Eigen::VectorXd::Constant(1, -1),
                             Eigen::VectorXd::Constant(1, 1));
  CHECK(h.x(0) == doctest::Approx(0.5).epsilon(1e-4));
}
