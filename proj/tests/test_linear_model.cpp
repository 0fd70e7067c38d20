#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "doebench/designgen.hpp"
#include "doebench/errors.hpp"
#include "doebench/linear_model.hpp"
#include "doebench/rng.hpp"

using namespace doebench;

namespace {

Eigen::MatrixXd six_level_design(int n, std::uint64_t seed) {
  ExchangeOptions o;
  o.levels.assign(6, six_levels());
  o.n_runs = n;
  o.seed = seed;
  return coordinate_exchange(o).points;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace

TEST_CASE("least squares matches the normal equations") {
  Rng rng(1);
  Eigen::MatrixXd f(30, 5);
  for (double& v : f.reshaped()) v = uniform01(rng);
  Eigen::VectorXd y(30);
  for (double& v : y) v = standard_normal(rng);
  const auto fit = least_squares(f, y);
  REQUIRE(fit.full_rank);
  const Eigen::VectorXd beta = (f.transpose() * f).inverse() * (f.transpose() * y);
  CHECK((fit.coefficients - beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.rss == doctest::Approx((y - f * beta).squaredNorm()).epsilon(1e-10));
  Eigen::MatrixXd dep(30, 6);
  dep << f, f.col(2);
  CHECK_FALSE(least_squares(dep, y).full_rank);
  CHECK_FALSE(least_squares(Eigen::MatrixXd::Ones(3, 4), y.head(3)).full_rank);
}

TEST_CASE("AIC formula") {
  CHECK(aic(2.0, 10, 3, 1e-24) == doctest::Approx(10 * std::log(0.2) + 6));
  CHECK(std::isfinite(aic(0.0, 10, 3, 1e-24)));
}

TEST_CASE("stepwise selection") {
  const Eigen::MatrixXd x = six_level_design(52, 3);
  const Eigen::MatrixXd m = model_matrix(x);
  const auto names = quadratic_term_names(6);
  auto col = [&](const std::string& n) {
    return static_cast<int>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  SUBCASE("constant response keeps only the intercept") {
    const auto r = stepwise_select(m, Eigen::VectorXd::Constant(52, 4.2));
    CHECK(r.columns == std::vector<int>{0});
  }
  SUBCASE("recovers the generating terms") {
    Rng rng(4);
    const Eigen::ArrayXd c1 = 2 * x.col(0).array() - 1, c2 = 2 * x.col(1).array() - 1;
    Eigen::VectorXd y = (3 * c1.square() - 2 * c1 * c2).matrix();
    for (double& v : y) v += 0.01 * standard_normal(rng);
    const auto r = stepwise_select(m, y);
    CHECK(contains(r.columns, col("x1^2")));
    CHECK(contains(r.columns, col("x1*x2")));
    CHECK(contains(r.columns, 0));
  }
  SUBCASE("a duplicated candidate column does not change the selected AIC") {
    Rng rng(5);
    Eigen::VectorXd y = m.col(3) + 0.5 * m.col(9);
    for (double& v : y) v += 0.1 * standard_normal(rng);
    Eigen::MatrixXd dup(52, 29);
    dup << m, m.col(9);
    const auto a = stepwise_select(m, y);
    const auto b = stepwise_select(dup, y);
    CHECK(a.aic == doctest::Approx(b.aic).epsilon(1e-12));
    CHECK(stepwise_select(m, y).columns == a.columns);
  }
}

TEST_CASE("quadratic LM") {
  const Eigen::MatrixXd x = six_level_design(52, 6);
  Rng rng(7);
  Eigen::VectorXd y(52);
  for (Eigen::Index i = 0; i < 52; ++i) y(i) = std::sin(3 * x(i, 0)) + x(i, 1) * x(i, 2) + 0.05 * standard_normal(rng);
  const QuadraticLm lm(x, y);
  // In-sample predictions equal the normal-equations fit on the selected terms.
  const Eigen::MatrixXd f = select_columns(model_matrix(x), lm.terms());
  const Eigen::VectorXd beta = (f.transpose() * f).ldlt().solve(f.transpose() * y);
  CHECK((lm.predict(x) - f * beta).cwiseAbs().maxCoeff() < 1e-8);

  DesignMatrix base;
  base.points = x.topRows(26);
  const auto repl = replicate(base, 0.5, 1);
  CHECK_THROWS_AS(QuadraticLm(repl.points, y), RankDeficient);
}
