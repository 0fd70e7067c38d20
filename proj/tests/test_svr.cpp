#include <doctest.h>

#include <cmath>

#include "doebench/rng.hpp"
#include "doebench/sampling.hpp"
#include "doebench/svr.hpp"

using namespace doebench;

namespace {

struct Data {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Data grid_data() {
  Data d{Eigen::MatrixXd(30, 2), Eigen::VectorXd(30)};
  for (int i = 0; i < 30; ++i) {
    d.x(i, 0) = (i * 7 % 30) / 29.0;
    d.x(i, 1) = (i * 13 % 30) / 29.0;
    d.y(i) = std::sin(3 * d.x(i, 0)) + d.x(i, 1) * d.x(i, 1);
  }
  return d;
}

Eigen::MatrixXd test_points() {
  Eigen::MatrixXd t(5, 2);
  t << 0.1, 0.9, 0.5, 0.5, 0.33, 0.12, 0.8, 0.4, 0.95, 0.05;
  return t;
}

// KKT conditions of the epsilon-insensitive dual in terms of coef = alpha - alpha*.
void check_kkt(const SvrModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tol) {
  const auto& s = m.solution();
  const double c = m.params().c, eps = m.params().epsilon;
  const Eigen::VectorXd e = y - m.predict(x);
  CHECK(std::abs(s.coef.sum()) <= 1e-9 * c * static_cast<double>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    CHECK(s.alpha(i) * s.alpha_star(i) == 0.0);
    const double a = s.coef(i);
    CHECK(std::abs(a) <= c);
    if (a == 0.0) CHECK(std::abs(e(i)) <= eps + tol);
    else if (a == c) CHECK(e(i) >= eps - tol);
    else if (a == -c) CHECK(e(i) <= -eps + tol);
    else if (a > 0.0) CHECK(std::abs(e(i) - eps) <= tol);
    else CHECK(std::abs(e(i) + eps) <= tol);
  }
}

}  // namespace

TEST_CASE("kernels") {
  const Eigen::RowVector2d a(0.2, 0.4), b(0.5, 0.1);
  SvrKernel lin{SvrKernelType::Linear};
  CHECK(lin(a, b) == doctest::Approx(0.14));
  SvrKernel poly{SvrKernelType::Polynomial, 1.0, 3, 0.5, 1.0};
  CHECK(poly(a, b) == doctest::Approx(std::pow(0.5 * 0.14 + 1.0, 3)));
  SvrKernel rbf{SvrKernelType::Rbf, 2.0};
  CHECK(rbf(a, b) == doctest::Approx(std::exp(-2.0 * 0.18)));
  CHECK(rbf(a, a) == 1.0);
}

TEST_CASE("solution matches a reference SMO solver") {
  // Predictions of a reference libsvm epsilon-SVR fit (tolerance 1e-6) on
  // the same data, frozen.
  const Data d = grid_data();
  SvrParams p;
  p.c = 10;
  p.epsilon = 0.05;
  p.tolerance = 1e-6;
  p.kernel = {SvrKernelType::Rbf, 2.0};
  const SvrModel rbf(d.x, d.y, p);
  const Eigen::VectorXd want_rbf =
      (Eigen::VectorXd(5) << 1.1538698675063774, 1.2480624136524128, 0.8070863917329651, 0.7878147282541376,
       0.3730850159929914)
          .finished();
  CHECK((rbf.predict(test_points()) - want_rbf).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(rbf.solution().bias == doctest::Approx(0.5609586585759532).epsilon(1e-3));

  p.kernel = {SvrKernelType::Polynomial, 1.0, 2, 1.0, 1.0};
  const SvrModel poly(d.x, d.y, p);
  const Eigen::VectorXd want_poly =
      (Eigen::VectorXd(5) << 1.1562725826900042, 1.1981060176949736, 0.8340635369979575, 0.8541671728697134,
       0.3400779781002593)
          .finished();
  CHECK((poly.predict(test_points()) - want_poly).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("KKT conditions hold on the training data") {
  Rng rng(3);
  const Eigen::MatrixXd x = random_lhd(52, 6, rng);
  Eigen::VectorXd y(52);
  for (Eigen::Index i = 0; i < 52; ++i) y(i) = std::sin(2 * x(i, 0)) + x(i, 1) * x(i, 2) + 0.1 * standard_normal(rng);
  y = (y.array() - y.mean()) / std::sqrt((y.array() - y.mean()).square().mean());
  for (SvrKernel k : {SvrKernel{SvrKernelType::Linear}, SvrKernel{SvrKernelType::Polynomial, 1.0, 3, 0.5, 1.0},
                      SvrKernel{SvrKernelType::Rbf, 0.5}, SvrKernel{SvrKernelType::Rbf, 5.0}}) {
    for (double c : {0.1, 1.0, 100.0}) {
      SvrParams p;
      p.kernel = k;
      p.c = c;
      p.epsilon = 0.05;
      const SvrModel m(x, y, p);
      CHECK(m.solution().converged);
      check_kkt(m, x, y, 1e-3);
    }
  }
}

TEST_CASE("warm start reaches the cold-start optimum") {
  const Data d = grid_data();
  SvrParams p;
  p.kernel = {SvrKernelType::Rbf, 1.0};
  p.epsilon = 0.01;
  p.tolerance = 1e-6;
  const Eigen::MatrixXd g = svr_gram(p.kernel, d.x, d.x);
  p.c = 1.0;
  const SvrSolution low = solve_svr(g, d.y, p);
  p.c = 10.0;
  const SvrSolution cold = solve_svr(g, d.y, p);
  const SvrSolution warm = solve_svr(g, d.y, p, &low);
  CHECK(warm.converged);
  const Eigen::VectorXd fc = g * cold.coef, fw = g * warm.coef;
  CHECK(((fc.array() + cold.bias) - (fw.array() + warm.bias)).abs().maxCoeff() < 1e-4);
}
