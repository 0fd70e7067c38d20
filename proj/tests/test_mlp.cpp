#include <doctest.h>

#include <cmath>

#include "doebench/mlp.hpp"
#include "doebench/rng.hpp"
#include "mlp_check.hpp"

using namespace doebench;

using oracle::numeric_gradient;
using oracle::rel_error;

TEST_CASE("parameter layout and initialization") {
  Mlp net({6, {12, 6}, Activation::Tanh});
  CHECK(net.n_params() == (6 * 12 + 12) + (12 * 6 + 6) + (6 + 1));
  net.initialize(3);
  Mlp again({6, {12, 6}, Activation::Tanh});
  again.initialize(3);
  CHECK(net.params() == again.params());
  CHECK(net.params().cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("analytic gradients match central differences on random small networks") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = oracle::random_gradient_case(rng, trial);
    Eigen::VectorXd grad;
    const double loss = c.net.loss_and_gradient(c.x, c.y, c.pen, grad);
    CHECK(loss == doctest::Approx(c.net.loss(c.x, c.y, c.pen)).epsilon(1e-12));
    INFO("trial ", trial);
    CHECK(rel_error(grad, numeric_gradient(c.net, c.x, c.y, c.pen, nullptr)) <= 1e-4);
    c.net.loss_and_gradient(c.x, c.y, c.pen, grad, &c.masks);
    CHECK(rel_error(grad, numeric_gradient(c.net, c.x, c.y, c.pen, &c.masks)) <= 1e-4);
  }
}

TEST_CASE("training reduces the loss and is deterministic") {
  Rng rng(5);
  Eigen::MatrixXd x(40, 6);
  for (double& v : x.reshaped()) v = uniform01(rng);
  Eigen::VectorXd y(40);
  for (Eigen::Index i = 0; i < 40; ++i) y(i) = std::sin(3 * x(i, 0)) + x(i, 1);
  Mlp net({6, {6}, Activation::Logistic});
  net.initialize(1);
  const double before = net.loss(x, y, {});
  MlpTrainOptions o;
  o.max_epochs = 500;
  const double after = net.train(x, y, {}, o, 2);
  CHECK(after < 0.5 * before);
  Mlp twin({6, {6}, Activation::Logistic});
  twin.initialize(1);
  twin.train(x, y, {}, o, 2);
  CHECK(twin.params() == net.params());
  CHECK(net.predict(x).size() == 40);
}
