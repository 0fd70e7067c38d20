#pragma once
// Central finite-difference gradient check for the MLP objective.

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "doebench/mlp.hpp"
#include "doebench/rng.hpp"

namespace oracle {

inline double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

inline Eigen::VectorXd numeric_gradient(const doebench::Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const doebench::MlpPenalty& pen,
                                        const std::vector<Eigen::MatrixXd>* masks, double h = 1e-5) {
  doebench::Mlp probe = net;
  Eigen::VectorXd g(net.n_params()), unused;
  for (Eigen::Index i = 0; i < net.n_params(); ++i) {
    const double w = net.params()(i);
    probe.params()(i) = w + h;
    const double up = probe.loss_and_gradient(x, y, pen, unused, masks);
    probe.params()(i) = w - h;
    const double down = probe.loss_and_gradient(x, y, pen, unused, masks);
    probe.params()(i) = w;
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

struct GradientCase {
  doebench::Mlp net;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  doebench::MlpPenalty pen;
  std::vector<Eigen::MatrixXd> masks;  // inverted-dropout masks, one per hidden layer
};

// Random small network: 1-4 inputs, 1-3 hidden layers of 2-6 units, 8 rows.
inline GradientCase random_gradient_case(doebench::Rng& rng, int trial) {
  using namespace doebench;
  static constexpr Activation kActs[] = {Activation::Logistic, Activation::Tanh, Activation::Relu};
  MlpArchitecture arch;
  arch.inputs = 1 + static_cast<int>(uniform_index(rng, 4));
  const int layers = 1 + static_cast<int>(uniform_index(rng, 3));
  for (int l = 0; l < layers; ++l) arch.hidden.push_back(2 + static_cast<int>(uniform_index(rng, 5)));
  arch.activation = kActs[trial % 3];
  GradientCase c{Mlp(arch), Eigen::MatrixXd(8, arch.inputs), Eigen::VectorXd(8),
                 {trial % 2 ? 1e-3 : 0.0, trial % 3 ? 1e-2 : 0.0, 0.0}, {}};
  c.net.initialize(1000 + static_cast<std::uint64_t>(trial));
  // Biases start at zero, which can park a ReLU unit exactly on its kink.
  for (double& w : c.net.params()) w += 0.1 * standard_normal(rng);
  for (double& v : c.x.reshaped()) v = uniform01(rng);
  for (double& v : c.y) v = standard_normal(rng);
  for (int h : arch.hidden) {
    Eigen::MatrixXd m(h, 8);
    for (double& v : m.reshaped()) v = uniform01(rng) < 0.2 ? 0.0 : 1.0 / 0.8;
    c.masks.push_back(m);
  }
  return c;
}

}  // namespace oracle
