#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace doebench {

enum class Activation { Logistic, Tanh, Relu };

struct MlpArchitecture {
  int inputs = 6;
  std::vector<int> hidden;  // neurons per hidden layer
  Activation activation = Activation::Tanh;
};

struct MlpPenalty {
  double l1 = 0.0;       // sum |w| over weights (not biases)
  double l2 = 0.0;       // 0.5 * l2 * sum w^2
  double dropout = 0.0;  // hidden-unit drop probability during training
};

struct MlpTrainOptions {
  int max_epochs = 2000;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  int plateau_epochs = 50;   // halve the rate after this many epochs without improvement
  double min_learning_rate = 1e-6;
};

/// Fully connected network with a single linear output. Parameters are
/// stored flat, layer by layer: weight matrix (out x in, column-major) then bias.
class Mlp {
 public:
  explicit Mlp(MlpArchitecture arch);

  Eigen::Index n_params() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  const MlpArchitecture& architecture() const { return arch_; }

  void initialize(std::uint64_t seed);

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;

  /// Training objective 0.5 * mean squared error + penalties, without dropout.
  double loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpPenalty& pen) const;

  /// Loss and its analytic gradient. `masks` holds one keep-mask (already
  /// divided by the keep probability) per hidden layer, or is empty.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpPenalty& pen,
                           Eigen::VectorXd& grad, const std::vector<Eigen::MatrixXd>* masks = nullptr) const;

  /// Full-batch gradient descent with momentum; returns the final loss.
  double train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpPenalty& pen,
               const MlpTrainOptions& opts, std::uint64_t seed);

 private:
  struct Layer {
    Eigen::Index w_offset, b_offset;
    int in, out;
  };
  MlpArchitecture arch_;
  std::vector<Layer> layers_;
  Eigen::VectorXd params_;
};

}  // namespace doebench
