#pragma once

#include <Eigen/Dense>

namespace doebench {

enum class SvrKernelType { Linear, Polynomial, Rbf };

struct SvrKernel {
  SvrKernelType type = SvrKernelType::Rbf;
  double sigma = 1.0;   // RBF: exp(-sigma |x - x'|^2)
  int degree = 2;       // polynomial: (scale <x, x'> + offset)^degree
  double scale = 1.0;
  double offset = 0.0;

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) const;
};

Eigen::MatrixXd svr_gram(const SvrKernel& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct SvrParams {
  SvrKernel kernel;
  double c = 1.0;
  double epsilon = 0.1;
  double tolerance = 1e-3;  // maximal KKT violation at termination
  int max_iterations = 1000000;
};

struct SvrSolution {
  Eigen::VectorXd coef;    // alpha - alpha*, one per training row
  Eigen::VectorXd alpha;   // alpha (upper tube multipliers)
  Eigen::VectorXd alpha_star;
  double bias = 0.0;       // f(x) = sum coef_i k(x_i, x) + bias
  int iterations = 0;
  bool converged = false;
};

/// epsilon-SVR dual solved by SMO with second-order working-set selection,
/// given the training Gram matrix. `warm` optionally supplies a feasible
/// starting point (alpha, alpha*) from a solve with C no larger than p.c.
SvrSolution solve_svr(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, const SvrParams& p,
                      const SvrSolution* warm = nullptr);

class SvrModel {
 public:
  SvrModel(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& p);

  Eigen::VectorXd predict(const Eigen::MatrixXd& x_star) const;
  const SvrSolution& solution() const { return sol_; }
  const SvrParams& params() const { return params_; }

 private:
  SvrParams params_;
  Eigen::MatrixXd x_;
  SvrSolution sol_;
};

}  // namespace doebench
