#include "doebench/mlp.hpp"

#include <cmath>
#include <limits>

#include "doebench/rng.hpp"

namespace doebench {

namespace {

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::Logistic: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Relu: return z.cwiseMax(0.0);
  }
  return z;
}

// Derivative expressed through the pre-activation z and the output h.
Eigen::MatrixXd activate_derivative(Activation a, const Eigen::MatrixXd& z, const Eigen::MatrixXd& h) {
  switch (a) {
    case Activation::Logistic: return (h.array() * (1.0 - h.array())).matrix();
    case Activation::Tanh: return (1.0 - h.array().square()).matrix();
    case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

}  // namespace

Mlp::Mlp(MlpArchitecture arch) : arch_(std::move(arch)) {
  Eigen::Index offset = 0;
  int in = arch_.inputs;
  std::vector<int> outs = arch_.hidden;
  outs.push_back(1);
  for (int out : outs) {
    Layer l{offset, offset + static_cast<Eigen::Index>(in) * out, in, out};
    layers_.push_back(l);
    offset = l.b_offset + out;
    in = out;
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

void Mlp::initialize(std::uint64_t seed) {
  Rng rng(derive_seed({seed, hash_string("mlp-init")}));
  for (const Layer& l : layers_) {
    const double a = std::sqrt(6.0 / (l.in + l.out));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(l.in) * l.out; ++k)
      params_(l.w_offset + k) = a * (2.0 * uniform01(rng) - 1.0);
    params_.segment(l.b_offset, l.out).setZero();
  }
}

Eigen::VectorXd Mlp::predict(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x.transpose();  // features x samples
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + l.w_offset, l.out, l.in);
    Eigen::MatrixXd z = w * h;
    z.colwise() += params_.segment(l.b_offset, l.out);
    h = k + 1 < layers_.size() ? activate(arch_.activation, z) : z;
  }
  return h.row(0).transpose();
}

double Mlp::loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpPenalty& pen) const {
  double weight_l1 = 0.0, weight_l2 = 0.0;
  for (const Layer& l : layers_) {
    const auto w = params_.segment(l.w_offset, static_cast<Eigen::Index>(l.in) * l.out);
    weight_l1 += w.cwiseAbs().sum();
    weight_l2 += w.squaredNorm();
  }
  return 0.5 * (predict(x) - y).squaredNorm() / static_cast<double>(y.size()) + pen.l1 * weight_l1 +
         0.5 * pen.l2 * weight_l2;
}

double Mlp::loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpPenalty& pen,
                              Eigen::VectorXd& grad, const std::vector<Eigen::MatrixXd>* masks) const {
  const double n = static_cast<double>(y.size());
  std::vector<Eigen::MatrixXd> hs{x.transpose()}, zs;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + l.w_offset, l.out, l.in);
    Eigen::MatrixXd z = w * hs.back();
    z.colwise() += params_.segment(l.b_offset, l.out);
    zs.push_back(z);
    if (k + 1 < layers_.size()) {
      Eigen::MatrixXd h = activate(arch_.activation, z);
      if (masks) h = h.cwiseProduct((*masks)[k]);
      hs.push_back(std::move(h));
    } else {
      hs.push_back(z);
    }
  }
  const Eigen::RowVectorXd resid = hs.back().row(0) - y.transpose();
  double value = 0.5 * resid.squaredNorm() / n;

  grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = resid / n;  // dL/dz at the output, 1 x samples
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Layer& l = layers_[k];
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + l.w_offset, l.out, l.in);
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + l.w_offset, l.out, l.in);
    gw = delta * hs[k].transpose();
    grad.segment(l.b_offset, l.out) = delta.rowwise().sum();
    if (k > 0) {
      Eigen::MatrixXd back = w.transpose() * delta;
      Eigen::MatrixXd act = activate(arch_.activation, zs[k - 1]);
      Eigen::MatrixXd deriv = activate_derivative(arch_.activation, zs[k - 1], act);
      if (masks) deriv = deriv.cwiseProduct((*masks)[k - 1]);
      delta = back.cwiseProduct(deriv);
    }
  }
  for (const Layer& l : layers_) {
    const Eigen::Index m = static_cast<Eigen::Index>(l.in) * l.out;
    const auto w = params_.segment(l.w_offset, m);
    value += pen.l1 * w.cwiseAbs().sum() + 0.5 * pen.l2 * w.squaredNorm();
    grad.segment(l.w_offset, m) += pen.l1 * w.cwiseSign() + pen.l2 * w;
  }
  return value;
}

double Mlp::train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpPenalty& pen,
                  const MlpTrainOptions& opts, std::uint64_t seed) {
  Rng rng(derive_seed({seed, hash_string("mlp-dropout")}));
  const bool dropout = pen.dropout > 0.0 && !arch_.hidden.empty();
  const double keep = 1.0 - pen.dropout;
  std::vector<Eigen::MatrixXd> masks;

  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(params_.size());
  Eigen::VectorXd grad;
  Eigen::VectorXd best_params = params_;
  double best = std::numeric_limits<double>::infinity();
  double lr = opts.learning_rate;
  int since_best = 0;
  for (int epoch = 0; epoch < opts.max_epochs && lr >= opts.min_learning_rate; ++epoch) {
    if (dropout) {
      masks.clear();
      for (int width : arch_.hidden) {
        Eigen::MatrixXd m(width, x.rows());
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = uniform01(rng) < keep ? 1.0 / keep : 0.0;
        masks.push_back(std::move(m));
      }
    }
    const double value = loss_and_gradient(x, y, pen, grad, dropout ? &masks : nullptr);
    if (!std::isfinite(value)) {
      params_ = best_params;
      velocity.setZero();
      lr *= 0.5;
      continue;
    }
    if (value < best * (1.0 - 1e-6)) {
      best = value;
      best_params = params_;
      since_best = 0;
    } else if (++since_best >= opts.plateau_epochs) {
      lr *= 0.5;
      since_best = 0;
    }
    velocity = opts.momentum * velocity - lr * grad;
    params_ += velocity;
  }
  if (!dropout) {
    const double final_value = loss(x, y, pen);
    if (!(final_value <= best)) params_ = best_params;
  }
  return loss(x, y, pen);
}

}  // namespace doebench
