#include "doebench/svr.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <limits>

namespace doebench {

namespace {
constexpr double kTau = 1e-12;
}

double SvrKernel::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                             const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
  switch (type) {
    case SvrKernelType::Linear: return a.dot(b);
    case SvrKernelType::Polynomial: return std::pow(scale * a.dot(b) + offset, degree);
    case SvrKernelType::Rbf: return std::exp(-sigma * (a - b).squaredNorm());
  }
  return 0.0;
}

Eigen::MatrixXd svr_gram(const SvrKernel& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd g(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) g(i, j) = k(a.row(i), b.row(j));
  return g;
}

SvrSolution solve_svr(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, const SvrParams& p,
                      const SvrSolution* warm) {
  // Variables t < n are alpha_t (sign +1), t >= n are alpha*_{t-n} (sign -1).
  const Eigen::Index n = y.size();
  const Eigen::Index l = 2 * n;
  const double c = p.c;
  Eigen::VectorXi sign(l);
  Eigen::VectorXd linear(l);
  for (Eigen::Index i = 0; i < n; ++i) {
    linear(i) = p.epsilon - y(i);
    linear(i + n) = p.epsilon + y(i);
    sign(i) = 1;
    sign(i + n) = -1;
  }
  Eigen::MatrixXd qm(l, l);
  qm << gram, -gram, -gram, gram;
  const Eigen::VectorXd qd = qm.diagonal();
  auto q = [&](Eigen::Index a, Eigen::Index b) { return qm(b, a); };  // symmetric; column access is contiguous

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(l);
  if (warm) {
    alpha.head(n) = warm->alpha.cwiseMin(c);
    alpha.tail(n) = warm->alpha_star.cwiseMin(c);
  }
  Eigen::VectorXd grad = linear + qm * alpha;
  auto upper = [&](Eigen::Index t) { return alpha(t) >= c; };
  auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

  // Newton step on the face of the current free variables (bounded ones held
  // fixed, sum of signed multipliers preserved), then an exact line search
  // clipped to the box. Speeds up SMO on low-rank kernels.
  auto polish = [&]() {
    std::vector<Eigen::Index> free;
    for (Eigen::Index t = 0; t < l; ++t)
      if (!upper(t) && !lower(t)) free.push_back(t);
    const auto m = static_cast<Eigen::Index>(free.size());
    if (m < 2) return;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    Eigen::VectorXd s(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) kkt(a, b) = qm(free[a], free[b]);
      s(a) = sign(free[a]);
      kkt(a, m) = kkt(m, a) = s(a);
      rhs(a) = -grad(free[a]);
    }
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
    const Eigen::VectorXd z = cod.solve(rhs);
    if (!z.allFinite()) return;
    // An inconsistent system leaves a residual in the null space of the face:
    // a zero-curvature descent direction, followed to the box boundary.
    const Eigen::VectorXd resid = rhs - kkt * z;
    Eigen::VectorXd d = resid.norm() > 1e-8 * (1.0 + rhs.norm()) ? resid.head(m) : z.head(m);
    d -= s * (s.dot(d) / static_cast<double>(m));
    double gd = 0.0, t_max = std::numeric_limits<double>::infinity();
    Eigen::Index hit = -1;
    for (Eigen::Index a = 0; a < m; ++a) {
      gd += grad(free[a]) * d(a);
      const double room = d(a) > 0.0 ? (c - alpha(free[a])) / d(a) : d(a) < 0.0 ? alpha(free[a]) / -d(a) : t_max;
      if (room < t_max) { t_max = room; hit = a; }
    }
    if (!(gd < 0.0)) return;
    double dqd = 0.0;
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) dqd += d(a) * kkt(a, b) * d(b);
    double step = dqd > 1e-14 * d.squaredNorm() ? -gd / dqd : std::numeric_limits<double>::infinity();
    bool at_bound = false;
    if (step >= t_max) { step = t_max; at_bound = true; }
    if (!std::isfinite(step) || step <= 0.0) return;
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index t = free[a];
      const double old = alpha(t);
      alpha(t) = std::clamp(old + step * d(a), 0.0, c);
      if (at_bound && a == hit) alpha(t) = d(a) > 0.0 ? c : 0.0;
      grad += qm.col(t) * (alpha(t) - old);
    }
  };
  const int polish_every = static_cast<int>(std::max<Eigen::Index>(100, 2 * l));

  SvrSolution sol;
  for (sol.iterations = 0; sol.iterations < p.max_iterations; ++sol.iterations) {
    if (sol.iterations > 0 && sol.iterations % polish_every == 0) polish();
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < l; ++t) {
      if (sign(t) == 1) {
        if (!upper(t) && -grad(t) >= gmax) { gmax = -grad(t); i = t; }
      } else {
        if (!lower(t) && grad(t) >= gmax) { gmax = grad(t); i = t; }
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best_obj = std::numeric_limits<double>::infinity();
    const double qii = i >= 0 ? qd(i) : 0.0;
    for (Eigen::Index t = 0; t < l; ++t) {
      if (sign(t) == 1) {
        if (lower(t)) continue;
        const double diff = gmax + grad(t);
        gmax2 = std::max(gmax2, grad(t));
        if (i >= 0 && diff > 0.0) {
          double quad = qii + qd(t) - 2.0 * sign(i) * q(i, t);
          if (quad <= 0.0) quad = kTau;
          const double obj = -diff * diff / quad;
          if (obj <= best_obj) { best_obj = obj; j = t; }
        }
      } else {
        if (upper(t)) continue;
        const double diff = gmax - grad(t);
        gmax2 = std::max(gmax2, -grad(t));
        if (i >= 0 && diff > 0.0) {
          double quad = qii + qd(t) + 2.0 * sign(i) * q(i, t);
          if (quad <= 0.0) quad = kTau;
          const double obj = -diff * diff / quad;
          if (obj <= best_obj) { best_obj = obj; j = t; }
        }
      }
    }
    if (gmax + gmax2 < p.tolerance || i < 0 || j < 0) {
      sol.converged = true;
      break;
    }

    const double old_i = alpha(i), old_j = alpha(j);
    const double qij = q(i, j);
    const double qjj = qd(j);
    if (sign(i) != sign(j)) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = -diff; }
      }
      if (diff > 0.0) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = c - diff; }
      } else {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = c + diff; }
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = sum - c; }
      } else {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = sum; }
      }
      if (sum > c) {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = sum - c; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = sum; }
      }
    }
    const double di = alpha(i) - old_i, dj = alpha(j) - old_j;
    grad += qm.col(i) * di + qm.col(j) * dj;
  }

  // Bias from free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < l; ++t) {
    const double yg = sign(t) * grad(t);
    if (upper(t)) {
      if (sign(t) == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (sign(t) == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  sol.alpha = alpha.head(n);
  sol.alpha_star = alpha.tail(n);
  sol.coef = sol.alpha - sol.alpha_star;
  sol.bias = -rho;
  return sol;
}

SvrModel::SvrModel(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& p)
    : params_(p), x_(x), sol_(solve_svr(svr_gram(p.kernel, x, x), y, p)) {}

Eigen::VectorXd SvrModel::predict(const Eigen::MatrixXd& x_star) const {
  return (svr_gram(params_.kernel, x_star, x_) * sol_.coef).array() + sol_.bias;
}

}  // namespace doebench
