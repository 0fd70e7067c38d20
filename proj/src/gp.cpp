#include "doebench/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "doebench/designgen.hpp"
#include "doebench/errors.hpp"
#include "doebench/linear_model.hpp"
#include "doebench/optim.hpp"
#include "doebench/rng.hpp"

namespace doebench {

namespace {

const double kSqrt5 = std::sqrt(5.0);
const double kSqrt3 = std::sqrt(3.0);
constexpr double kTau2Floor = 1e-300;
constexpr double kLogFloor = 600.0;

double sample_variance(const Eigen::VectorXd& y) {
  if (y.size() < 2) return 0.0;
  return (y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1);
}

double nugget_ratio(double nugget, const Eigen::VectorXd& y) {
  const double v = sample_variance(y);
  return v > 0.0 ? nugget / v : nugget;
}

// Correlation of one pair from its per-coordinate absolute differences.
// Accumulates in log space so each pair costs a single exp.
template <class Diff>
double pair_correlation(const KernelSpec& k, const Diff& diff, Eigen::Index d) {
  double s = 0.0;
  double poly = 1.0;
  switch (k.family) {
    case KernelFamily::Gaussian:
      for (Eigen::Index c = 0; c < d; ++c) {
        const double u = diff(c) / k.theta(c);
        s += 0.5 * u * u;
      }
      return std::exp(-s);
    case KernelFamily::Exponential:
      for (Eigen::Index c = 0; c < d; ++c) s += diff(c) / k.theta(c);
      return std::exp(-s);
    case KernelFamily::PowerExponential:
      if (k.t == 1.5) {
        for (Eigen::Index c = 0; c < d; ++c) {
          const double u = diff(c) / k.theta(c);
          s += u * std::sqrt(u);
        }
      } else {
        for (Eigen::Index c = 0; c < d; ++c) s += std::pow(diff(c) / k.theta(c), k.t);
      }
      return std::exp(-s);
    case KernelFamily::Matern52:
      for (Eigen::Index c = 0; c < d; ++c) {
        const double a = kSqrt5 * diff(c) / k.theta(c);
        poly *= 1.0 + a + a * a / 3.0;
        s += a;
      }
      return poly * std::exp(-s);
    case KernelFamily::Matern32:
      for (Eigen::Index c = 0; c < d; ++c) {
        const double a = kSqrt3 * diff(c) / k.theta(c);
        poly *= 1.0 + a;
        s += a;
      }
      return poly * std::exp(-s);
  }
  return 0.0;
}

// Pairwise absolute differences of the rows of x, one column per pair (i < j),
// with per-family powers cached so a correlation build is a few vector ops.
struct PairDiffs {
  Eigen::Index n = 0;
  Eigen::ArrayXXd diffs;    // d x n(n-1)/2
  Eigen::ArrayXXd squared;  // diffs^2
  Eigen::ArrayXXd pow15;    // diffs^1.5

  explicit PairDiffs(const Eigen::MatrixXd& x) : n(x.rows()), diffs(x.cols(), n * (n - 1) / 2) {
    Eigen::Index p = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < j; ++i) diffs.col(p++) = (x.row(i) - x.row(j)).cwiseAbs().transpose().array();
    squared = diffs.square();
    pow15 = diffs * diffs.sqrt();
  }

  // Correlation of every pair, laid out like the columns of diffs.
  Eigen::ArrayXd pairs(const KernelSpec& k) const {
    const Eigen::Index d = diffs.rows();
    const Eigen::Index m = diffs.cols();
    const Eigen::ArrayXd inv = k.theta.array().inverse();
    Eigen::ArrayXd poly, s;
    switch (k.family) {
      case KernelFamily::Gaussian:
        s = (squared.matrix().transpose() * (0.5 * inv.square()).matrix()).array();
        break;
      case KernelFamily::Exponential:
        s = (diffs.matrix().transpose() * inv.matrix()).array();
        break;
      case KernelFamily::PowerExponential:
        if (k.t == 1.5) s = (pow15.matrix().transpose() * inv.pow(1.5).matrix()).array();
        else s = (diffs.pow(k.t).matrix().transpose() * inv.pow(k.t).matrix()).array();
        break;
      case KernelFamily::Matern52:
      case KernelFamily::Matern32: {
        const bool m52 = k.family == KernelFamily::Matern52;
        const double c = m52 ? kSqrt5 : kSqrt3;
        poly = Eigen::ArrayXd::Ones(m);
        s = Eigen::ArrayXd::Zero(m);
        for (Eigen::Index r = 0; r < d; ++r) {
          const Eigen::ArrayXd a = diffs.row(r).transpose() * (c * inv(r));
          poly *= m52 ? (1.0 + a + a.square() / 3.0).eval() : (1.0 + a).eval();
          s += a;
        }
        break;
      }
    }
    // Flush correlations below e^-kLogFloor to zero; subnormal exp results are slow.
    Eigen::ArrayXd v = (s < kLogFloor).select((-s.min(kLogFloor)).exp(), 0.0);
    if (poly.size() > 0) v = (s < kLogFloor).select(poly * v, 0.0);
    return v;
  }

  Eigen::MatrixXd correlation(const KernelSpec& k, double ratio) const {
    const Eigen::ArrayXd v = pairs(k);
    Eigen::MatrixXd r(n, n);
    Eigen::Index p = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < j; ++i) r(i, j) = v(p++);
      r(j, j) = 1.0 + ratio;
    }
    return r;  // upper triangle only
  }
};

struct Profile {
  Eigen::LLT<Eigen::MatrixXd, Eigen::Upper> llt;
  Eigen::VectorXd beta;
  Eigen::VectorXd weights;
  double tau2 = 0.0;
  double nll = 0.0;
};

Profile profile(const Eigen::MatrixXd& r_upper, const Eigen::VectorXd& y, const Eigen::MatrixXd& f) {
  Profile out;
  out.llt.compute(r_upper);
  if (out.llt.info() != Eigen::Success) throw NotPositiveDefinite("GP: correlation matrix is not positive definite");
  const Eigen::Index n = y.size();
  const auto l = out.llt.matrixL();
  const Eigen::MatrixXd fw = l.solve(f);
  const Eigen::VectorXd yw = l.solve(y);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fw);
  out.beta = qr.solve(yw);
  const Eigen::VectorXd rw = yw - fw * out.beta;
  out.tau2 = std::max(rw.squaredNorm() / static_cast<double>(n), kTau2Floor);
  out.weights = out.llt.matrixU().solve(rw);
  double log_det = 0.0;
  const auto& m = out.llt.matrixLLT();
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(m(i, i));
  const double dn = static_cast<double>(n);
  out.nll = 0.5 * (dn * std::log(out.tau2) + log_det + dn + dn * std::log(2.0 * std::numbers::pi));
  return out;
}

}  // namespace

const char* to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Gaussian: return "Gaussian";
    case KernelFamily::Exponential: return "Exponential";
    case KernelFamily::PowerExponential: return "PowerExponential";
    case KernelFamily::Matern52: return "Matern52";
    case KernelFamily::Matern32: return "Matern32";
  }
  return "?";
}

const char* to_string(GpTrend t) {
  return t == GpTrend::Constant ? "Constant" : "QuadraticStepwise";
}

double kernel_1d(KernelFamily family, double r, double theta, double t) {
  const double u = r / theta;
  switch (family) {
    case KernelFamily::Gaussian: return std::exp(-0.5 * u * u);
    case KernelFamily::Exponential: return std::exp(-u);
    case KernelFamily::PowerExponential: return std::exp(-std::pow(u, t));
    case KernelFamily::Matern52: return (1.0 + kSqrt5 * u + 5.0 * u * u / 3.0) * std::exp(-kSqrt5 * u);
    case KernelFamily::Matern32: return (1.0 + kSqrt3 * u) * std::exp(-kSqrt3 * u);
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> x2) {
  double v = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    v *= kernel_1d(k.family, std::abs(x[i] - x2[i]), k.theta(static_cast<Eigen::Index>(i)), k.t);
  return v;
}

Eigen::MatrixXd correlation_matrix(const KernelSpec& k, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd r = PairDiffs(x).correlation(k, 0.0);
  return r.selfadjointView<Eigen::Upper>();
}

Eigen::MatrixXd cross_correlation(const KernelSpec& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out(i, j) = pair_correlation(k, (a.row(i) - b.row(j)).cwiseAbs(), a.cols());
  return out;
}

TrendBasis TrendBasis::constant() { return {}; }

TrendBasis TrendBasis::stepwise(const Eigen::MatrixXd& x01, const Eigen::VectorXd& y) {
  TrendBasis b;
  b.trend = GpTrend::QuadraticStepwise;
  b.columns = stepwise_select(model_matrix(x01), y).columns;
  return b;
}

Eigen::MatrixXd TrendBasis::evaluate(const Eigen::MatrixXd& x01) const {
  if (trend == GpTrend::Constant) return Eigen::MatrixXd::Ones(x01.rows(), 1);
  return select_columns(model_matrix(x01), columns);
}

double default_nugget(const Eigen::VectorXd& y) { return 1e-8 * sample_variance(y); }

double gp_neg_loglik(const KernelSpec& k, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double nugget,
                     const Eigen::MatrixXd& trend_basis) {
  if (x.rows() != y.size() || trend_basis.rows() != y.size())
    throw LengthMismatch("gp_neg_loglik: row counts differ");
  return profile(PairDiffs(x).correlation(k, nugget_ratio(nugget, y)), y, trend_basis).nll;
}

GpModel::GpModel(KernelSpec kernel, TrendBasis trend, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 double nugget)
    : kernel_(std::move(kernel)), trend_(std::move(trend)), x_(x), nugget_(nugget) {
  const Profile p = profile(PairDiffs(x).correlation(kernel_, nugget_ratio(nugget, y)), y, trend_.evaluate(x));
  beta_ = p.beta;
  weights_ = p.weights;
  tau2_ = p.tau2;
  nll_ = p.nll;
}

Eigen::VectorXd GpModel::predict(const Eigen::MatrixXd& x_star) const {
  return trend_.evaluate(x_star) * beta_ + cross_correlation(kernel_, x_star, x_) * weights_;
}

GpMleResult gp_mle(KernelFamily family, double t, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   double nugget, const TrendBasis& trend, std::uint64_t seed, const GpMleOptions& opts) {
  const Eigen::Index d = x.cols();
  const PairDiffs pairs(x);
  const Eigen::MatrixXd f = trend.evaluate(x);
  const double ratio = nugget_ratio(nugget, y);
  KernelSpec k{family, Eigen::VectorXd(d), t};

  GpMleResult res;
  auto objective = [&](const Eigen::VectorXd& log_theta) {
    ++res.evaluations;
    k.theta = log_theta.array().exp().cwiseMax(opts.theta_lo).cwiseMin(opts.theta_hi);  // exp(log(b)) can overshoot b by an ulp
    try {
      return profile(pairs.correlation(k, ratio), y, f).nll;
    } catch (const NotPositiveDefinite&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, std::log(opts.theta_lo));
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, std::log(opts.theta_hi));
  NelderMeadOptions nm;
  nm.max_iterations = opts.max_iterations;
  nm.initial_step = opts.initial_step;

  Rng rng(derive_seed({seed, hash_string("gp-mle")}));
  const double a = std::log(opts.start_lo), b = std::log(opts.start_hi);
  res.neg_loglik = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (int s = 0; s < opts.restarts; ++s) {
    Eigen::VectorXd x0(d);
    for (Eigen::Index c = 0; c < d; ++c) x0(c) = a + (b - a) * uniform01(rng);
    const auto r = nelder_mead(objective, x0, lo, hi, nm);
    res.start_values.push_back(r.initial_value);
    res.final_values.push_back(r.value);
    if (r.value < res.neg_loglik || best_x.size() == 0) {
      res.neg_loglik = r.value;
      best_x = r.x;
    }
  }
  res.kernel = KernelSpec{family, best_x.array().exp().cwiseMax(opts.theta_lo).cwiseMin(opts.theta_hi), t};
  return res;
}

}  // namespace doebench
