#include "doebench/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "doebench/cv.hpp"
#include "doebench/errors.hpp"
#include "doebench/forest.hpp"
#include "doebench/gp.hpp"
#include "doebench/linear_model.hpp"
#include "doebench/mlp.hpp"
#include "doebench/rng.hpp"
#include "doebench/svr.hpp"

namespace doebench {

std::string_view to_string(ModelId m) {
  switch (m) {
    case ModelId::LM: return "LM";
    case ModelId::GP: return "GP";
    case ModelId::SVM: return "SVM";
    case ModelId::RF: return "RF";
    case ModelId::ANN_sh: return "ANN_sh";
    case ModelId::ANN_dp: return "ANN_dp";
  }
  return "?";
}

std::optional<ModelId> parse_model(std::string_view name) {
  for (ModelId m : kAllModels)
    if (to_string(m) == name) return m;
  return std::nullopt;
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size() || pred.size() == 0) throw LengthMismatch("rmse: lengths differ or are zero");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

std::string format_hyperparameters(const Hyperparameters& h) {
  std::string out;
  for (const auto& [k, v] : h) {
    if (!out.empty()) out += ';';
    out += k + '=' + v;
  }
  return out;
}

namespace {

template <class Model>
class Wrapped final : public Predictor {
 public:
  explicit Wrapped(Model m) : m_(std::move(m)) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override { return m_.predict(x); }

 private:
  Model m_;
};

template <class Model>
std::shared_ptr<const Predictor> wrap(Model m) {
  return std::make_shared<Wrapped<Model>>(std::move(m));
}

std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

struct CvData {
  std::vector<Eigen::MatrixXd> x_train, x_test;
  std::vector<Eigen::VectorXd> y_train, y_test;
  Eigen::Index n_total = 0;
};

CvData make_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k, std::uint64_t seed) {
  CvData cv;
  cv.n_total = y.size();
  for (const Fold& f : kfold_split(y.size(), k, derive_seed({seed, hash_string("cv-folds")}))) {
    const Fold tr = complement(f, y.size());
    cv.x_train.push_back(take_rows(x, tr));
    cv.y_train.push_back(take(y, tr));
    cv.x_test.push_back(take_rows(x, f));
    cv.y_test.push_back(take(y, f));
  }
  return cv;
}

// Pooled CV RMSE; `predict_fold(f)` returns held-out predictions for fold f.
// Failures or non-finite predictions make the configuration ineligible.
double cv_rmse(const CvData& cv, const std::function<Eigen::VectorXd(std::size_t)>& predict_fold) {
  double sse = 0.0;
  for (std::size_t f = 0; f < cv.y_test.size(); ++f) {
    Eigen::VectorXd p;
    try {
      p = predict_fold(f);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    if (!p.allFinite()) return std::numeric_limits<double>::infinity();
    sse += (p - cv.y_test[f]).squaredNorm();
  }
  return std::sqrt(sse / static_cast<double>(cv.n_total));
}

FittedModel fit_lm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  QuadraticLm lm(x, y);
  FittedModel out;
  out.model_id = ModelId::LM;
  out.hyperparameters = {{"terms", std::to_string(lm.terms().size())}};
  out.predictor = wrap(std::move(lm));
  return out;
}

FittedModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed, const FitOptions& o) {
  struct Family {
    KernelFamily family;
    double t;
  };
  // PowerExponential with t = 1 and t = 2 coincides with Exponential and a
  // rescaled Gaussian, so only t = 1.5 is a distinct candidate.
  const Family families[] = {{KernelFamily::Gaussian, 2.0},
                             {KernelFamily::Exponential, 1.0},
                             {KernelFamily::PowerExponential, 1.5},
                             {KernelFamily::Matern52, 2.0},
                             {KernelFamily::Matern32, 2.0}};
  const CvData cv = make_cv(x, y, o.cv_folds, seed);
  const double nugget = default_nugget(y);
  GpMleOptions mle;
  mle.restarts = o.gp_restarts;
  mle.max_iterations = o.gp_max_iterations;
  mle.theta_lo = o.gp_theta_lo;
  mle.theta_hi = o.gp_theta_hi;
  mle.start_lo = std::clamp(mle.start_lo, o.gp_theta_lo, o.gp_theta_hi);
  mle.start_hi = std::clamp(mle.start_hi, o.gp_theta_lo, o.gp_theta_hi);

  double best_cv = std::numeric_limits<double>::infinity();
  std::optional<GpModel> best;
  int config = 0;
  for (const TrendBasis& trend : {TrendBasis::constant(), TrendBasis::stepwise(x, y)}) {
    for (const Family& fam : families) {
      const std::uint64_t s = derive_seed({seed, hash_string("gp-config"), static_cast<std::uint64_t>(config++)});
      try {
        const GpMleResult r = gp_mle(fam.family, fam.t, x, y, nugget, trend, s, mle);
        const double score = cv_rmse(cv, [&](std::size_t f) {
          return GpModel(r.kernel, trend, cv.x_train[f], cv.y_train[f], default_nugget(cv.y_train[f]))
              .predict(cv.x_test[f]);
        });
        if (score < best_cv || !best) {
          GpModel m(r.kernel, trend, x, y, nugget);
          best_cv = score;
          best = std::move(m);
        }
      } catch (const NotPositiveDefinite&) {
        continue;
      }
    }
  }
  if (!best) throw NotPositiveDefinite("GP: no kernel configuration could be fitted");
  FittedModel out;
  out.model_id = ModelId::GP;
  out.cv_rmse = best_cv;
  std::string theta;
  for (Eigen::Index c = 0; c < best->kernel().theta.size(); ++c)
    theta += (c ? "," : "") + num(best->kernel().theta(c));
  out.hyperparameters = {{"kernel", to_string(best->kernel().family)},
                         {"t", num(best->kernel().t)},
                         {"trend", to_string(best->trend().trend)},
                         {"theta", theta},
                         {"tau2", num(best->tau2())},
                         {"nugget", num(best->nugget())}};
  out.predictor = wrap(std::move(*best));
  return out;
}

std::vector<SvrKernel> svr_kernel_grid() {
  std::vector<SvrKernel> grid;
  grid.push_back({SvrKernelType::Linear});
  for (int degree : {2, 3})
    for (double scale : {0.5, 1.0})
      for (double offset : {0.0, 1.0}) {
        SvrKernel k{SvrKernelType::Polynomial};
        k.degree = degree;
        k.scale = scale;
        k.offset = offset;
        grid.push_back(k);
      }
  for (double sigma : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    SvrKernel k{SvrKernelType::Rbf};
    k.sigma = sigma;
    grid.push_back(k);
  }
  return grid;
}

std::string describe(const SvrKernel& k) {
  switch (k.type) {
    case SvrKernelType::Linear: return "linear";
    case SvrKernelType::Polynomial:
      return "poly(degree=" + std::to_string(k.degree) + ",scale=" + num(k.scale) + ",offset=" + num(k.offset) + ")";
    case SvrKernelType::Rbf: return "rbf(sigma=" + num(k.sigma) + ")";
  }
  return "?";
}

FittedModel fit_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed, const FitOptions& o) {
  const CvData cv = make_cv(x, y, o.cv_folds, seed);
  double best_cv = std::numeric_limits<double>::infinity();
  SvrParams best;
  for (const SvrKernel& k : svr_kernel_grid()) {
    std::vector<Eigen::MatrixXd> gram_train, gram_test;
    for (std::size_t f = 0; f < cv.x_train.size(); ++f) {
      gram_train.push_back(svr_gram(k, cv.x_train[f], cv.x_train[f]));
      gram_test.push_back(svr_gram(k, cv.x_test[f], cv.x_train[f]));
    }
    // C ascends innermost so each fold's solve warm-starts from the previous C.
    for (double eps : {0.01, 0.05, 0.1}) {
      std::vector<std::optional<SvrSolution>> previous(cv.x_train.size());
      for (double c : {0.1, 1.0, 10.0, 100.0}) {
        SvrParams p;
        p.kernel = k;
        p.c = c;
        p.epsilon = eps;
        const double score = cv_rmse(cv, [&](std::size_t f) {
          previous[f] = solve_svr(gram_train[f], cv.y_train[f], p, previous[f] ? &*previous[f] : nullptr);
          return Eigen::VectorXd((gram_test[f] * previous[f]->coef).array() + previous[f]->bias);
        });
        if (score < best_cv) {
          best_cv = score;
          best = p;
        }
      }
    }
  }
  FittedModel out;
  out.model_id = ModelId::SVM;
  out.cv_rmse = best_cv;
  out.hyperparameters = {{"kernel", describe(best.kernel)}, {"C", num(best.c)}, {"epsilon", num(best.epsilon)}};
  out.predictor = wrap(SvrModel(x, y, best));
  return out;
}

FittedModel fit_rf(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed, const FitOptions& o) {
  const CvData cv = make_cv(x, y, o.cv_folds, seed);
  double best_cv = std::numeric_limits<double>::infinity();
  int best_mtry = 1;
  for (int mtry = 1; mtry <= static_cast<int>(x.cols()); ++mtry) {
    ForestParams p;
    p.n_trees = o.rf_cv_trees;
    p.mtry = mtry;
    const double score = cv_rmse(cv, [&](std::size_t f) {
      const std::uint64_t s = derive_seed({seed, hash_string("rf-cv"), static_cast<std::uint64_t>(mtry), f});
      return RandomForest(cv.x_train[f], cv.y_train[f], p, s).predict(cv.x_test[f]);
    });
    if (score < best_cv) {
      best_cv = score;
      best_mtry = mtry;
    }
  }
  ForestParams p;
  p.n_trees = o.rf_trees;
  p.mtry = best_mtry;
  FittedModel out;
  out.model_id = ModelId::RF;
  out.cv_rmse = best_cv;
  out.hyperparameters = {{"mtry", std::to_string(best_mtry)}, {"trees", std::to_string(p.n_trees)}};
  out.predictor = wrap(RandomForest(x, y, p, derive_seed({seed, hash_string("rf-final")})));
  return out;
}

struct AnnConfig {
  MlpArchitecture arch;
  MlpPenalty penalty;
  double decay = -1.0;  // shallow nets: weight decay per observation pair, scaled by 1/n when fitted
  std::string label;
};

std::vector<AnnConfig> ann_grid(ModelId id, int d) {
  std::vector<AnnConfig> grid;
  if (id == ModelId::ANN_sh) {
    for (int h : {3, 6, 9, 12})
      for (double decay : {0.0, 0.1, 0.25, 0.5})
        grid.push_back({{d, {h}, Activation::Logistic}, {}, decay,
                        "hidden=" + std::to_string(h) + ";decay=" + num(decay)});
    return grid;
  }
  const MlpPenalty penalties[] = {{1e-5, 1e-4, 0.0}, {1e-4, 1e-3, 0.1}};
  for (int layers : {2, 3, 4})
    for (int width : {6, 12})
      for (Activation act : {Activation::Tanh, Activation::Relu})
        for (std::size_t pi = 0; pi < 2; ++pi) {
          const MlpPenalty& pen = penalties[pi];
          grid.push_back({{d, std::vector<int>(static_cast<std::size_t>(layers), width), act}, pen, -1.0,
                          "layers=" + std::to_string(layers) + ";width=" + std::to_string(width) +
                              ";activation=" + (act == Activation::Tanh ? "tanh" : "relu") +
                              ";dropout=" + num(pen.dropout) + ";l1=" + num(pen.l1) + ";l2=" + num(pen.l2)});
        }
  return grid;
}

Mlp train_ann(const AnnConfig& cfg, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed,
              const FitOptions& o) {
  MlpPenalty pen = cfg.penalty;
  if (cfg.decay >= 0.0) pen.l2 = cfg.decay / static_cast<double>(y.size());
  MlpTrainOptions t;
  t.max_epochs = o.ann_max_epochs;
  Mlp net(cfg.arch);
  net.initialize(seed);
  net.train(x, y, pen, t, seed);
  return net;
}

FittedModel fit_ann(ModelId id, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed,
                    const FitOptions& o) {
  const CvData cv = make_cv(x, y, o.cv_folds, seed);
  const auto grid = ann_grid(id, static_cast<int>(x.cols()));
  double best_cv = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double score = cv_rmse(cv, [&](std::size_t f) {
      const std::uint64_t s = derive_seed({seed, hash_string("ann-cv"), g, f});
      return train_ann(grid[g], cv.x_train[f], cv.y_train[f], s, o).predict(cv.x_test[f]);
    });
    if (score < best_cv) {
      best_cv = score;
      best = g;
    }
  }
  FittedModel out;
  out.model_id = id;
  out.cv_rmse = best_cv;
  out.hyperparameters = {{"config", grid[best].label}};
  out.predictor = wrap(train_ann(grid[best], x, y, derive_seed({seed, hash_string("ann-final")}), o));
  return out;
}

}  // namespace

FittedModel fit(ModelId id, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed,
                const FitOptions& opts) {
  if (x.rows() != y.size()) throw LengthMismatch("fit: rows of X and length of y differ");
  if (y.size() < 2) throw InsufficientData("fit: need at least two observations");
  FittedModel out;
  switch (id) {
    case ModelId::LM: out = fit_lm(x, y); break;
    case ModelId::GP: out = fit_gp(x, y, seed, opts); break;
    case ModelId::SVM: out = fit_svm(x, y, seed, opts); break;
    case ModelId::RF: out = fit_rf(x, y, seed, opts); break;
    case ModelId::ANN_sh:
    case ModelId::ANN_dp: out = fit_ann(id, x, y, seed, opts); break;
  }
  out.train_seed = seed;
  return out;
}

}  // namespace doebench
