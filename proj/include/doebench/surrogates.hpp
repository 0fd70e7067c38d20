#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace doebench {

enum class ModelId { LM, GP, SVM, RF, ANN_sh, ANN_dp };

inline constexpr std::array<ModelId, 6> kAllModels = {ModelId::LM, ModelId::GP,     ModelId::SVM,
                                                      ModelId::RF, ModelId::ANN_sh, ModelId::ANN_dp};

std::string_view to_string(ModelId m);
std::optional<ModelId> parse_model(std::string_view name);

/// Anything that maps an m x d input matrix to m predictions.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x) const = 0;
};

using Hyperparameters = std::vector<std::pair<std::string, std::string>>;

struct FittedModel {
  ModelId model_id = ModelId::LM;
  Hyperparameters hyperparameters;
  double cv_rmse = 0.0;  // best 5-fold CV RMSE over the tuning grid (0 when untuned)
  std::uint64_t train_seed = 0;
  std::shared_ptr<const Predictor> predictor;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const { return predictor->predict(x); }
};

/// Tuning budget. Defaults are the study settings.
struct FitOptions {
  int cv_folds = 5;
  int gp_restarts = 5;
  int gp_max_iterations = 500;
  // Lengthscale box on the [0,1] input scale. Below half the six-level spacing
  // the kernel turns into white noise between grid levels.
  double gp_theta_lo = 0.1;
  double gp_theta_hi = 2.0;
  int rf_trees = 2000;
  int rf_cv_trees = 500;
  int ann_max_epochs = 2000;
};

/// Tunes by k-fold CV where the family has hyperparameters, then refits on
/// all rows. Throws RankDeficient for LM when the full quadratic model is not
/// estimable.
FittedModel fit(ModelId id, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed,
                const FitOptions& opts = {});

inline Eigen::VectorXd predict(const FittedModel& m, const Eigen::MatrixXd& x) { return m.predict(x); }

/// Root mean squared error. Throws LengthMismatch on unequal or empty input.
double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

std::string format_hyperparameters(const Hyperparameters& h);

}  // namespace doebench
