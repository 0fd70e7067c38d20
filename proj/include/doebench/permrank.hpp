#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "doebench/evalharness.hpp"
#include "doebench/rng.hpp"

namespace doebench {

inline constexpr int kPermutations = 2000;
inline constexpr double kAlpha = 0.05;

enum class PermScheme {
  Independent,    // pool both groups and reshuffle labels
  PairedJoint,    // one random sign per observation row, shared by all variables
  PairedPerCell,  // an independent random sign per (row, variable) difference
};

/// Test statistics for the one-sided alternative mean(a) > mean(b), one column
/// per variable. Row 0 holds the observed statistics, rows 1..B the permuted
/// ones; permutation b draws from an RNG seeded by (seed, b), so the result is
/// independent of the thread count.
namespace kernels {
Eigen::MatrixXd permutation_statistics(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, PermScheme scheme,
                                       int n_perm, std::uint64_t seed);
}
namespace serial {
Eigen::MatrixXd permutation_statistics(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, PermScheme scheme,
                                       int n_perm, std::uint64_t seed);
}

/// One-sided permutation p-value for mean(a) > mean(b) with the add-one rule.
/// Throws LengthMismatch when paired samples differ in length and
/// InsufficientData when either sample has fewer than 2 values.
double perm_test(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool paired, int n_perm, std::uint64_t seed);

/// Nonparametric combination over the columns with Fisher's function; the
/// same permutation is applied to every column (rows are observations).
double npc_compare(const Eigen::MatrixXd& gi, const Eigen::MatrixXd& gj, bool paired, int n_perm,
                   std::uint64_t seed, PermScheme paired_scheme = PermScheme::PairedJoint);

/// Combined p-value from a statistics matrix as returned by the kernels.
double npc_from_statistics(const Eigen::MatrixXd& stats, const Eigen::VectorXd& tolerance);

struct PValueMatrix {
  Eigen::MatrixXd entries;  // (i, j): p-value for "group i has larger RMSE than group j"; diagonal NaN
  std::vector<std::string> labels;
  int n_variables = 0;
};

/// All ordered comparisons. Missing values (NaN) in a column drop that column
/// from the comparisons that involve it; a comparison with no usable column
/// gets p = 1.
PValueMatrix build_pmatrix(const std::vector<Eigen::MatrixXd>& groups, const std::vector<std::string>& labels,
                           bool paired, int n_perm, std::uint64_t seed,
                           PermScheme paired_scheme = PermScheme::PairedJoint);

struct RankResult {
  std::vector<int> ranks;  // 1 = lowest RMSE
  std::vector<int> downward;
  std::vector<int> upward;
  double alpha = kAlpha;
};

/// Steps 1-4 of the rank-estimate procedure, oriented so that the group with
/// the smallest RMSE is ranked 1.
RankResult rank_groups(const PValueMatrix& p, double alpha = kAlpha);

/// Permutation seed used for a study's rank tables.
inline std::uint64_t ranking_seed(std::uint64_t master_seed) {
  return derive_seed({master_seed, hash_string("ranking")});
}

struct RankingOptions {
  int n_perm = kPermutations;
  double alpha = kAlpha;
  std::uint64_t seed = 1;
  PermScheme model_scheme = PermScheme::PairedPerCell;
};

struct Stage1 {
  FunctionId function;
  NoiseSpec noise;
  PValueMatrix p;
  RankResult ranks;
};

/// Groups = designs, rows = reps, variables = models; independent scheme.
/// Throws InsufficientData with fewer than 2 designs or 2 reps.
Stage1 rank_designs_stage1(const std::vector<RmseRecord>& records, FunctionId fn, const NoiseSpec& noise,
                           const std::vector<DesignId>& designs, const std::vector<ModelId>& models,
                           const RankingOptions& opts = {});

/// Groups = models, rows = reps, variables = designs; paired scheme.
Stage1 rank_models_stage1(const std::vector<RmseRecord>& records, FunctionId fn, const NoiseSpec& noise,
                          const std::vector<DesignId>& designs, const std::vector<ModelId>& models,
                          const RankingOptions& opts = {});

/// Univariate ranking of groups from their stage-1 ranks (rows = functions,
/// columns = groups), paired by function.
RankResult rank_stage2(const Eigen::MatrixXd& stage1_ranks, const std::vector<std::string>& labels,
                       const RankingOptions& opts = {});

enum class RankTarget { Designs, Models };

struct StudyRanking {
  RankTarget target = RankTarget::Designs;
  std::vector<std::string> groups;
  std::vector<NoiseSpec> noises;
  std::vector<FunctionId> functions;
  std::vector<Stage1> stage1;                    // one per (function, noise)
  std::map<std::string, RankResult> stage2;      // keyed by noise id
  std::map<std::string, std::vector<double>> mean_stage1;  // per noise: mean stage-1 rank over functions
};

/// Two-stage ranking for every noise setting of a study.
StudyRanking rank_study(const std::vector<RmseRecord>& records, const StudyConfig& cfg, RankTarget target,
                        const RankingOptions& opts = {});

nlohmann::json to_json(const PValueMatrix& p);
nlohmann::json to_json(const StudyRanking& r);

/// Writes <prefix>_stage1.csv, <prefix>_final.csv (groups x noise columns),
/// <prefix>_mean_stage1.csv and <prefix>_ranking.json into dir.
void write_ranking(const std::filesystem::path& dir, const StudyRanking& r);

}  // namespace doebench
