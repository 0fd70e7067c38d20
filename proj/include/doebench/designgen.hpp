#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace doebench {

enum class DesignId {
  CCD,
  BBD,
  FFD,
  D_opt,
  I_opt,
  LHD_rand,
  MAXPRO,
  MAXPRO_dis,
  D_opt_50repl,
  I_opt_50repl,
  MAXPRO_dis_50repl,
  MAXPRO_dis_25repl
};

inline constexpr std::array<DesignId, 12> kAllDesigns = {
    DesignId::CCD,          DesignId::BBD,          DesignId::FFD,
    DesignId::D_opt,        DesignId::I_opt,        DesignId::LHD_rand,
    DesignId::MAXPRO,       DesignId::MAXPRO_dis,   DesignId::D_opt_50repl,
    DesignId::I_opt_50repl, DesignId::MAXPRO_dis_50repl, DesignId::MAXPRO_dis_25repl};

std::string_view to_string(DesignId id);
std::optional<DesignId> parse_design(std::string_view name);

inline constexpr int kRuns = 52;
inline constexpr int kLevels = 6;

/// The six equally spaced normalized levels {0, 0.2, ..., 1}.
std::vector<double> six_levels();

struct DesignMatrix {
  Eigen::MatrixXd points;  // n x 6 on [0,1]
  DesignId design_id = DesignId::CCD;
  int n_runs = 0;
  int levels_per_factor = 0;  // maximum distinct values in any column
  double replication_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Builds one of the 52-run study designs. Deterministic given seed.
DesignMatrix generate(DesignId id, std::uint64_t seed);

// --- model matrix and criteria -------------------------------------------

/// Number of terms of the full quadratic model in d factors: 1 + 2d + d(d-1)/2.
constexpr int quadratic_terms(int d) { return 1 + 2 * d + d * (d - 1) / 2; }

/// Full second-order expansion of already-coded rows (values in [-1,1]).
/// Column order: intercept, x1..xd, x1^2..xd^2, x1x2, x1x3, ..., x(d-1)xd.
Eigen::MatrixXd quadratic_expansion(const Eigen::MatrixXd& coded);
Eigen::RowVectorXd quadratic_expansion_row(const Eigen::Ref<const Eigen::RowVectorXd>& coded);

/// Quadratic expansion of a design on [0,1], coded to [-1,1] first.
Eigen::MatrixXd model_matrix(const DesignMatrix& design);
Eigen::MatrixXd model_matrix(const Eigen::MatrixXd& points01);

/// Human-readable names for the quadratic_expansion columns ("1", "x1", "x1^2", "x1*x2", ...).
std::vector<std::string> quadratic_term_names(int d);

/// E[f(x) f(x)^T] for the quadratic basis under the uniform measure on [-1,1]^d.
Eigen::MatrixXd quadratic_moment_matrix(int d);

/// det(M^T M + ridge I); 0 when the information matrix is numerically singular.
double d_criterion(const Eigen::MatrixXd& model, double ridge = 0.0);

/// trace((M^T M + ridge I)^{-1} moments). Throws SingularInformation when the
/// information matrix cannot be inverted.
double i_criterion(const Eigen::MatrixXd& model, const Eigen::MatrixXd& moments,
                   double ridge = 0.0);

/// Maximum projection criterion
///   psi = [ (1 / C(n,2)) sum_{i<j} 1 / prod_k ((x_ik - x_jk)^2 + delta) ]^(1/d).
/// delta = 0 gives the plain continuous criterion (infinite under ties).
double maxpro_criterion(const Eigen::MatrixXd& points, double delta = 0.0);

inline constexpr double kMaxProTieGuard = 1e-6;
inline constexpr double kSupersaturatedRidge = 1e-3;

// --- construction algorithms ---------------------------------------------

enum class Criterion { D, I, MaxPro };

struct ExchangeOptions {
  std::vector<std::vector<double>> levels;  // allowed normalized values, one list per factor
  int n_runs = kRuns;
  Criterion criterion = Criterion::D;
  int n_starts = 1;
  std::uint64_t seed = 0;
  double ridge = 0.0;
  double maxpro_delta = kMaxProTieGuard;
};

struct ExchangeResult {
  Eigen::MatrixXd points;
  double criterion = 0.0;  // d_criterion / i_criterion / maxpro_criterion of the best start
  int best_start = 0;
  // Exact criterion after the random start and after each improving sweep, per start.
  std::vector<std::vector<double>> trajectories;
};

/// Coordinate exchange: from each random start, sweep rows x factors and move
/// each coordinate to the level that most improves the criterion, until a full
/// sweep changes nothing. Returns the best design over all starts.
ExchangeResult coordinate_exchange(const ExchangeOptions& opts);

/// Row-exchange D-optimal subset of an explicit candidate set (modified
/// Fedorov): each design row is swapped for the candidate that most increases
/// det(M^T M) until a pass yields no improving swap.
struct FedorovResult {
  std::vector<Eigen::Index> rows;  // indices into the candidate set
  double log_det = 0.0;
  int passes = 0;
};
FedorovResult fedorov_exchange(const Eigen::MatrixXd& candidates01, int n_runs, int n_starts,
                               std::uint64_t seed);

/// Full factorial 6^6 grid on {0, 0.2, ..., 1}.
Eigen::MatrixXd six_level_full_factorial();

namespace kernels {
// f_j^T A f_j for every candidate row f_j of F (prediction variance up to sigma^2).
Eigen::VectorXd prediction_variance(const Eigen::MatrixXd& F, const Eigen::MatrixXd& A);
// argmax_j of the Fedorov determinant ratio for replacing design row f_old.
struct BestSwap {
  Eigen::Index candidate = -1;
  double ratio = 0.0;
};
BestSwap best_swap(const Eigen::MatrixXd& F, const Eigen::VectorXd& var_cand,
                   const Eigen::VectorXd& a_old, double var_old);
}  // namespace kernels

namespace serial {
Eigen::VectorXd prediction_variance(const Eigen::MatrixXd& F, const Eigen::MatrixXd& A);
kernels::BestSwap best_swap(const Eigen::MatrixXd& F, const Eigen::VectorXd& var_cand,
                            const Eigen::VectorXd& a_old, double var_old);
}  // namespace serial

/// MaxPro design with continuous levels: random midpoint LHD improved by
/// within-column swaps, then refined by annealed in-stratum perturbations.
Eigen::MatrixXd maxpro_continuous(int n_runs, int d, std::uint64_t seed);

/// Replicated design from a base: fraction 0.5 duplicates every base row,
/// fraction 0.25 duplicates a random third of the base rows. Throws BadFraction
/// for any other fraction.
DesignMatrix replicate(const DesignMatrix& base, double fraction, std::uint64_t seed);

// Classical constructions on coded [-1,1] scale mapped to [0,1].
Eigen::MatrixXd central_composite(int n_center);
Eigen::MatrixXd box_behnken(int n_center);

/// Number of distinct values in each column.
std::vector<int> distinct_levels(const Eigen::MatrixXd& points, double tol = 1e-9);
/// Number of distinct rows.
int distinct_rows(const Eigen::MatrixXd& points, double tol = 1e-9);

// CSV (header x1..x6, one row per run) plus a JSON metadata sidecar.
void write_design_csv(const std::filesystem::path& path, const DesignMatrix& design);
void write_design_metadata(const std::filesystem::path& path, const DesignMatrix& design);
DesignMatrix read_design(const std::filesystem::path& csv_path, const std::filesystem::path& json_path);

}  // namespace doebench
