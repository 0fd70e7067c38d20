#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace doebench {

inline constexpr int kDim = 6;

enum class FunctionId { Borehole, OtlCircuit, Piston, PistonMod, RobotArm, Rosenbrock, WingWeight };

inline constexpr std::array<FunctionId, 7> kAllFunctions = {
    FunctionId::Borehole, FunctionId::OtlCircuit, FunctionId::Piston,    FunctionId::PistonMod,
    FunctionId::RobotArm, FunctionId::Rosenbrock, FunctionId::WingWeight};

std::string_view to_string(FunctionId fn);
std::optional<FunctionId> parse_function(std::string_view name);

struct Bounds {
  double lo;
  double hi;
};

/// Native (lo, hi) range of each of the 6 active inputs, in the order in which
/// evaluate() consumes normalized coordinates.
std::vector<Bounds> native_bounds(FunctionId fn);

/// Value of the test function at a normalized point in [0,1]^6.
///
/// Coordinates are mapped affinely onto the active native ranges; native
/// inputs that are not active are held at the midpoint of their range.
/// Throws CoordinateOutOfRange for coordinates outside [0,1] by more than 1e-12.
double evaluate(FunctionId fn, std::span<const double> x_norm);

/// Batch version over the rows of an n x 6 matrix.
Eigen::VectorXd evaluate_rows(FunctionId fn, const Eigen::MatrixXd& x_norm);

struct StandardizationProvenance {
  int n_designs = 0;
  int n_points_per_design = 0;
  std::uint64_t master_seed = 0;

  bool operator==(const StandardizationProvenance&) const = default;
};

struct StandardizationConstants {
  double y_bar = 0.0;
  double sigma_y = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  StandardizationProvenance provenance;

  bool operator==(const StandardizationConstants&) const = default;
};

// Desk-scale defaults; the full-size estimate uses 100 x 500000.
inline constexpr int kDeskStdDesigns = 20;
inline constexpr int kDeskStdPoints = 50000;

/// Mean of per-design response means, maximum of per-design standard
/// deviations and global extremes over n_designs random LHDs of n_points each.
/// Designs are processed in parallel; the result does not depend on the
/// number of threads. Throws DegenerateFunction when sigma_y is zero.
StandardizationConstants estimate_standardization(FunctionId fn, int n_designs, int n_points,
                                                  std::uint64_t seed);

/// Same estimator over an arbitrary scalar function; used for stand-in
/// functions in tests.
template <class F>
StandardizationConstants estimate_standardization_of(F&& f, int n_designs, int n_points,
                                                     std::uint64_t seed);

namespace serial {
// Single-threaded reference for estimate_standardization.
StandardizationConstants estimate_standardization(FunctionId fn, int n_designs, int n_points,
                                                  std::uint64_t seed);
}  // namespace serial

inline double standardize(double y, const StandardizationConstants& c) {
  return (y - c.y_bar) / c.sigma_y;
}

inline double unstandardize(double z, const StandardizationConstants& c) {
  return z * c.sigma_y + c.y_bar;
}

struct TestSet {
  Eigen::MatrixXd inputs;     // n x 6, random LHD
  Eigen::VectorXd responses;  // standardized, noiseless
};

TestSet make_test_set(FunctionId fn, int n, std::uint64_t seed, const StandardizationConstants& c);

// JSON cache: one document per function.
void save_constants(const std::filesystem::path& path, FunctionId fn,
                    const StandardizationConstants& c);
std::optional<StandardizationConstants> load_constants(const std::filesystem::path& path,
                                                       FunctionId fn,
                                                       const StandardizationProvenance& expected);

/// Loads the cache under dir if it matches (fn, provenance); otherwise
/// estimates and writes it.
StandardizationConstants cached_standardization(const std::filesystem::path& dir, FunctionId fn,
                                                const StandardizationProvenance& prov);

}  // namespace doebench

#include "doebench/funcs_impl.hpp"
