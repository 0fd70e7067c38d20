#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "doebench/funcs.hpp"

namespace doebench {

enum class NoiseKind { None, Homoscedastic, Heteroscedastic };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double level = 0.0;  // homoscedastic sd as a multiple of sigma_y
  double m = 0.0;      // heteroscedastic sd at max y as a multiple of sigma_y

  static NoiseSpec none() { return {}; }
  static NoiseSpec homoscedastic(double level);
  static NoiseSpec heteroscedastic(double m);

  bool operator==(const NoiseSpec&) const = default;
};

// Heteroscedastic sd at min y, as a multiple of sigma_y.
inline constexpr double kHetFloor = 0.05;
// Lower clamp for extrapolated heteroscedastic sd, as a multiple of sigma_y.
inline constexpr double kHetClamp = 0.01;

/// Short stable identifier: "none", "hom5", "hom12.5", "low5_high100", ...
std::string noise_id(const NoiseSpec& spec);
std::optional<NoiseSpec> parse_noise(std::string_view id);
std::string_view kind_name(NoiseKind kind);
/// level for homoscedastic, m for heteroscedastic, 0 otherwise.
double noise_param(const NoiseSpec& spec);

/// The eight settings: none, four homoscedastic levels, three heteroscedastic.
std::vector<NoiseSpec> all_noise_settings();

/// Standard deviation of the additive noise at a (raw-scale) response value.
/// Heteroscedastic sd is a(f + b) with a = (m - 0.05) sigma_y / (y_max - y_min)
/// and b = (0.05 sigma_y - a y_min) / a, i.e. 0.05 sigma_y at y_min rising
/// linearly to m sigma_y at y_max. Extrapolation below y_min is clamped at
/// 0.01 sigma_y. Throws DegenerateRange if y_max == y_min.
double noise_sd_at(const NoiseSpec& spec, double f_value, const StandardizationConstants& c);

/// responses + independent N(0, noise_sd_at(f_values[i])^2) draws.
Eigen::VectorXd apply_noise(const Eigen::VectorXd& responses, const Eigen::VectorXd& f_values,
                            const NoiseSpec& spec, const StandardizationConstants& c,
                            std::uint64_t seed);

}  // namespace doebench
