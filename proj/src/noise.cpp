#include "doebench/noise.hpp"

#include <cmath>
#include <cstdio>

#include "doebench/errors.hpp"
#include "doebench/rng.hpp"

namespace doebench {

NoiseSpec NoiseSpec::homoscedastic(double level) {
  if (!(level > 0.0)) throw Error("homoscedastic noise requires level > 0");
  return {NoiseKind::Homoscedastic, level, 0.0};
}

NoiseSpec NoiseSpec::heteroscedastic(double m) {
  if (!(m >= 0.5)) throw Error("heteroscedastic noise requires m >= 0.5");
  return {NoiseKind::Heteroscedastic, 0.0, m};
}

namespace {
std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v * 100.0);
  return buf;
}
}  // namespace

std::string noise_id(const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::Homoscedastic: return "hom" + percent(spec.level);
    case NoiseKind::Heteroscedastic: return "low5_high" + percent(spec.m);
  }
  return "?";
}

std::optional<NoiseSpec> parse_noise(std::string_view id) {
  if (id == "none" || id == "hom0") return NoiseSpec::none();
  auto parse_pct = [](std::string_view s) -> std::optional<double> {
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(s), &used);
      if (used != s.size()) return std::nullopt;
      return v / 100.0;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  if (id.starts_with("hom")) {
    auto v = parse_pct(id.substr(3));
    if (v && *v > 0.0) return NoiseSpec::homoscedastic(*v);
    return std::nullopt;
  }
  if (id.starts_with("low5_high")) {
    auto v = parse_pct(id.substr(9));
    if (v && *v >= 0.5) return NoiseSpec::heteroscedastic(*v);
  }
  return std::nullopt;
}

std::string_view kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::Homoscedastic: return "homoscedastic";
    case NoiseKind::Heteroscedastic: return "heteroscedastic";
  }
  return "?";
}

double noise_param(const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::None: return 0.0;
    case NoiseKind::Homoscedastic: return spec.level;
    case NoiseKind::Heteroscedastic: return spec.m;
  }
  return 0.0;
}

std::vector<NoiseSpec> all_noise_settings() {
  return {NoiseSpec::none(),
          NoiseSpec::homoscedastic(0.05),
          NoiseSpec::homoscedastic(0.125),
          NoiseSpec::homoscedastic(0.2),
          NoiseSpec::homoscedastic(0.5),
          NoiseSpec::heteroscedastic(0.5),
          NoiseSpec::heteroscedastic(1.0),
          NoiseSpec::heteroscedastic(5.0)};
}

double noise_sd_at(const NoiseSpec& spec, double f_value, const StandardizationConstants& c) {
  switch (spec.kind) {
    case NoiseKind::None: return 0.0;
    case NoiseKind::Homoscedastic: return spec.level * c.sigma_y;
    case NoiseKind::Heteroscedastic: {
      if (!(c.y_max > c.y_min)) throw DegenerateRange("heteroscedastic noise needs y_max > y_min");
      const double a = (spec.m * c.sigma_y - kHetFloor * c.sigma_y) / (c.y_max - c.y_min);
      const double b = (kHetFloor * c.sigma_y - a * c.y_min) / a;
      return std::max(a * (f_value + b), kHetClamp * c.sigma_y);
    }
  }
  return 0.0;
}

Eigen::VectorXd apply_noise(const Eigen::VectorXd& responses, const Eigen::VectorXd& f_values,
                            const NoiseSpec& spec, const StandardizationConstants& c,
                            std::uint64_t seed) {
  if (responses.size() != f_values.size()) throw LengthMismatch("apply_noise: length mismatch");
  Eigen::VectorXd out = responses;
  if (spec.kind == NoiseKind::None) return out;
  Rng rng(derive_seed({seed, hash_string("noise")}));
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) += noise_sd_at(spec, f_values(i), c) * standard_normal(rng);
  return out;
}

}  // namespace doebench
