#pragma once

// Template bodies for funcs.hpp.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doebench/errors.hpp"
#include "doebench/rng.hpp"
#include "doebench/sampling.hpp"

namespace doebench {

namespace detail {

struct DesignMoments {
  double mean = 0.0;
  double sd = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
};

template <class F>
DesignMoments lhd_moments(F& f, int n_points, std::uint64_t design_seed) {
  Rng rng(design_seed);
  const Eigen::MatrixXd x = random_lhd(n_points, kDim, rng);
  std::vector<double> y(static_cast<std::size_t>(n_points));
  std::array<double, kDim> row{};
  for (int i = 0; i < n_points; ++i) {
    for (int k = 0; k < kDim; ++k) row[static_cast<std::size_t>(k)] = x(i, k);
    y[static_cast<std::size_t>(i)] = f(std::span<const double>(row));
  }
  DesignMoments m;
  double sum = 0.0;
  for (double v : y) {
    sum += v;
    m.min = std::min(m.min, v);
    m.max = std::max(m.max, v);
  }
  m.mean = sum / n_points;
  double ss = 0.0;
  for (double v : y) ss += (v - m.mean) * (v - m.mean);
  m.sd = std::sqrt(ss / (n_points - 1));
  return m;
}

inline StandardizationConstants reduce_moments(const std::vector<DesignMoments>& per_design,
                                               StandardizationProvenance prov) {
  StandardizationConstants c;
  c.provenance = prov;
  double mean_sum = 0.0;
  c.sigma_y = 0.0;
  c.y_min = std::numeric_limits<double>::infinity();
  c.y_max = -std::numeric_limits<double>::infinity();
  for (const auto& m : per_design) {
    mean_sum += m.mean;
    c.sigma_y = std::max(c.sigma_y, m.sd);
    c.y_min = std::min(c.y_min, m.min);
    c.y_max = std::max(c.y_max, m.max);
  }
  c.y_bar = mean_sum / static_cast<double>(per_design.size());
  if (!(c.sigma_y > 0.0)) throw DegenerateFunction("response has zero variance over the reference LHDs");
  return c;
}

inline std::uint64_t std_design_seed(std::uint64_t seed, std::uint64_t fn_tag, int design) {
  return derive_seed({seed, fn_tag, static_cast<std::uint64_t>(design)});
}

}  // namespace detail

template <class F>
StandardizationConstants estimate_standardization_of(F&& f, int n_designs, int n_points,
                                                     std::uint64_t seed) {
  if (n_designs < 1 || n_points < 2) throw Error("estimate_standardization: need n_designs >= 1 and n_points >= 2");
  std::vector<detail::DesignMoments> per(static_cast<std::size_t>(n_designs));
  for (int i = 0; i < n_designs; ++i)
    per[static_cast<std::size_t>(i)] =
        detail::lhd_moments(f, n_points, detail::std_design_seed(seed, 0, i));
  return detail::reduce_moments(per, {n_designs, n_points, seed});
}

}  // namespace doebench
