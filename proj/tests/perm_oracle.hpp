#pragma once
// Exact permutation p-values by full enumeration, for small samples.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// P(T* >= T_obs) over all C(n, na) relabelings, T = mean(first) - mean(second).
inline double exact_independent(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  const double t_obs = mean(a) - mean(b);
  double scale = 0;
  for (double v : pooled) scale = std::max(scale, std::abs(v));
  const double tol = 1e-9 * scale;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(na), true);
  long hit = 0, total = 0;
  do {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? x : y).push_back(pooled[i]);
    if (mean(x) - mean(y) >= t_obs - tol) ++hit;
    ++total;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return static_cast<double>(hit) / static_cast<double>(total);
}

// P(T* >= T_obs) over all 2^n sign flips of the differences, T = mean(d).
inline double exact_paired(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  std::vector<double> d(n);
  double scale = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    scale = std::max(scale, std::abs(d[i]));
  }
  const double t_obs = mean(d), tol = 1e-9 * scale;
  long hit = 0;
  const long total = 1L << n;
  for (long mask = 0; mask < total; ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += ((mask >> i) & 1 ? -1.0 : 1.0) * d[i];
    if (s / static_cast<double>(n) >= t_obs - tol) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace oracle
