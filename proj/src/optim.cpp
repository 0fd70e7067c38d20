#include "doebench/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace doebench {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, const NelderMeadOptions& opts) {
  const Eigen::Index d = x0.size();
  NelderMeadResult res;
  auto clamp = [&](Eigen::VectorXd x) { return x.cwiseMax(lo).cwiseMin(hi).eval(); };
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(d + 1));
  std::vector<double> values(static_cast<std::size_t>(d + 1));
  simplex[0] = clamp(x0);
  values[0] = eval(simplex[0]);
  res.initial_value = values[0];
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd v = simplex[0];
    double step = opts.initial_step;
    if (v(i) + step > hi(i)) step = -step;
    v(i) += step;
    simplex[static_cast<std::size_t>(i + 1)] = clamp(v);
    values[static_cast<std::size_t>(i + 1)] = eval(simplex[static_cast<std::size_t>(i + 1)]);
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(d + 1));
  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& p : simplex) diameter = std::max(diameter, (p - simplex[best]).cwiseAbs().maxCoeff());
    const double spread = values[worst] - values[best];
    if (std::isfinite(spread) && (spread <= opts.f_tol * (std::abs(values[best]) + opts.f_tol) || diameter <= opts.x_tol))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < simplex.size(); ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd xr = clamp(centroid + (centroid - simplex[worst]));
    const double fr = eval(xr);
    if (fr < values[best]) {
      const Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - simplex[worst]));
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd xc = outside ? clamp(centroid + 0.5 * (xr - centroid))
                                       : clamp(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = clamp(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
      values[i] = eval(simplex[i]);
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  res.value = *it;
  res.x = simplex[static_cast<std::size_t>(it - values.begin())];
  return res;
}

}  // namespace doebench
