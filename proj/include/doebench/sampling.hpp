#pragma once

#include <Eigen/Dense>

#include "doebench/rng.hpp"

namespace doebench {

// Random Latin hypercube on [0,1]^d: one point per stratum [(i-1)/n, i/n) in
// every column, uniformly jittered inside the stratum.
Eigen::MatrixXd random_lhd(Eigen::Index n, Eigen::Index d, Rng& rng);

// Same stratification with points at stratum midpoints (i - 0.5)/n.
Eigen::MatrixXd midpoint_lhd(Eigen::Index n, Eigen::Index d, Rng& rng);

}  // namespace doebench
