#pragma once

#include <functional>

#include "pica/types.hpp"

namespace pica {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0;
  int evaluations = 0;
};

// Derivative-free simplex search with box constraints (iterates are clamped
// into [lower, upper]). Deterministic for fixed inputs.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                             const Eigen::VectorXd& x0, double initial_step, int max_iterations,
                             double tolerance, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper);

}  // namespace pica
