#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

namespace unitreg {

struct OptimOptions {
  int max_iterations = 500;
  double grad_tol = 1e-6;      // max-norm of the gradient
  double f_rel_tol = 1e-10;    // relative objective change
  double fd_step = 1e-6;       // central-difference step scale
};

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn =
    std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Central finite differences; falls back to one-sided steps at infeasible
// neighbours (objective +inf).
Eigen::VectorXd numeric_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x,
                                 double step_scale = 1e-6);

// BFGS minimization with backtracking Armijo line search. The objective may
// return +inf to mark infeasible points; the start must be feasible.
// grad may be null, in which case numeric gradients are used.
OptimResult minimize_bfgs(const ObjectiveFn& f, const GradientFn& grad,
                          const Eigen::VectorXd& x0, const OptimOptions& opts = {});

}  // namespace unitreg
