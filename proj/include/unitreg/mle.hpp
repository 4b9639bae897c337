#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "unitreg/bfgs.hpp"
#include "unitreg/likelihood.hpp"

namespace unitreg {

struct FitOptions {
  OptimOptions optim;
  bool analytic_gradients = true;  // use closed-form scores where available
  std::optional<Eigen::VectorXd> start;  // overrides the two-stage init
};

struct FitResult {
  ModelSpec spec;
  ParamLayout layout;
  Eigen::VectorXd estimates;
  Eigen::VectorXd se;  // link-scale standard errors
  Eigen::VectorXd z;
  Eigen::MatrixXd vcov;
  double loglik = 0.0;
  double aic = 0.0;
  int k = 0;
  int n_used = 0;
  bool converged = false;
  double grad_norm = 0.0;
  int iterations = 0;
  bool hessian_pd = false;
  std::vector<int> singular_params;
  Theorem3Flags theorem3;
  std::string message;

  int index_of(const std::string& name) const;
};

// Two-stage maximum likelihood: a classic fit on the interior rows seeds the
// full model. Throws std::invalid_argument for data the model refuses
// (no interior rows, single-valued y, balanced endpoints only).
FitResult fit(const ModelSpec& spec, const Dataset& data, const FitOptions& opts = {});

// Same but with a prebuilt design (lets callers control grouping).
FitResult fit(const ModelDesign& design, const Dataset& data, const FitOptions& opts = {});

// Negative Hessian of the log-likelihood by central differences with
// per-coordinate steps h_j = 1e-5 * max(1, |x_j|).
Eigen::MatrixXd observed_information(const ObjectiveFn& loglik_fn,
                                     const Eigen::VectorXd& at);

struct TestResult {
  double chi2 = 0.0;
  int df = 0;
  double p = 0.0;
};

// Wald test of R theta = r. R must have full row rank.
TestResult wald_test(const FitResult& fit, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& r);

// Likelihood ratio test; the caller is responsible for nesting.
TestResult lr_test(const FitResult& restricted, const FitResult& full);

double aic(const FitResult& fit);

// True when `restricted` uses a subset of `full`'s predictors per submodel
// within the same family (or the documented family nestings).
bool is_nested(const ModelSpec& restricted, const ModelSpec& full);

}  // namespace unitreg
