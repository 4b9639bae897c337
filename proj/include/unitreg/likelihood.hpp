#pragma once

#include <Eigen/Core>
#include <vector>

#include "unitreg/dataset.hpp"
#include "unitreg/model.hpp"

namespace unitreg {

// Immutable evaluation context: per-submodel design matrices plus layout.
// For the classic model the designs hold interior rows only; all other
// models keep every row. Capped-row flags are populated for model4.
struct ModelDesign {
  ModelSpec spec;
  Eigen::VectorXd y;
  EndpointPartition partition;
  Eigen::MatrixXd x_mu, x_tilt, x_phi, x_theta;
  ParamLayout layout;
  std::vector<char> capped_row;  // model4: rows whose endpoint term is capped
  Theorem3Flags flags;
  int n() const { return static_cast<int>(y.size()); }
  bool is_endpoint_row(int i) const { return y[i] == 0.0 || y[i] == 1.0; }
};

ModelDesign build_design(const ModelSpec& spec, const Dataset& data,
                         const std::vector<int>& grouping = {});

// Log-likelihood of the flat parameter vector. Returns -inf for parameter
// values where the likelihood is zero or numerically undefined, so optimizers
// can backtrack instead of crashing.
double loglik(const ModelDesign& design, const Eigen::VectorXd& params);

// Analytic gradient where implemented (classic, augmented, model2
// semimixture, model3, model4). Returns false when only numeric
// differentiation is available for this design.
bool loglik_gradient(const ModelDesign& design, const Eigen::VectorXd& params,
                     Eigen::VectorXd& grad);

// model4 alternative route: clamp the mean predictor of capped rows to
// |eta| <= log U and evaluate the model3 likelihood. Agrees with the capped
// form whenever every capped row already satisfies the constraint.
double loglik_model4_constrained(const ModelDesign& design,
                                 const Eigen::VectorXd& params);

// Per-row fitted quantities implied by a parameter vector.
struct FittedValues {
  Eigen::VectorXd eta_mu, mu, phi;
  Eigen::VectorXd theta;  // empty unless the model carries mixing weights
};
FittedValues compute_fitted(const ModelDesign& design,
                            const Eigen::VectorXd& params);

// d/dmu and d2/dmu2 of the endpoint log-likelihood
// n0*(log(1-mu) - log mu) + n1*(log mu - log(1-mu)).
double endpoint_score(double mu, int n0, int n1);
double endpoint_hessian(double mu, int n0, int n1);

// Normalizing-constant-plus-endpoint objective used by the global-optimum
// analysis: n_beta*(lgamma(phi) - lgamma(mu phi) - lgamma((1-mu) phi))
//         + n0*(log(1-mu) - log(mu)).
double theorem2_objective(double mu, double phi, double n0, double n_beta);

}  // namespace unitreg
