#pragma once

#include <Eigen/Core>
#include <string>

#include "unitreg/likelihood.hpp"
#include "unitreg/mle.hpp"

namespace unitreg {

// Standardized residuals with the endpoint-adjusted precision:
// r_i = (y_i - mu_i) / sqrt(mu_i (1 - mu_i) / (phi*_i + 1)).
struct ResidualReport {
  Eigen::VectorXd y, mu, phi_star_values, r;
  double mean = 0.0, sd = 0.0, max_abs = 0.0;
};

ResidualReport standardized_residuals(const ModelDesign& design,
                                      const Eigen::VectorXd& estimates);

// CSV with columns y,eta_hat,mu_hat,is_endpoint over all rows.
void export_pred_vs_obs(const ModelDesign& design, const Eigen::VectorXd& estimates,
                        const std::string& path);

// CSV with columns eta_mu,eta_theta per row; requires a mixing-weight
// submodel in the design.
void export_mu_theta_scatter(const ModelDesign& design,
                             const Eigen::VectorXd& estimates,
                             const std::string& path);

void export_residuals(const ResidualReport& report, const std::string& path);

}  // namespace unitreg
