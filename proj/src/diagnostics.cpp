#include "unitreg/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "unitreg/distributions.hpp"
#include "unitreg/links.hpp"

namespace unitreg {

namespace {

// 17 significant digits round-trip doubles exactly
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

ResidualReport standardized_residuals(const ModelDesign& design,
                                      const Eigen::VectorXd& estimates) {
  const FittedValues f = compute_fitted(design, estimates);
  ResidualReport rep;
  const int n = design.n();
  rep.y = design.y;
  rep.mu = f.mu;
  rep.phi_star_values.resize(n);
  rep.r.resize(n);
  for (int i = 0; i < n; ++i) {
    const double ps = phi_star(design.y[i], f.mu[i], f.phi[i]);
    rep.phi_star_values[i] = ps;
    const double variance = f.mu[i] * (1.0 - f.mu[i]) / (ps + 1.0);
    rep.r[i] = (design.y[i] - f.mu[i]) / std::sqrt(variance);
  }
  rep.mean = rep.r.mean();
  rep.sd = n > 1 ? std::sqrt((rep.r.array() - rep.mean).square().sum() / (n - 1)) : 0.0;
  rep.max_abs = rep.r.cwiseAbs().maxCoeff();
  return rep;
}

void export_pred_vs_obs(const ModelDesign& design, const Eigen::VectorXd& estimates,
                        const std::string& path) {
  const FittedValues f = compute_fitted(design, estimates);
  auto out = open_out(path);
  out << "y,eta_hat,mu_hat,is_endpoint\n";
  for (int i = 0; i < design.n(); ++i)
    out << fmt(design.y[i]) << ',' << fmt(f.eta_mu[i]) << ',' << fmt(f.mu[i]) << ','
        << (design.is_endpoint_row(i) ? 1 : 0) << '\n';
}

void export_mu_theta_scatter(const ModelDesign& design,
                             const Eigen::VectorXd& estimates,
                             const std::string& path) {
  if (design.layout.a.empty())
    throw std::invalid_argument(
        "export_mu_theta_scatter: the fitted model has no mixing-weight submodel");
  const FittedValues f = compute_fitted(design, estimates);
  const Eigen::VectorXd eta_theta =
      design.x_theta * estimates.segment(design.layout.a.offset, design.layout.a.len);
  auto out = open_out(path);
  out << "eta_mu,eta_theta\n";
  for (int i = 0; i < design.n(); ++i)
    out << fmt(f.eta_mu[i]) << ',' << fmt(eta_theta[i]) << '\n';
}

void export_residuals(const ResidualReport& report, const std::string& path) {
  auto out = open_out(path);
  out << "y,mu_hat,phi_star,residual\n";
  for (int i = 0; i < report.y.size(); ++i)
    out << fmt(report.y[i]) << ',' << fmt(report.mu[i]) << ','
        << fmt(report.phi_star_values[i]) << ',' << fmt(report.r[i]) << '\n';
}

}  // namespace unitreg
