#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "unitreg/special.hpp"

namespace unitreg {

// Tilt parameter of the power family on [0,1]. nu > 0 piles density toward
// y = 1, nu < 0 toward y = 0, nu = 0 is the uniform density. The density is
// finite and positive at both ends of the support for every finite nu.
struct TiltingPowerParams {
  double nu = 0.0;
};

// Beta distribution in mean/precision form: alpha = mu*phi, beta = (1-mu)*phi.
struct BetaParamsAlt {
  double mu = 0.5;
  double phi = 1.0;
};

// Two-component family: tilting-power part with weight (1-theta) and a beta
// part with weight theta whose density is forced to zero at exact endpoints.
// When zeta is set, the endpoint weight (1-theta) is split into
// (1-theta)(1-zeta) at y = 0 and (1-theta)*zeta at y = 1.
struct MixtureParams {
  BetaParamsAlt beta;
  TiltingPowerParams tilt;
  double theta = 0.5;
  std::optional<double> zeta;
};

inline void check_unit_interval(double y, const char* what) {
  if (!(y >= 0.0 && y <= 1.0))
    throw std::domain_error(std::string(what) + ": y outside [0,1]");
}

// ---- tilting power distribution ------------------------------------------

inline double tilting_power_logpdf(double y, double nu) {
  check_unit_interval(y, "tilting_power_pdf");
  if (!std::isfinite(nu)) throw std::domain_error("tilting_power_pdf: nu not finite");
  const double a = std::fabs(nu);
  if (a == 0.0) return 0.0;  // uniform
  // nu >= 0: density (a+1) y^a over all of [0,1]; nu < 0: (a+1)(1-y)^a.
  const double lead = std::log1p(a);
  if (nu >= 0.0) return y == 0.0 ? neg_inf : lead + a * std::log(y);
  return y == 1.0 ? neg_inf : lead + a * std::log1p(-y);
}

inline double tilting_power_pdf(double y, double nu) {
  const double lp = tilting_power_logpdf(y, nu);
  return lp == neg_inf ? 0.0 : std::exp(lp);
}

inline double tilting_power_mean(double nu) {
  if (!std::isfinite(nu)) throw std::domain_error("tilting_power_mean: nu not finite");
  const double a = std::fabs(nu);
  return nu >= 0.0 ? (nu + 1.0) / (a + 2.0) : 1.0 / (a + 2.0);
}

inline double tilting_power_var(double nu) {
  if (!std::isfinite(nu)) throw std::domain_error("tilting_power_var: nu not finite");
  const double a = std::fabs(nu);
  return (a + 1.0) / ((a + 3.0) * (a + 2.0) * (a + 2.0));
}

// Inverse of tilting_power_mean. Algebraically:
//   mean >= 1/2  ->  nu = (2m-1)/(1-m)
//   mean <  1/2  ->  nu = (2m-1)/m
// written in one expression via the folded distance from 1/2.
inline double nu_from_mean(double mean) {
  if (!(mean > 0.0 && mean < 1.0))
    throw std::domain_error("nu_from_mean: mean must lie strictly inside (0,1)");
  return (2.0 * mean - 1.0) / (0.5 - std::fabs(mean - 0.5));
}

inline double tilting_power_cdf(double y, double nu) {
  check_unit_interval(y, "tilting_power_cdf");
  const double a = std::fabs(nu);
  if (nu >= 0.0) return std::pow(y, a + 1.0);
  return 1.0 - std::pow(1.0 - y, a + 1.0);
}

// Inverse-CDF draw; u is a uniform deviate on [0,1].
inline double tilting_power_sample(double nu, double u) {
  const double a = std::fabs(nu);
  if (nu >= 0.0) return std::pow(u, 1.0 / (a + 1.0));
  return 1.0 - std::pow(1.0 - u, 1.0 / (a + 1.0));
}

// ---- beta distribution, mean/precision form ------------------------------

inline void check_beta_params(const BetaParamsAlt& p) {
  if (!(p.mu > 0.0 && p.mu < 1.0)) throw std::domain_error("beta: mu outside (0,1)");
  if (!(p.phi > 0.0) || !std::isfinite(p.phi))
    throw std::domain_error("beta: phi must be positive and finite");
}

// Log density. With endpoint_indicators the density is defined to be zero at
// exact endpoints. Without them, y = 0 / y = 1 evaluate the limit: finite
// exactly when the corresponding shape parameter equals 1 (power /
// reflected-power case); larger shapes give 0, smaller diverge. A relative
// tolerance on the shape absorbs round-off from mu * (1/mu).
inline double beta_logpdf_alt(double y, const BetaParamsAlt& p,
                              bool endpoint_indicators = false) {
  check_beta_params(p);
  if (endpoint_indicators)
    check_unit_interval(y, "beta_pdf_alt");
  else if (!(y >= 0.0 && y <= 1.0))
    throw std::domain_error("beta_pdf_alt: y outside [0,1]");

  const double alpha = p.mu * p.phi;
  const double beta = (1.0 - p.mu) * p.phi;
  if (y == 0.0 || y == 1.0) {
    if (endpoint_indicators) return neg_inf;
    const double shape = (y == 0.0) ? alpha : beta;
    constexpr double tol = 1e-9;
    if (shape > 1.0 + tol) return neg_inf;
    if (shape < 1.0 - tol)
      return std::numeric_limits<double>::infinity();
    return std::lgamma(p.phi) - std::lgamma(alpha) - std::lgamma(beta);
  }
  return std::lgamma(p.phi) - std::lgamma(alpha) - std::lgamma(beta) +
         (alpha - 1.0) * std::log(y) + (beta - 1.0) * std::log1p(-y);
}

inline double beta_pdf_alt(double y, const BetaParamsAlt& p,
                           bool endpoint_indicators = false) {
  const double lp = beta_logpdf_alt(y, p, endpoint_indicators);
  return lp == neg_inf ? 0.0 : std::exp(lp);
}

// ---- power / reflected power densities -----------------------------------

inline double power_logpdf(double y, double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("power_pdf: mu outside (0,1)");
  const double a = mu / (1.0 - mu);
  if (y == 0.0) return a < 1.0 ? std::numeric_limits<double>::infinity()
                               : (a == 1.0 ? 0.0 : neg_inf);
  return std::log(a) + (a - 1.0) * std::log(y);
}

inline double power_pdf(double y, double mu) {
  const double lp = power_logpdf(y, mu);
  return lp == neg_inf ? 0.0 : std::exp(lp);
}

inline double reflected_power_logpdf(double y, double mu) {
  if (!(mu > 0.0 && mu < 1.0))
    throw std::domain_error("reflected_power_pdf: mu outside (0,1)");
  const double b = (1.0 - mu) / mu;
  if (y == 1.0) return b < 1.0 ? std::numeric_limits<double>::infinity()
                               : (b == 1.0 ? 0.0 : neg_inf);
  return std::log(b) + (b - 1.0) * std::log1p(-y);
}

inline double reflected_power_pdf(double y, double mu) {
  const double lp = reflected_power_logpdf(y, mu);
  return lp == neg_inf ? 0.0 : std::exp(lp);
}

// Endpoint-adjusted precision: phi at interior y, 1/mu at y = 0 (shape alpha
// pinned to 1) and 1/(1-mu) at y = 1 (shape beta pinned to 1). Keeps the mean
// equal to mu at every y.
inline double phi_star(double y, double mu, double phi) {
  if (y == 0.0) return 1.0 / mu;
  if (y == 1.0) return 1.0 / (1.0 - mu);
  return phi;
}

// ---- mixture --------------------------------------------------------------

inline void check_mixture_params(const MixtureParams& p) {
  check_beta_params(p.beta);
  if (!(p.theta > 0.0 && p.theta < 1.0))
    throw std::domain_error("mixture: theta outside (0,1)");
  if (p.zeta && !(*p.zeta > 0.0 && *p.zeta < 1.0))
    throw std::domain_error("mixture: zeta outside (0,1)");
}

inline double mixture_pdf(double y, const MixtureParams& p) {
  check_mixture_params(p);
  check_unit_interval(y, "mixture_pdf");
  double w1 = 1.0 - p.theta;
  if (p.zeta) {
    if (y == 0.0) w1 *= 1.0 - *p.zeta;
    if (y == 1.0) w1 *= *p.zeta;
  }
  const double f1 = tilting_power_pdf(y, p.tilt.nu);
  const double f2 = beta_pdf_alt(y, p.beta, /*endpoint_indicators=*/true);
  return w1 * f1 + p.theta * f2;
}

inline double mixture_mean(const MixtureParams& p) {
  check_mixture_params(p);
  return (1.0 - p.theta) * tilting_power_mean(p.tilt.nu) + p.theta * p.beta.mu;
}

}  // namespace unitreg
