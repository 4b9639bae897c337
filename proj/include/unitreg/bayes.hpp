#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "unitreg/dataset.hpp"
#include "unitreg/model.hpp"

namespace unitreg {

enum class PriorScaleKind { precision, variance, sd };
enum class Centering { none, hc1, hc2 };

// Normal(0, s) coefficient priors with an explicit reading of s, a uniform
// precision prior bounded away from U-shaped betas, and an exponential prior
// on the random-effect spread.
struct PriorConfig {
  double coef_scale = 0.04;
  PriorScaleKind coef_scale_kind = PriorScaleKind::precision;
  double phi_lower = 3.0;
  double phi_upper = 150.0;
  double sigma_m_rate = 0.2;

  double coef_variance() const {
    switch (coef_scale_kind) {
      case PriorScaleKind::precision: return 1.0 / coef_scale;
      case PriorScaleKind::variance: return coef_scale;
      case PriorScaleKind::sd: return coef_scale * coef_scale;
    }
    return coef_scale;
  }
};

struct CenteringVariant {
  Centering kind = Centering::none;
  double c = 0.0;  // HC2 first-level constant
};

struct BoundSettings {
  bool enabled = false;
  BoundKind kind = BoundKind::phi_minus_1;
  // units whose random intercept is bounded; empty = take every unit flagged
  // by the estimability check
  std::vector<int> units;
};

struct ChainConfig {
  std::uint64_t seed = 1;
  int n_warmup = 5000;
  int n_iter = 20000;
  int adapt_window = 50;
};

struct DicResult {
  double dic = 0.0;
  double p_d = 0.0;
};

struct WaicResult {
  double waic = 0.0;
  double p_w = 0.0;
};

// Mergeable streaming summaries of the retained draws.
struct PosteriorAccum {
  long count = 0;
  Eigen::VectorXd lse_max, lse_sum;  // per observation, log-mean-exp state
  Eigen::VectorXd ll_mean, ll_m2;    // per observation, Welford state
  double total_ll_sum = 0.0;
  Eigen::VectorXd param_sum;
  Eigen::VectorXd mu_sum;  // per observation fitted-mean accumulation
};

struct FlaggedUnitSummary {
  int unit = -1;
  double delta_mean = 0.0, delta_lo = 0.0, delta_hi = 0.0;
  double pi_u = 0.0, pi_u_lo = 0.0, pi_u_hi = 0.0;
  bool pi_u_concern = false;  // > 0.05, reported without judgement
};

struct ChainResult {
  std::vector<std::string> names;
  Eigen::MatrixXd draws;  // retained iterations x parameters
  Eigen::VectorXd accept_rate;
  Eigen::VectorXd ess;
  std::vector<bool> ess_defined;
  double dic = 0.0, p_d = 0.0, waic = 0.0, p_w = 0.0, mse = 0.0;
  std::vector<FlaggedUnitSummary> flagged;
  // per retained iteration, per flagged unit: the largest signed endpoint
  // predictor, enabling the bound diagnostics to be replayed at any U
  Eigen::MatrixXd flagged_max_eta;
  Eigen::VectorXd log_u_trace;  // cap value per retained iteration
  PosteriorAccum accum;
  std::string rng_algorithm;
};

class BayesProblem {
 public:
  BayesProblem(const ModelSpec& spec, const Dataset& data,
               const PriorConfig& priors, const CenteringVariant& centering,
               const BoundSettings& bounds);

  ChainResult run_chain(const ChainConfig& cfg) const;

  // merged diagnostics over independent chains of this problem
  ChainResult merge(const std::vector<ChainResult>& chains) const;

  const std::vector<std::string>& param_names() const { return names_; }
  int n_params() const { return static_cast<int>(names_.size()); }
  const std::vector<int>& bounded_units() const { return bounded_units_; }

  // log posterior pieces, exposed for initialization error reporting
  double log_likelihood(const Eigen::VectorXd& params) const;
  double log_prior(const Eigen::VectorXd& params) const;

 private:
  friend struct ChainRunner;
  ModelSpec spec_;
  PriorConfig priors_;
  CenteringVariant centering_;
  BoundSettings bounds_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_mu_, x_theta_;
  std::vector<int> unit_;
  std::vector<std::vector<int>> unit_rows_;
  int n_units_ = 0;
  std::vector<char> unit_bounded_;
  std::vector<int> bounded_units_;
  std::vector<std::string> names_;
  // layout offsets
  int off_b_ = 0, len_b_ = 0, off_a_ = 0, len_a_ = 0, off_phi_ = 0;
  int off_m_ = 0, off_sigma_ = 0;

  Eigen::VectorXd initial_point() const;
  double row_loglik(int row, const Eigen::VectorXd& params, double log_u) const;
  double row_eta(int row, const Eigen::VectorXd& params) const;
  double fitted_mu(int row, const Eigen::VectorXd& params) const;
  double re_prior(const Eigen::VectorXd& params) const;
  double log_u(const Eigen::VectorXd& params) const;
};

// Deviance information criterion from a draws-by-observations matrix of
// pointwise log densities and the total log density at the posterior mean.
DicResult dic(const Eigen::MatrixXd& pointwise_ll, double ll_at_posterior_mean);

// Widely applicable information criterion; stable log-mean-exp per column.
WaicResult waic(const Eigen::MatrixXd& pointwise_ll);

// Effective sample size by the initial-positive-sequence truncation of the
// autocorrelation sum. Returns 0 for a constant trace.
double ess(const Eigen::VectorXd& trace);

// Mean squared error of posterior-mean fitted values.
double mse_predictions(const Eigen::VectorXd& posterior_mean_mu,
                       const Eigen::VectorXd& y);

// Replay the exceedance probability at a different bound from a recorded
// chain: P(max signed endpoint predictor > log U).
Eigen::VectorXd pi_u_replay(const ChainResult& chain, double log_u);

}  // namespace unitreg
