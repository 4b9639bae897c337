#include "unitreg/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "unitreg/links.hpp"
#include "unitreg/rng.hpp"
#include "unitreg/special.hpp"

namespace unitreg {

namespace {

double safe_beta_logpdf(double y, double mu, double phi) {
  if (!(mu > 0.0 && mu < 1.0) || !(phi > 0.0) || !std::isfinite(phi)) return neg_inf;
  const double alpha = mu * phi;
  const double beta = (1.0 - mu) * phi;
  const double v = std::lgamma(phi) - std::lgamma(alpha) - std::lgamma(beta) +
                   (alpha - 1.0) * std::log(y) + (beta - 1.0) * std::log1p(-y);
  return std::isfinite(v) ? v : neg_inf;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const size_t i = static_cast<size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double w = pos - i;
  return (1.0 - w) * v[i] + w * v[i + 1];
}

}  // namespace

BayesProblem::BayesProblem(const ModelSpec& spec, const Dataset& data,
                           const PriorConfig& priors,
                           const CenteringVariant& centering,
                           const BoundSettings& bounds)
    : spec_(spec), priors_(priors), centering_(centering), bounds_(bounds) {
  if (spec.kind != ModelKind::model2 && spec.kind != ModelKind::model3 &&
      spec.kind != ModelKind::model4)
    throw std::invalid_argument("BayesProblem: supports model2, model3, model4");

  y_ = data.y;
  x_mu_.resize(data.n(), 1 + spec.mu_cols.size());
  x_mu_.col(0).setOnes();
  for (size_t j = 0; j < spec.mu_cols.size(); ++j)
    x_mu_.col(1 + j) = data.x_plus.col(spec.mu_cols[j]);

  if (spec.kind == ModelKind::model2) {
    if (spec.theta_regression) {
      x_theta_.resize(data.n(), 1 + spec.theta_cols.size());
      x_theta_.col(0).setOnes();
      for (size_t j = 0; j < spec.theta_cols.size(); ++j)
        x_theta_.col(1 + j) = data.x_plus.col(spec.theta_cols[j]);
    } else {
      x_theta_ = Eigen::MatrixXd::Ones(data.n(), 1);
    }
  }

  unit_ = data.unit_id;
  n_units_ = data.n_units;
  unit_rows_.assign(std::max(0, n_units_), {});
  for (int i = 0; i < data.n(); ++i)
    if (!unit_.empty()) unit_rows_[unit_[i]].push_back(i);

  unit_bounded_.assign(std::max(0, n_units_), 0);
  if (bounds_.enabled && spec.kind == ModelKind::model4 && n_units_ > 0) {
    if (bounds_.units.empty()) {
      const Theorem3Flags flags = check_theorem3(data, unit_);
      for (int g = 0; g < flags.n_groups(); ++g)
        if (flags.q[g]) bounded_units_.push_back(g);
    } else {
      bounded_units_ = bounds_.units;
    }
    for (int g : bounded_units_) unit_bounded_[g] = 1;
  }

  len_b_ = static_cast<int>(x_mu_.cols());
  off_b_ = 0;
  for (int j = 0; j < len_b_; ++j) names_.push_back("b" + std::to_string(j));
  if (spec.kind == ModelKind::model2) {
    off_a_ = static_cast<int>(names_.size());
    len_a_ = static_cast<int>(x_theta_.cols());
    for (int j = 0; j < len_a_; ++j) names_.push_back("a" + std::to_string(j));
  }
  off_phi_ = static_cast<int>(names_.size());
  names_.push_back("phi");
  off_m_ = static_cast<int>(names_.size());
  for (int g = 0; g < n_units_; ++g) names_.push_back("m" + std::to_string(g));
  off_sigma_ = static_cast<int>(names_.size());
  if (n_units_ > 0) names_.push_back("sigma_m");
}

double BayesProblem::log_u(const Eigen::VectorXd& params) const {
  const double phi = params[off_phi_];
  const double u = bounds_.kind == BoundKind::phi_minus_1 ? phi - 1.0 : phi;
  return u > 0.0 ? std::log(u) : neg_inf;
}

double BayesProblem::row_eta(int row, const Eigen::VectorXd& params) const {
  double eta = 0.0;
  const bool hc = centering_.kind != Centering::none;
  // under hierarchical centering the global intercept moves into the
  // random-effect mean and leaves the first level
  eta += hc ? 0.0 : params[off_b_] * x_mu_(row, 0);
  for (int j = 1; j < len_b_; ++j) eta += params[off_b_ + j] * x_mu_(row, j);
  if (centering_.kind == Centering::hc2) eta += centering_.c;
  if (!unit_.empty()) eta += params[off_m_ + unit_[row]];
  return eta;
}

double BayesProblem::fitted_mu(int row, const Eigen::VectorXd& params) const {
  return apply_inverse(Link::logit, row_eta(row, params));
}

double BayesProblem::row_loglik(int row, const Eigen::VectorXd& params,
                                double log_u_val) const {
  const double y = y_[row];
  const double eta = row_eta(row, params);
  const double phi = params[off_phi_];

  double theta_part = 0.0;
  double theta = 1.0;
  if (spec_.kind == ModelKind::model2) {
    double eta_t = 0.0;
    for (int j = 0; j < len_a_; ++j) eta_t += params[off_a_ + j] * x_theta_(row, j);
    theta = apply_inverse(Link::logit, eta_t);
  }

  if (y == 0.0 || y == 1.0) {
    const double s = y == 1.0 ? 1.0 : -1.0;
    double term = s * eta;
    if (spec_.kind == ModelKind::model2) {
      if (spec_.endpoint_density == EndpointDensity::tilting_power && term < 0.0)
        return neg_inf;
      theta_part = std::log1p(-theta);
    }
    if (spec_.kind == ModelKind::model4 && !unit_.empty() &&
        unit_bounded_[unit_[row]]) {
      if (log_u_val == neg_inf) return neg_inf;
      term = std::min(term, log_u_val);
    }
    return theta_part + term;
  }
  if (spec_.kind == ModelKind::model2) theta_part = std::log(theta);
  const double mu = apply_inverse(Link::logit, eta);
  return theta_part + safe_beta_logpdf(y, mu, phi);
}

double BayesProblem::log_likelihood(const Eigen::VectorXd& params) const {
  const double lu = log_u(params);
  double total = 0.0;
  for (int i = 0; i < y_.size(); ++i) {
    const double v = row_loglik(i, params, lu);
    if (v == neg_inf) return neg_inf;
    total += v;
  }
  return total;
}

double BayesProblem::re_prior(const Eigen::VectorXd& params) const {
  if (n_units_ == 0) return 0.0;
  const double sigma = params[off_sigma_];
  if (!(sigma > 0.0)) return neg_inf;
  const double mean = centering_.kind == Centering::none ? 0.0 : params[off_b_];
  double total = -n_units_ * std::log(sigma);
  for (int g = 0; g < n_units_; ++g) {
    const double z = (params[off_m_ + g] - mean) / sigma;
    total -= 0.5 * z * z;
  }
  return total;
}

double BayesProblem::log_prior(const Eigen::VectorXd& params) const {
  const double var = priors_.coef_variance();
  double total = 0.0;
  for (int j = 0; j < len_b_; ++j)
    total -= 0.5 * params[off_b_ + j] * params[off_b_ + j] / var;
  for (int j = 0; j < len_a_; ++j)
    total -= 0.5 * params[off_a_ + j] * params[off_a_ + j] / var;
  const double phi = params[off_phi_];
  if (!(phi >= priors_.phi_lower && phi <= priors_.phi_upper)) return neg_inf;
  if (n_units_ > 0) {
    const double sigma = params[off_sigma_];
    if (!(sigma > 0.0)) return neg_inf;
    total -= priors_.sigma_m_rate * sigma;
    total += re_prior(params);
  }
  return total;
}

Eigen::VectorXd BayesProblem::initial_point() const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n_params());
  double interior_sum = 0.0, interior_sq = 0.0;
  int interior_n = 0;
  int endpoints = 0;
  for (int i = 0; i < y_.size(); ++i) {
    if (y_[i] == 0.0 || y_[i] == 1.0) {
      ++endpoints;
    } else {
      interior_sum += y_[i];
      interior_sq += y_[i] * y_[i];
      ++interior_n;
    }
  }
  const double mean =
      std::clamp(interior_n > 0 ? interior_sum / interior_n : 0.5, 0.01, 0.99);
  const double b0 = apply_forward(Link::logit, mean);
  if (centering_.kind == Centering::none) {
    p[off_b_] = b0;
  } else {
    p[off_b_] = centering_.kind == Centering::hc2 ? b0 - centering_.c : b0;
    for (int g = 0; g < n_units_; ++g) p[off_m_ + g] = p[off_b_];
  }
  if (len_a_ > 0) {
    const double frac = std::clamp(
        1.0 - static_cast<double>(endpoints) / y_.size(), 0.01, 0.99);
    p[off_a_] = apply_forward(Link::logit, frac);
  }
  double var = interior_n > 1
                   ? (interior_sq - interior_sum * interior_sum / interior_n) /
                         (interior_n - 1)
                   : 0.01;
  double phi0 = var > 0.0 ? mean * (1.0 - mean) / var - 1.0 : 20.0;
  phi0 = std::clamp(phi0, priors_.phi_lower + 0.5, priors_.phi_upper - 0.5);
  p[off_phi_] = phi0;
  if (n_units_ > 0) p[off_sigma_] = 0.5;
  return p;
}

struct ChainRunner {
  const BayesProblem& m;
  Eigen::VectorXd params;
  Eigen::VectorXd row_ll;
  double total_ll = 0.0;
  double lu = 0.0;

  explicit ChainRunner(const BayesProblem& prob) : m(prob) {}

  void refresh_all() {
    lu = m.log_u(params);
    row_ll.resize(m.y_.size());
    total_ll = 0.0;
    for (int i = 0; i < m.y_.size(); ++i) {
      row_ll[i] = m.row_loglik(i, params, lu);
      total_ll += row_ll[i];
    }
  }

  // candidate evaluation over a row subset; rows empty means all rows
  double delta_rows(const Eigen::VectorXd& cand, const std::vector<int>* rows,
                    std::vector<double>& cand_vals) const {
    const double cand_lu = m.log_u(cand);
    double delta = 0.0;
    if (rows) {
      cand_vals.resize(rows->size());
      for (size_t k = 0; k < rows->size(); ++k) {
        const int i = (*rows)[k];
        const double v = m.row_loglik(i, cand, cand_lu);
        if (v == neg_inf) return neg_inf;
        cand_vals[k] = v;
        delta += v - row_ll[i];
      }
    } else {
      cand_vals.resize(m.y_.size());
      for (int i = 0; i < m.y_.size(); ++i) {
        const double v = m.row_loglik(i, cand, cand_lu);
        if (v == neg_inf) return neg_inf;
        cand_vals[i] = v;
        delta += v - row_ll[i];
      }
    }
    return delta;
  }

  void commit(const Eigen::VectorXd& cand, const std::vector<int>* rows,
              const std::vector<double>& cand_vals) {
    if (rows) {
      for (size_t k = 0; k < rows->size(); ++k) {
        total_ll += cand_vals[k] - row_ll[(*rows)[k]];
        row_ll[(*rows)[k]] = cand_vals[k];
      }
    } else {
      total_ll = 0.0;
      for (int i = 0; i < m.y_.size(); ++i) {
        row_ll[i] = cand_vals[i];
        total_ll += row_ll[i];
      }
    }
    params = cand;
    lu = m.log_u(params);
  }
};

ChainResult BayesProblem::run_chain(const ChainConfig& cfg) const {
  const int k = n_params();
  Rng rng(cfg.seed);
  ChainRunner run(*this);
  run.params = initial_point();

  {
    const double ll = log_likelihood(run.params);
    const double lp = log_prior(run.params);
    if (!std::isfinite(ll))
      throw std::runtime_error(
          "run_chain: likelihood not finite at initialization");
    if (!std::isfinite(lp))
      throw std::runtime_error("run_chain: prior not finite at initialization");
  }
  run.refresh_all();

  const bool has_units = n_units_ > 0;
  const bool hc = centering_.kind != Centering::none;
  const double coef_var = priors_.coef_variance();

  Eigen::VectorXd scale = Eigen::VectorXd::Constant(k, 0.2);
  Eigen::VectorXi accepts = Eigen::VectorXi::Zero(k);
  Eigen::VectorXi window_accepts = Eigen::VectorXi::Zero(k);
  Eigen::VectorXi window_count = Eigen::VectorXi::Zero(k);
  Eigen::VectorXi post_attempts = Eigen::VectorXi::Zero(k);

  const int n_bounded = static_cast<int>(bounded_units_.size());
  ChainResult out;
  out.names = names_;
  out.rng_algorithm = std::string(Rng::algorithm());
  out.draws.resize(cfg.n_iter, k);
  out.flagged_max_eta.resize(cfg.n_iter, n_bounded);
  out.log_u_trace.resize(cfg.n_iter);
  out.accum.lse_max = Eigen::VectorXd::Constant(y_.size(), neg_inf);
  out.accum.lse_sum = Eigen::VectorXd::Zero(y_.size());
  out.accum.ll_mean = Eigen::VectorXd::Zero(y_.size());
  out.accum.ll_m2 = Eigen::VectorXd::Zero(y_.size());
  out.accum.param_sum = Eigen::VectorXd::Zero(k);
  out.accum.mu_sum = Eigen::VectorXd::Zero(y_.size());

  auto coef_prior_delta = [&](double old_v, double new_v) {
    return -0.5 * (new_v * new_v - old_v * old_v) / coef_var;
  };

  std::vector<double> cand_vals;
  Eigen::VectorXd cand;

  auto metropolis_step = [&](int idx, bool warmup) {
    cand = run.params;
    double log_ratio = 0.0;
    const double old_v = run.params[idx];
    bool feasible = true;
    const std::vector<int>* rows = nullptr;
    bool rows_none = false;  // update touches no likelihood rows

    if (idx >= off_b_ && idx < off_b_ + len_b_) {
      cand[idx] = old_v + scale[idx] * rng.normal();
      log_ratio += coef_prior_delta(old_v, cand[idx]);
      if (hc && idx == off_b_) {
        // the relocated intercept only moves the random-effect mean
        rows_none = true;
        log_ratio += re_prior(cand) - re_prior(run.params);
      }
    } else if (idx >= off_a_ && len_a_ > 0 && idx < off_a_ + len_a_) {
      cand[idx] = old_v + scale[idx] * rng.normal();
      log_ratio += coef_prior_delta(old_v, cand[idx]);
    } else if (idx == off_phi_) {
      cand[idx] = old_v + scale[idx] * rng.normal();
      if (!(cand[idx] >= priors_.phi_lower && cand[idx] <= priors_.phi_upper))
        feasible = false;
    } else if (has_units && idx >= off_m_ && idx < off_m_ + n_units_) {
      cand[idx] = old_v + scale[idx] * rng.normal();
      const int g = idx - off_m_;
      rows = &unit_rows_[g];
      const double sigma = run.params[off_sigma_];
      const double mean = hc ? run.params[off_b_] : 0.0;
      const double zo = (old_v - mean) / sigma;
      const double zn = (cand[idx] - mean) / sigma;
      log_ratio += -0.5 * (zn * zn - zo * zo);
    } else if (has_units && idx == off_sigma_) {
      // log-scale random walk with Jacobian correction
      cand[idx] = old_v * std::exp(scale[idx] * rng.normal());
      rows_none = true;
      log_ratio += re_prior(cand) - re_prior(run.params);
      log_ratio += -priors_.sigma_m_rate * (cand[idx] - old_v);
      log_ratio += std::log(cand[idx]) - std::log(old_v);
    }

    ++window_count[idx];
    if (!warmup) ++post_attempts[idx];
    bool accept = false;
    if (feasible) {
      if (rows_none) {
        accept = std::isfinite(log_ratio) &&
                 (log_ratio >= 0.0 || std::log(rng.uniform_open()) < log_ratio);
        if (accept) run.params = cand;
      } else {
        const double dll = run.delta_rows(cand, rows, cand_vals);
        if (dll != neg_inf) {
          const double lr = log_ratio + dll;
          accept = lr >= 0.0 || std::log(rng.uniform_open()) < lr;
          if (accept) run.commit(cand, rows, cand_vals);
        }
      }
    }
    if (accept) {
      ++accepts[idx];
      ++window_accepts[idx];
    }

    if (warmup && window_count[idx] >= cfg.adapt_window) {
      const double rate =
          static_cast<double>(window_accepts[idx]) / window_count[idx];
      if (rate < 0.3) scale[idx] *= std::exp(-0.15);
      if (rate > 0.5) scale[idx] *= std::exp(0.15);
      window_count[idx] = 0;
      window_accepts[idx] = 0;
    }
  };

  const int total_iters = cfg.n_warmup + cfg.n_iter;
  for (int iter = 0; iter < total_iters; ++iter) {
    const bool warmup = iter < cfg.n_warmup;
    for (int idx = 0; idx < k; ++idx) metropolis_step(idx, warmup);

    if (!warmup) {
      const int t = iter - cfg.n_warmup;
      for (int j = 0; j < k; ++j) out.draws(t, j) = run.params[j];
      // streaming accumulators (log phi / log sigma on the accumulation scale)
      Eigen::VectorXd acc_params = run.params;
      acc_params[off_phi_] = std::log(run.params[off_phi_]);
      if (has_units) acc_params[off_sigma_] = std::log(run.params[off_sigma_]);
      out.accum.param_sum += acc_params;
      out.accum.total_ll_sum += run.total_ll;
      ++out.accum.count;
      for (int i = 0; i < y_.size(); ++i) {
        const double ll = run.row_ll[i];
        // log-mean-exp state
        if (ll > out.accum.lse_max[i]) {
          out.accum.lse_sum[i] =
              out.accum.lse_sum[i] * std::exp(out.accum.lse_max[i] - ll) + 1.0;
          out.accum.lse_max[i] = ll;
        } else {
          out.accum.lse_sum[i] += std::exp(ll - out.accum.lse_max[i]);
        }
        // Welford
        const double d1 = ll - out.accum.ll_mean[i];
        out.accum.ll_mean[i] += d1 / out.accum.count;
        out.accum.ll_m2[i] += d1 * (ll - out.accum.ll_mean[i]);
        out.accum.mu_sum[i] += fitted_mu(i, run.params);
      }
      out.log_u_trace[t] = run.lu;
      for (int bidx = 0; bidx < n_bounded; ++bidx) {
        const int g = bounded_units_[bidx];
        double mx = neg_inf;
        for (int row : unit_rows_[g]) {
          if (y_[row] == 0.0)
            mx = std::max(mx, -row_eta(row, run.params));
          else if (y_[row] == 1.0)
            mx = std::max(mx, row_eta(row, run.params));
        }
        out.flagged_max_eta(t, bidx) = mx;
      }
    }
  }

  out.accept_rate.resize(k);
  for (int j = 0; j < k; ++j)
    out.accept_rate[j] =
        post_attempts[j] > 0
            ? static_cast<double>(accepts[j]) / (cfg.n_warmup + cfg.n_iter)
            : 0.0;
  for (int j = 0; j < k; ++j) {
    if (post_attempts[j] > 100) {
      int post_accepts = 0;
      for (int t = 1; t < cfg.n_iter; ++t)
        if (out.draws(t, j) != out.draws(t - 1, j)) ++post_accepts;
      if (post_accepts == 0)
        throw std::runtime_error("run_chain: zero acceptance after warm-up for " +
                                 names_[j]);
    }
  }

  out.ess.resize(k);
  out.ess_defined.assign(k, true);
  for (int j = 0; j < k; ++j) {
    out.ess[j] = ess(out.draws.col(j));
    if (out.ess[j] <= 0.0) out.ess_defined[j] = false;
  }

  // bound diagnostics
  for (int bidx = 0; bidx < n_bounded; ++bidx) {
    FlaggedUnitSummary s;
    s.unit = bounded_units_[bidx];
    std::vector<double> deltas(cfg.n_iter);
    std::vector<double> exceed(cfg.n_iter);
    double dsum = 0.0, esum = 0.0;
    for (int t = 0; t < cfg.n_iter; ++t) {
      const double d = std::max(0.0, out.flagged_max_eta(t, bidx) - out.log_u_trace[t]);
      deltas[t] = d;
      exceed[t] = d > 0.0 ? 1.0 : 0.0;
      dsum += d;
      esum += exceed[t];
    }
    s.delta_mean = dsum / cfg.n_iter;
    s.delta_lo = quantile(deltas, 0.025);
    s.delta_hi = quantile(deltas, 0.975);
    s.pi_u = esum / cfg.n_iter;
    s.pi_u_lo = quantile(exceed, 0.025);
    s.pi_u_hi = quantile(exceed, 0.975);
    s.pi_u_concern = s.pi_u > 0.05;
    out.flagged.push_back(s);
  }

  // fit measures
  Eigen::VectorXd mean_params = out.accum.param_sum / out.accum.count;
  mean_params[off_phi_] = std::exp(mean_params[off_phi_]);
  if (has_units) mean_params[off_sigma_] = std::exp(mean_params[off_sigma_]);
  const double ll_at_mean = log_likelihood(mean_params);
  const double d_bar = -2.0 * out.accum.total_ll_sum / out.accum.count;
  if (std::isfinite(ll_at_mean)) {
    const double d_hat = -2.0 * ll_at_mean;
    out.p_d = d_bar - d_hat;
    out.dic = d_bar + out.p_d;
  } else {
    out.p_d = std::numeric_limits<double>::quiet_NaN();
    out.dic = out.p_d;
  }

  double lppd = 0.0, pw = 0.0;
  for (int i = 0; i < y_.size(); ++i) {
    lppd += out.accum.lse_max[i] +
            std::log(out.accum.lse_sum[i] / out.accum.count);
    pw += out.accum.ll_m2[i] / (out.accum.count - 1);
  }
  out.waic = -2.0 * (lppd - pw);
  out.p_w = pw;

  const Eigen::VectorXd mu_mean = out.accum.mu_sum / out.accum.count;
  out.mse = mse_predictions(mu_mean, y_);
  return out;
}

ChainResult BayesProblem::merge(const std::vector<ChainResult>& chains) const {
  if (chains.empty()) throw std::invalid_argument("merge: no chains");
  if (chains.size() == 1) return chains.front();
  ChainResult out = chains.front();
  long rows = 0;
  for (const auto& c : chains) rows += c.draws.rows();
  out.draws.resize(rows, chains.front().draws.cols());
  out.flagged_max_eta.resize(rows, chains.front().flagged_max_eta.cols());
  out.log_u_trace.resize(rows);
  long at = 0;
  Eigen::VectorXd ess_sum = Eigen::VectorXd::Zero(n_params());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_params());
  PosteriorAccum& a = out.accum;
  a = PosteriorAccum{};
  a.lse_max = Eigen::VectorXd::Constant(y_.size(), neg_inf);
  a.lse_sum = Eigen::VectorXd::Zero(y_.size());
  a.ll_mean = Eigen::VectorXd::Zero(y_.size());
  a.ll_m2 = Eigen::VectorXd::Zero(y_.size());
  a.param_sum = Eigen::VectorXd::Zero(n_params());
  a.mu_sum = Eigen::VectorXd::Zero(y_.size());
  for (const auto& c : chains) {
    out.draws.middleRows(at, c.draws.rows()) = c.draws;
    out.flagged_max_eta.middleRows(at, c.flagged_max_eta.rows()) = c.flagged_max_eta;
    out.log_u_trace.segment(at, c.log_u_trace.size()) = c.log_u_trace;
    at += c.draws.rows();
    ess_sum += c.ess;
    acc += c.accept_rate;
    // merge streaming states
    for (int i = 0; i < y_.size(); ++i) {
      const double mx = std::max(a.lse_max[i], c.accum.lse_max[i]);
      double s = 0.0;
      if (a.lse_max[i] != neg_inf) s += a.lse_sum[i] * std::exp(a.lse_max[i] - mx);
      s += c.accum.lse_sum[i] * std::exp(c.accum.lse_max[i] - mx);
      a.lse_max[i] = mx;
      a.lse_sum[i] = s;
      const long na = a.count, nb = c.accum.count;
      const double delta = c.accum.ll_mean[i] - a.ll_mean[i];
      const double mean =
          na + nb > 0 ? (na * a.ll_mean[i] + nb * c.accum.ll_mean[i]) / (na + nb)
                      : 0.0;
      a.ll_m2[i] = a.ll_m2[i] + c.accum.ll_m2[i] +
                   delta * delta * static_cast<double>(na) * nb / (na + nb);
      a.ll_mean[i] = mean;
    }
    a.param_sum += c.accum.param_sum;
    a.mu_sum += c.accum.mu_sum;
    a.total_ll_sum += c.accum.total_ll_sum;
    a.count += c.accum.count;
  }
  out.ess = ess_sum;
  out.accept_rate = acc / static_cast<double>(chains.size());

  Eigen::VectorXd mean_params = a.param_sum / a.count;
  mean_params[off_phi_] = std::exp(mean_params[off_phi_]);
  if (n_units_ > 0) mean_params[off_sigma_] = std::exp(mean_params[off_sigma_]);
  const double d_bar = -2.0 * a.total_ll_sum / a.count;
  const double ll_at_mean = log_likelihood(mean_params);
  if (std::isfinite(ll_at_mean)) {
    out.p_d = d_bar + 2.0 * ll_at_mean;
    out.dic = d_bar + out.p_d;
  } else {
    out.p_d = std::numeric_limits<double>::quiet_NaN();
    out.dic = out.p_d;
  }
  double lppd = 0.0, pw = 0.0;
  for (int i = 0; i < y_.size(); ++i) {
    lppd += a.lse_max[i] + std::log(a.lse_sum[i] / a.count);
    pw += a.ll_m2[i] / (a.count - 1);
  }
  out.waic = -2.0 * (lppd - pw);
  out.p_w = pw;
  out.mse = mse_predictions(a.mu_sum / a.count, y_);

  // recompute bound diagnostics over the pooled trace
  out.flagged.clear();
  const int n_bounded = static_cast<int>(bounded_units_.size());
  for (int bidx = 0; bidx < n_bounded; ++bidx) {
    FlaggedUnitSummary s;
    s.unit = bounded_units_[bidx];
    std::vector<double> deltas(out.draws.rows()), exceed(out.draws.rows());
    double dsum = 0.0, esum = 0.0;
    for (long t = 0; t < out.draws.rows(); ++t) {
      const double d =
          std::max(0.0, out.flagged_max_eta(t, bidx) - out.log_u_trace[t]);
      deltas[t] = d;
      exceed[t] = d > 0.0 ? 1.0 : 0.0;
      dsum += d;
      esum += exceed[t];
    }
    s.delta_mean = dsum / out.draws.rows();
    s.delta_lo = quantile(deltas, 0.025);
    s.delta_hi = quantile(deltas, 0.975);
    s.pi_u = esum / out.draws.rows();
    s.pi_u_lo = quantile(exceed, 0.025);
    s.pi_u_hi = quantile(exceed, 0.975);
    s.pi_u_concern = s.pi_u > 0.05;
    out.flagged.push_back(s);
  }
  return out;
}

DicResult dic(const Eigen::MatrixXd& pointwise_ll, double ll_at_posterior_mean) {
  DicResult r;
  const double d_bar = -2.0 * pointwise_ll.rowwise().sum().mean();
  const double d_hat = -2.0 * ll_at_posterior_mean;
  r.p_d = d_bar - d_hat;
  r.dic = d_bar + r.p_d;
  return r;
}

WaicResult waic(const Eigen::MatrixXd& pointwise_ll) {
  WaicResult r;
  const long s = pointwise_ll.rows();
  double lppd = 0.0, pw = 0.0;
  for (int i = 0; i < pointwise_ll.cols(); ++i) {
    const double mx = pointwise_ll.col(i).maxCoeff();
    lppd += mx + std::log((pointwise_ll.col(i).array() - mx).exp().mean());
    if (s > 1) {
      const double mean = pointwise_ll.col(i).mean();
      pw += (pointwise_ll.col(i).array() - mean).square().sum() / (s - 1);
    }
  }
  r.p_w = pw;
  r.waic = -2.0 * (lppd - pw);
  return r;
}

double ess(const Eigen::VectorXd& trace) {
  const long n = trace.size();
  if (n < 100) throw std::invalid_argument("ess: trace shorter than 100");
  if (trace.maxCoeff() == trace.minCoeff()) return 0.0;  // constant trace
  const double mean = trace.mean();
  const Eigen::ArrayXd centered = trace.array() - mean;
  const double var = centered.square().sum() / n;
  if (!(var > 0.0)) return 0.0;

  auto rho = [&](long lag) {
    double s = 0.0;
    for (long t = 0; t + lag < n; ++t) s += centered[t] * centered[t + lag];
    return s / (n * var);
  };

  // initial positive sequence: sum paired autocorrelations while positive
  const long max_lag = std::min(n - 2, 5000L);
  double tau = 1.0;
  for (long m = 0;; ++m) {
    const long l1 = 2 * m + 1, l2 = 2 * m + 2;
    if (l2 >= max_lag) break;
    const double pair = rho(l1) + rho(l2);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::min(static_cast<double>(n), n / tau);
}

double mse_predictions(const Eigen::VectorXd& posterior_mean_mu,
                       const Eigen::VectorXd& y) {
  if (posterior_mean_mu.size() != y.size())
    throw std::invalid_argument("mse_predictions: size mismatch");
  return (y - posterior_mean_mu).squaredNorm() / y.size();
}

Eigen::VectorXd pi_u_replay(const ChainResult& chain, double log_u) {
  Eigen::VectorXd out(chain.flagged_max_eta.cols());
  for (int b = 0; b < chain.flagged_max_eta.cols(); ++b) {
    double count = 0.0;
    for (long t = 0; t < chain.flagged_max_eta.rows(); ++t)
      if (chain.flagged_max_eta(t, b) > log_u) count += 1.0;
    out[b] = count / chain.flagged_max_eta.rows();
  }
  return out;
}

}  // namespace unitreg
