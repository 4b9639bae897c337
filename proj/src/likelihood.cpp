#include "unitreg/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "unitreg/distributions.hpp"
#include "unitreg/links.hpp"
#include "unitreg/special.hpp"

namespace unitreg {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::classic: return "classic";
    case ModelKind::augmented: return "augmented";
    case ModelKind::model1: return "model1";
    case ModelKind::model2: return "model2";
    case ModelKind::model3: return "model3";
    case ModelKind::model4: return "model4";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "classic") return ModelKind::classic;
  if (s == "augmented") return ModelKind::augmented;
  if (s == "model1") return ModelKind::model1;
  if (s == "model2") return ModelKind::model2;
  if (s == "model3") return ModelKind::model3;
  if (s == "model4") return ModelKind::model4;
  throw std::invalid_argument("unknown model kind: " + s);
}

namespace {

// Beta log density at interior y with plain inputs; -inf when parameters
// leave the valid region (the optimizer treats that as infeasible).
double safe_beta_logpdf(double y, double mu, double phi) {
  if (!(mu > 0.0 && mu < 1.0) || !(phi > 0.0) || !std::isfinite(phi)) return neg_inf;
  const double alpha = mu * phi;
  const double beta = (1.0 - mu) * phi;
  if (!(alpha > 0.0) || !(beta > 0.0)) return neg_inf;
  const double v = std::lgamma(phi) - std::lgamma(alpha) - std::lgamma(beta) +
                   (alpha - 1.0) * std::log(y) + (beta - 1.0) * std::log1p(-y);
  return std::isfinite(v) ? v : neg_inf;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x_plus,
                               const std::vector<int>& cols) {
  Eigen::MatrixXd out(x_plus.rows(), 1 + cols.size());
  out.col(0).setOnes();
  for (size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 1 || cols[j] >= x_plus.cols())
      throw std::invalid_argument("build_design: predictor index out of range");
    out.col(1 + j) = x_plus.col(cols[j]);
  }
  return out;
}

Eigen::MatrixXd subset_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(rows.size(), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

void append_names(ParamLayout& layout, Slice& slice, const std::string& prefix,
                  int len) {
  slice.offset = layout.size();
  slice.len = len;
  for (int j = 0; j < len; ++j)
    layout.names.push_back(prefix + std::to_string(j));
}

double log_u_bound(BoundKind kind, double phi) {
  const double u = (kind == BoundKind::phi_minus_1) ? phi - 1.0 : phi;
  return u > 0.0 ? std::log(u) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

bool Theorem3Flags::any_flagged() const {
  for (int v : q)
    if (v) return true;
  return false;
}

Theorem3Flags check_theorem3(const Dataset& data, const std::vector<int>& grouping) {
  Theorem3Flags f;
  f.group_of_row = grouping.empty() ? std::vector<int>(data.n(), 0) : grouping;
  if (static_cast<int>(f.group_of_row.size()) != data.n())
    throw std::invalid_argument("check_theorem3: grouping size mismatch");
  int n_groups = 0;
  for (int g : f.group_of_row) n_groups = std::max(n_groups, g + 1);
  f.n0.assign(n_groups, 0);
  f.n1.assign(n_groups, 0);
  f.n_beta.assign(n_groups, 0);
  for (int i = 0; i < data.n(); ++i) {
    const int g = f.group_of_row[i];
    if (data.y[i] == 0.0)
      ++f.n0[g];
    else if (data.y[i] == 1.0)
      ++f.n1[g];
    else
      ++f.n_beta[g];
  }
  f.q.assign(n_groups, 0);
  for (int g = 0; g < n_groups; ++g)
    f.q[g] = f.n_beta[g] < std::abs(f.n0[g] - f.n1[g]) ? 1 : 0;
  f.global_q = data.partition.n_beta() <
                       std::abs(data.partition.n0() - data.partition.n1())
                   ? 1
                   : 0;
  return f;
}

ModelDesign build_design(const ModelSpec& spec, const Dataset& data,
                         const std::vector<int>& grouping) {
  ModelDesign d;
  d.spec = spec;

  Eigen::MatrixXd x_mu_full = select_columns(data.x_plus, spec.mu_cols);
  if (spec.masked_mu_design)
    x_mu_full = endpoint_mask(data).asDiagonal() * x_mu_full;

  if (spec.kind == ModelKind::classic) {
    // classic beta regression is defined on the interior subset
    const auto& rows = data.partition.idx_beta;
    d.y.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) d.y[i] = data.y[rows[i]];
    d.x_mu = subset_rows(x_mu_full, rows);
    d.x_phi = subset_rows(select_columns(data.x_plus, spec.phi_cols), rows);
  } else {
    d.y = data.y;
    d.x_mu = std::move(x_mu_full);
    d.x_phi = select_columns(data.x_plus, spec.phi_cols);
    if (spec.kind == ModelKind::model1)
      d.x_tilt = select_columns(data.x_plus, spec.tilt_cols);
    const bool wants_theta = spec.kind == ModelKind::model1 ||
                             spec.kind == ModelKind::model2 ||
                             spec.kind == ModelKind::augmented;
    if (wants_theta) {
      if (spec.kind == ModelKind::model2 && !spec.theta_regression)
        d.x_theta = Eigen::MatrixXd::Ones(data.n(), 1);
      else
        d.x_theta = select_columns(data.x_plus, spec.theta_cols);
    }
  }
  d.partition = make_partition(d.y);

  std::vector<int> groups = grouping;
  if (groups.empty() && !data.unit_id.empty() && spec.kind != ModelKind::classic)
    groups = data.unit_id;
  d.flags = check_theorem3(data, groups);

  if (spec.kind == ModelKind::model4) {
    d.capped_row.assign(d.n(), 0);
    for (int i = 0; i < d.n(); ++i)
      d.capped_row[i] = d.flags.row_flagged(i) ? 1 : 0;
  }

  ParamLayout layout;
  append_names(layout, layout.b, "b", static_cast<int>(d.x_mu.cols()));
  if (spec.kind == ModelKind::model1)
    append_names(layout, layout.c, "c", static_cast<int>(d.x_tilt.cols()));
  append_names(layout, layout.d, "d", static_cast<int>(d.x_phi.cols()));
  if (spec.kind == ModelKind::model1 || spec.kind == ModelKind::model2)
    append_names(layout, layout.a, "a", static_cast<int>(d.x_theta.cols()));
  if (spec.kind == ModelKind::augmented) {
    if (d.partition.n0() > 0)
      append_names(layout, layout.z0, "p0_", static_cast<int>(d.x_theta.cols()));
    if (d.partition.n1() > 0)
      append_names(layout, layout.z1, "p1_", static_cast<int>(d.x_theta.cols()));
  }
  if (spec.kind == ModelKind::model2 && spec.zeta) {
    layout.zeta.offset = layout.size();
    layout.zeta.len = 1;
    layout.names.push_back("zeta");
  }
  d.layout = layout;
  return d;
}

namespace {

struct Evaluation {
  double ll = 0.0;
  bool ok = true;
  Eigen::VectorXd* grad = nullptr;

  void fail() {
    ll = neg_inf;
    ok = false;
  }
  void add(double term) {
    if (!std::isfinite(term))
      fail();
    else
      ll += term;
  }
};

// Classic beta term plus score contributions for one interior row.
void beta_row(Evaluation& ev, const ModelDesign& d, int i, double eta_mu,
              double phi) {
  const double mu = apply_inverse(Link::logit, eta_mu);
  const double y = d.y[i];
  const double term = safe_beta_logpdf(y, mu, phi);
  if (term == neg_inf) {
    ev.fail();
    return;
  }
  ev.ll += term;
  if (ev.grad) {
    const double alpha = mu * phi;
    const double beta = (1.0 - mu) * phi;
    const double ystar = std::log(y) - std::log1p(-y);
    const double mustar = digamma(alpha) - digamma(beta);
    const double db = phi * (ystar - mustar) * mu * (1.0 - mu);
    const double dd =
        phi * (mu * (ystar - mustar) + std::log1p(-y) - digamma(beta) + digamma(phi));
    ev.grad->segment(d.layout.b.offset, d.layout.b.len) += db * d.x_mu.row(i).transpose();
    ev.grad->segment(d.layout.d.offset, d.layout.d.len) += dd * d.x_phi.row(i).transpose();
  }
}

// Bernoulli log-likelihood with logit link over all rows; z[i] in {0,1}.
void bernoulli_block(Evaluation& ev, const ModelDesign& d, const Slice& slice,
                     const Eigen::VectorXd& eta, const std::vector<char>& z) {
  for (int i = 0; i < d.n(); ++i) {
    ev.ll += (z[i] ? eta[i] : 0.0) - log1pexp(eta[i]);
    if (ev.grad) {
      const double p = apply_inverse(Link::logit, eta[i]);
      ev.grad->segment(slice.offset, slice.len) +=
          ((z[i] ? 1.0 : 0.0) - p) * d.x_theta.row(i).transpose();
    }
  }
}

double evaluate(const ModelDesign& d, const Eigen::VectorXd& params,
                Eigen::VectorXd* grad) {
  if (params.size() != d.layout.size())
    throw std::invalid_argument("loglik: parameter vector does not match layout");
  Evaluation ev;
  ev.grad = grad;
  if (grad) grad->setZero(params.size());

  const auto& L = d.layout;
  const Eigen::VectorXd eta_mu = d.x_mu * params.segment(L.b.offset, L.b.len);
  const Eigen::VectorXd eta_phi = d.x_phi * params.segment(L.d.offset, L.d.len);

  auto phi_at = [&](int i) { return std::exp(eta_phi[i]); };

  switch (d.spec.kind) {
    case ModelKind::classic: {
      for (int i = 0; i < d.n() && ev.ok; ++i) beta_row(ev, d, i, eta_mu[i], phi_at(i));
      break;
    }

    case ModelKind::model3: {
      for (int i = 0; i < d.n() && ev.ok; ++i) {
        const double y = d.y[i];
        if (y == 0.0 || y == 1.0) {
          // endpoint density reduces to the odds ratio: log f = +-eta
          const double s = (y == 1.0) ? 1.0 : -1.0;
          ev.add(s * eta_mu[i]);
          if (ev.grad)
            ev.grad->segment(L.b.offset, L.b.len) += s * d.x_mu.row(i).transpose();
        } else {
          beta_row(ev, d, i, eta_mu[i], phi_at(i));
        }
      }
      break;
    }

    case ModelKind::model4: {
      for (int i = 0; i < d.n() && ev.ok; ++i) {
        const double y = d.y[i];
        if (y == 0.0 || y == 1.0) {
          const double s = (y == 1.0) ? 1.0 : -1.0;
          if (d.capped_row.empty() || !d.capped_row[i]) {
            ev.add(s * eta_mu[i]);
            if (ev.grad)
              ev.grad->segment(L.b.offset, L.b.len) += s * d.x_mu.row(i).transpose();
          } else {
            const double phi = phi_at(i);
            const double cap = log_u_bound(d.spec.bound_kind, phi);
            if (!std::isfinite(cap)) {
              ev.fail();
              break;
            }
            if (s * eta_mu[i] <= cap) {
              ev.add(s * eta_mu[i]);
              if (ev.grad)
                ev.grad->segment(L.b.offset, L.b.len) += s * d.x_mu.row(i).transpose();
            } else {
              ev.add(cap);
              if (ev.grad) {
                const double dcap_dphi =
                    (d.spec.bound_kind == BoundKind::phi_minus_1) ? 1.0 / (phi - 1.0)
                                                                  : 1.0 / phi;
                ev.grad->segment(L.d.offset, L.d.len) +=
                    dcap_dphi * phi * d.x_phi.row(i).transpose();
              }
            }
          }
        } else {
          beta_row(ev, d, i, eta_mu[i], phi_at(i));
        }
      }
      break;
    }

    case ModelKind::augmented: {
      for (int i : d.partition.idx_beta) {
        beta_row(ev, d, i, eta_mu[i], phi_at(i));
        if (!ev.ok) break;
      }
      if (ev.ok && !L.z0.empty()) {
        const Eigen::VectorXd eta = d.x_theta * params.segment(L.z0.offset, L.z0.len);
        std::vector<char> z(d.n());
        for (int i = 0; i < d.n(); ++i) z[i] = d.y[i] == 0.0 ? 1 : 0;
        bernoulli_block(ev, d, L.z0, eta, z);
      }
      if (ev.ok && !L.z1.empty()) {
        const Eigen::VectorXd eta = d.x_theta * params.segment(L.z1.offset, L.z1.len);
        std::vector<char> z(d.n());
        for (int i = 0; i < d.n(); ++i) z[i] = d.y[i] == 1.0 ? 1 : 0;
        bernoulli_block(ev, d, L.z1, eta, z);
      }
      break;
    }

    case ModelKind::model2: {
      if (d.spec.mixture_form == MixtureForm::full) {
        if (grad) return neg_inf;  // numeric gradients only for this form
        const Eigen::VectorXd eta_theta =
            d.x_theta * params.segment(L.a.offset, L.a.len);
        const double zeta =
            L.zeta.empty() ? 0.5 : apply_inverse(Link::logit, params[L.zeta.offset]);
        for (int i = 0; i < d.n() && ev.ok; ++i) {
          const double mu = apply_inverse(Link::logit, eta_mu[i]);
          if (!(mu > 0.0 && mu < 1.0)) {
            ev.fail();
            break;
          }
          const double theta = apply_inverse(Link::logit, eta_theta[i]);
          const double nu = nu_from_mean(mu);
          double logw1 = std::log1p(-theta);
          if (!L.zeta.empty() && d.y[i] == 0.0) logw1 += std::log1p(-zeta);
          if (!L.zeta.empty() && d.y[i] == 1.0) logw1 += std::log(zeta);
          const double comp1 = logw1 + tilting_power_logpdf(d.y[i], nu);
          const double comp2 =
              d.is_endpoint_row(i)
                  ? neg_inf
                  : std::log(theta) + safe_beta_logpdf(d.y[i], mu, phi_at(i));
          ev.add(log_add_exp(comp1, comp2));
        }
        break;
      }
      // semimixture: membership is known, endpoints weigh (1-theta) against
      // the tilting density, interior rows weigh theta against the beta.
      const Eigen::VectorXd eta_theta =
          d.x_theta * params.segment(L.a.offset, L.a.len);
      const double zeta_logit = L.zeta.empty() ? 0.0 : params[L.zeta.offset];
      for (int i = 0; i < d.n() && ev.ok; ++i) {
        const double y = d.y[i];
        const double theta = apply_inverse(Link::logit, eta_theta[i]);
        if (y == 0.0 || y == 1.0) {
          const double s = (y == 1.0) ? 1.0 : -1.0;
          // tilting density at an endpoint equals the odds ratio when the
          // tilt points at that endpoint and is zero otherwise; the
          // endpoint-precision beta keeps the odds ratio on both sides
          if (d.spec.endpoint_density == EndpointDensity::tilting_power &&
              s * eta_mu[i] < 0.0) {
            ev.fail();
            break;
          }
          ev.add(std::log1p(-theta) + s * eta_mu[i]);
          if (ev.grad) {
            ev.grad->segment(L.b.offset, L.b.len) += s * d.x_mu.row(i).transpose();
            ev.grad->segment(L.a.offset, L.a.len) += -theta * d.x_theta.row(i).transpose();
          }
          if (!L.zeta.empty()) {
            const double zeta = apply_inverse(Link::logit, zeta_logit);
            ev.add(y == 1.0 ? std::log(zeta) : std::log1p(-zeta));
            if (ev.grad)
              (*ev.grad)[L.zeta.offset] += (y == 1.0 ? 1.0 - zeta : -zeta);
          }
        } else {
          ev.add(std::log(theta));
          if (ev.grad)
            ev.grad->segment(L.a.offset, L.a.len) +=
                (1.0 - theta) * d.x_theta.row(i).transpose();
          beta_row(ev, d, i, eta_mu[i], phi_at(i));
        }
      }
      break;
    }

    case ModelKind::model1: {
      if (grad) return neg_inf;  // numeric gradients only
      const Eigen::VectorXd eta_tilt = d.x_tilt * params.segment(L.c.offset, L.c.len);
      const Eigen::VectorXd eta_theta = d.x_theta * params.segment(L.a.offset, L.a.len);
      for (int i = 0; i < d.n() && ev.ok; ++i) {
        const double mu_t = apply_inverse(Link::logit, eta_tilt[i]);
        if (!(mu_t > 0.0 && mu_t < 1.0)) {
          ev.fail();
          break;
        }
        const double nu = nu_from_mean(mu_t);
        const double theta = apply_inverse(Link::logit, eta_theta[i]);
        const double mu = apply_inverse(Link::logit, eta_mu[i]);
        const double comp1 = std::log1p(-theta) + tilting_power_logpdf(d.y[i], nu);
        const double comp2 = d.is_endpoint_row(i)
                                 ? neg_inf
                                 : std::log(theta) + safe_beta_logpdf(d.y[i], mu, phi_at(i));
        ev.add(log_add_exp(comp1, comp2));
      }
      break;
    }
  }
  return ev.ok && std::isfinite(ev.ll) ? ev.ll : neg_inf;
}

}  // namespace

double loglik(const ModelDesign& design, const Eigen::VectorXd& params) {
  return evaluate(design, params, nullptr);
}

bool loglik_gradient(const ModelDesign& design, const Eigen::VectorXd& params,
                     Eigen::VectorXd& grad) {
  switch (design.spec.kind) {
    case ModelKind::model1:
      return false;
    case ModelKind::model2:
      if (design.spec.mixture_form == MixtureForm::full) return false;
      break;
    default:
      break;
  }
  evaluate(design, params, &grad);
  return true;
}

double loglik_model4_constrained(const ModelDesign& design,
                                 const Eigen::VectorXd& params) {
  if (design.spec.kind != ModelKind::model4)
    throw std::invalid_argument("loglik_model4_constrained: requires model4 design");
  const auto& L = design.layout;
  Evaluation ev;
  const Eigen::VectorXd eta_mu = design.x_mu * params.segment(L.b.offset, L.b.len);
  const Eigen::VectorXd eta_phi = design.x_phi * params.segment(L.d.offset, L.d.len);
  for (int i = 0; i < design.n() && ev.ok; ++i) {
    const double y = design.y[i];
    const double phi = std::exp(eta_phi[i]);
    double eta = eta_mu[i];
    if (!design.capped_row.empty() && design.capped_row[i]) {
      const double cap = log_u_bound(design.spec.bound_kind, phi);
      if (!std::isfinite(cap) || cap < 0.0) {
        ev.fail();  // |eta| <= log U is empty when U < 1
        break;
      }
      eta = std::clamp(eta, -cap, cap);
    }
    if (y == 0.0 || y == 1.0) {
      ev.add((y == 1.0 ? 1.0 : -1.0) * eta);
    } else {
      const double mu = apply_inverse(Link::logit, eta);
      ev.add(safe_beta_logpdf(y, mu, phi));
    }
  }
  return ev.ok && std::isfinite(ev.ll) ? ev.ll : neg_inf;
}

FittedValues compute_fitted(const ModelDesign& design, const Eigen::VectorXd& params) {
  const auto& L = design.layout;
  FittedValues f;
  f.eta_mu = design.x_mu * params.segment(L.b.offset, L.b.len);
  f.mu.resize(design.n());
  for (int i = 0; i < design.n(); ++i) f.mu[i] = apply_inverse(Link::logit, f.eta_mu[i]);
  const Eigen::VectorXd eta_phi = design.x_phi * params.segment(L.d.offset, L.d.len);
  f.phi = eta_phi.array().exp();
  if (!L.a.empty()) {
    const Eigen::VectorXd eta_theta = design.x_theta * params.segment(L.a.offset, L.a.len);
    f.theta.resize(design.n());
    for (int i = 0; i < design.n(); ++i)
      f.theta[i] = apply_inverse(Link::logit, eta_theta[i]);
  }
  return f;
}

double endpoint_score(double mu, int n0, int n1) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("endpoint_score: mu outside (0,1)");
  return n0 / (mu * mu - mu) + n1 / (mu - mu * mu);
}

double endpoint_hessian(double mu, int n0, int n1) {
  if (!(mu > 0.0 && mu < 1.0))
    throw std::domain_error("endpoint_hessian: mu outside (0,1)");
  const double a = 1.0 / (mu * mu);
  const double b = 1.0 / ((1.0 - mu) * (1.0 - mu));
  return n0 * (a - b) + n1 * (b - a);
}

double theorem2_objective(double mu, double phi, double n0, double n_beta) {
  if (!(mu > 0.0 && mu < 1.0) || !(phi > 0.0)) return neg_inf;
  return n_beta * (std::lgamma(phi) - std::lgamma(mu * phi) -
                   std::lgamma((1.0 - mu) * phi)) +
         n0 * (std::log1p(-mu) - std::log(mu));
}

}  // namespace unitreg
