#include "unitreg/mle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "unitreg/links.hpp"
#include "unitreg/special.hpp"

namespace unitreg {

namespace {

double clamp_prob(double p) { return std::clamp(p, 1e-3, 1.0 - 1e-3); }

void refuse_degenerate(const ModelSpec& spec, const Dataset& data) {
  const auto& part = data.partition;
  if (data.n() == 0) throw std::invalid_argument("fit: empty dataset");
  if (part.n_beta() == 0) {
    if (part.n0() == data.n())
      throw std::invalid_argument("fit: all observations are 0");
    if (part.n1() == data.n())
      throw std::invalid_argument("fit: all observations are 1");
    if (part.n0() == part.n1())
      throw std::invalid_argument(
          "fit: endpoints only with n0 == n1; the endpoint terms cancel and "
          "the likelihood carries no information");
    throw std::invalid_argument("fit: no interior observations");
  }
  (void)spec;
}

// Classic-model starting values: intercept at the link of the interior mean,
// precision from the method of moments.
Eigen::VectorXd stage1_start(const ModelDesign& design) {
  const double mean = design.y.mean();
  double var = 0.0;
  for (int i = 0; i < design.n(); ++i) var += (design.y[i] - mean) * (design.y[i] - mean);
  var /= std::max(1, design.n() - 1);
  const double m = clamp_prob(mean);
  double phi_mm = var > 0.0 ? m * (1.0 - m) / var - 1.0 : 10.0;
  phi_mm = std::max(0.5, phi_mm);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(design.layout.size());
  x[design.layout.b.offset] = apply_forward(Link::logit, m);
  x[design.layout.d.offset] = std::log(phi_mm);
  return x;
}

OptimResult maximize(const ModelDesign& design, const Eigen::VectorXd& start,
                     const FitOptions& opts) {
  ObjectiveFn neg_ll = [&design](const Eigen::VectorXd& p) { return -loglik(design, p); };
  GradientFn neg_grad = nullptr;
  if (opts.analytic_gradients) {
    neg_grad = [&design](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
      if (!loglik_gradient(design, p, g)) return false;
      g = -g;
      return true;
    };
  }
  return minimize_bfgs(neg_ll, neg_grad, start, opts.optim);
}

}  // namespace

int FitResult::index_of(const std::string& name) const {
  for (int i = 0; i < layout.size(); ++i)
    if (layout.names[i] == name) return i;
  throw std::invalid_argument("no parameter named '" + name + "'");
}

namespace {

Eigen::MatrixXd central_hessian(const ObjectiveFn& f, const Eigen::VectorXd& at,
                                const Eigen::VectorXd& h) {
  const int k = static_cast<int>(at.size());
  Eigen::MatrixXd hess(k, k);
  const double f0 = f(at);
  Eigen::VectorXd x = at;
  for (int i = 0; i < k; ++i) {
    x[i] = at[i] + h[i];
    const double fp = f(x);
    x[i] = at[i] - h[i];
    const double fm = f(x);
    x[i] = at[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (int j = i + 1; j < k; ++j) {
      x[i] = at[i] + h[i];
      x[j] = at[j] + h[j];
      const double fpp = f(x);
      x[j] = at[j] - h[j];
      const double fpm = f(x);
      x[i] = at[i] - h[i];
      x[j] = at[j] + h[j];
      const double fmp = f(x);
      x[j] = at[j] - h[j];
      const double fmm = f(x);
      x[i] = at[i];
      x[j] = at[j];
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  return hess;
}

}  // namespace

Eigen::MatrixXd observed_information(const ObjectiveFn& loglik_fn,
                                     const Eigen::VectorXd& at) {
  // Central differences with one Richardson step. The base step is large
  // enough that the quadratic cancellation noise eps*|f|/h^2 stays well
  // below the curvature scale; the extrapolation removes the O(h^2) bias.
  const int k = static_cast<int>(at.size());
  Eigen::VectorXd h(k);
  for (int j = 0; j < k; ++j) h[j] = 1e-3 * std::max(1.0, std::fabs(at[j]));
  const Eigen::MatrixXd coarse = central_hessian(loglik_fn, at, h);
  const Eigen::MatrixXd fine = central_hessian(loglik_fn, at, 0.5 * h);
  return -(4.0 * fine - coarse) / 3.0;
}

FitResult fit(const ModelSpec& spec, const Dataset& data, const FitOptions& opts) {
  return fit(build_design(spec, data), data, opts);
}

FitResult fit(const ModelDesign& design, const Dataset& data, const FitOptions& opts) {
  const ModelSpec& spec = design.spec;
  refuse_degenerate(spec, data);

  // Stage 1: classic fit on interior rows
  ModelSpec classic_spec = spec;
  classic_spec.kind = ModelKind::classic;
  classic_spec.masked_mu_design = false;
  const ModelDesign classic_design = build_design(classic_spec, data);
  Eigen::VectorXd stage1 = stage1_start(classic_design);
  const OptimResult r1 = maximize(classic_design, stage1, opts);

  const ModelDesign& target = (spec.kind == ModelKind::classic) ? classic_design : design;

  Eigen::VectorXd start;
  if (opts.start) {
    start = *opts.start;
    if (start.size() != target.layout.size())
      throw std::invalid_argument("fit: start vector does not match layout");
  } else if (spec.kind == ModelKind::classic) {
    start = r1.x;
  } else {
    start = Eigen::VectorXd::Zero(target.layout.size());
    const auto& L = target.layout;
    const auto& L1 = classic_design.layout;
    start.segment(L.b.offset, L.b.len) = r1.x.segment(L1.b.offset, L1.b.len);
    start.segment(L.d.offset, L.d.len) = r1.x.segment(L1.d.offset, L1.d.len);
    if (!L.c.empty())
      start.segment(L.c.offset, std::min(L.c.len, L.b.len)) =
          r1.x.segment(L1.b.offset, std::min(L.c.len, L.b.len));
    const double interior_frac =
        clamp_prob(static_cast<double>(data.partition.n_beta()) / data.n());
    if (!L.a.empty())
      start[L.a.offset] = apply_forward(Link::logit, interior_frac);
    if (!L.z0.empty())
      start[L.z0.offset] = apply_forward(
          Link::logit, clamp_prob(static_cast<double>(data.partition.n0()) / data.n()));
    if (!L.z1.empty())
      start[L.z1.offset] = apply_forward(
          Link::logit, clamp_prob(static_cast<double>(data.partition.n1()) / data.n()));
    if (!L.zeta.empty()) {
      const int ne = data.partition.n0() + data.partition.n1();
      start[L.zeta.offset] = apply_forward(
          Link::logit,
          clamp_prob(ne > 0 ? static_cast<double>(data.partition.n1()) / ne : 0.5));
    }
    if (spec.masked_mu_design) {
      // endpoint rows of the masked design contribute eta = 0; the stage-1
      // start stays valid because interior rows are unmasked
    }
  }

  if (!std::isfinite(loglik(target, start))) {
    // nudge toward the interior of the feasible region
    start.segment(target.layout.b.offset, target.layout.b.len).setZero();
    start[target.layout.b.offset] =
        apply_forward(Link::logit, clamp_prob(design.y.mean()));
  }

  const OptimResult r2 = maximize(target, start, opts);

  FitResult out;
  out.spec = spec;
  out.layout = target.layout;
  out.estimates = r2.x;
  out.loglik = -r2.f;
  out.k = target.layout.size();
  out.n_used = target.n();
  out.converged = r2.converged;
  out.grad_norm = r2.grad_norm;
  out.iterations = r2.iterations;
  out.theorem3 = target.flags;
  out.message = r2.message;
  out.aic = 2.0 * out.k - 2.0 * out.loglik;

  // Observed information at the optimum
  ObjectiveFn ll = [&target](const Eigen::VectorXd& p) { return loglik(target, p); };
  const Eigen::MatrixXd info = observed_information(ll, r2.x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  out.hessian_pd = eig.eigenvalues().minCoeff() > 0.0;
  out.se = Eigen::VectorXd::Constant(out.k, std::numeric_limits<double>::quiet_NaN());
  out.z = out.se;
  out.vcov =
      Eigen::MatrixXd::Constant(out.k, out.k, std::numeric_limits<double>::quiet_NaN());
  if (out.hessian_pd) {
    out.vcov = info.inverse();
    for (int j = 0; j < out.k; ++j) {
      const double v = out.vcov(j, j);
      if (v > 0.0) {
        out.se[j] = std::sqrt(v);
        out.z[j] = out.estimates[j] / out.se[j];
      } else {
        out.singular_params.push_back(j);
      }
    }
  } else {
    // name the parameter carrying each non-positive curvature direction
    for (int e = 0; e < out.k; ++e) {
      if (eig.eigenvalues()[e] <= 0.0) {
        int worst = 0;
        eig.eigenvectors().col(e).cwiseAbs().maxCoeff(&worst);
        if (std::find(out.singular_params.begin(), out.singular_params.end(), worst) ==
            out.singular_params.end())
          out.singular_params.push_back(worst);
      }
    }
  }
  return out;
}

TestResult wald_test(const FitResult& fit, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& r) {
  if (R.cols() != fit.estimates.size())
    throw std::invalid_argument("wald_test: restriction width mismatch");
  if (R.rows() != r.size())
    throw std::invalid_argument("wald_test: restriction count mismatch");
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
  if (lu.rank() < R.rows())
    throw std::invalid_argument("wald_test: restrictions are rank deficient");
  if (!fit.vcov.allFinite())
    throw std::invalid_argument("wald_test: covariance unavailable (singular information)");
  const Eigen::VectorXd diff = R * fit.estimates - r;
  const Eigen::MatrixXd rvr = R * fit.vcov * R.transpose();
  const Eigen::VectorXd sol = rvr.ldlt().solve(diff);
  TestResult t;
  t.chi2 = diff.dot(sol);
  t.df = static_cast<int>(R.rows());
  t.p = chi2_sf(t.chi2, t.df);
  return t;
}

TestResult lr_test(const FitResult& restricted, const FitResult& full) {
  TestResult t;
  t.chi2 = std::max(0.0, 2.0 * (full.loglik - restricted.loglik));
  t.df = full.k - restricted.k;
  if (t.df < 0) throw std::invalid_argument("lr_test: restricted model has more parameters");
  t.p = t.df == 0 ? 1.0 : chi2_sf(t.chi2, t.df);
  return t;
}

double aic(const FitResult& fit) { return 2.0 * fit.k - 2.0 * fit.loglik; }

namespace {
bool subset(const std::vector<int>& a, const std::vector<int>& b) {
  for (int v : a)
    if (std::find(b.begin(), b.end(), v) == b.end()) return false;
  return true;
}
}  // namespace

bool is_nested(const ModelSpec& restricted, const ModelSpec& full) {
  if (restricted.kind != full.kind) return false;
  // identical likelihood structure is required for the deviances to compare
  if (restricted.masked_mu_design != full.masked_mu_design) return false;
  if (restricted.endpoint_density != full.endpoint_density) return false;
  if (restricted.zeta && !full.zeta) return false;
  // model2 without the mixing regression nests inside model2 with it
  if (restricted.kind == ModelKind::model2 && restricted.theta_regression &&
      !full.theta_regression)
    return false;
  return subset(restricted.mu_cols, full.mu_cols) &&
         subset(restricted.phi_cols, full.phi_cols) &&
         subset(restricted.tilt_cols, full.tilt_cols) &&
         (subset(restricted.theta_cols, full.theta_cols) ||
          (restricted.kind == ModelKind::model2 && !restricted.theta_regression));
}

}  // namespace unitreg
