#include "unitreg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "unitreg/distributions.hpp"
#include "unitreg/links.hpp"
#include "unitreg/quadrature.hpp"
#include "unitreg/rng.hpp"

namespace unitreg {

namespace {

double dot_with_intercept(const Eigen::VectorXd& coeffs,
                          const Eigen::MatrixXd& x, int row) {
  double eta = coeffs[0];
  for (int j = 1; j < coeffs.size(); ++j) eta += coeffs[j] * x(row, j - 1);
  return eta;
}

double draw_interior_beta(Rng& rng, double mu, double phi) {
  for (;;) {
    const double v = rng.beta(mu * phi, (1.0 - mu) * phi);
    if (v > 0.0 && v < 1.0) return v;
  }
}

double draw_interior_tilting(Rng& rng, double nu) {
  for (;;) {
    const double v = tilting_power_sample(nu, rng.uniform());
    if (v > 0.0 && v < 1.0) return v;
  }
}

void validate(const GenConfig& cfg, bool check_n = true) {
  if (check_n && cfg.n <= 0) throw std::invalid_argument("gen: n must be positive");
  if (cfg.b.size() != cfg.n_predictors + 1)
    throw std::invalid_argument("gen: b must have 1 + n_predictors entries");
  if (cfg.d.size() < 1) throw std::invalid_argument("gen: d must be nonempty");
  if (cfg.endpoint_mechanism == EndpointMechanism::explicit_probs) {
    if (cfg.p0 < 0.0 || cfg.p1 < 0.0 || cfg.p0 + cfg.p1 >= 1.0)
      throw std::invalid_argument("gen: explicit endpoint probabilities infeasible");
  }
  if (cfg.endpoint_mechanism == EndpointMechanism::rounding &&
      !(cfg.rounding_resolution > 0.0))
    throw std::invalid_argument("gen: rounding resolution must be positive");
  if (cfg.kind == ModelKind::model1 && cfg.c.size() == 0)
    throw std::invalid_argument("gen: model1 requires tilt coefficients");
}

// One response draw given the row's parameters, before any endpoint
// mechanism. Mixture kinds draw their component first.
double draw_conditional(Rng& rng, const GenConfig& cfg, double mu, double phi,
                        double theta, double nu) {
  switch (cfg.kind) {
    case ModelKind::model1:
    case ModelKind::model2:
      if (cfg.a.size() > 0 && rng.uniform() >= theta)
        return draw_interior_tilting(rng, nu);
      return draw_interior_beta(rng, mu, phi);
    default:
      return draw_interior_beta(rng, mu, phi);
  }
}

}  // namespace

GenResult gen_cross_section(const GenConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  Eigen::MatrixXd x(cfg.n, cfg.n_predictors);
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.n_predictors; ++j)
      x(i, j) = cfg.predictor_dist == PredictorDist::standard_normal
                    ? rng.normal()
                    : rng.uniform();

  Eigen::VectorXd y(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    const double mu = apply_inverse(Link::logit, dot_with_intercept(cfg.b, x, i));
    const double phi = std::exp(dot_with_intercept(cfg.d, x, i));
    const double theta = cfg.a.size() > 0
                             ? apply_inverse(Link::logit, dot_with_intercept(cfg.a, x, i))
                             : 1.0;
    double nu;
    if (cfg.kind == ModelKind::model1)
      nu = nu_from_mean(apply_inverse(Link::logit, dot_with_intercept(cfg.c, x, i)));
    else
      nu = nu_from_mean(mu);

    switch (cfg.endpoint_mechanism) {
      case EndpointMechanism::none:
        y[i] = draw_conditional(rng, cfg, mu, phi, theta, nu);
        break;
      case EndpointMechanism::explicit_probs: {
        const double u = rng.uniform();
        if (u < cfg.p0 + cfg.p1)
          y[i] = u < cfg.p0 ? 0.0 : 1.0;
        else
          y[i] = draw_interior_beta(rng, mu, phi);
        break;
      }
      case EndpointMechanism::rounding: {
        double v = draw_conditional(rng, cfg, mu, phi, theta, nu);
        if (v < cfg.rounding_resolution) v = 0.0;
        if (1.0 - v < cfg.rounding_resolution) v = 1.0;
        y[i] = v;
        break;
      }
    }
  }
  GenResult out;
  out.data = make_dataset(y, x);
  return out;
}

GenResult gen_panel(const PanelConfig& cfg) {
  validate(cfg.base, /*check_n=*/false);
  if (cfg.units <= 0 || cfg.obs_per_unit <= 0)
    throw std::invalid_argument("gen_panel: units and obs_per_unit must be positive");
  Rng rng(cfg.base.seed);
  const int n = cfg.units * cfg.obs_per_unit;
  const int p = cfg.base.n_predictors;

  Eigen::VectorXd m(cfg.units);
  for (int g = 0; g < cfg.units; ++g) m[g] = cfg.sigma_m * rng.normal();

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  std::vector<int> unit(n);
  int row = 0;
  for (int g = 0; g < cfg.units; ++g) {
    const bool forced =
        std::find(cfg.forced_endpoint_units.begin(), cfg.forced_endpoint_units.end(),
                  g) != cfg.forced_endpoint_units.end();
    const int forced_count =
        forced ? static_cast<int>(std::ceil(cfg.forced_endpoint_fraction *
                                            cfg.obs_per_unit))
               : 0;
    for (int t = 0; t < cfg.obs_per_unit; ++t, ++row) {
      unit[row] = g;
      for (int j = 0; j < p; ++j)
        x(row, j) = cfg.base.predictor_dist == PredictorDist::standard_normal
                        ? rng.normal()
                        : rng.uniform();
      const double eta = dot_with_intercept(cfg.base.b, x, row) + m[g];
      const double mu = apply_inverse(Link::logit, eta);
      const double phi = std::exp(cfg.base.d[0]);
      if (t < forced_count) {
        y[row] = 1.0;
      } else if (cfg.base.endpoint_mechanism == EndpointMechanism::explicit_probs) {
        const double u = rng.uniform();
        if (u < cfg.base.p0 + cfg.base.p1)
          y[row] = u < cfg.base.p0 ? 0.0 : 1.0;
        else
          y[row] = draw_interior_beta(rng, mu, phi);
      } else {
        y[row] = draw_interior_beta(rng, mu, phi);
      }
    }
  }
  GenResult out;
  out.data = make_dataset(y, x, unit);
  out.unit_effects = m;
  return out;
}

double quadrature_moment(const std::function<double(double)>& pdf, int order,
                         double abs_tol) {
  if (order < 0) throw std::invalid_argument("quadrature_moment: order < 0");
  return moment_unit_interval(pdf, order, abs_tol);
}

GridOptimum grid_mle_oracle(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            double resolution) {
  const int dim = static_cast<int>(lo.size());
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("grid_mle_oracle: supports 1 to 3 dimensions");
  if (hi.size() != dim) throw std::invalid_argument("grid_mle_oracle: box mismatch");
  if (!(resolution > 0.0)) throw std::invalid_argument("grid_mle_oracle: resolution");

  std::vector<long> steps(dim);
  double total = 1.0;
  for (int k = 0; k < dim; ++k) {
    if (!(hi[k] > lo[k])) throw std::invalid_argument("grid_mle_oracle: empty box");
    steps[k] = static_cast<long>(std::floor((hi[k] - lo[k]) / resolution)) + 1;
    total *= static_cast<double>(steps[k]);
  }
  if (total > 2e8)
    throw std::invalid_argument("grid_mle_oracle: box too large for the resolution");

  GridOptimum best;
  best.value = -std::numeric_limits<double>::infinity();
  best.argmax = lo;
  Eigen::VectorXd p(dim);
  const long n0 = steps[0];
  const long n1 = dim > 1 ? steps[1] : 1;
  const long n2 = dim > 2 ? steps[2] : 1;
  for (long i = 0; i < n0; ++i) {
    p[0] = lo[0] + i * resolution;
    for (long j = 0; j < n1; ++j) {
      if (dim > 1) p[1] = lo[1] + j * resolution;
      for (long k = 0; k < n2; ++k) {
        if (dim > 2) p[2] = lo[2] + k * resolution;
        const double v = f(p);
        if (v > best.value) {
          best.value = v;
          best.argmax = p;
        }
      }
    }
  }
  return best;
}

}  // namespace unitreg
