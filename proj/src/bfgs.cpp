#include "unitreg/bfgs.hpp"

#include <cmath>
#include <limits>

namespace unitreg {

Eigen::VectorXd numeric_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x,
                                 double step_scale) {
  const int k = static_cast<int>(x.size());
  Eigen::VectorXd g(k);
  Eigen::VectorXd xp = x;
  for (int j = 0; j < k; ++j) {
    const double h = step_scale * std::max(1.0, std::fabs(x[j]));
    xp[j] = x[j] + h;
    const double fp = f(xp);
    xp[j] = x[j] - h;
    const double fm = f(xp);
    xp[j] = x[j];
    if (std::isfinite(fp) && std::isfinite(fm)) {
      g[j] = (fp - fm) / (2.0 * h);
    } else if (std::isfinite(fp)) {
      g[j] = (fp - f(x)) / h;
    } else if (std::isfinite(fm)) {
      g[j] = (f(x) - fm) / h;
    } else {
      g[j] = 0.0;  // isolated feasible point along this axis
    }
  }
  return g;
}

OptimResult minimize_bfgs(const ObjectiveFn& f, const GradientFn& grad,
                          const Eigen::VectorXd& x0, const OptimOptions& opts) {
  const int k = static_cast<int>(x0.size());
  OptimResult res;
  res.x = x0;
  res.f = f(x0);
  if (!std::isfinite(res.f)) {
    res.message = "objective not finite at the starting point";
    return res;
  }

  auto gradient_at = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    if (grad && grad(x, g)) return;
    g = numeric_gradient(f, x, opts.fd_step);
  };

  Eigen::VectorXd g(k);
  gradient_at(res.x, g);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(k, k);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    res.iterations = iter;
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
    if (res.grad_norm < opts.grad_tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      return res;
    }

    Eigen::VectorXd p = -(h_inv * g);
    double slope = g.dot(p);
    if (!(slope < 0.0)) {  // reset a corrupted curvature estimate
      h_inv.setIdentity();
      p = -g;
      slope = g.dot(p);
      if (!(slope < 0.0)) {
        res.message = "zero gradient direction";
        res.converged = res.grad_norm < opts.grad_tol;
        return res;
      }
    }

    // backtracking Armijo search
    double t = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = res.x + t * p;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      res.message = "line search failed";
      res.converged = res.grad_norm < opts.grad_tol;
      return res;
    }

    Eigen::VectorXd g_new(k);
    gradient_at(x_new, g_new);

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
      h_inv = (eye - rho * s * yv.transpose()) * h_inv *
                  (eye - rho * yv * s.transpose()) +
              rho * s * s.transpose();
    }

    const double f_prev = res.f;
    res.x = x_new;
    res.f = f_new;
    g = g_new;

    if (std::fabs(f_prev - f_new) <
        opts.f_rel_tol * (std::fabs(f_prev) + opts.f_rel_tol)) {
      res.grad_norm = g.lpNorm<Eigen::Infinity>();
      res.converged = true;
      res.message = "objective change below tolerance";
      ++res.iterations;
      return res;
    }
  }
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  res.message = "iteration cap reached";
  return res;
}

}  // namespace unitreg
