#pragma once

#include <cmath>
#include <functional>

namespace unitreg {

// Tanh-sinh quadrature of f over (0,1). Nodes cluster double-exponentially
// toward the ends and never touch them, so integrable endpoint singularities
// (e.g. y^(a-1) with 0 < a < 1) converge to near machine precision.
inline double integrate_unit_interval(const std::function<double(double)>& f,
                                      double abs_tol = 1e-10) {
  const double half_pi = std::acos(-1.0) / 2.0;
  const int max_level = 12;
  const double t_max = 6.5;  // weights underflow beyond this

  // Contribution of the symmetric node pair at parameter t > 0.
  // y_lo is computed from exp(-2s) so it stays accurate near 0.
  auto eval_pair = [&](double t) -> double {
    const double s = half_pi * std::sinh(t);
    const double ch = std::cosh(s);
    const double w = 0.5 * half_pi * std::cosh(t) / (ch * ch);
    if (w < 1e-320 || !std::isfinite(w)) return 0.0;
    const double u = std::exp(-2.0 * s);
    const double y_lo = u / (1.0 + u);
    const double y_hi = 1.0 - y_lo;
    double acc = 0.0;
    if (y_lo > 0.0) acc += w * f(y_lo);
    if (y_hi < 1.0) acc += w * f(y_hi);
    return acc;
  };

  double h = 1.0;
  // Level 0: the center node plus pairs at integer t.
  double node_sum = 0.5 * half_pi * f(0.5);
  for (double t = h; t <= t_max; t += h) node_sum += eval_pair(t);
  double estimate = h * node_sum;

  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    double add = 0.0;
    for (double t = h; t <= t_max; t += 2.0 * h) add += eval_pair(t);
    node_sum += add;
    const double next = h * node_sum;
    const double err = std::fabs(next - estimate);
    estimate = next;
    if (level >= 3 && err < abs_tol) break;
  }
  return estimate;
}

// k-th raw moment of a density on [0,1].
inline double moment_unit_interval(const std::function<double(double)>& pdf,
                                   int order, double abs_tol = 1e-10) {
  return integrate_unit_interval(
      [&](double y) { return std::pow(y, order) * pdf(y); }, abs_tol);
}

}  // namespace unitreg
