#include "unitreg/separation.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace unitreg {

std::string to_string(SeparationKind kind) {
  switch (kind) {
    case SeparationKind::none: return "none";
    case SeparationKind::quasicomplete: return "quasicomplete";
    case SeparationKind::complete: return "complete";
    case SeparationKind::degenerate: return "degenerate";
    case SeparationKind::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

// Dense tableau simplex, maximization over Ax = b, x >= 0 with b >= 0 and an
// identity starting basis. Bland's rule guards against cycling on the
// heavily degenerate problems this module produces.
struct Simplex {
  Eigen::MatrixXd t;        // (m+1) x (n+1); last row = reduced costs | value
  std::vector<int> basis;   // basic variable per row
  bool ok = true;

  Simplex(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
          const Eigen::VectorXd& c, const std::vector<int>& start_basis) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    t.setZero(m + 1, n + 1);
    t.topLeftCorner(m, n) = a;
    t.col(n).head(m) = b;
    t.row(m).head(n) = -c.transpose();  // identity basis has zero cost here
    basis = start_basis;
  }

  bool solve(int max_pivots) {
    const Eigen::Index m = t.rows() - 1;
    const Eigen::Index n = t.cols() - 1;
    for (int pivot = 0; pivot < max_pivots; ++pivot) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (t(m, j) < -1e-9) {
          enter = j;
          break;  // Bland: first improving column
        }
      }
      if (enter < 0) return true;  // optimal
      Eigen::Index leave = -1;
      double best_ratio = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t(i, enter) > 1e-11) {
          const double ratio = t(i, n) / t(i, enter);
          if (leave < 0 || ratio < best_ratio - 1e-15 ||
              (std::fabs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return true;  // unbounded; caller's objectives are capped
      pivot_at(leave, enter);
      basis[leave] = static_cast<int>(enter);
    }
    ok = false;
    return false;
  }

  void pivot_at(Eigen::Index row, Eigen::Index col) {
    t.row(row) /= t(row, col);
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      if (i == row) continue;
      const double f = t(i, col);
      if (f != 0.0) t.row(i) -= f * t.row(row);
    }
  }

  double value() const { return t(t.rows() - 1, t.cols() - 1); }

  Eigen::VectorXd primal(int n_structural) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_structural);
    const Eigen::Index m = t.rows() - 1;
    for (Eigen::Index i = 0; i < m; ++i)
      if (basis[i] < n_structural) x[basis[i]] = t(i, t.cols() - 1);
    return x;
  }
};

// signed rows s_i * x_i, columns scaled to unit max-abs
Eigen::MatrixXd signed_design(const std::vector<char>& z, const Eigen::MatrixXd& X,
                              Eigen::VectorXd& col_scale) {
  Eigen::MatrixXd sx = X;
  for (int i = 0; i < X.rows(); ++i)
    if (!z[i]) sx.row(i) = -sx.row(i);
  col_scale.resize(X.cols());
  for (int j = 0; j < X.cols(); ++j) {
    const double s = X.col(j).cwiseAbs().maxCoeff();
    col_scale[j] = s > 0.0 ? s : 1.0;
    sx.col(j) /= col_scale[j];
  }
  return sx;
}

// max t subject to sx_i'w >= t, |w_j| <= 1. Positive optimum = complete
// separation.
bool lp_complete(const Eigen::MatrixXd& sx, double& t_star, Eigen::VectorXd& w,
                 bool& solver_ok) {
  const int n = static_cast<int>(sx.rows());
  const int p = static_cast<int>(sx.cols());
  // variables: wp(p) wn(p) tp tn r(n) g(2p)
  const int nv = 2 * p + 2 + n + 2 * p;
  const int m = n + 2 * p;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, nv);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
  std::vector<int> basis(m);
  // -sx w + t + r = 0
  for (int i = 0; i < n; ++i) {
    a.block(i, 0, 1, p) = -sx.row(i);
    a.block(i, p, 1, p) = sx.row(i);
    a(i, 2 * p) = 1.0;
    a(i, 2 * p + 1) = -1.0;
    a(i, 2 * p + 2 + i) = 1.0;
    basis[i] = 2 * p + 2 + i;
  }
  // w+_j + g = 1, w-_j + g = 1
  for (int j = 0; j < 2 * p; ++j) {
    a(n + j, j) = 1.0;
    a(n + j, 2 * p + 2 + n + j) = 1.0;
    b[n + j] = 1.0;
    basis[n + j] = 2 * p + 2 + n + j;
  }
  c[2 * p] = 1.0;
  c[2 * p + 1] = -1.0;
  Simplex s(a, b, c, basis);
  solver_ok = s.solve(20000);
  t_star = s.value();
  const Eigen::VectorXd v = s.primal(2 * p);
  w = v.head(p) - v.tail(p);
  return solver_ok && t_star > 1e-7;
}

// max sum u subject to sx_i'w >= u_i, 0 <= u_i <= 1, |w_j| <= 1. Positive
// optimum = some nonzero direction keeps every margin nonnegative.
bool lp_any_separation(const Eigen::MatrixXd& sx, double& v_star,
                       Eigen::VectorXd& w, bool& solver_ok) {
  const int n = static_cast<int>(sx.rows());
  const int p = static_cast<int>(sx.cols());
  // variables: wp(p) wn(p) u(n) r(n) e(n) g(2p)
  const int nv = 2 * p + 3 * n + 2 * p;
  const int m = 2 * n + 2 * p;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, nv);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
  std::vector<int> basis(m);
  for (int i = 0; i < n; ++i) {
    // -sx w + u + r = 0
    a.block(i, 0, 1, p) = -sx.row(i);
    a.block(i, p, 1, p) = sx.row(i);
    a(i, 2 * p + i) = 1.0;
    a(i, 2 * p + n + i) = 1.0;
    basis[i] = 2 * p + n + i;
    // u + e = 1
    a(n + i, 2 * p + i) = 1.0;
    a(n + i, 2 * p + 2 * n + i) = 1.0;
    b[n + i] = 1.0;
    basis[n + i] = 2 * p + 2 * n + i;
    c[2 * p + i] = 1.0;
  }
  for (int j = 0; j < 2 * p; ++j) {
    a(2 * n + j, j) = 1.0;
    a(2 * n + j, 2 * p + 3 * n + j) = 1.0;
    b[2 * n + j] = 1.0;
    basis[2 * n + j] = 2 * p + 3 * n + j;
  }
  Simplex s(a, b, c, basis);
  solver_ok = s.solve(40000);
  v_star = s.value();
  const Eigen::VectorXd v = s.primal(2 * p);
  w = v.head(p) - v.tail(p);
  return solver_ok && v_star > 1e-7;
}

// Unpenalized Newton logistic fit, watching for coefficient divergence.
bool logistic_diverges(const std::vector<char>& z, const Eigen::MatrixXd& X) {
  const int p = static_cast<int>(X.cols());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  double prev_max = 0.0;
  for (int iters : {25, 50, 100}) {
    for (int it = 0; it < iters; ++it) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, p);
      for (int i = 0; i < X.rows(); ++i) {
        const double eta = X.row(i).dot(w);
        const double pr = 1.0 / (1.0 + std::exp(-eta));
        g += ((z[i] ? 1.0 : 0.0) - pr) * X.row(i).transpose();
        h += pr * (1.0 - pr) * X.row(i).transpose() * X.row(i);
      }
      h.diagonal().array() += 1e-10;
      w += h.ldlt().solve(g);
    }
    const double mx = w.cwiseAbs().maxCoeff();
    if (mx > 10.0 && mx > 1.5 * prev_max) return true;
    prev_max = mx;
  }
  return w.cwiseAbs().maxCoeff() > 10.0;
}

}  // namespace

SeparationReport detect_separation(const std::vector<char>& z,
                                   const Eigen::MatrixXd& X) {
  SeparationReport rep;
  if (static_cast<int>(z.size()) != X.rows())
    throw std::invalid_argument("detect_separation: size mismatch");
  int ones = 0;
  for (char v : z) ones += v ? 1 : 0;
  if (ones == 0 || ones == static_cast<int>(z.size())) {
    rep.kind = SeparationKind::degenerate;
    rep.note = "response has a single class";
    return rep;
  }

  Eigen::VectorXd scale;
  const Eigen::MatrixXd sx = signed_design(z, X, scale);

  double t_star = 0.0, v_star = 0.0;
  Eigen::VectorXd w_complete, w_any;
  bool ok1 = true, ok2 = true;
  const bool complete = lp_complete(sx, t_star, w_complete, ok1);
  if (ok1 && complete) {
    rep.kind = SeparationKind::complete;
    rep.witness = w_complete.cwiseQuotient(scale);
    return rep;
  }
  const bool any = lp_any_separation(sx, v_star, w_any, ok2);
  if (ok1 && ok2) {
    if (any) {
      rep.kind = SeparationKind::quasicomplete;
      rep.witness = w_any.cwiseQuotient(scale);
    } else {
      rep.kind = SeparationKind::none;
    }
    return rep;
  }
  rep.kind = SeparationKind::inconclusive;
  rep.note = logistic_diverges(z, X)
                 ? "pivot budget exceeded; logistic fit diverges"
                 : "pivot budget exceeded; logistic fit looks finite";
  return rep;
}

}  // namespace unitreg
