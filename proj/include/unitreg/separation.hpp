#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace unitreg {

enum class SeparationKind { none, quasicomplete, complete, degenerate, inconclusive };

std::string to_string(SeparationKind kind);

struct SeparationReport {
  SeparationKind kind = SeparationKind::none;
  Eigen::VectorXd witness;  // separating direction over the columns of X
  std::string note;
};

// Albert-Anderson classification of a binary response against a design
// matrix (pass the intercept column explicitly). Solved as two linear
// programs: max t s.t. s_i x_i'w >= t, |w|_inf <= 1 decides complete
// separation; max sum(min(1, s_i x_i'w)) s.t. s_i x_i'w >= 0 decides whether
// any nonzero direction keeps all margins nonnegative (quasicomplete). If the
// solver exceeds its pivot budget the result falls back to a logistic-fit
// divergence heuristic and is marked inconclusive.
SeparationReport detect_separation(const std::vector<char>& z,
                                   const Eigen::MatrixXd& X);

}  // namespace unitreg
