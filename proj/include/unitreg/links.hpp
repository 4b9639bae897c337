#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "unitreg/special.hpp"

namespace unitreg {

enum class Link { logit, log, identity };

// g^{-1}: linear predictor -> constrained scale.
inline double apply_inverse(Link link, double eta) {
  switch (link) {
    case Link::logit:
      // overflow-safe logistic
      return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                        : std::exp(eta) / (1.0 + std::exp(eta));
    case Link::log:
      return std::exp(eta);
    case Link::identity:
      return eta;
  }
  return eta;
}

// g: constrained scale -> linear predictor.
inline double apply_forward(Link link, double value) {
  switch (link) {
    case Link::logit:
      if (!(value > 0.0 && value < 1.0))
        throw std::domain_error("logit: value outside (0,1)");
      return std::log(value) - std::log1p(-value);
    case Link::log:
      if (!(value > 0.0)) throw std::domain_error("log link: value <= 0");
      return std::log(value);
    case Link::identity:
      return value;
  }
  return value;
}

inline double linear_predictor(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                               const Eigen::Ref<const Eigen::VectorXd>& row) {
  if (coeffs.size() != row.size())
    throw std::invalid_argument("linear_predictor: dimension mismatch");
  return coeffs.dot(row);
}

}  // namespace unitreg
