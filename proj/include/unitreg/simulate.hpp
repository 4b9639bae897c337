#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "unitreg/dataset.hpp"
#include "unitreg/model.hpp"

namespace unitreg {

enum class EndpointMechanism { none, rounding, explicit_probs };
enum class PredictorDist { standard_normal, uniform01 };

// Truth configuration for the generators. Coefficient vectors follow the
// submodel layout conventions (leading intercept; logit link for mean and
// mixing weight, log link for precision).
struct GenConfig {
  ModelKind kind = ModelKind::model3;
  int n = 100;
  int n_predictors = 1;
  PredictorDist predictor_dist = PredictorDist::standard_normal;
  Eigen::VectorXd b;  // mean coefficients, size 1 + n_predictors
  Eigen::VectorXd d;  // precision coefficients; size 1 for scalar phi
  Eigen::VectorXd a;  // mixing coefficients (models 1/2); may be empty
  Eigen::VectorXd c;  // tilt-mean coefficients (model1); may be empty
  EndpointMechanism endpoint_mechanism = EndpointMechanism::none;
  double p0 = 0.0;              // explicit endpoint probabilities
  double p1 = 0.0;
  double rounding_resolution = 0.0;
  std::uint64_t seed = 1;
};

struct PanelConfig {
  GenConfig base;
  int units = 50;
  int obs_per_unit = 8;
  double sigma_m = 0.5;
  // units forced to carry >= the given fraction of y = 1 rows, to reproduce
  // the flagged-group regime
  std::vector<int> forced_endpoint_units;
  double forced_endpoint_fraction = 0.5;
};

struct GenResult {
  Dataset data;
  Eigen::VectorXd unit_effects;  // panel only
};

GenResult gen_cross_section(const GenConfig& cfg);
GenResult gen_panel(const PanelConfig& cfg);

// k-th raw moment of a density handle on [0,1] by tanh-sinh quadrature.
double quadrature_moment(const std::function<double(double)>& pdf, int order,
                         double abs_tol = 1e-10);

struct GridOptimum {
  Eigen::VectorXd argmax;
  double value = 0.0;
};

// Exhaustive maximization over an axis-aligned box at fixed resolution.
// Supports at most 3 dimensions and refuses grids beyond 2e8 evaluations.
GridOptimum grid_mle_oracle(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            double resolution);

}  // namespace unitreg
