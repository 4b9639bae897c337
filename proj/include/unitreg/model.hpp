#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "unitreg/dataset.hpp"

namespace unitreg {

enum class ModelKind { classic, augmented, model1, model2, model3, model4 };

enum class BoundKind { phi_minus_1, phi };

// Likelihood form for the two-component models. The semimixture assigns each
// observation to its component by endpoint membership (endpoints carry weight
// 1-theta, interior weight theta); the full form sums both component
// densities at interior observations.
enum class MixtureForm { semimixture, full };

// Endpoint density carried by the non-beta component of model2. The tilting
// density is zero at the endpoint opposite its tilt, so it supports only
// observations whose fitted mean lies on the matching side of 1/2; the
// endpoint-precision beta density equals the same odds ratio on the matching
// side but stays positive on the other, so it accommodates both endpoints.
enum class EndpointDensity { tilting_power, phi_star_beta };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Which predictor columns (1-based indices into x_plus, 0 = intercept is
// implicit) feed each submodel. Links are fixed: logit for mu, tilt-mean,
// theta and zeta; log for phi.
struct ModelSpec {
  ModelKind kind = ModelKind::model3;
  std::vector<int> mu_cols;     // mean submodel
  std::vector<int> tilt_cols;   // tilt-mean submodel (model1 only)
  std::vector<int> phi_cols;    // precision submodel; empty = intercept only
  std::vector<int> theta_cols;  // mixing / endpoint-probability submodel
  bool theta_regression = false;  // model2: theta depends on theta_cols
  bool zeta = false;              // model2: split endpoint weight
  bool masked_mu_design = false;  // zero out endpoint rows of the mu design
  BoundKind bound_kind = BoundKind::phi_minus_1;
  MixtureForm mixture_form = MixtureForm::semimixture;
  EndpointDensity endpoint_density = EndpointDensity::tilting_power;
};

struct Slice {
  int offset = 0;
  int len = 0;
  bool empty() const { return len == 0; }
};

// Flat parameter vector layout. Slices for coefficient blocks:
//   b    mean coefficients
//   c    tilt-mean coefficients (model1)
//   d    precision coefficients
//   a    mixing-weight coefficients (models 1/2)
//   z0   endpoint-probability coefficients for y==0 (augmented)
//   z1   endpoint-probability coefficients for y==1 (augmented)
//   zeta logit of the endpoint split weight (optional, model2)
struct ParamLayout {
  Slice b, c, d, a, z0, z1, zeta;
  std::vector<std::string> names;
  int size() const { return static_cast<int>(names.size()); }
};

// Per-group estimability flags: a group's mean parameter is flagged when its
// interior observations cannot outweigh the endpoint imbalance,
// n_beta(group) < |n0(group) - n1(group)|.
struct Theorem3Flags {
  std::vector<int> group_of_row;       // grouping used
  std::vector<int> q;                  // per-group flag
  std::vector<int> n0, n1, n_beta;     // per-group counts
  int global_q = 0;                    // whole-sample check
  int n_groups() const { return static_cast<int>(q.size()); }
  bool row_flagged(int row) const { return q[group_of_row[row]] != 0; }
  bool any_flagged() const;
};

// grouping maps each row to the group-mean parameter it informs. An empty
// grouping puts every row in one global group. Slope parameters for
// continuous predictors have no per-row grouping; only the conservative
// whole-sample flag applies to them.
Theorem3Flags check_theorem3(const Dataset& data,
                             const std::vector<int>& grouping = {});

}  // namespace unitreg
