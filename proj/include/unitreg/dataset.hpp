#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace unitreg {

// Row classes by exact endpoint membership.
struct EndpointPartition {
  std::vector<int> idx0;      // y == 0
  std::vector<int> idx1;      // y == 1
  std::vector<int> idx_beta;  // interior
  int n0() const { return static_cast<int>(idx0.size()); }
  int n1() const { return static_cast<int>(idx1.size()); }
  int n_beta() const { return static_cast<int>(idx_beta.size()); }
  int total() const { return n0() + n1() + n_beta(); }
};

EndpointPartition make_partition(const Eigen::VectorXd& y);

struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x_plus;  // N x (J+1), leading unity column
  std::vector<std::string> predictor_names;  // names of columns 1..J
  std::vector<int> unit_id;                  // empty unless panel
  std::vector<int> time_id;                  // optional
  int n_units = 0;
  EndpointPartition partition;

  int n() const { return static_cast<int>(y.size()); }
  int n_predictors() const { return static_cast<int>(x_plus.cols()) - 1; }
  bool is_endpoint(int i) const { return y[i] == 0.0 || y[i] == 1.0; }
};

// CSV ingestion: comma-separated, header row required, '.' decimal.
// Endpoint membership is exact equality to 0.0/1.0 after parsing unless
// endpoint_epsilon > 0, which snaps |y| < eps and |1-y| < eps first.
Dataset load_csv(const std::string& path, const std::string& outcome_column,
                 const std::vector<std::string>& predictor_columns,
                 const std::optional<std::string>& unit_column = std::nullopt,
                 const std::optional<std::string>& time_column = std::nullopt,
                 double endpoint_epsilon = 0.0);

// In-memory constructor used by simulators and tests.
Dataset make_dataset(const Eigen::VectorXd& y, const Eigen::MatrixXd& predictors,
                     const std::vector<int>& unit_id = {});

// Diagonal 0/1 endpoint mask U (1 on interior rows) and X_beta = U * X_plus.
Eigen::VectorXd endpoint_mask(const Dataset& data);
Eigen::MatrixXd masked_design(const Dataset& data);

struct ColumnSummary {
  std::string name;
  double min = 0.0, max = 0.0, mean = 0.0;
};

struct DatasetSummary {
  int n = 0, n0 = 0, n1 = 0, n_beta = 0;
  std::vector<ColumnSummary> columns;
};

DatasetSummary summarize(const Dataset& data);

}  // namespace unitreg
