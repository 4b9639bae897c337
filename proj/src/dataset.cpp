#include "unitreg/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace unitreg {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  for (auto& f : out) {
    const auto a = f.find_first_not_of(" \t");
    const auto b = f.find_last_not_of(" \t");
    f = (a == std::string::npos) ? std::string() : f.substr(a, b - a + 1);
  }
  return out;
}

double parse_number(const std::string& s, int row, const std::string& col) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw std::runtime_error("load_csv: unparseable cell in column '" + col +
                             "', data row " + std::to_string(row) + ": '" + s + "'");
  }
  return v;
}

}  // namespace

EndpointPartition make_partition(const Eigen::VectorXd& y) {
  EndpointPartition p;
  for (int i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0)
      p.idx0.push_back(i);
    else if (y[i] == 1.0)
      p.idx1.push_back(i);
    else
      p.idx_beta.push_back(i);
  }
  return p;
}

Dataset load_csv(const std::string& path, const std::string& outcome_column,
                 const std::vector<std::string>& predictor_columns,
                 const std::optional<std::string>& unit_column,
                 const std::optional<std::string>& time_column,
                 double endpoint_epsilon) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file");
  const auto header = split_csv_line(line);

  auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error("load_csv: missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  };

  const int y_col = column_index(outcome_column);
  std::vector<int> x_cols;
  for (const auto& c : predictor_columns) x_cols.push_back(column_index(c));
  const int unit_col = unit_column ? column_index(*unit_column) : -1;
  const int time_col = time_column ? column_index(*time_column) : -1;

  std::vector<double> ys;
  std::vector<std::vector<double>> xs;
  std::vector<std::string> unit_labels;
  std::vector<int> times;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("load_csv: data row " + std::to_string(row) +
                               " has " + std::to_string(fields.size()) +
                               " fields, header has " + std::to_string(header.size()));
    double y = parse_number(fields[y_col], row, outcome_column);
    if (endpoint_epsilon > 0.0) {
      if (std::abs(y) < endpoint_epsilon) y = 0.0;
      if (std::abs(1.0 - y) < endpoint_epsilon) y = 1.0;
    }
    if (!(y >= 0.0 && y <= 1.0))
      throw std::runtime_error("load_csv: outcome outside [0,1] at data row " +
                               std::to_string(row));
    ys.push_back(y);
    std::vector<double> xrow;
    for (size_t j = 0; j < x_cols.size(); ++j)
      xrow.push_back(parse_number(fields[x_cols[j]], row, predictor_columns[j]));
    xs.push_back(std::move(xrow));
    if (unit_col >= 0) unit_labels.push_back(fields[unit_col]);
    if (time_col >= 0)
      times.push_back(static_cast<int>(parse_number(fields[time_col], row, *time_column)));
  }
  if (ys.empty()) throw std::runtime_error("load_csv: no data rows");

  const int n = static_cast<int>(ys.size());
  const int j = static_cast<int>(predictor_columns.size());
  Dataset d;
  d.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  d.x_plus.resize(n, j + 1);
  d.x_plus.col(0).setOnes();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < j; ++k) d.x_plus(i, k + 1) = xs[i][k];
  d.predictor_names = predictor_columns;
  if (unit_col >= 0) {
    std::map<std::string, int> ids;
    for (const auto& label : unit_labels)
      ids.emplace(label, static_cast<int>(ids.size()));
    for (const auto& label : unit_labels) d.unit_id.push_back(ids[label]);
    d.n_units = static_cast<int>(ids.size());
  }
  d.time_id = times;
  d.partition = make_partition(d.y);
  return d;
}

Dataset make_dataset(const Eigen::VectorXd& y, const Eigen::MatrixXd& predictors,
                     const std::vector<int>& unit_id) {
  if (predictors.rows() != y.size())
    throw std::invalid_argument("make_dataset: row count mismatch");
  for (int i = 0; i < y.size(); ++i)
    if (!(y[i] >= 0.0 && y[i] <= 1.0))
      throw std::invalid_argument("make_dataset: outcome outside [0,1] at row " +
                                  std::to_string(i));
  Dataset d;
  d.y = y;
  d.x_plus.resize(y.size(), predictors.cols() + 1);
  d.x_plus.col(0).setOnes();
  d.x_plus.rightCols(predictors.cols()) = predictors;
  for (int k = 0; k < predictors.cols(); ++k)
    d.predictor_names.push_back("x" + std::to_string(k + 1));
  d.unit_id = unit_id;
  if (!unit_id.empty())
    d.n_units = 1 + *std::max_element(unit_id.begin(), unit_id.end());
  d.partition = make_partition(d.y);
  return d;
}

Eigen::VectorXd endpoint_mask(const Dataset& data) {
  Eigen::VectorXd u(data.n());
  for (int i = 0; i < data.n(); ++i) u[i] = data.is_endpoint(i) ? 0.0 : 1.0;
  return u;
}

Eigen::MatrixXd masked_design(const Dataset& data) {
  return endpoint_mask(data).asDiagonal() * data.x_plus;
}

DatasetSummary summarize(const Dataset& data) {
  DatasetSummary s;
  s.n = data.n();
  s.n0 = data.partition.n0();
  s.n1 = data.partition.n1();
  s.n_beta = data.partition.n_beta();
  auto add = [&](const std::string& name, const Eigen::VectorXd& col) {
    s.columns.push_back({name, col.minCoeff(), col.maxCoeff(), col.mean()});
  };
  add("y", data.y);
  for (int j = 1; j < data.x_plus.cols(); ++j)
    add(data.predictor_names[j - 1], data.x_plus.col(j));
  return s;
}

}  // namespace unitreg
