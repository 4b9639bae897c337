// unitreg: regression models for outcomes on the closed unit interval.
// Subcommands: fit, compare, bayes-fit, simulate, diagnose.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "unitreg/bayes.hpp"
#include "unitreg/diagnostics.hpp"
#include "unitreg/links.hpp"
#include "unitreg/mle.hpp"
#include "unitreg/rng.hpp"
#include "unitreg/separation.hpp"
#include "unitreg/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace unitreg;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (...) {
      throw std::invalid_argument(std::string("cannot parse number '") + tok +
                                  "' in " + what);
    }
  }
  return out;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("UNITREG_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw std::invalid_argument("UNITREG_SEED is not a valid integer");
    }
  }
  return 1;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Column names -> 1-based indices into the loaded predictor set.
std::vector<int> column_indices(const std::vector<std::string>& all,
                                const std::vector<std::string>& wanted) {
  std::vector<int> out;
  for (const auto& name : wanted) {
    auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end())
      throw std::invalid_argument("column '" + name +
                                  "' is not among the loaded predictors");
    out.push_back(static_cast<int>(it - all.begin()) + 1);
  }
  return out;
}

json spec_to_json(const ModelSpec& s) {
  return json{{"kind", to_string(s.kind)},
              {"mu_cols", s.mu_cols},
              {"tilt_cols", s.tilt_cols},
              {"phi_cols", s.phi_cols},
              {"theta_cols", s.theta_cols},
              {"theta_regression", s.theta_regression},
              {"zeta", s.zeta},
              {"masked_mu_design", s.masked_mu_design},
              {"bound_kind",
               s.bound_kind == BoundKind::phi_minus_1 ? "phi-minus-1" : "phi"},
              {"endpoint_density",
               s.endpoint_density == EndpointDensity::tilting_power ? "tilting"
                                                                    : "phi-star"}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.kind = model_kind_from_string(j.at("kind").get<std::string>());
  s.mu_cols = j.at("mu_cols").get<std::vector<int>>();
  s.tilt_cols = j.at("tilt_cols").get<std::vector<int>>();
  s.phi_cols = j.at("phi_cols").get<std::vector<int>>();
  s.theta_cols = j.at("theta_cols").get<std::vector<int>>();
  s.theta_regression = j.at("theta_regression").get<bool>();
  s.zeta = j.at("zeta").get<bool>();
  s.masked_mu_design = j.at("masked_mu_design").get<bool>();
  s.bound_kind = j.at("bound_kind").get<std::string>() == "phi"
                     ? BoundKind::phi
                     : BoundKind::phi_minus_1;
  s.endpoint_density = j.at("endpoint_density").get<std::string>() == "phi-star"
                           ? EndpointDensity::phi_star_beta
                           : EndpointDensity::tilting_power;
  return s;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i)
    out.push_back(std::isfinite(v[i]) ? json(v[i]) : json());
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) out.push_back(vector_to_json(m.row(i)));
  return out;
}

json theorem3_to_json(const Theorem3Flags& f) {
  json groups = json::array();
  for (int g = 0; g < f.n_groups(); ++g)
    groups.push_back(json{{"group", g},
                          {"n0", f.n0[g]},
                          {"n1", f.n1[g]},
                          {"n_beta", f.n_beta[g]},
                          {"q", f.q[g]}});
  return json{{"global_q", f.global_q}, {"groups", groups}};
}

json separation_to_json(const SeparationReport& rep) {
  json j{{"kind", to_string(rep.kind)}, {"note", rep.note}};
  if (rep.witness.size() > 0) j["witness"] = vector_to_json(rep.witness);
  return j;
}

// ---------------------------------------------------------------- fit ----

struct FitArgs {
  std::string data_path, y_col, out_dir = ".";
  std::string model = "model3";
  std::string x_cols, phi_cov = "none", theta_cov, tilt_cov;
  bool zeta = false, xbeta_mask = false;
  std::string bound_kind = "phi-minus-1";
  std::string endpoint_density = "tilting";
  double endpoint_epsilon = 0.0;
  std::string unit_col;
};

int run_fit(const FitArgs& a) {
  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);

  const std::vector<std::string> x_names =
      a.x_cols.empty() || a.x_cols == "none" ? std::vector<std::string>{}
                                             : split_list(a.x_cols);
  Dataset data = load_csv(a.data_path, a.y_col, x_names,
                          a.unit_col.empty() ? std::nullopt
                                             : std::make_optional(a.unit_col),
                          std::nullopt, a.endpoint_epsilon);

  ModelSpec spec;
  spec.kind = model_kind_from_string(a.model);
  spec.mu_cols = column_indices(x_names, x_names);
  if (a.phi_cov != "none" && !a.phi_cov.empty())
    spec.phi_cols = column_indices(x_names, split_list(a.phi_cov));
  if (spec.kind == ModelKind::model1)
    spec.tilt_cols = a.tilt_cov.empty() || a.tilt_cov == "none"
                         ? spec.mu_cols
                         : column_indices(x_names, split_list(a.tilt_cov));
  const bool theta_requested = !a.theta_cov.empty() && a.theta_cov != "none";
  if (theta_requested)
    spec.theta_cols = column_indices(x_names, split_list(a.theta_cov));
  if (spec.kind == ModelKind::model2) spec.theta_regression = theta_requested;
  spec.zeta = a.zeta;
  spec.masked_mu_design = a.xbeta_mask;
  spec.bound_kind =
      a.bound_kind == "phi" ? BoundKind::phi : BoundKind::phi_minus_1;
  spec.endpoint_density = a.endpoint_density == "phi-star"
                              ? EndpointDensity::phi_star_beta
                              : EndpointDensity::tilting_power;

  json echo{{"command", "fit"},
            {"data", a.data_path},
            {"y", a.y_col},
            {"x", x_names},
            {"unit", a.unit_col},
            {"endpoint_epsilon", a.endpoint_epsilon},
            {"spec", spec_to_json(spec)}};
  write_json(echo, out_dir / "config-echo.json");

  const ModelDesign design = build_design(spec, data);
  const FitResult fr = fit(design, data);

  json fit_json{{"model", to_string(spec.kind)},
                {"spec", spec_to_json(spec)},
                {"n", data.n()},
                {"n0", data.partition.n0()},
                {"n1", data.partition.n1()},
                {"n_beta", data.partition.n_beta()},
                {"k", fr.k},
                {"loglik", fr.loglik},
                {"aic", fr.aic},
                {"converged", fr.converged},
                {"grad_norm", fr.grad_norm},
                {"iterations", fr.iterations},
                {"message", fr.message},
                {"hessian_pd", fr.hessian_pd},
                {"names", fr.layout.names},
                {"estimates", vector_to_json(fr.estimates)},
                {"se", vector_to_json(fr.se)},
                {"z", vector_to_json(fr.z)},
                {"vcov", matrix_to_json(fr.vcov)},
                {"theorem3", theorem3_to_json(fr.theorem3)}};
  json singular = json::array();
  for (int idx : fr.singular_params) singular.push_back(fr.layout.names[idx]);
  fit_json["singular_params"] = singular;

  // separation screening whenever an endpoint-probability model is estimated
  if (spec.kind == ModelKind::augmented ||
      (spec.kind == ModelKind::model2 && spec.theta_regression)) {
    Eigen::MatrixXd xsep(data.n(), 1 + spec.theta_cols.size());
    xsep.col(0).setOnes();
    for (size_t j = 0; j < spec.theta_cols.size(); ++j)
      xsep.col(1 + j) = data.x_plus.col(spec.theta_cols[j]);
    json sep;
    if (data.partition.n0() > 0) {
      std::vector<char> z0(data.n());
      for (int i = 0; i < data.n(); ++i) z0[i] = data.y[i] == 0.0 ? 1 : 0;
      sep["z0"] = separation_to_json(detect_separation(z0, xsep));
    }
    if (data.partition.n1() > 0) {
      std::vector<char> z1(data.n());
      for (int i = 0; i < data.n(); ++i) z1[i] = data.y[i] == 1.0 ? 1 : 0;
      sep["z1"] = separation_to_json(detect_separation(z1, xsep));
    }
    fit_json["separation"] = sep;
  }

  const ResidualReport residuals = standardized_residuals(design, fr.estimates);
  fit_json["residual_summary"] = json{{"mean", residuals.mean},
                                      {"sd", residuals.sd},
                                      {"max_abs", residuals.max_abs}};

  write_json(fit_json, out_dir / "fit.json");
  export_residuals(residuals, (out_dir / "residuals.csv").string());
  export_pred_vs_obs(design, fr.estimates, (out_dir / "pred_vs_obs.csv").string());
  if (!design.layout.a.empty())
    export_mu_theta_scatter(design, fr.estimates,
                            (out_dir / "mu_theta_scatter.csv").string());

  std::cout << "model " << to_string(spec.kind) << ": loglik " << fr.loglik
            << ", AIC " << fr.aic << ", "
            << (fr.converged ? "converged" : "NOT converged") << " (" << fr.message
            << ")\n";
  for (int j = 0; j < fr.k; ++j)
    std::printf("  %-8s %12.6f  (%.6f)  z=%8.3f\n", fr.layout.names[j].c_str(),
                fr.estimates[j], fr.se[j], fr.z[j]);
  if (!fr.converged) {
    std::cerr << "fit did not converge: " << fr.message << '\n';
    return kExitRuntime;
  }
  return 0;
}

// ------------------------------------------------------------- compare ----

struct CompareArgs {
  std::string fit_a, fit_b, wald, out_dir = ".";
};

// restriction grammar: "name=-other,name=other,name=0.5"
struct Restriction {
  std::string lhs;
  double sign = 1.0;
  std::string rhs_name;  // empty when the right side is a constant
  double rhs_value = 0.0;
};

Restriction parse_restriction(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("restriction '" + s + "' lacks '='");
  Restriction r;
  r.lhs = s.substr(0, eq);
  std::string rhs = s.substr(eq + 1);
  if (rhs.empty()) throw std::invalid_argument("restriction '" + s + "' lacks a right side");
  if (rhs[0] == '-') {
    r.sign = -1.0;
    rhs = rhs.substr(1);
  }
  try {
    size_t used = 0;
    const double v = std::stod(rhs, &used);
    if (used == rhs.size()) {
      r.rhs_value = v * r.sign;
      return r;
    }
  } catch (...) {
  }
  r.rhs_name = rhs;
  return r;
}

int run_compare(const CompareArgs& a) {
  std::ifstream fa(a.fit_a), fb(a.fit_b);
  if (!fa) throw std::invalid_argument("cannot open " + a.fit_a);
  if (!fb) throw std::invalid_argument("cannot open " + a.fit_b);
  json ja = json::parse(fa), jb = json::parse(fb);

  json out{{"fit_a", a.fit_a}, {"fit_b", a.fit_b}};
  const double aic_a = ja.at("aic"), aic_b = jb.at("aic");
  out["aic_a"] = aic_a;
  out["aic_b"] = aic_b;
  out["delta_aic"] = aic_b - aic_a;
  std::printf("AIC: a=%.4f  b=%.4f  delta=%.4f\n", aic_a, aic_b, aic_b - aic_a);

  const ModelSpec sa = spec_from_json(ja.at("spec"));
  const ModelSpec sb = spec_from_json(jb.at("spec"));
  const int ka = ja.at("k"), kb = jb.at("k");
  const bool nested = ka <= kb ? is_nested(sa, sb) : is_nested(sb, sa);
  if (nested && ka != kb) {
    FitResult restricted, full;
    restricted.loglik = ka <= kb ? ja.at("loglik").get<double>()
                                 : jb.at("loglik").get<double>();
    restricted.k = std::min(ka, kb);
    full.loglik = ka <= kb ? jb.at("loglik").get<double>()
                           : ja.at("loglik").get<double>();
    full.k = std::max(ka, kb);
    const TestResult lr = lr_test(restricted, full);
    out["lr"] = json{{"chi2", lr.chi2}, {"df", lr.df}, {"p", lr.p}};
    std::printf("LR:  chi2(%d) = %.4f, p = %.4f\n", lr.df, lr.chi2, lr.p);
  } else if (!nested) {
    out["lr"] = "not nested";
    std::printf("LR:  models are not nested; no test\n");
  }

  if (!a.wald.empty()) {
    // restrictions are evaluated on fit b
    FitResult fr;
    fr.layout.names = jb.at("names").get<std::vector<std::string>>();
    const auto est = jb.at("estimates").get<std::vector<double>>();
    fr.estimates = Eigen::Map<const Eigen::VectorXd>(est.data(), est.size());
    const auto& vj = jb.at("vcov");
    fr.vcov.resize(est.size(), est.size());
    for (size_t i = 0; i < est.size(); ++i)
      for (size_t j = 0; j < est.size(); ++j)
        fr.vcov(i, j) = vj.at(i).at(j).is_null()
                            ? std::numeric_limits<double>::quiet_NaN()
                            : vj.at(i).at(j).get<double>();

    const auto items = split_list(a.wald);
    if (items.empty()) throw std::invalid_argument("--wald is empty");
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(items.size(), est.size());
    Eigen::VectorXd r = Eigen::VectorXd::Zero(items.size());
    auto index_of = [&](const std::string& name) {
      for (size_t j = 0; j < fr.layout.names.size(); ++j)
        if (fr.layout.names[j] == name) return static_cast<int>(j);
      throw std::invalid_argument("parameter '" + name + "' not in fit b");
    };
    for (size_t i = 0; i < items.size(); ++i) {
      const Restriction res = parse_restriction(items[i]);
      R(i, index_of(res.lhs)) = 1.0;
      if (res.rhs_name.empty())
        r[i] = res.rhs_value;
      else
        R(i, index_of(res.rhs_name)) -= res.sign;
    }
    const TestResult w = wald_test(fr, R, r);
    out["wald"] =
        json{{"restrictions", a.wald}, {"chi2", w.chi2}, {"df", w.df}, {"p", w.p}};
    std::printf("Wald: chi2(%d) = %.4f, p = %.4f  [%s]\n", w.df, w.chi2, w.p,
                a.wald.c_str());
  }

  fs::create_directories(a.out_dir);
  write_json(out, fs::path(a.out_dir) / "comparison.json");
  return 0;
}

// ----------------------------------------------------------- bayes-fit ----

struct BayesArgs {
  std::string data_path, y_col, x_cols, unit_col, out_dir = ".";
  std::string model = "model3";
  std::string theta_cov;
  std::string centering = "none";
  double c = 0.0;
  std::string coef_prior_kind = "precision";
  double coef_prior_scale = 0.04;
  double phi_lo = 3.0, phi_hi = 150.0;
  double sigma_m_rate = 0.2;
  std::string bounds = "none";  // none | auto | comma list of unit indices
  std::string bound_kind = "phi-minus-1";
  std::string endpoint_density = "tilting";
  int chains = 1, warmup = 5000, iters = 20000;
  std::optional<std::uint64_t> seed;
  double endpoint_epsilon = 0.0;
};

int run_bayes(const BayesArgs& a) {
  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);
  const std::uint64_t seed = resolve_seed(a.seed);
  if (a.chains < 1) throw std::invalid_argument("--chains must be at least 1");

  const std::vector<std::string> x_names =
      a.x_cols.empty() || a.x_cols == "none" ? std::vector<std::string>{}
                                             : split_list(a.x_cols);
  Dataset data = load_csv(a.data_path, a.y_col, x_names,
                          a.unit_col.empty() ? std::nullopt
                                             : std::make_optional(a.unit_col),
                          std::nullopt, a.endpoint_epsilon);

  ModelSpec spec;
  spec.kind = model_kind_from_string(a.model);
  spec.mu_cols = column_indices(x_names, x_names);
  const bool theta_requested = !a.theta_cov.empty() && a.theta_cov != "none";
  if (theta_requested)
    spec.theta_cols = column_indices(x_names, split_list(a.theta_cov));
  spec.theta_regression = theta_requested;
  spec.bound_kind =
      a.bound_kind == "phi" ? BoundKind::phi : BoundKind::phi_minus_1;
  spec.endpoint_density = a.endpoint_density == "phi-star"
                              ? EndpointDensity::phi_star_beta
                              : EndpointDensity::tilting_power;

  PriorConfig priors;
  priors.coef_scale = a.coef_prior_scale;
  priors.coef_scale_kind = a.coef_prior_kind == "variance"
                               ? PriorScaleKind::variance
                           : a.coef_prior_kind == "sd" ? PriorScaleKind::sd
                                                       : PriorScaleKind::precision;
  priors.phi_lower = a.phi_lo;
  priors.phi_upper = a.phi_hi;
  priors.sigma_m_rate = a.sigma_m_rate;

  CenteringVariant centering;
  centering.kind = a.centering == "hc1"   ? Centering::hc1
                   : a.centering == "hc2" ? Centering::hc2
                                          : Centering::none;
  centering.c = a.c;

  BoundSettings bounds;
  if (a.bounds == "auto") {
    bounds.enabled = true;
  } else if (a.bounds != "none" && !a.bounds.empty()) {
    bounds.enabled = true;
    for (double v : parse_doubles(a.bounds, "--bounds"))
      bounds.units.push_back(static_cast<int>(v));
  }
  bounds.kind = spec.bound_kind;

  json echo{{"command", "bayes-fit"},
            {"data", a.data_path},
            {"y", a.y_col},
            {"x", x_names},
            {"unit", a.unit_col},
            {"spec", spec_to_json(spec)},
            {"centering", a.centering},
            {"c", a.c},
            {"coef_prior_kind", a.coef_prior_kind},
            {"coef_prior_scale", a.coef_prior_scale},
            {"phi_prior", json::array({a.phi_lo, a.phi_hi})},
            {"sigma_m_rate", a.sigma_m_rate},
            {"bounds", a.bounds},
            {"bound_kind", a.bound_kind},
            {"chains", a.chains},
            {"warmup", a.warmup},
            {"iters", a.iters},
            {"seed", seed},
            {"rng", std::string(Rng::algorithm())}};
  write_json(echo, out_dir / "config-echo.json");

  BayesProblem problem(spec, data, priors, centering, bounds);

  std::vector<ChainResult> chains(a.chains);
  {
    std::vector<std::string> errors(a.chains);
    std::vector<std::thread> workers;
    for (int c = 0; c < a.chains; ++c) {
      workers.emplace_back([&, c]() {
        try {
          ChainConfig cc;
          cc.seed = seed + static_cast<std::uint64_t>(c);
          cc.n_warmup = a.warmup;
          cc.n_iter = a.iters;
          chains[c] = problem.run_chain(cc);
        } catch (const std::exception& e) {
          errors[c] = e.what();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors)
      if (!e.empty()) throw std::runtime_error(e);
  }
  const ChainResult merged = problem.merge(chains);

  // draws.csv: one column per parameter
  {
    std::ofstream out(out_dir / "draws.csv");
    for (size_t j = 0; j < merged.names.size(); ++j)
      out << merged.names[j] << (j + 1 < merged.names.size() ? ',' : '\n');
    char buf[32];
    for (long t = 0; t < merged.draws.rows(); ++t) {
      for (int j = 0; j < merged.draws.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.10g", merged.draws(t, j));
        out << buf << (j + 1 < merged.draws.cols() ? ',' : '\n');
      }
    }
  }

  json params = json::array();
  for (size_t j = 0; j < merged.names.size(); ++j) {
    std::vector<double> col(merged.draws.rows());
    for (long t = 0; t < merged.draws.rows(); ++t) col[t] = merged.draws(t, j);
    std::sort(col.begin(), col.end());
    const double mean = merged.draws.col(j).mean();
    auto q = [&](double p) {
      const double pos = p * (col.size() - 1);
      const size_t i = static_cast<size_t>(pos);
      const double w = pos - i;
      return i + 1 < col.size() ? (1 - w) * col[i] + w * col[i + 1] : col.back();
    };
    params.push_back(json{{"name", merged.names[j]},
                          {"mean", mean},
                          {"ci_lo", q(0.025)},
                          {"ci_hi", q(0.975)},
                          {"ess", merged.ess[j]},
                          {"ess_defined", static_cast<bool>(merged.ess_defined[j])},
                          {"accept_rate", merged.accept_rate[j]}});
  }
  json summary{{"parameters", params},
               {"dic", merged.dic},
               {"p_d", merged.p_d},
               {"waic", merged.waic},
               {"p_w", merged.p_w},
               {"mse", merged.mse},
               {"chains", a.chains},
               {"retained_draws", merged.draws.rows()},
               {"rng", merged.rng_algorithm}};
  if (centering.kind == Centering::hc2) {
    // reconstruction rule: first-level constant plus the shifted intercept
    const double shifted = merged.draws.col(0).mean();
    summary["b0_shifted_mean"] = shifted;
    summary["b0_reconstructed"] = a.c + shifted;
  }
  json flagged = json::array();
  for (const auto& f : merged.flagged)
    flagged.push_back(json{{"unit", f.unit},
                           {"delta_m_mean", f.delta_mean},
                           {"delta_m_ci", json::array({f.delta_lo, f.delta_hi})},
                           {"pi_u", f.pi_u},
                           {"pi_u_ci", json::array({f.pi_u_lo, f.pi_u_hi})},
                           {"pi_u_concern", f.pi_u_concern}});
  summary["bounded_units"] = flagged;
  write_json(summary, out_dir / "summary.json");

  std::cout << "chains " << a.chains << " x " << a.iters << " draws; DIC "
            << merged.dic << " (p_d " << merged.p_d << "), WAIC " << merged.waic
            << " (p_w " << merged.p_w << "), MSE " << merged.mse << '\n';
  return 0;
}

// ------------------------------------------------------------ simulate ----

struct SimArgs {
  std::string model = "model3";
  int n = 100;
  std::optional<std::uint64_t> seed;
  std::string true_b = "0.8,0.5";
  std::string true_d = "2.0";
  std::string true_a, true_c;
  std::string predictor_dist = "normal";
  std::string mechanism = "none";
  double p0 = 0.0, p1 = 0.0, resolution = 0.0;
  int units = 0, obs_per_unit = 0;
  double sigma_m = 0.0;
  std::string forced_units;
  double forced_fraction = 0.5;
  std::string out_dir = ".";
};

int run_simulate(const SimArgs& a) {
  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);

  GenConfig cfg;
  cfg.kind = model_kind_from_string(a.model);
  cfg.n = a.n;
  const auto b = parse_doubles(a.true_b, "--true-b");
  if (b.empty()) throw std::invalid_argument("--true-b needs at least an intercept");
  cfg.b = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  cfg.n_predictors = static_cast<int>(b.size()) - 1;
  const auto d = parse_doubles(a.true_d, "--true-d");
  cfg.d = Eigen::Map<const Eigen::VectorXd>(d.data(), d.size());
  if (!a.true_a.empty()) {
    const auto v = parse_doubles(a.true_a, "--true-a");
    cfg.a = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  if (!a.true_c.empty()) {
    const auto v = parse_doubles(a.true_c, "--true-c");
    cfg.c = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  cfg.predictor_dist = a.predictor_dist == "uniform"
                           ? PredictorDist::uniform01
                           : PredictorDist::standard_normal;
  cfg.endpoint_mechanism = a.mechanism == "explicit"
                               ? EndpointMechanism::explicit_probs
                           : a.mechanism == "rounding" ? EndpointMechanism::rounding
                                                       : EndpointMechanism::none;
  cfg.p0 = a.p0;
  cfg.p1 = a.p1;
  cfg.rounding_resolution = a.resolution;
  cfg.seed = resolve_seed(a.seed);

  GenResult gen;
  const bool panel = a.units > 0;
  if (panel) {
    PanelConfig pc;
    pc.base = cfg;
    pc.units = a.units;
    pc.obs_per_unit = a.obs_per_unit > 0 ? a.obs_per_unit : 8;
    pc.sigma_m = a.sigma_m;
    if (!a.forced_units.empty())
      for (double v : parse_doubles(a.forced_units, "--forced-units"))
        pc.forced_endpoint_units.push_back(static_cast<int>(v));
    pc.forced_endpoint_fraction = a.forced_fraction;
    gen = gen_panel(pc);
  } else {
    gen = gen_cross_section(cfg);
  }

  // data.csv in the ingestion schema
  {
    std::ofstream out(out_dir / "data.csv");
    out << "y";
    for (int j = 0; j < cfg.n_predictors; ++j) out << ",x" << (j + 1);
    if (panel) out << ",unit";
    out << '\n';
    char buf[32];
    for (int i = 0; i < gen.data.n(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", gen.data.y[i]);
      out << buf;
      for (int j = 1; j <= cfg.n_predictors; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", gen.data.x_plus(i, j));
        out << ',' << buf;
      }
      if (panel) out << ',' << gen.data.unit_id[i];
      out << '\n';
    }
  }

  json truth{{"model", a.model},
             {"n", gen.data.n()},
             {"b", b},
             {"d", d},
             {"seed", cfg.seed},
             {"rng", std::string(Rng::algorithm())},
             {"predictor_dist", a.predictor_dist},
             {"endpoint_mechanism", a.mechanism},
             {"p0", a.p0},
             {"p1", a.p1},
             {"resolution", a.resolution},
             {"n0", gen.data.partition.n0()},
             {"n1", gen.data.partition.n1()},
             {"n_beta", gen.data.partition.n_beta()}};
  if (!a.true_a.empty()) truth["a"] = parse_doubles(a.true_a, "--true-a");
  if (!a.true_c.empty()) truth["c"] = parse_doubles(a.true_c, "--true-c");
  if (panel) {
    truth["units"] = a.units;
    truth["obs_per_unit"] = a.obs_per_unit > 0 ? a.obs_per_unit : 8;
    truth["sigma_m"] = a.sigma_m;
    truth["unit_effects"] = vector_to_json(gen.unit_effects);
  }
  write_json(truth, out_dir / "truth.json");

  json echo = truth;
  echo["command"] = "simulate";
  write_json(echo, out_dir / "config-echo.json");
  std::cout << "wrote " << gen.data.n() << " rows (n0=" << gen.data.partition.n0()
            << ", n1=" << gen.data.partition.n1() << ") to "
            << (out_dir / "data.csv").string() << '\n';
  return 0;
}

// ------------------------------------------------------------ diagnose ----

struct DiagArgs {
  std::string data_path, y_col, x_cols, unit_col, out_dir = ".";
  double endpoint_epsilon = 0.0;
};

int run_diagnose(const DiagArgs& a) {
  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);
  const std::vector<std::string> x_names =
      a.x_cols.empty() || a.x_cols == "none" ? std::vector<std::string>{}
                                             : split_list(a.x_cols);
  Dataset data = load_csv(a.data_path, a.y_col, x_names,
                          a.unit_col.empty() ? std::nullopt
                                             : std::make_optional(a.unit_col),
                          std::nullopt, a.endpoint_epsilon);

  const DatasetSummary s = summarize(data);
  json cols = json::array();
  for (const auto& c : s.columns)
    cols.push_back(
        json{{"name", c.name}, {"min", c.min}, {"max", c.max}, {"mean", c.mean}});
  json out{{"n", s.n}, {"n0", s.n0}, {"n1", s.n1}, {"n_beta", s.n_beta},
           {"columns", cols}};

  const Theorem3Flags flags = check_theorem3(
      data, data.unit_id.empty() ? std::vector<int>{} : data.unit_id);
  out["theorem3"] = theorem3_to_json(flags);

  json sep;
  if (s.n0 > 0) {
    std::vector<char> z0(data.n());
    for (int i = 0; i < data.n(); ++i) z0[i] = data.y[i] == 0.0 ? 1 : 0;
    sep["z0"] = separation_to_json(detect_separation(z0, data.x_plus));
  }
  if (s.n1 > 0) {
    std::vector<char> z1(data.n());
    for (int i = 0; i < data.n(); ++i) z1[i] = data.y[i] == 1.0 ? 1 : 0;
    sep["z1"] = separation_to_json(detect_separation(z1, data.x_plus));
  }
  out["separation"] = sep;

  json echo{{"command", "diagnose"},
            {"data", a.data_path},
            {"y", a.y_col},
            {"x", x_names},
            {"unit", a.unit_col}};
  write_json(echo, out_dir / "config-echo.json");
  write_json(out, out_dir / "diagnose.json");
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unitreg: regression for outcomes on [0,1]"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "maximum-likelihood fit");
  fit_cmd->add_option("--model", fa.model,
                      "classic|augmented|model1|model2|model3|model4");
  fit_cmd->add_option("--data", fa.data_path, "CSV file")->required();
  fit_cmd->add_option("--y", fa.y_col, "outcome column")->required();
  fit_cmd->add_option("--x", fa.x_cols, "comma-separated predictors (or 'none')");
  fit_cmd->add_option("--phi-covariates", fa.phi_cov, "precision predictors");
  fit_cmd->add_option(
      "--theta-covariates", fa.theta_cov,
      "mixing/endpoint-probability predictors ('none' = intercept only)");
  fit_cmd->add_option("--tilt-covariates", fa.tilt_cov,
                      "tilt-mean predictors (model1)");
  fit_cmd->add_flag("--zeta", fa.zeta, "split endpoint weight (model2)");
  fit_cmd->add_flag("--xbeta-mask", fa.xbeta_mask,
                    "zero endpoint rows of the mean design");
  fit_cmd->add_option("--bound-kind", fa.bound_kind, "phi-minus-1|phi (model4)");
  fit_cmd->add_option("--endpoint-density", fa.endpoint_density,
                      "tilting|phi-star (model2 endpoint component)");
  fit_cmd->add_option("--endpoint-epsilon", fa.endpoint_epsilon,
                      "snap |y|<eps and |1-y|<eps to the endpoints");
  fit_cmd->add_option("--unit", fa.unit_col, "panel unit column");
  fit_cmd->add_option("--out", fa.out_dir, "output directory");

  CompareArgs ca;
  auto* cmp_cmd = app.add_subcommand("compare", "compare two fits");
  cmp_cmd->add_option("--fit-a", ca.fit_a, "fit.json of model a")->required();
  cmp_cmd->add_option("--fit-b", ca.fit_b, "fit.json of model b")->required();
  cmp_cmd->add_option("--wald", ca.wald,
                      "restrictions on fit b, e.g. \"b1=-a1,b2=-a2\"");
  cmp_cmd->add_option("--out", ca.out_dir, "output directory");

  BayesArgs ba;
  auto* bayes_cmd =
      app.add_subcommand("bayes-fit", "MCMC fit (panel or cross-section)");
  bayes_cmd->add_option("--model", ba.model, "model2|model3|model4");
  bayes_cmd->add_option("--data", ba.data_path, "CSV file")->required();
  bayes_cmd->add_option("--y", ba.y_col, "outcome column")->required();
  bayes_cmd->add_option("--x", ba.x_cols, "comma-separated predictors");
  bayes_cmd->add_option("--unit", ba.unit_col, "panel unit column");
  bayes_cmd->add_option("--theta-covariates", ba.theta_cov,
                        "mixing predictors (model2)");
  bayes_cmd->add_option("--centering", ba.centering, "none|hc1|hc2");
  bayes_cmd->add_option("--c", ba.c, "HC2 first-level constant");
  bayes_cmd->add_option("--coef-prior-kind", ba.coef_prior_kind,
                        "precision|variance|sd");
  bayes_cmd->add_option("--coef-prior-scale", ba.coef_prior_scale,
                        "normal prior scale parameter");
  bayes_cmd->add_option("--phi-prior-lo", ba.phi_lo, "uniform lower bound");
  bayes_cmd->add_option("--phi-prior-hi", ba.phi_hi, "uniform upper bound");
  bayes_cmd->add_option("--sigma-m-rate", ba.sigma_m_rate, "exponential rate");
  bayes_cmd->add_option("--bounds", ba.bounds,
                        "none|auto|unit list for the intercept cap (model4)");
  bayes_cmd->add_option("--bound-kind", ba.bound_kind, "phi-minus-1|phi");
  bayes_cmd->add_option("--endpoint-density", ba.endpoint_density,
                        "tilting|phi-star");
  bayes_cmd->add_option("--chains", ba.chains, "independent chains");
  bayes_cmd->add_option("--warmup", ba.warmup, "warm-up iterations");
  bayes_cmd->add_option("--iters", ba.iters, "retained iterations per chain");
  std::uint64_t bayes_seed = 0;
  auto* bs = bayes_cmd->add_option("--seed", bayes_seed, "RNG seed");
  bayes_cmd->add_option("--endpoint-epsilon", ba.endpoint_epsilon,
                        "snap tolerance");
  bayes_cmd->add_option("--out", ba.out_dir, "output directory");

  SimArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "generate data with known truth");
  sim_cmd->add_option("--model", sa.model, "generator family");
  sim_cmd->add_option("--n", sa.n, "rows (cross-section)");
  std::uint64_t sim_seed = 0;
  auto* ss = sim_cmd->add_option("--seed", sim_seed, "RNG seed");
  sim_cmd->add_option("--true-b", sa.true_b, "mean coefficients, comma separated");
  sim_cmd->add_option("--true-d", sa.true_d, "precision coefficients (log scale)");
  sim_cmd->add_option("--true-a", sa.true_a, "mixing coefficients");
  sim_cmd->add_option("--true-c", sa.true_c, "tilt-mean coefficients (model1)");
  sim_cmd->add_option("--predictor-dist", sa.predictor_dist, "normal|uniform");
  sim_cmd->add_option("--endpoint-mechanism", sa.mechanism,
                      "none|explicit|rounding");
  sim_cmd->add_option("--p0", sa.p0, "explicit probability of y = 0");
  sim_cmd->add_option("--p1", sa.p1, "explicit probability of y = 1");
  sim_cmd->add_option("--resolution", sa.resolution, "rounding resolution");
  sim_cmd->add_option("--units", sa.units, "panel units (> 0 switches to panel)");
  sim_cmd->add_option("--obs-per-unit", sa.obs_per_unit, "rows per unit");
  sim_cmd->add_option("--sigma-m", sa.sigma_m, "random-intercept spread");
  sim_cmd->add_option("--forced-units", sa.forced_units,
                      "units forced into the flagged endpoint regime");
  sim_cmd->add_option("--forced-fraction", sa.forced_fraction, "endpoint share");
  sim_cmd->add_option("--out", sa.out_dir, "output directory");

  DiagArgs da;
  auto* diag_cmd = app.add_subcommand("diagnose", "data screening");
  diag_cmd->add_option("--data", da.data_path, "CSV file")->required();
  diag_cmd->add_option("--y", da.y_col, "outcome column")->required();
  diag_cmd->add_option("--x", da.x_cols, "comma-separated predictors");
  diag_cmd->add_option("--unit", da.unit_col, "panel unit column");
  diag_cmd->add_option("--endpoint-epsilon", da.endpoint_epsilon, "snap tolerance");
  diag_cmd->add_option("--out", da.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*fit_cmd) return run_fit(fa);
    if (*cmp_cmd) return run_compare(ca);
    if (*bayes_cmd) {
      if (bs->count() > 0) ba.seed = bayes_seed;
      return run_bayes(ba);
    }
    if (*sim_cmd) {
      if (ss->count() > 0) sa.seed = sim_seed;
      return run_simulate(sa);
    }
    if (*diag_cmd) return run_diagnose(da);
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
