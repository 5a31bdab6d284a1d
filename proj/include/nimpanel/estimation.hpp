#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nimpanel/numerics.hpp"
#include "nimpanel/panel.hpp"

namespace nim {

enum class Estimator { Pols, Fe, Re, DiffGmm, SysGmm };
enum class Weighting { OneStep, TwoStep };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& s);

// Declarative description of one regression.
struct ModelSpec {
  std::string dependent = "NIM";
  int dep_lags = 0;
  std::vector<std::string> regressors;
  bool include_constant = true;
  Estimator estimator = Estimator::Pols;
  Weighting weighting = Weighting::OneStep;
  bool cluster_robust = false;    // opt-in cluster SEs for the static estimators
  bool force_static_lags = false; // permit dep_lags > 0 under pols/fe/re
  bool windmeijer_correction = false;  // finite-sample two-step SE correction

  void validate(const PanelDataset& data) const;
};

struct TestResult {
  std::string name;
  double statistic = 0;
  int df = 0;
  int df2 = 0;  // denominator df for F tests, 0 otherwise
  double p_value = 1.0;
  std::string null_description;
  std::vector<std::string> flags;
  bool applicable = true;  // false e.g. for Sargan on an exactly identified model
};

struct EstimationResult {
  Estimator estimator = Estimator::Pols;
  std::vector<std::string> coef_names;
  Vector coefficients;
  Vector standard_errors;
  Matrix covariance;
  // Residuals aligned to the estimation sample (differences for GMM).
  std::vector<int> resid_bank;
  std::vector<int> resid_period;
  Vector residuals;
  double r_squared = 0;
  long n_obs = 0;
  int n_banks = 0;
  int instrument_count = 0;  // GMM only
  std::vector<std::string> flags;
  std::vector<TestResult> tests;

  // Error variance used to scale the classical covariance (0 when the
  // covariance came from a robust/sandwich formula or a synthetic record).
  double sigma2 = 0;

  // Swamy-Arora components (RE only).
  double sigma2_mu = 0, sigma2_eps = 0, theta = 0;

  int coef_index(const std::string& name) const;
  double coef(const std::string& name) const { return coefficients(coef_index(name)); }
  double se(const std::string& name) const { return standard_errors(coef_index(name)); }
};

EstimationResult estimate_pols(const ModelSpec& spec, const PanelDataset& data);
EstimationResult estimate_fe(const ModelSpec& spec, const PanelDataset& data);
EstimationResult estimate_re(const ModelSpec& spec, const PanelDataset& data);

// Dispatch on spec.estimator (GMM variants included).
EstimationResult estimate(const ModelSpec& spec, const PanelDataset& data);

}  // namespace nim
