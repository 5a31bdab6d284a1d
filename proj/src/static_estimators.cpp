#include <algorithm>
#include <cmath>
#include <set>

#include "nimpanel/estimation.hpp"
#include "nimpanel/gmm.hpp"

namespace nim {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Pols: return "pols";
    case Estimator::Fe: return "fe";
    case Estimator::Re: return "re";
    case Estimator::DiffGmm: return "diff-gmm";
    case Estimator::SysGmm: return "sys-gmm";
  }
  return "?";
}

Estimator parse_estimator(const std::string& s) {
  if (s == "pols") return Estimator::Pols;
  if (s == "fe") return Estimator::Fe;
  if (s == "re") return Estimator::Re;
  if (s == "diff-gmm" || s == "diff_gmm") return Estimator::DiffGmm;
  if (s == "sys-gmm" || s == "sys_gmm") return Estimator::SysGmm;
  throw PanelError("unknown estimator '" + s + "'");
}

void ModelSpec::validate(const PanelDataset& data) const {
  std::set<std::string> seen;
  for (const auto& r : regressors) {
    if (!seen.insert(r).second) throw PanelError("duplicate regressor '" + r + "'");
    data.var_index(r);  // throws on miss
  }
  data.var_index(dependent);
  if (dep_lags < 0) throw PanelError("dep_lags must be >= 0");
  if (data.balanced() && dep_lags >= data.T() - 1)
    throw PanelError("dep_lags must be < T - 1");
  const bool is_static =
      estimator == Estimator::Pols || estimator == Estimator::Fe || estimator == Estimator::Re;
  if (is_static && dep_lags > 0 && !force_static_lags)
    throw PanelError("static estimators refuse lagged dependent variables "
                     "(Nickell bias); pass --force to override");
  if (!is_static && dep_lags < 1)
    throw PanelError("GMM estimators need dep_lags >= 1");
}

int EstimationResult::coef_index(const std::string& name) const {
  auto it = std::find(coef_names.begin(), coef_names.end(), name);
  if (it == coef_names.end()) throw PanelError("no coefficient named '" + name + "'");
  return static_cast<int>(it - coef_names.begin());
}

namespace {

struct StackedDesign {
  Matrix X;              // lag columns, regressors, then constant (if any)
  Vector y;
  std::vector<std::string> names;
  std::vector<int> bank, period;
  int n_banks = 0;
  int periods_per_bank = 0;
  bool has_constant = false;
};

std::string lag_label(const std::string& var, int k) {
  return (k == 1 ? "L." : "L" + std::to_string(k) + ".") + var;
}

StackedDesign stack_design(const ModelSpec& spec, const PanelDataset& data) {
  if (!data.balanced()) throw PanelError("estimation requires a balanced panel");
  spec.validate(spec.dep_lags > 0 ? data : data);
  const int n = data.n_banks();
  const int T = data.T();
  const int p = spec.dep_lags;
  const int k = p + static_cast<int>(spec.regressors.size()) + (spec.include_constant ? 1 : 0);
  const long rows = static_cast<long>(n) * (T - p);

  StackedDesign d;
  d.X.resize(rows, k);
  d.y.resize(rows);
  d.n_banks = n;
  d.periods_per_bank = T - p;
  d.has_constant = spec.include_constant;

  const int dep = data.var_index(spec.dependent);
  std::vector<int> reg_idx;
  for (const auto& r : spec.regressors) reg_idx.push_back(data.var_index(r));

  long row = 0;
  for (int b = 0; b < n; ++b) {
    for (int t = p; t < T; ++t, ++row) {
      d.y(row) = data.value(b, t, dep);
      int c = 0;
      for (int l = 1; l <= p; ++l) d.X(row, c++) = data.value(b, t - l, dep);
      for (int v : reg_idx) d.X(row, c++) = data.value(b, t, v);
      if (spec.include_constant) d.X(row, c) = 1.0;
      d.bank.push_back(b);
      d.period.push_back(data.periods()[t]);
    }
  }
  for (int l = 1; l <= p; ++l) d.names.push_back(lag_label(spec.dependent, l));
  for (const auto& r : spec.regressors) d.names.push_back(r);
  if (spec.include_constant) d.names.push_back("CONSTANT");
  return d;
}

Matrix cluster_covariance(const StackedDesign& d, const Vector& resid, const Matrix& xtx_inv) {
  const int k = static_cast<int>(d.X.cols());
  Matrix meat = Matrix::Zero(k, k);
  Vector acc = Vector::Zero(k);
  int cur = d.bank.empty() ? -1 : d.bank[0];
  for (long i = 0; i <= static_cast<long>(d.bank.size()); ++i) {
    if (i == static_cast<long>(d.bank.size()) || d.bank[i] != cur) {
      meat += acc * acc.transpose();
      acc.setZero();
      if (i < static_cast<long>(d.bank.size())) cur = d.bank[i];
    }
    if (i < static_cast<long>(d.bank.size())) acc += d.X.row(i).transpose() * resid(i);
  }
  const double G = d.n_banks;
  const double N = static_cast<double>(d.X.rows());
  const double c = (G / (G - 1.0)) * ((N - 1.0) / (N - k));
  return c * xtx_inv * meat * xtx_inv;
}

EstimationResult pack_ols(const StackedDesign& d, const LeastSquaresFit& fit, Estimator tag,
                          bool cluster, int df_loss_extra) {
  const long N = d.X.rows();
  const int k = static_cast<int>(d.X.cols());
  const double ssr = fit.residuals.squaredNorm();
  const double dof = static_cast<double>(N - k - df_loss_extra);
  if (dof <= 0) throw PanelError("not enough observations for the requested model");
  const double sigma2 = ssr / dof;

  EstimationResult r;
  r.estimator = tag;
  r.coef_names = d.names;
  r.coefficients = fit.beta;
  r.sigma2 = cluster ? 0.0 : sigma2;  // zero marks a non-classical covariance
  r.covariance = cluster ? cluster_covariance(d, fit.residuals, fit.xtx_inverse)
                         : sigma2 * fit.xtx_inverse;
  r.standard_errors = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.residuals = fit.residuals;
  r.resid_bank = d.bank;
  r.resid_period = d.period;
  r.n_obs = N;
  r.n_banks = d.n_banks;

  double sst = 0;
  if (d.has_constant) {
    const double mean = d.y.mean();
    sst = (d.y.array() - mean).matrix().squaredNorm();
  } else {
    sst = d.y.squaredNorm();
  }
  r.r_squared = sst > 0 ? 1.0 - ssr / sst : 1.0;
  return r;
}

}  // namespace

EstimationResult estimate_pols(const ModelSpec& spec, const PanelDataset& data) {
  StackedDesign d = stack_design(spec, data);
  auto fit = solve_least_squares(d.X, d.y);
  return pack_ols(d, fit, Estimator::Pols, spec.cluster_robust, 0);
}

EstimationResult estimate_fe(const ModelSpec& spec, const PanelDataset& data) {
  StackedDesign d = stack_design(spec, data);
  const int n = d.n_banks;
  const int Tb = d.periods_per_bank;
  const int k = static_cast<int>(d.X.cols());

  // Recentre around bank means (grand mean added back, so a constant row
  // survives and slopes match the pure within transform).
  Matrix Xw = d.X;
  Vector yw = d.y;
  const Eigen::RowVectorXd grand_x = d.X.colwise().mean();
  const double grand_y = d.y.mean();
  for (int b = 0; b < n; ++b) {
    const long lo = static_cast<long>(b) * Tb;
    const Eigen::RowVectorXd mx = d.X.middleRows(lo, Tb).colwise().mean();
    const double my = d.y.segment(lo, Tb).mean();
    Xw.middleRows(lo, Tb).rowwise() -= mx - grand_x;
    yw.segment(lo, Tb).array() -= my - grand_y;
  }

  // Any regressor without within-bank variation is unidentified.
  for (int c = 0; c < k; ++c) {
    if (d.has_constant && c == k - 1) continue;
    double ss = (Xw.col(c).array() - Xw.col(c).mean()).matrix().squaredNorm();
    if (ss < 1e-12 * std::max(1.0, d.X.col(c).squaredNorm()))
      throw PanelError("fixed effects: regressor '" + d.names[c] +
                       "' has no within-bank variation");
  }

  StackedDesign dw = d;
  dw.X = std::move(Xw);
  dw.y = std::move(yw);
  auto fit = solve_least_squares(dw.X, dw.y);
  auto r = pack_ols(dw, fit, Estimator::Fe, spec.cluster_robust, n - 1);
  // Within R-squared on the demeaned data (convention choice, reported as such).
  return r;
}

EstimationResult estimate_re(const ModelSpec& spec, const PanelDataset& data) {
  StackedDesign d = stack_design(spec, data);
  const int n = d.n_banks;
  const int Tb = d.periods_per_bank;
  const int k = static_cast<int>(d.X.cols());
  const int k_slope = k - (d.has_constant ? 1 : 0);
  if (!d.has_constant)
    throw PanelError("random effects requires a constant in the specification");

  // Swamy-Arora variance components.
  // Within step: demeaned regression, slopes only.
  Matrix Xw(d.X.rows(), k_slope);
  Vector yw = d.y;
  Matrix bank_mx(n, k_slope);
  Vector bank_my(n);
  for (int b = 0; b < n; ++b) {
    const long lo = static_cast<long>(b) * Tb;
    bank_mx.row(b) = d.X.middleRows(lo, Tb).leftCols(k_slope).colwise().mean();
    bank_my(b) = d.y.segment(lo, Tb).mean();
    Xw.middleRows(lo, Tb) =
        d.X.middleRows(lo, Tb).leftCols(k_slope).rowwise() - bank_mx.row(b);
    yw.segment(lo, Tb).array() -= bank_my(b);
  }
  const long N = d.X.rows();
  auto wfit = solve_least_squares(Xw, yw);
  const double sigma2_eps = wfit.residuals.squaredNorm() / (N - n - k_slope);

  // Between step: bank means with a constant. Regressors without
  // between-bank variation (macro series) are collinear with the constant
  // and drop out of this regression.
  std::vector<int> between_cols;
  for (int c = 0; c < k_slope; ++c) {
    const double var = (bank_mx.col(c).array() - bank_mx.col(c).mean()).matrix().squaredNorm();
    if (var > 1e-12 * std::max(1.0, bank_mx.col(c).squaredNorm())) between_cols.push_back(c);
  }
  const int kb = static_cast<int>(between_cols.size());
  if (n < kb + 2)
    throw PanelError("random effects: too few banks for the between regression");
  Matrix Xb(n, kb + 1);
  for (int c = 0; c < kb; ++c) Xb.col(c) = bank_mx.col(between_cols[c]);
  Xb.col(kb).setOnes();
  auto bfit = solve_least_squares(Xb, bank_my);
  const double s2_between = bfit.residuals.squaredNorm() / (n - kb - 1);
  double sigma2_mu = s2_between - sigma2_eps / Tb;

  EstimationResult r;
  if (sigma2_mu < 0) {
    sigma2_mu = 0;
    r.flags.push_back("sigma2_mu clamped to 0");
  }
  const double theta = 1.0 - std::sqrt(sigma2_eps / (Tb * sigma2_mu + sigma2_eps));

  // Quasi-demeaned GLS regression.
  Matrix Xg = d.X;
  Vector yg = d.y;
  for (int b = 0; b < n; ++b) {
    const long lo = static_cast<long>(b) * Tb;
    Xg.middleRows(lo, Tb).leftCols(k_slope).rowwise() -= theta * bank_mx.row(b);
    Xg.middleRows(lo, Tb).col(k_slope).setConstant(1.0 - theta);
    yg.segment(lo, Tb).array() -= theta * bank_my(b);
  }
  auto gfit = solve_least_squares(Xg, yg);

  r.estimator = Estimator::Re;
  r.coef_names = d.names;
  r.coefficients = gfit.beta;
  const double sigma2_gls = gfit.residuals.squaredNorm() / (N - k);
  r.sigma2 = sigma2_gls;
  r.covariance = sigma2_gls * gfit.xtx_inverse;
  r.standard_errors = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.resid_bank = d.bank;
  r.resid_period = d.period;
  r.residuals = d.y - d.X * gfit.beta;  // level residuals
  r.n_obs = N;
  r.n_banks = n;
  r.sigma2_mu = sigma2_mu;
  r.sigma2_eps = sigma2_eps;
  r.theta = theta;

  // Overall R-squared: squared correlation of level fit with the outcome.
  const Vector fitted = d.X * gfit.beta;
  const double fm = fitted.mean(), ym = d.y.mean();
  const double cf = ((fitted.array() - fm) * (d.y.array() - ym)).sum();
  const double vf = (fitted.array() - fm).matrix().squaredNorm();
  const double vy = (d.y.array() - ym).matrix().squaredNorm();
  r.r_squared = (vf > 0 && vy > 0) ? (cf * cf) / (vf * vy) : 1.0;
  return r;
}

EstimationResult estimate(const ModelSpec& spec, const PanelDataset& data) {
  switch (spec.estimator) {
    case Estimator::Pols: return estimate_pols(spec, data);
    case Estimator::Fe: return estimate_fe(spec, data);
    case Estimator::Re: return estimate_re(spec, data);
    case Estimator::DiffGmm:
    case Estimator::SysGmm: {
      InstrumentPolicy policy;  // defaults; CLI callers pass their own
      return spec.estimator == Estimator::DiffGmm ? estimate_diff_gmm(spec, policy, data)
                                                  : estimate_sys_gmm(spec, policy, data);
    }
  }
  throw PanelError("unreachable estimator tag");
}

}  // namespace nim
