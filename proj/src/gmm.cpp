#include "nimpanel/gmm.hpp"

#include <algorithm>
#include <cmath>

#include "nimpanel/dist.hpp"

namespace nim {

void InstrumentPolicy::validate() const {
  if (min_lag < 2) throw PanelError("instrument policy: min_lag must be >= 2");
  if (max_lag != 0 && max_lag < min_lag)
    throw PanelError("instrument policy: max_lag < min_lag");
  if (level_instrument_lag != 1)
    throw PanelError("instrument policy: level instruments are fixed at lag 1");
}

int InstrumentPolicy::lag_cap(int t) const {
  const int natural = t - 1;  // deepest level with t - k >= 1
  return max_lag == 0 ? natural : std::min(max_lag, natural);
}

long uncapped_instrument_count(int T) {
  return static_cast<long>(T - 1) * (T - 2) / 2;
}

namespace {

struct Layout {
  InstrumentSet iset;
  std::vector<int> diff_periods;   // 1-based t for each differenced row
  std::vector<int> level_periods;  // 1-based t for each level row (system only)
};

Layout plan_instruments(const ModelSpec& spec, const InstrumentPolicy& policy,
                        const PanelDataset& data, bool system) {
  policy.validate();
  if (!data.balanced()) throw PanelError("GMM requires a balanced panel");
  const int T = data.T();
  const int p = spec.dep_lags;
  if (T < 3) throw PanelError("difference GMM needs three periods");
  if (T < p + 2) throw PanelError("T too short for the requested dependent-variable lags");

  Layout L;
  for (int t = p + 2; t <= T; ++t) L.diff_periods.push_back(t);

  std::vector<std::string> gmm_vars = {spec.dependent};
  std::vector<std::string> exo_vars;
  for (const auto& r : spec.regressors) {
    if (policy.exogenous.count(r))
      exo_vars.push_back(r);
    else
      gmm_vars.push_back(r);
  }

  auto& origins = L.iset.origins;
  for (const auto& var : gmm_vars) {
    if (policy.collapse) {
      const int cap = policy.max_lag == 0 ? T - 1 : policy.max_lag;
      for (int k = policy.min_lag; k <= cap; ++k)
        origins.push_back({var, k, 0, false});
    } else {
      for (int t : L.diff_periods)
        for (int k = policy.lag_cap(t); k >= policy.min_lag; --k)
          origins.push_back({var, k, t, false});
    }
  }
  for (const auto& var : exo_vars) origins.push_back({var, 0, 0, false});
  L.iset.diff_columns = static_cast<int>(origins.size());

  if (system) {
    for (int t = std::max(3, p + 1); t <= T; ++t) L.level_periods.push_back(t);
    if (spec.include_constant) origins.push_back({"CONSTANT", 0, 0, true});
    for (const auto& var : gmm_vars) {
      if (policy.collapse) {
        origins.push_back({var, 1, 0, true});
      } else {
        for (int t : L.level_periods) origins.push_back({var, 1, t, true});
      }
    }
    for (const auto& var : exo_vars) origins.push_back({var, 0, 0, true});
    L.iset.level_columns = static_cast<int>(origins.size()) - L.iset.diff_columns;
  }
  return L;
}

struct GmmSystem {
  std::vector<Matrix> X, Z;
  std::vector<Vector> y;
  Matrix H;                       // one-step kernel, shared across banks
  Layout layout;
  std::vector<std::string> coef_names;
  int n_diff_rows = 0;            // per bank
};

GmmSystem assemble(const ModelSpec& spec, const InstrumentPolicy& policy,
                   const PanelDataset& data, bool system) {
  spec.validate(data);
  GmmSystem g;
  g.layout = plan_instruments(spec, policy, data, system);

  const int n = data.n_banks();
  const int p = spec.dep_lags;
  const int dep = data.var_index(spec.dependent);
  std::vector<int> reg_idx;
  for (const auto& r : spec.regressors) reg_idx.push_back(data.var_index(r));

  const int Rd = static_cast<int>(g.layout.diff_periods.size());
  const int Rl = static_cast<int>(g.layout.level_periods.size());
  const int R = Rd + Rl;
  g.n_diff_rows = Rd;
  const bool with_const = system && spec.include_constant;
  const int k = p + static_cast<int>(reg_idx.size()) + (with_const ? 1 : 0);
  const int m = g.layout.iset.total_columns();
  if (m < k)
    throw PanelError("under-identified: " + std::to_string(m) + " instruments for " +
                     std::to_string(k) + " parameters");

  // value(b, t, v) with 1-based t.
  auto lvl = [&](int b, int t, int v) { return data.value(b, t - 1, v); };
  auto dif = [&](int b, int t, int v) { return lvl(b, t, v) - lvl(b, t - 1, v); };

  for (int b = 0; b < n; ++b) {
    Matrix X = Matrix::Zero(R, k);
    Matrix Z = Matrix::Zero(R, m);
    Vector y(R);
    for (int r = 0; r < Rd; ++r) {
      const int t = g.layout.diff_periods[r];
      y(r) = dif(b, t, dep);
      int c = 0;
      for (int l = 1; l <= p; ++l) X(r, c++) = dif(b, t - l, dep);
      for (int v : reg_idx) X(r, c++) = dif(b, t, v);
    }
    for (int r = 0; r < Rl; ++r) {
      const int t = g.layout.level_periods[r];
      y(Rd + r) = lvl(b, t, dep);
      int c = 0;
      for (int l = 1; l <= p; ++l) X(Rd + r, c++) = lvl(b, t - l, dep);
      for (int v : reg_idx) X(Rd + r, c++) = lvl(b, t, v);
      if (with_const) X(Rd + r, k - 1) = 1.0;
    }
    for (int col = 0; col < m; ++col) {
      const auto& o = g.layout.iset.origins[col];
      const int v = o.variable == "CONSTANT" ? -1 : data.var_index(o.variable);
      if (!o.level_equation) {
        if (o.lag == 0) {  // exogenous own-instrument in differences
          for (int r = 0; r < Rd; ++r) Z(r, col) = dif(b, g.layout.diff_periods[r], v);
        } else if (o.period == 0) {  // collapsed lag column
          for (int r = 0; r < Rd; ++r) {
            const int t = g.layout.diff_periods[r];
            if (t - o.lag >= 1) Z(r, col) = lvl(b, t - o.lag, v);
          }
        } else {
          const int r = o.period - g.layout.diff_periods.front();
          Z(r, col) = lvl(b, o.period - o.lag, v);
        }
      } else {
        if (v < 0) {  // constant instrument for the level equations
          for (int r = 0; r < Rl; ++r) Z(Rd + r, col) = 1.0;
        } else if (o.lag == 0) {  // exogenous own-instrument in levels
          for (int r = 0; r < Rl; ++r) Z(Rd + r, col) = lvl(b, g.layout.level_periods[r], v);
        } else if (o.period == 0) {  // collapsed lag-1 difference column
          for (int r = 0; r < Rl; ++r) Z(Rd + r, col) = dif(b, g.layout.level_periods[r] - 1, v);
        } else {
          const int r = o.period - g.layout.level_periods.front();
          Z(Rd + r, col) = dif(b, o.period - 1, v);
        }
      }
    }
    g.X.push_back(std::move(X));
    g.Z.push_back(std::move(Z));
    g.y.push_back(std::move(y));
  }

  for (int l = 1; l <= p; ++l)
    g.coef_names.push_back((l == 1 ? "L." : "L" + std::to_string(l) + ".") + spec.dependent);
  for (const auto& r : spec.regressors) g.coef_names.push_back(r);
  if (with_const) g.coef_names.push_back("CONSTANT");

  // One-step kernel: first-difference covariance block, identity for levels.
  g.H = Matrix::Zero(R, R);
  for (int r = 0; r < Rd; ++r) {
    g.H(r, r) = 2.0;
    if (r + 1 < Rd) {
      g.H(r, r + 1) = -1.0;
      g.H(r + 1, r) = -1.0;
    }
  }
  for (int r = Rd; r < R; ++r) g.H(r, r) = 1.0;
  return g;
}

struct GmmFit {
  Vector beta;
  Matrix covariance;
  std::vector<Vector> resid;  // per bank, full row span
  Matrix weight;              // weight matrix used at the final step
  std::vector<std::string> flags;
};

GmmFit solve_gmm(const GmmSystem& g, Weighting weighting, bool windmeijer) {
  const int n = static_cast<int>(g.X.size());
  const int k = static_cast<int>(g.X[0].cols());
  const int m = static_cast<int>(g.Z[0].cols());

  Matrix S_zx = Matrix::Zero(m, k);
  Vector S_zy = Vector::Zero(m);
  Matrix S_zhz = Matrix::Zero(m, m);
  for (int b = 0; b < n; ++b) {
    S_zx += g.Z[b].transpose() * g.X[b];
    S_zy += g.Z[b].transpose() * g.y[b];
    S_zhz += g.Z[b].transpose() * g.H * g.Z[b];
  }

  GmmFit fit;
  int rank = 0;
  Matrix A1 = generalized_inverse(S_zhz, &rank);
  if (rank < m) fit.flags.push_back("one-step weight matrix singular; generalized inverse used");

  auto point_estimate = [&](const Matrix& A) {
    Matrix M = S_zx.transpose() * A * S_zx;
    int mr = 0;
    Matrix Minv = generalized_inverse(M, &mr);
    if (mr < k) throw SingularDesignError("GMM: singular moment cross-product");
    Vector beta = Minv * (S_zx.transpose() * A * S_zy);
    return std::pair{beta, Minv};
  };

  auto residuals_of = [&](const Vector& beta) {
    std::vector<Vector> e;
    for (int b = 0; b < n; ++b) e.push_back(g.y[b] - g.X[b] * beta);
    return e;
  };

  auto [beta1, M1inv] = point_estimate(A1);
  auto e1 = residuals_of(beta1);

  if (weighting == Weighting::OneStep) {
    fit.beta = beta1;
    fit.resid = std::move(e1);
    fit.weight = A1;
    // Robust one-step sandwich.
    Matrix meat = Matrix::Zero(m, m);
    for (int b = 0; b < n; ++b) {
      Vector ze = g.Z[b].transpose() * fit.resid[b];
      meat += ze * ze.transpose();
    }
    Matrix G = M1inv * S_zx.transpose() * A1;
    fit.covariance = G * meat * G.transpose();
    return fit;
  }

  // Two-step: reweight with the residual-based moment covariance.
  bool degenerate = false;
  Matrix W2 = two_step_weight(g.Z, e1, &degenerate);
  if (degenerate) fit.flags.push_back("two-step weight degenerate; generalized inverse used");
  auto [beta2, M2inv] = point_estimate(W2);
  fit.beta = beta2;
  fit.resid = residuals_of(beta2);
  fit.weight = W2;
  fit.covariance = M2inv;

  if (windmeijer) {
    // Finite-sample correction for the two-step covariance.
    // D_j = -M2inv * S_zx' W2 (dOmega/dbeta_j) W2 g2, Omega = sum Z'e e'Z.
    Vector g2 = Vector::Zero(m);
    for (int b = 0; b < n; ++b) g2 += g.Z[b].transpose() * fit.resid[b];
    Matrix D(k, k);
    for (int j = 0; j < k; ++j) {
      Matrix dOmega = Matrix::Zero(m, m);
      for (int b = 0; b < n; ++b) {
        Vector zx = g.Z[b].transpose() * g.X[b].col(j);
        Vector ze = g.Z[b].transpose() * e1[b];
        dOmega -= zx * ze.transpose() + ze * zx.transpose();
      }
      D.col(j) = -M2inv * S_zx.transpose() * W2 * dOmega * W2 * g2;
    }
    // Robust variance of the one-step estimator under the e1 covariance.
    Matrix meat = Matrix::Zero(m, m);
    for (int b = 0; b < n; ++b) {
      Vector ze = g.Z[b].transpose() * e1[b];
      meat += ze * ze.transpose();
    }
    Matrix G1 = M1inv * S_zx.transpose() * A1;
    Matrix V1r = G1 * meat * G1.transpose();
    fit.covariance = M2inv + D * M2inv + M2inv * D.transpose() + D * V1r * D.transpose();
    fit.flags.push_back("Windmeijer-corrected two-step standard errors");
  }
  return fit;
}

TestResult sargan_of(const GmmSystem& g, const GmmFit& fit, int k) {
  const int n = static_cast<int>(g.Z.size());
  const int m = static_cast<int>(g.Z[0].cols());
  TestResult t;
  t.name = "Sargan";
  t.null_description = "overidentifying restrictions are valid";
  t.df = m - k;
  if (t.df <= 0) {
    t.applicable = false;
    t.statistic = 0;
    t.p_value = 1.0;
    t.flags.push_back("exactly identified, not applicable");
    return t;
  }
  // Two-step weighting convention regardless of the point-estimate step.
  Vector gbar = Vector::Zero(m);
  for (int b = 0; b < n; ++b) gbar += g.Z[b].transpose() * fit.resid[b];
  bool degenerate = false;
  Matrix W = two_step_weight(g.Z, fit.resid, &degenerate);
  if (degenerate) t.flags.push_back("degenerate moment covariance");
  t.statistic = std::max(0.0, quadratic_form(gbar, W));
  t.p_value = chi2_sf(t.statistic, t.df);
  return t;
}

TestResult ar_of(const GmmSystem& g, const GmmFit& fit, int order) {
  const int n = static_cast<int>(g.Z.size());
  const int Rd = g.n_diff_rows;
  if (order < 1) throw PanelError("AR test: order must be >= 1");
  TestResult t;
  t.name = "AR(" + std::to_string(order) + ")";
  t.null_description = "no order-" + std::to_string(order) +
                       " serial correlation in differenced residuals";
  if (Rd <= order) throw PanelError("AR test: too few differenced periods for order " +
                                    std::to_string(order));

  const int k = static_cast<int>(g.X[0].cols());
  const int m = static_cast<int>(g.Z[0].cols());
  double b_num = 0, v0 = 0;
  Vector qx = Vector::Zero(k);
  Vector zew = Vector::Zero(m);
  double resid_ss = 0;
  for (int b = 0; b < n; ++b) {
    Vector w = Vector::Zero(g.X[b].rows());
    for (int r = order; r < Rd; ++r) w(r) = fit.resid[b](r - order);
    const double we = w.dot(fit.resid[b]);
    b_num += we;
    v0 += we * we;
    qx += g.X[b].transpose() * w;
    zew += g.Z[b].transpose() * fit.resid[b] * we;
    resid_ss += fit.resid[b].head(Rd).squaredNorm();
  }
  if (resid_ss < 1e-300 || v0 < 1e-300)
    throw PanelError("AR test: degenerate residuals (no variance)");

  Matrix S_zx = Matrix::Zero(m, k);
  for (int b = 0; b < n; ++b) S_zx += g.Z[b].transpose() * g.X[b];
  Matrix M = S_zx.transpose() * fit.weight * S_zx;
  Matrix Minv = generalized_inverse(M);
  double v = v0 - 2.0 * qx.dot(Minv * S_zx.transpose() * fit.weight * zew) +
             qx.dot(fit.covariance * qx);
  if (v <= 0) {
    v = v0;  // correction overshoots in tiny samples; fall back to the raw variance
    t.flags.push_back("variance correction truncated");
  }
  t.statistic = b_num / std::sqrt(v);
  t.df = 0;
  t.p_value = normal_two_sided_p(t.statistic);
  return t;
}

EstimationResult run_gmm(const ModelSpec& spec, const InstrumentPolicy& policy,
                         const PanelDataset& data, bool system) {
  GmmSystem g = assemble(spec, policy, data, system);
  GmmFit fit = solve_gmm(g, spec.weighting, spec.windmeijer_correction);

  EstimationResult r;
  r.estimator = system ? Estimator::SysGmm : Estimator::DiffGmm;
  r.coef_names = g.coef_names;
  r.coefficients = fit.beta;
  r.covariance = fit.covariance;
  r.standard_errors = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.flags = fit.flags;
  r.instrument_count = g.layout.iset.total_columns();
  r.n_banks = data.n_banks();

  // Differenced-sample residuals with (bank, period) alignment.
  const int Rd = g.n_diff_rows;
  const int n = data.n_banks();
  r.residuals.resize(static_cast<long>(n) * Rd);
  for (int b = 0; b < n; ++b) {
    for (int i = 0; i < Rd; ++i) {
      r.resid_bank.push_back(b);
      r.resid_period.push_back(data.periods()[g.layout.diff_periods[i] - 1]);
      r.residuals(static_cast<long>(b) * Rd + i) = fit.resid[b](i);
    }
  }
  r.n_obs = static_cast<long>(n) * (Rd + static_cast<int>(g.layout.level_periods.size()));

  // Squared correlation between fitted and actual differences (GMM has no
  // canonical R-squared; this is the labelled convention).
  {
    double sy = 0, sf = 0, syy = 0, sff = 0, syf = 0;
    const long nd = static_cast<long>(n) * Rd;
    for (int b = 0; b < n; ++b) {
      Vector f = g.X[b].topRows(Rd) * fit.beta;
      for (int i = 0; i < Rd; ++i) {
        sy += g.y[b](i);
        sf += f(i);
        syy += g.y[b](i) * g.y[b](i);
        sff += f(i) * f(i);
        syf += g.y[b](i) * f(i);
      }
    }
    const double vy = syy - sy * sy / nd, vf = sff - sf * sf / nd, cyf = syf - sy * sf / nd;
    r.r_squared = (vy > 0 && vf > 0) ? cyf * cyf / (vy * vf) : 0.0;
  }

  const int k = static_cast<int>(fit.beta.size());
  r.tests.push_back(sargan_of(g, fit, k));
  auto try_ar = [&](int order) {
    try {
      r.tests.push_back(ar_of(g, fit, order));
    } catch (const PanelError& e) {
      TestResult t;
      t.name = "AR(" + std::to_string(order) + ")";
      t.applicable = false;
      t.flags.push_back(e.what());
      r.tests.push_back(t);
    }
  };
  if (Rd > 1) try_ar(1);
  if (Rd > 2) try_ar(2);
  return r;
}

}  // namespace

InstrumentSet build_instruments(const ModelSpec& spec, const InstrumentPolicy& policy,
                                const PanelDataset& data) {
  const bool system = spec.estimator == Estimator::SysGmm;
  return plan_instruments(spec, policy, data, system).iset;
}

Matrix two_step_weight(const std::vector<Matrix>& Z_per_bank,
                       const std::vector<Vector>& resid_per_bank, bool* degenerate) {
  if (Z_per_bank.empty() || Z_per_bank.size() != resid_per_bank.size())
    throw PanelError("two_step_weight: mismatched per-bank inputs");
  const int m = static_cast<int>(Z_per_bank[0].cols());
  Matrix omega = Matrix::Zero(m, m);
  for (size_t b = 0; b < Z_per_bank.size(); ++b) {
    Vector ze = Z_per_bank[b].transpose() * resid_per_bank[b];
    omega += ze * ze.transpose();
  }
  int rank = 0;
  Matrix W = generalized_inverse(omega, &rank);
  if (degenerate) *degenerate = rank < m;
  return W;
}

EstimationResult estimate_diff_gmm(const ModelSpec& spec, const InstrumentPolicy& policy,
                                   const PanelDataset& data) {
  return run_gmm(spec, policy, data, false);
}

EstimationResult estimate_sys_gmm(const ModelSpec& spec, const InstrumentPolicy& policy,
                                  const PanelDataset& data) {
  return run_gmm(spec, policy, data, true);
}

}  // namespace nim
