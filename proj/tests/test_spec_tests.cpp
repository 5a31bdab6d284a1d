#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "nimpanel/dist.hpp"
#include "nimpanel/simulate.hpp"
#include "nimpanel/spec_tests.hpp"

using namespace nim;

namespace {

PanelDataset error_component_panel(int n, int T, double sigma_mu, std::uint64_t seed,
                                   double mu_loading = 0.0, int n_foreign = 0, int n_state = 0) {
  DGPSpec d;
  d.n_banks = n;
  d.T = T;
  d.psi1 = 0.0;
  d.xi = 1.0;
  d.regressor_names = {"X"};
  d.delta = {2.0};
  d.processes = {{RegressorProcess::Kind::IidNormal, 0.0, 1.0, mu_loading}};
  d.sigma_mu = sigma_mu;
  d.sigma_eps = 1.0;
  d.seed = seed;
  d.n_foreign = n_foreign;
  d.n_state = n_state;
  return generate_panel(d);
}

ModelSpec static_spec(Estimator e) {
  ModelSpec m;
  m.dependent = "NIM";
  m.regressors = {"X"};
  m.estimator = e;
  return m;
}

}  // namespace

TEST_CASE("BP-LM is exactly zero with p = 1 when bank sums vanish") {
  // The wiggle e = (0.1, -0.1, -0.1, 0.1) is orthogonal to the constant and
  // to x = (0, 1, 2, 3), so the pooled residuals equal e exactly and every
  // bank's residual sum is zero: the one-sided statistic clamps at 0.
  std::vector<std::string> units = {"A", "B"};
  std::vector<Ownership> own = {Ownership::Private, Ownership::Private};
  std::vector<int> bank = {0, 0, 1, 1}, period = {1, 2, 1, 2};
  std::vector<double> x = {0, 1, 2, 3};
  std::vector<double> y = {0 + 0.1, 1 - 0.1, 2 - 0.1, 3 + 0.1};
  PanelDataset d(units, own, bank, period, {"NIM", "X"}, {y, x});
  auto pols = estimate_pols(static_spec(Estimator::Pols), d);
  auto t = bp_lm_test(pols, d);
  CHECK(t.statistic == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(t.p_value == doctest::Approx(1.0));
  REQUIRE_FALSE(t.flags.empty());
  CHECK(t.flags.front() == "boundary-mixture-distribution");
}

TEST_CASE("BP-LM p-value uses the half-chi-square boundary mixture") {
  auto d = error_component_panel(40, 8, 1.0, 303);
  auto pols = estimate_pols(static_spec(Estimator::Pols), d);
  auto t = bp_lm_test(pols, d);
  CHECK(t.statistic > 0);
  CHECK(t.p_value == doctest::Approx(0.5 * chi2_sf(t.statistic, 1)));
}

TEST_CASE("BP-LM rejects overwhelmingly when bank effects dominate") {
  auto d = error_component_panel(50, 10, 1.0, 11);
  auto pols = estimate_pols(static_spec(Estimator::Pols), d);
  CHECK(bp_lm_test(pols, d).p_value < 1e-6);
}

TEST_CASE("Hausman matches hand arithmetic on a synthetic pair") {
  // q = (0.1, -0.2), V = diag(0.01, 0.04) -> q'V^-1 q = 1 + 1 = 2, df = 2.
  EstimationResult fe, re;
  fe.coef_names = {"A", "B", "CONSTANT"};
  re.coef_names = {"A", "B", "CONSTANT"};
  fe.coefficients = Vector(3);
  fe.coefficients << 1.1, 0.8, 5.0;
  re.coefficients = Vector(3);
  re.coefficients << 1.0, 1.0, 4.0;
  fe.covariance = Matrix::Zero(3, 3);
  re.covariance = Matrix::Zero(3, 3);
  fe.covariance.diagonal() << 0.02, 0.05, 1.0;
  re.covariance.diagonal() << 0.01, 0.01, 0.5;
  auto t = hausman_test(fe, re);
  CHECK(t.df == 2);  // the constant is excluded
  CHECK(t.statistic == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(t.p_value == doctest::Approx(chi2_sf(2.0, 2)));
  CHECK(t.flags.empty());
}

TEST_CASE("Hausman flags a non-positive-definite variance difference") {
  EstimationResult fe, re;
  fe.coef_names = re.coef_names = {"A", "B"};
  fe.coefficients = Vector(2);
  fe.coefficients << 1.0, 2.0;
  re.coefficients = Vector(2);
  re.coefficients << 0.9, 2.2;
  fe.covariance = Matrix::Zero(2, 2);
  re.covariance = Matrix::Zero(2, 2);
  fe.covariance.diagonal() << 0.01, 0.01;
  re.covariance.diagonal() << 0.05, 0.01;  // V_fe - V_re has a negative eigenvalue
  auto t = hausman_test(fe, re);
  REQUIRE_FALSE(t.flags.empty());
  CHECK(t.flags.front() == "(V_b - V_B is not positive definite)");
  CHECK(t.statistic >= 0.0);
}

TEST_CASE("Hausman on identical estimates is zero") {
  auto d = error_component_panel(30, 8, 1.0, 21);
  auto fe = estimate_fe(static_spec(Estimator::Fe), d);
  auto t = hausman_test(fe, fe);
  CHECK(t.statistic == doctest::Approx(0.0));
  CHECK(t.p_value == doctest::Approx(1.0));
}

TEST_CASE("Hausman df counts only shared non-constant coefficients") {
  EstimationResult fe, re;
  fe.coef_names = {"A", "CONSTANT"};
  re.coef_names = {"A", "B", "CONSTANT"};  // B absorbed by the within transform
  fe.coefficients = Vector(2);
  fe.coefficients << 1.1, 0.0;
  re.coefficients = Vector(3);
  re.coefficients << 1.0, 0.5, 0.0;
  fe.covariance = Matrix::Identity(2, 2) * 0.02;
  re.covariance = Matrix::Identity(3, 3) * 0.01;
  CHECK(hausman_test(fe, re).df == 1);
}

TEST_CASE("Hausman does not reject under exogeneity but rejects under correlation") {
  auto clean = error_component_panel(80, 10, 1.0, 5);
  auto fe = estimate_fe(static_spec(Estimator::Fe), clean);
  auto re = estimate_re(static_spec(Estimator::Re), clean);
  CHECK(hausman_test(fe, re).p_value > 0.01);

  auto dirty = error_component_panel(80, 10, 1.0, 5, /*mu_loading=*/0.8);
  auto fe2 = estimate_fe(static_spec(Estimator::Fe), dirty);
  auto re2 = estimate_re(static_spec(Estimator::Re), dirty);
  CHECK(hausman_test(fe2, re2).p_value < 0.01);
}

TEST_CASE("Wald on a single coefficient is the squared t ratio") {
  auto d = error_component_panel(30, 8, 0.5, 31);
  auto r = estimate_pols(static_spec(Estimator::Pols), d);
  auto t = wald_joint(r, {"X"});
  const double z = r.coef("X") / r.se("X");
  CHECK(t.df == 1);
  CHECK(t.statistic == doctest::Approx(z * z).epsilon(1e-10));
  auto joint = wald_joint(r, {"X", "CONSTANT"});
  CHECK(joint.df == 2);
  CHECK(joint.statistic >= t.statistic - 1e-9);
  CHECK_THROWS_AS(wald_joint(r, {}), PanelError);
}

TEST_CASE("Chow on identically distributed groups does not blow up") {
  auto d = error_component_panel(45, 10, 1.0, 41, 0.0, /*n_foreign=*/15, /*n_state=*/15);
  ModelSpec m = static_spec(Estimator::Fe);
  auto chow = chow_test(m, d);
  CHECK(chow.joint.df == 2);  // k=1 coefficient, G=3 groups -> k(G-1)
  CHECK(chow.joint.statistic >= 0);
  CHECK(chow.joint.p_value > 1e-4);  // common DGP: no rejection at extreme levels
  CHECK(chow.per_group.size() == 3);
  CHECK(chow.per_coefficient.size() == 1);
  CHECK(chow.per_group.count("foreign") == 1);
  CHECK(chow.per_coefficient.count("X") == 1);
  CHECK(chow.per_coefficient.at("X").df == 2);  // G-1 contrasts
}

TEST_CASE("Chow detects a genuinely different group slope") {
  // Rebuild the panel, then shift the foreign-group slope by hand.
  auto d = error_component_panel(45, 10, 1.0, 43, 0.0, 15, 15);
  auto x = d.column("X");
  auto y = d.column("NIM");
  const auto& rb = d.row_bank();
  for (size_t i = 0; i < y.size(); ++i)
    if (d.ownership(rb[i]) == Ownership::Foreign) y[i] += 3.0 * x[i];
  std::vector<Ownership> own2;
  for (int b = 0; b < d.n_banks(); ++b) own2.push_back(d.ownership(b));
  PanelDataset shifted(d.units(), own2, d.row_bank(), d.row_period(), {"NIM", "X"}, {y, x});
  auto chow = chow_test(static_spec(Estimator::Fe), shifted);
  CHECK(chow.joint.p_value < 1e-8);
  CHECK(chow.per_group.at("foreign").p_value < 1e-8);
  CHECK(chow.per_coefficient.at("X").p_value < 1e-8);
}

TEST_CASE("Chow rejects dynamic specs and single-group panels") {
  auto d = error_component_panel(10, 8, 1.0, 51);  // all private
  ModelSpec m = static_spec(Estimator::Fe);
  CHECK_THROWS_AS(chow_test(m, d), PanelError);
  auto two = error_component_panel(10, 8, 1.0, 51, 0.0, 5, 0);
  ModelSpec dyn = m;
  dyn.dep_lags = 1;
  CHECK_THROWS_AS(chow_test(dyn, two), PanelError);
}

TEST_CASE("AR diagnostics raise for missing or degenerate records") {
  auto d = error_component_panel(30, 8, 1.0, 61);
  auto pols = estimate_pols(static_spec(Estimator::Pols), d);
  CHECK_THROWS_AS(sargan_test(pols), PanelError);
  CHECK_THROWS_AS(ar_test(pols, 2), PanelError);
}
