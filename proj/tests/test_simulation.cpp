#include <doctest.h>

#include <cmath>
#include <random>

#include "nimpanel/simulate.hpp"

using namespace nim;

namespace {

DGPSpec small_dgp(std::uint64_t seed) {
  DGPSpec d;
  d.n_banks = 20;
  d.T = 12;
  d.psi1 = 0.5;
  d.xi = 1.0;
  d.regressor_names = {"X"};
  d.delta = {2.0};
  d.processes = {{RegressorProcess::Kind::IidNormal, 0.0, 1.0, 0.0}};
  d.sigma_mu = 0.5;
  d.sigma_eps = 1.0;
  d.seed = seed;
  return d;
}

}  // namespace

TEST_CASE("validation rejects inconsistent DGP parameters") {
  DGPSpec d = small_dgp(1);
  d.psi1 = 1.0;
  CHECK_THROWS_AS(d.validate(), PanelError);
  d = small_dgp(1);
  d.delta = {1.0, 2.0};
  CHECK_THROWS_AS(d.validate(), PanelError);
  d = small_dgp(1);
  d.sigma_eps = -1.0;
  CHECK_THROWS_AS(d.validate(), PanelError);
  d = small_dgp(1);
  d.n_foreign = 15;
  d.n_state = 10;
  CHECK_THROWS_AS(d.validate(), PanelError);
}

TEST_CASE("generation is deterministic in the seed") {
  auto a = generate_panel(small_dgp(9));
  auto b = generate_panel(small_dgp(9));
  auto c = generate_panel(small_dgp(10));
  const auto& ya = a.column("NIM");
  const auto& yb = b.column("NIM");
  const auto& yc = c.column("NIM");
  bool identical = true, different = false;
  for (size_t i = 0; i < ya.size(); ++i) {
    identical = identical && ya[i] == yb[i];
    different = different || ya[i] != yc[i];
  }
  CHECK(identical);
  CHECK(different);
}

TEST_CASE("per-bank streams make bank draws independent of panel width") {
  // Adding banks must not change the series of the banks already present.
  DGPSpec d = small_dgp(3);
  auto narrow = generate_panel(d);
  d.n_banks = 25;
  auto wide = generate_panel(d);
  for (int b = 0; b < 20; ++b)
    for (int t = 0; t < d.T; ++t)
      CHECK(narrow.value(b, t, 0) == wide.value(b, t, 0));
}

TEST_CASE("degenerate DGP reproduces the deterministic fixed point") {
  DGPSpec d = small_dgp(5);
  d.sigma_mu = 0;
  d.sigma_eps = 0;
  d.processes[0].sd = 0;
  d.processes[0].mean = 1.0;
  auto panel = generate_panel(d);
  // y converges to (xi + delta * mean_x) / (1 - psi1) = (1 + 2) / 0.5 = 6.
  for (int b = 0; b < d.n_banks; ++b)
    for (int t = 0; t < d.T; ++t) CHECK(panel.value(b, t, 0) == doctest::Approx(6.0));
}

TEST_CASE("stationary initialization keeps the sample mean near the fixed point") {
  DGPSpec d = small_dgp(6);
  d.n_banks = 200;
  d.T = 20;
  auto panel = generate_panel(d);
  // E[y] = (xi + delta * E[x]) / (1 - psi1) = 1 / 0.5 = 2.
  auto s = summarize(panel, "NIM");
  CHECK(std::abs(s.mean - 2.0) < 0.1);
  // First and last periods should have comparable dispersion (no startup drift).
  double ss_first = 0, ss_last = 0;
  for (int b = 0; b < d.n_banks; ++b) {
    ss_first += std::pow(panel.value(b, 0, 0) - s.mean, 2);
    ss_last += std::pow(panel.value(b, d.T - 1, 0) - s.mean, 2);
  }
  CHECK(ss_first / ss_last > 0.6);
  CHECK(ss_first / ss_last < 1.6);
}

TEST_CASE("shipped scenario matches the target shape and ownership split") {
  auto d = turkey_like_scenario(1);
  auto panel = generate_panel(d);
  CHECK(panel.n_rows() == 966);
  CHECK(panel.n_banks() == 23);
  CHECK(panel.T() == 42);
  int fr = 0, st = 0, pv = 0;
  for (int b = 0; b < panel.n_banks(); ++b) {
    switch (panel.ownership(b)) {
      case Ownership::Foreign: ++fr; break;
      case Ownership::State: ++st; break;
      case Ownership::Private: ++pv; break;
    }
  }
  CHECK(fr == 10);
  CHECK(st == 3);
  CHECK(pv == 10);
  CHECK(panel.var_names().size() == 13);  // NIM plus 12 regressors
  CHECK(d.truth("L.NIM") == 0.25);
  CHECK(d.truth("RA") == doctest::Approx(0.01));
  CHECK_THROWS_AS(d.truth("NOPE"), PanelError);
}

TEST_CASE("monte_carlo aggregates bias and rmse over replications") {
  DGPSpec d = small_dgp(11);
  d.psi1 = 0.0;
  ModelSpec m;
  m.dependent = "NIM";
  m.regressors = {"X"};
  m.estimator = Estimator::Pols;
  auto mc = monte_carlo(d, m, InstrumentPolicy{}, 25);
  CHECK(mc.reps == 25);
  CHECK(mc.failures == 0);
  REQUIRE(mc.coefficients.count("X") == 1);
  const auto& c = mc.coefficients.at("X");
  CHECK(c.truth == 2.0);
  CHECK(std::abs(c.bias) < 0.05);
  CHECK(c.rmse < 0.2);
  CHECK(c.rmse >= std::abs(c.bias));
  CHECK(c.mean == doctest::Approx(c.truth + c.bias));
  CHECK_THROWS_AS(monte_carlo(d, m, InstrumentPolicy{}, 0), PanelError);
}

TEST_CASE("monte_carlo on one replication equals a direct estimate") {
  DGPSpec d = small_dgp(13);
  ModelSpec m;
  m.dependent = "NIM";
  m.dep_lags = 1;
  m.regressors = {"X"};
  m.estimator = Estimator::DiffGmm;
  InstrumentPolicy pol;
  pol.max_lag = 3;
  auto mc = monte_carlo(d, m, pol, 1);
  auto direct = estimate_diff_gmm(m, pol, generate_panel(d));
  CHECK(mc.coefficients.at("L.NIM").mean == doctest::Approx(direct.coef("L.NIM")));
  CHECK(mc.coefficients.at("X").mean == doctest::Approx(direct.coef("X")));
}

TEST_CASE("margin identity holds exactly for random inputs") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    FisherInputs in{u(rng), u(rng), u(rng)};
    // Expanded form: (1+rl)(1+pi) - (1+rd)(1+pi).
    const double expanded = (1 + in.loan_rate) * (1 + in.inflation) -
                            (1 + in.deposit_rate) * (1 + in.inflation);
    CHECK(nominal_margin(in) == expanded);
  }
  CHECK_THROWS_AS(nominal_margin(FisherInputs{-1.5, 0.0, 0.0}), PanelError);
}
