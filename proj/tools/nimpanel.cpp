#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nimpanel/report.hpp"

namespace {

using namespace nim;

struct CommonOpts {
  std::string data_path;
  std::string format = "text";
  std::string dependent = "NIM";
  std::vector<std::string> regressors;
  std::vector<std::string> exogenous;
  int dep_lags = 0;
  int max_ilag = 4;
  int min_ilag = 2;
  bool collapse = false;
  bool two_step = false;
  bool windmeijer = false;
  bool cluster = false;
  bool force = false;
  bool no_constant = false;
  std::uint64_t seed = 1;
};

void add_data_opts(CLI::App* cmd, CommonOpts& o, bool require_data = true) {
  auto* d = cmd->add_option("--data", o.data_path, "panel data file (CSV/TSV)");
  if (require_data) d->required();
  cmd->add_option("--format", o.format, "output format: text|csv|json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  cmd->add_option("--seed", o.seed, "RNG seed")->envname("PANEL_SEED");
}

void add_model_opts(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--dependent", o.dependent, "dependent variable");
  cmd->add_option("--regressors", o.regressors, "regressor list")->delimiter(',');
  cmd->add_option("--dep-lags", o.dep_lags, "dependent-variable lag count");
  cmd->add_option("--max-ilag", o.max_ilag, "instrument lag cap (0 = unlimited)");
  cmd->add_option("--min-ilag", o.min_ilag, "deepest usable instrument lag start");
  cmd->add_flag("--collapse", o.collapse, "collapse instrument blocks per lag depth");
  cmd->add_flag("--two-step", o.two_step, "two-step GMM weighting");
  cmd->add_flag("--windmeijer", o.windmeijer, "Windmeijer two-step SE correction");
  cmd->add_flag("--cluster", o.cluster, "cluster-robust SEs for static estimators");
  cmd->add_flag("--force", o.force, "allow lagged dependent variables in static estimators");
  cmd->add_flag("--no-constant", o.no_constant, "omit the constant term");
  cmd->add_option("--exogenous", o.exogenous,
                  "regressors that instrument themselves (GMM)")
      ->delimiter(',');
}

PanelDataset load_data(const CommonOpts& o) {
  std::ifstream f(o.data_path);
  if (!f) {
    std::cerr << "error: cannot open data file: " << o.data_path << "\n";
    std::exit(2);
  }
  return load_panel(f);
}

std::vector<std::string> default_regressors(const PanelDataset& data,
                                            const std::string& dependent) {
  std::vector<std::string> out;
  for (const auto& v : data.var_names())
    if (v != dependent) out.push_back(v);
  return out;
}

ModelSpec make_spec(const CommonOpts& o, const PanelDataset& data, Estimator est) {
  ModelSpec s;
  s.dependent = o.dependent;
  s.dep_lags = o.dep_lags;
  s.regressors = o.regressors.empty() ? default_regressors(data, o.dependent) : o.regressors;
  s.include_constant = !o.no_constant;
  s.estimator = est;
  s.weighting = o.two_step ? Weighting::TwoStep : Weighting::OneStep;
  s.cluster_robust = o.cluster;
  s.force_static_lags = o.force;
  s.windmeijer_correction = o.windmeijer;
  return s;
}

InstrumentPolicy make_policy(const CommonOpts& o) {
  InstrumentPolicy p;
  p.min_lag = o.min_ilag;
  p.max_lag = o.max_ilag;
  p.collapse = o.collapse;
  p.exogenous.insert(o.exogenous.begin(), o.exogenous.end());
  return p;
}

EstimationResult run_one(const CommonOpts& o, const PanelDataset& data, Estimator est,
                         int dep_lags_override = -1) {
  ModelSpec s = make_spec(o, data, est);
  if (dep_lags_override >= 0) s.dep_lags = dep_lags_override;
  if (est == Estimator::DiffGmm) return estimate_diff_gmm(s, make_policy(o), data);
  if (est == Estimator::SysGmm) return estimate_sys_gmm(s, make_policy(o), data);
  return estimate(s, data);
}

int cmd_describe(const CommonOpts& o, const std::vector<std::string>& vars) {
  PanelDataset data = load_data(o);
  auto v = vars.empty() ? data.var_names() : vars;
  std::cout << render_descriptives(data, v, parse_format(o.format));
  return 0;
}

int cmd_estimate(const CommonOpts& o, const std::vector<std::string>& estimators) {
  PanelDataset data = load_data(o);
  std::vector<LabelledResult> cols;
  auto list = estimators;
  if (list.size() == 1 && list[0] == "all") list = {"pols", "fe", "re", "diff-gmm"};
  for (const auto& e : list) {
    Estimator est = parse_estimator(e);
    const bool is_gmm = est == Estimator::DiffGmm || est == Estimator::SysGmm;
    // Static columns run without lag rows; GMM defaults to one lag if unset.
    int lags = is_gmm ? (o.dep_lags > 0 ? o.dep_lags : 1) : (o.force ? o.dep_lags : 0);
    std::string label = e;
    std::transform(label.begin(), label.end(), label.begin(), ::toupper);
    if (label == "DIFF-GMM" || label == "SYS-GMM") label = "GMM";
    cols.emplace_back(label, run_one(o, data, est, lags));
  }
  std::cout << render_estimates(cols, parse_format(o.format));
  return 0;
}

int cmd_ownership(const CommonOpts& o, const std::string& gmm_kind) {
  PanelDataset data = load_data(o);
  const Estimator est = parse_estimator(gmm_kind);
  std::vector<std::pair<std::string, Ownership>> groups = {{"FOREIGN", Ownership::Foreign},
                                                           {"STATE", Ownership::State},
                                                           {"PRIVATE", Ownership::Private}};
  std::vector<std::string> missing;
  for (const auto& [label, own] : groups) {
    bool found = false;
    for (int b = 0; b < data.n_banks(); ++b)
      if (data.ownership(b) == own) found = true;
    if (!found) missing.push_back(label);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    for (const auto& m : missing) os << ' ' << m;
    throw PanelError("ownership groups missing from data:" + os.str());
  }

  std::vector<LabelledResult> cols;
  const int lags = o.dep_lags > 0 ? o.dep_lags : 1;
  for (const auto& [label, own] : groups) {
    PanelDataset sub = data.select_ownership(own);
    cols.emplace_back(label, run_one(o, sub, est, lags));
  }
  cols.emplace_back("MAIN", run_one(o, data, est, lags));
  std::cout << render_estimates(cols, parse_format(o.format));

  ModelSpec chow_spec = make_spec(o, data, Estimator::Fe);
  chow_spec.dep_lags = 0;
  std::cout << render_chow(chow_test(chow_spec, data), parse_format(o.format));
  return 0;
}

int cmd_robustness(const CommonOpts& o, const std::string& scenario,
                   const std::vector<std::string>& drop_banks, const std::string& gmm_kind) {
  PanelDataset data = load_data(o);
  const Estimator est = parse_estimator(gmm_kind);
  const int lags = o.dep_lags > 0 ? o.dep_lags : 1;
  auto base_regs = o.regressors.empty() ? default_regressors(data, o.dependent) : o.regressors;

  auto require_column = [&](const std::string& c) {
    if (!data.has_var(c))
      throw PanelError("robustness scenario requires column '" + c + "' which is absent");
  };

  struct Scenario {
    std::string label;
    std::function<std::pair<PanelDataset, std::vector<std::string>>()> build;
  };
  std::vector<Scenario> scenarios = {
      {"SSMPL",
       [&] {
         if (drop_banks.empty())
           throw PanelError("scenario SSMPL needs --drop-banks with the exclusion list");
         return std::pair{data.drop_banks(drop_banks), base_regs};
       }},
      {"NOSTT",
       [&] {
         std::vector<int> keep;
         for (int b = 0; b < data.n_banks(); ++b)
           if (data.ownership(b) != Ownership::State) keep.push_back(b);
         return std::pair{data.select_banks(keep), base_regs};
       }},
      {"NOFRGN",
       [&] {
         std::vector<int> keep;
         for (int b = 0; b < data.n_banks(); ++b)
           if (data.ownership(b) != Ownership::Foreign) keep.push_back(b);
         return std::pair{data.select_banks(keep), base_regs};
       }},
      {"NEWSIZE",
       [&] {
         require_column("MS");
         auto regs = base_regs;
         for (auto& r : regs)
           if (r == "LOGTA") r = "MS";
         return std::pair{data, regs};
       }},
      {"CRDT",
       [&] {
         require_column("CRDT");
         auto regs = base_regs;
         regs.push_back("CRDT");
         return std::pair{data, regs};
       }},
      {"IIRATE",
       [&] {
         require_column("IIR");
         auto regs = base_regs;
         regs.push_back("IIR");
         return std::pair{data, regs};
       }},
  };

  std::vector<LabelledResult> cols;
  for (const auto& sc : scenarios) {
    if (!scenario.empty() && sc.label != scenario) continue;
    auto [subset, regs] = sc.build();
    CommonOpts so = o;
    so.regressors = regs;
    cols.emplace_back(sc.label, run_one(so, subset, est, lags));
  }
  if (cols.empty()) throw PanelError("unknown robustness scenario '" + scenario + "'");
  std::cout << render_estimates(cols, parse_format(o.format));
  return 0;
}

int cmd_test(const CommonOpts& o) {
  PanelDataset data = load_data(o);
  CommonOpts so = o;
  so.dep_lags = 0;
  auto pols = run_one(so, data, Estimator::Pols);
  auto fe = run_one(so, data, Estimator::Fe);
  auto re = run_one(so, data, Estimator::Re);
  std::vector<TestResult> battery;
  battery.push_back(bp_lm_test(pols, data));
  battery.push_back(hausman_test(fe, re));
  battery.push_back(wald_joint(pols, so.regressors.empty()
                                         ? default_regressors(data, so.dependent)
                                         : so.regressors));
  auto gmm = run_one(o, data, Estimator::DiffGmm, o.dep_lags > 0 ? o.dep_lags : 1);
  battery.push_back(sargan_test(gmm));
  battery.push_back(ar_test(gmm, 1));
  if (std::find_if(gmm.tests.begin(), gmm.tests.end(),
                   [](const TestResult& t) { return t.name == "AR(2)"; }) != gmm.tests.end())
    battery.push_back(ar_test(gmm, 2));
  std::cout << render_tests(battery, parse_format(o.format));
  ModelSpec chow_spec = make_spec(so, data, Estimator::Fe);
  std::cout << render_chow(chow_test(chow_spec, data), parse_format(o.format));
  return 0;
}

int cmd_simulate(const CommonOpts& o, const std::string& preset, int n_banks, int T, double psi1,
                 double sigma_mu, double sigma_eps, int reps, const std::string& estimator,
                 const std::string& emit_path) {
  DGPSpec dgp;
  if (preset == "turkey-like") {
    dgp = turkey_like_scenario(o.seed);
    if (n_banks > 0) dgp.n_banks = n_banks;
    if (T > 0) dgp.T = T;
  } else {
    dgp.n_banks = n_banks > 0 ? n_banks : 23;
    dgp.T = T > 0 ? T : 42;
    dgp.psi1 = psi1;
    dgp.sigma_mu = sigma_mu;
    dgp.sigma_eps = sigma_eps;
    dgp.seed = o.seed;
    dgp.regressor_names = {"X1", "X2"};
    dgp.delta = {1.0, -0.5};
    dgp.processes = {{RegressorProcess::Kind::IidNormal, 0.0, 1.0, 0.0},
                     {RegressorProcess::Kind::TimeConstant, 0.0, 1.0, 0.0}};
  }

  if (!emit_path.empty()) {
    PanelDataset panel = generate_panel(dgp);
    std::ofstream out(emit_path);
    if (!out) throw PanelError("cannot write panel to " + emit_path);
    write_panel(out, panel);
    std::cout << "wrote " << panel.n_rows() << " rows (" << panel.n_banks() << " banks x "
              << panel.T() << " periods) to " << emit_path << "\n";
    return 0;
  }

  ModelSpec model;
  model.dependent = "NIM";
  model.regressors = dgp.regressor_names;
  model.estimator = parse_estimator(estimator);
  const bool is_gmm =
      model.estimator == Estimator::DiffGmm || model.estimator == Estimator::SysGmm;
  model.dep_lags = is_gmm ? std::max(1, o.dep_lags) : (o.force ? o.dep_lags : 0);
  model.force_static_lags = o.force;
  model.weighting = o.two_step ? Weighting::TwoStep : Weighting::OneStep;
  model.include_constant = !is_gmm || model.estimator == Estimator::SysGmm;

  InstrumentPolicy policy = make_policy(o);
  auto mc = monte_carlo(dgp, model, policy, reps);
  std::cout << render_monte_carlo(mc, parse_format(o.format));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Panel-data toolkit: static and dynamic GMM estimators for "
               "net-interest-margin models, specification tests, Monte Carlo validation"};
  app.require_subcommand(1);
  app.set_config("--spec", "", "key-value config file; CLI flags take precedence");

  CommonOpts o;
  std::vector<std::string> vars, estimators, drop_banks;
  std::string group, scenario, gmm_kind = "diff-gmm", preset, emit_path;
  int n_banks = 0, T = 0, reps = 100;
  double psi1 = 0.5, sigma_mu = 1.0, sigma_eps = 1.0;
  std::string sim_estimator = "diff-gmm";

  auto* describe = app.add_subcommand("describe", "summary statistics and correlations");
  add_data_opts(describe, o);
  describe->add_option("--vars", vars, "variables to describe")->delimiter(',');

  auto* estimate = app.add_subcommand("estimate", "run one or more estimators");
  add_data_opts(estimate, o);
  add_model_opts(estimate, o);
  estimate->add_option("--estimator", estimators, "pols|fe|re|diff-gmm|sys-gmm|all")
      ->delimiter(',')
      ->required();

  auto* ownership = app.add_subcommand("ownership", "per-ownership-group estimates plus Chow");
  add_data_opts(ownership, o);
  add_model_opts(ownership, o);
  ownership->add_option("--gmm", gmm_kind, "diff-gmm|sys-gmm");

  auto* robustness = app.add_subcommand("robustness", "scenario comparison table");
  add_data_opts(robustness, o);
  add_model_opts(robustness, o);
  robustness->add_option("--scenario", scenario,
                         "single scenario: SSMPL|NOSTT|NOFRGN|NEWSIZE|CRDT|IIRATE");
  robustness->add_option("--drop-banks", drop_banks, "banks excluded under SSMPL")
      ->delimiter(',');
  robustness->add_option("--gmm", gmm_kind, "diff-gmm|sys-gmm");

  auto* testcmd = app.add_subcommand("test", "specification-test battery");
  add_data_opts(testcmd, o);
  add_model_opts(testcmd, o);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimator validation");
  add_data_opts(simulate, o, /*require_data=*/false);
  add_model_opts(simulate, o);
  simulate->add_option("--preset", preset, "named scenario: turkey-like");
  simulate->add_option("--n-banks", n_banks, "banks");
  simulate->add_option("--T", T, "periods");
  simulate->add_option("--psi1", psi1, "persistence");
  simulate->add_option("--sigma-mu", sigma_mu, "bank-effect sd");
  simulate->add_option("--sigma-eps", sigma_eps, "idiosyncratic sd");
  simulate->add_option("--reps", reps, "replications");
  simulate->add_option("--sim-estimator", sim_estimator, "estimator under study");
  simulate->add_option("--emit", emit_path, "write one generated panel to this path and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (describe->parsed()) return cmd_describe(o, vars);
    if (estimate->parsed()) return cmd_estimate(o, estimators);
    if (ownership->parsed()) return cmd_ownership(o, gmm_kind);
    if (robustness->parsed()) return cmd_robustness(o, scenario, drop_banks, gmm_kind);
    if (testcmd->parsed()) return cmd_test(o);
    if (simulate->parsed())
      return cmd_simulate(o, preset, n_banks, T, psi1, sigma_mu, sigma_eps, reps, sim_estimator,
                          emit_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
