#include "nimpanel/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "nimpanel/dist.hpp"

namespace nim {

using nlohmann::json;

OutputFormat parse_format(const std::string& s) {
  if (s == "text") return OutputFormat::Text;
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw PanelError("unknown output format '" + s + "'");
}

std::string stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.10) return "*";
  return "";
}

namespace {

std::string sig4(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

std::string full(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double coef_p(const EstimationResult& r, int i) {
  const double se = r.standard_errors(i);
  if (se <= 0) return 1.0;
  return normal_two_sided_p(r.coefficients(i) / se);
}

// Union of coefficient names across columns, CONSTANT forced last.
std::vector<std::string> coef_union(const std::vector<LabelledResult>& results) {
  std::vector<std::string> names;
  for (const auto& [label, r] : results)
    for (const auto& n : r.coef_names)
      if (n != "CONSTANT" && std::find(names.begin(), names.end(), n) == names.end())
        names.push_back(n);
  for (const auto& [label, r] : results)
    if (std::find(r.coef_names.begin(), r.coef_names.end(), "CONSTANT") != r.coef_names.end()) {
      names.push_back("CONSTANT");
      break;
    }
  return names;
}

const TestResult* maybe_test(const EstimationResult& r, const std::string& name) {
  for (const auto& t : r.tests)
    if (t.name == name) return &t;
  return nullptr;
}

json result_json(const EstimationResult& r) {
  json j;
  j["estimator"] = to_string(r.estimator);
  j["coefficients"] = json::object();
  for (size_t i = 0; i < r.coef_names.size(); ++i) {
    j["coefficients"][r.coef_names[i]] = {{"estimate", r.coefficients(i)},
                                          {"se", r.standard_errors(i)},
                                          {"p_value", coef_p(r, (int)i)}};
  }
  j["coef_order"] = r.coef_names;
  j["covariance"] = json::array();
  for (int a = 0; a < r.covariance.rows(); ++a) {
    json row = json::array();
    for (int b = 0; b < r.covariance.cols(); ++b) row.push_back(r.covariance(a, b));
    j["covariance"].push_back(row);
  }
  j["residuals"] = json::array();
  for (long i = 0; i < r.residuals.size(); ++i)
    j["residuals"].push_back(
        {{"bank", r.resid_bank[i]}, {"period", r.resid_period[i]}, {"value", r.residuals(i)}});
  j["r_squared"] = r.r_squared;
  j["n_obs"] = r.n_obs;
  j["n_banks"] = r.n_banks;
  j["instrument_count"] = r.instrument_count;
  j["sigma2"] = r.sigma2;
  j["flags"] = r.flags;
  if (r.estimator == Estimator::Re) {
    j["sigma2_mu"] = r.sigma2_mu;
    j["sigma2_eps"] = r.sigma2_eps;
    j["theta"] = r.theta;
  }
  j["tests"] = json::array();
  for (const auto& t : r.tests) {
    j["tests"].push_back({{"name", t.name},
                          {"statistic", t.statistic},
                          {"df", t.df},
                          {"df2", t.df2},
                          {"p_value", t.p_value},
                          {"null", t.null_description},
                          {"applicable", t.applicable},
                          {"flags", t.flags}});
  }
  return j;
}

json test_json(const TestResult& t) {
  return {{"name", t.name},        {"statistic", t.statistic}, {"df", t.df},
          {"df2", t.df2},          {"p_value", t.p_value},     {"null", t.null_description},
          {"applicable", t.applicable}, {"flags", t.flags}};
}

}  // namespace

std::string result_to_json(const EstimationResult& r) { return result_json(r).dump(2); }

EstimationResult result_from_json(const std::string& text) {
  json j = json::parse(text);
  EstimationResult r;
  r.estimator = parse_estimator(j.at("estimator").get<std::string>());
  for (const auto& name : j.at("coef_order")) r.coef_names.push_back(name.get<std::string>());
  const int k = static_cast<int>(r.coef_names.size());
  r.coefficients.resize(k);
  r.standard_errors.resize(k);
  for (int i = 0; i < k; ++i) {
    const auto& c = j.at("coefficients").at(r.coef_names[i]);
    r.coefficients(i) = c.at("estimate").get<double>();
    r.standard_errors(i) = c.at("se").get<double>();
  }
  r.covariance.resize(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) r.covariance(a, b) = j.at("covariance")[a][b].get<double>();
  const auto& res = j.at("residuals");
  r.residuals.resize(res.size());
  for (size_t i = 0; i < res.size(); ++i) {
    r.resid_bank.push_back(res[i].at("bank").get<int>());
    r.resid_period.push_back(res[i].at("period").get<int>());
    r.residuals(i) = res[i].at("value").get<double>();
  }
  r.r_squared = j.at("r_squared").get<double>();
  r.n_obs = j.at("n_obs").get<long>();
  r.n_banks = j.at("n_banks").get<int>();
  r.instrument_count = j.at("instrument_count").get<int>();
  r.sigma2 = j.value("sigma2", 0.0);
  for (const auto& f : j.at("flags")) r.flags.push_back(f.get<std::string>());
  if (j.contains("sigma2_mu")) {
    r.sigma2_mu = j["sigma2_mu"].get<double>();
    r.sigma2_eps = j["sigma2_eps"].get<double>();
    r.theta = j["theta"].get<double>();
  }
  for (const auto& t : j.at("tests")) {
    TestResult tr;
    tr.name = t.at("name").get<std::string>();
    tr.statistic = t.at("statistic").get<double>();
    tr.df = t.at("df").get<int>();
    tr.df2 = t.at("df2").get<int>();
    tr.p_value = t.at("p_value").get<double>();
    tr.null_description = t.at("null").get<std::string>();
    tr.applicable = t.at("applicable").get<bool>();
    for (const auto& f : t.at("flags")) tr.flags.push_back(f.get<std::string>());
    r.tests.push_back(tr);
  }
  return r;
}

std::string render_estimates(const std::vector<LabelledResult>& results, OutputFormat fmt) {
  if (results.empty()) throw PanelError("render_estimates: nothing to render");
  if (fmt == OutputFormat::Json) {
    json j;
    j["columns"] = json::array();
    for (const auto& [label, r] : results) {
      json col = result_json(r);
      col["label"] = label;
      j["columns"].push_back(col);
    }
    return j.dump(2) + "\n";
  }

  const auto names = coef_union(results);
  if (fmt == OutputFormat::Csv) {
    std::ostringstream os;
    os << "coefficient,column,estimate,se,p_value\n";
    for (const auto& n : names)
      for (const auto& [label, r] : results) {
        auto it = std::find(r.coef_names.begin(), r.coef_names.end(), n);
        if (it == r.coef_names.end()) continue;
        const int i = static_cast<int>(it - r.coef_names.begin());
        os << n << ',' << label << ',' << full(r.coefficients(i)) << ','
           << full(r.standard_errors(i)) << ',' << full(coef_p(r, i)) << '\n';
      }
    return os.str();
  }

  // Text layout in the style of the regression tables.
  const size_t width = 14;
  std::ostringstream os;
  os << std::left << std::setw(12) << "VARIABLES";
  for (const auto& [label, r] : results) os << std::right << std::setw(width) << label;
  os << '\n';
  for (const auto& n : names) {
    os << std::left << std::setw(12) << n;
    for (const auto& [label, r] : results) {
      auto it = std::find(r.coef_names.begin(), r.coef_names.end(), n);
      if (it == r.coef_names.end()) {
        os << std::right << std::setw(width) << "-";
      } else {
        const int i = static_cast<int>(it - r.coef_names.begin());
        os << std::right << std::setw(width)
           << sig4(r.coefficients(i)) + stars(coef_p(r, i));
      }
    }
    os << '\n' << std::left << std::setw(12) << "";
    for (const auto& [label, r] : results) {
      auto it = std::find(r.coef_names.begin(), r.coef_names.end(), n);
      os << std::right << std::setw(width)
         << (it == r.coef_names.end()
                 ? ""
                 : "(" + sig4(r.standard_errors((int)(it - r.coef_names.begin()))) + ")");
    }
    os << '\n';
  }

  auto stat_row = [&](const std::string& label, auto getter) {
    os << std::left << std::setw(24) << label;
    for (const auto& [l, r] : results) os << std::right << std::setw(width) << getter(r);
    os << '\n';
  };
  os << std::string(12 + width * results.size(), '-') << '\n';
  stat_row("Observations", [](const EstimationResult& r) { return std::to_string(r.n_obs); });
  stat_row("R-squared", [](const EstimationResult& r) { return sig4(r.r_squared); });
  stat_row("Sargan test (P value)", [](const EstimationResult& r) {
    const auto* t = maybe_test(r, "Sargan");
    return !t ? std::string("-") : (t->applicable ? sig4(t->p_value) : "exactly identified");
  });
  stat_row("A-Bond Test AR(1)", [](const EstimationResult& r) {
    const auto* t = maybe_test(r, "AR(1)");
    return t ? sig4(t->p_value) : std::string("-");
  });
  stat_row("A-Bond Test AR(2)", [](const EstimationResult& r) {
    const auto* t = maybe_test(r, "AR(2)");
    return t ? sig4(t->p_value) : std::string("-");
  });
  stat_row("Number of Banks",
           [](const EstimationResult& r) { return std::to_string(r.n_banks); });
  stat_row("Instruments", [](const EstimationResult& r) {
    return r.instrument_count > 0 ? std::to_string(r.instrument_count) : std::string("-");
  });
  for (const auto& [label, r] : results)
    for (const auto& f : r.flags) os << "note [" << label << "]: " << f << '\n';
  return os.str();
}

std::string render_descriptives(const PanelDataset& data, const std::vector<std::string>& vars,
                                OutputFormat fmt) {
  std::vector<SummaryDecomposition> sums;
  for (const auto& v : vars) sums.push_back(summarize(data, v));
  std::vector<std::vector<double>> corr = {{1.0}};
  if (vars.size() > 1) corr = correlation_matrix(data, vars);

  if (fmt == OutputFormat::Json) {
    json j;
    j["summary"] = json::object();
    for (size_t i = 0; i < vars.size(); ++i) {
      const auto& s = sums[i];
      j["summary"][vars[i]] = {
          {"mean", s.mean},
          {"overall", {{"sd", s.sd_overall}, {"min", s.min_overall}, {"max", s.max_overall}}},
          {"between", {{"sd", s.sd_between}, {"min", s.min_between}, {"max", s.max_between}}},
          {"within", {{"sd", s.sd_within}, {"min", s.min_within}, {"max", s.max_within}}},
          {"N", s.n_obs},
          {"n", s.n_banks},
          {"T", s.periods_per_bank}};
    }
    j["correlation"] = json::object();
    for (size_t a = 0; a < vars.size(); ++a)
      for (size_t b = 0; b <= a; ++b) j["correlation"][vars[a] + "," + vars[b]] = corr[a][b];
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  if (fmt == OutputFormat::Csv) {
    os << "variable,layer,mean,sd,min,max,count\n";
    for (size_t i = 0; i < vars.size(); ++i) {
      const auto& s = sums[i];
      os << vars[i] << ",Overall," << full(s.mean) << ',' << full(s.sd_overall) << ','
         << full(s.min_overall) << ',' << full(s.max_overall) << ',' << s.n_obs << '\n';
      os << vars[i] << ",Between,," << full(s.sd_between) << ',' << full(s.min_between) << ','
         << full(s.max_between) << ',' << s.n_banks << '\n';
      os << vars[i] << ",Within,," << full(s.sd_within) << ',' << full(s.min_within) << ','
         << full(s.max_within) << ',' << s.periods_per_bank << '\n';
    }
    os << "corr_a,corr_b,r\n";
    for (size_t a = 0; a < vars.size(); ++a)
      for (size_t b = 0; b <= a; ++b)
        os << vars[a] << ',' << vars[b] << ',' << full(corr[a][b]) << '\n';
    return os.str();
  }

  os << "Summary Statistics\n";
  os << std::left << std::setw(8) << "Variable" << std::setw(9) << "" << std::right
     << std::setw(12) << "Mean" << std::setw(12) << "Std. Dev." << std::setw(12) << "Min"
     << std::setw(12) << "Max" << "  Observations\n";
  for (size_t i = 0; i < vars.size(); ++i) {
    const auto& s = sums[i];
    os << std::left << std::setw(8) << vars[i] << std::setw(9) << "Overall" << std::right
       << std::setw(12) << sig4(s.mean) << std::setw(12) << sig4(s.sd_overall) << std::setw(12)
       << sig4(s.min_overall) << std::setw(12) << sig4(s.max_overall) << "  N = " << s.n_obs
       << '\n';
    os << std::left << std::setw(8) << "" << std::setw(9) << "Between" << std::right
       << std::setw(12) << "" << std::setw(12) << sig4(s.sd_between) << std::setw(12)
       << sig4(s.min_between) << std::setw(12) << sig4(s.max_between) << "  n = " << s.n_banks
       << '\n';
    os << std::left << std::setw(8) << "" << std::setw(9) << "Within" << std::right
       << std::setw(12) << "" << std::setw(12) << sig4(s.sd_within) << std::setw(12)
       << sig4(s.min_within) << std::setw(12) << sig4(s.max_within)
       << "  T = " << s.periods_per_bank << '\n';
  }
  os << "\nCross Correlation Matrix (lower triangle)\n";
  os << std::left << std::setw(8) << "";
  for (const auto& v : vars) os << std::right << std::setw(8) << v;
  os << '\n';
  for (size_t a = 0; a < vars.size(); ++a) {
    os << std::left << std::setw(8) << vars[a];
    for (size_t b = 0; b <= a; ++b) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(3) << corr[a][b];
      os << std::right << std::setw(8) << cell.str();
    }
    os << '\n';
  }
  return os.str();
}

std::string render_tests(const std::vector<TestResult>& tests, OutputFormat fmt) {
  if (fmt == OutputFormat::Json) {
    json j = json::array();
    for (const auto& t : tests) j.push_back(test_json(t));
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  if (fmt == OutputFormat::Csv) {
    os << "test,statistic,df,df2,p_value,flags\n";
    for (const auto& t : tests) {
      os << t.name << ',' << full(t.statistic) << ',' << t.df << ',' << t.df2 << ','
         << full(t.p_value) << ',';
      for (size_t i = 0; i < t.flags.size(); ++i) os << (i ? "; " : "") << t.flags[i];
      os << '\n';
    }
    return os.str();
  }
  for (const auto& t : tests) {
    os << t.name << ": statistic = " << sig4(t.statistic);
    if (t.df2 > 0)
      os << "  F(" << t.df << ", " << t.df2 << ")";
    else if (t.df > 0)
      os << "  chi2(" << t.df << ")";
    os << "  Prob = " << std::fixed << std::setprecision(4) << t.p_value
       << std::defaultfloat;
    os << "   [H0: " << t.null_description << "]";
    for (const auto& f : t.flags) os << "  " << f;
    os << '\n';
  }
  return os.str();
}

std::string render_chow(const ChowResult& chow, OutputFormat fmt) {
  if (fmt == OutputFormat::Json) {
    json j;
    j["joint"] = test_json(chow.joint);
    j["per_group"] = json::object();
    for (const auto& [g, t] : chow.per_group) j["per_group"][g] = test_json(t);
    j["per_coefficient"] = json::object();
    for (const auto& [c, t] : chow.per_coefficient) j["per_coefficient"][c] = test_json(t);
    return j.dump(2) + "\n";
  }
  std::vector<TestResult> flat = {chow.joint};
  for (const auto& [g, t] : chow.per_group) flat.push_back(t);
  for (const auto& [c, t] : chow.per_coefficient) flat.push_back(t);
  std::string head =
      fmt == OutputFormat::Text
          ? "Chow coefficient-equality tests (static fixed-effects specification)\n"
          : "";
  return head + render_tests(flat, fmt);
}

std::string render_monte_carlo(const MonteCarloSummary& mc, OutputFormat fmt) {
  if (fmt == OutputFormat::Json) {
    json j;
    j["reps"] = mc.reps;
    j["failures"] = mc.failures;
    j["coefficients"] = json::object();
    for (const auto& [name, c] : mc.coefficients)
      j["coefficients"][name] = {
          {"truth", c.truth}, {"mean", c.mean}, {"bias", c.bias}, {"rmse", c.rmse}};
    j["rejection_rate"] = mc.rejection_rate;
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  if (fmt == OutputFormat::Csv) {
    os << "kind,name,truth,mean,bias,rmse,rejection_rate\n";
    for (const auto& [name, c] : mc.coefficients)
      os << "coefficient," << name << ',' << full(c.truth) << ',' << full(c.mean) << ','
         << full(c.bias) << ',' << full(c.rmse) << ",\n";
    for (const auto& [name, r] : mc.rejection_rate)
      os << "test," << name << ",,,,," << full(r) << '\n';
    return os.str();
  }
  os << "Monte Carlo summary (" << mc.reps << " replications, " << mc.failures
     << " failures)\n";
  os << std::left << std::setw(12) << "coefficient" << std::right << std::setw(12) << "truth"
     << std::setw(12) << "mean" << std::setw(12) << "bias" << std::setw(12) << "rmse" << '\n';
  for (const auto& [name, c] : mc.coefficients)
    os << std::left << std::setw(12) << name << std::right << std::setw(12) << sig4(c.truth)
       << std::setw(12) << sig4(c.mean) << std::setw(12) << sig4(c.bias) << std::setw(12)
       << sig4(c.rmse) << '\n';
  for (const auto& [name, r] : mc.rejection_rate)
    os << "rejection rate at 5% [" << name << "]: " << sig4(r) << '\n';
  return os.str();
}

}  // namespace nim
