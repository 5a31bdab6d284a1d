#include "nimpanel/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace nim {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(Ownership o) {
  switch (o) {
    case Ownership::Foreign: return "foreign";
    case Ownership::State: return "state";
    case Ownership::Private: return "private";
  }
  return "?";
}

Ownership parse_ownership(const std::string& s) {
  if (s == "foreign") return Ownership::Foreign;
  if (s == "state") return Ownership::State;
  if (s == "private") return Ownership::Private;
  throw PanelError("unknown ownership label '" + s + "' (expected foreign/state/private)");
}

const std::vector<VariableDef>& registered_variables() {
  static const std::vector<VariableDef> defs = {
      {"NIM", "Net interest income divided by total assets", ExpectedSign::NotApplicable},
      {"RA", "Equity over total assets", ExpectedSign::Ambiguous},
      {"RBD", "Non-performing loan over total loan", ExpectedSign::Positive},
      {"OC", "Operation cost over total assets", ExpectedSign::Ambiguous},
      {"LOGTA", "Logarithm of total assets", ExpectedSign::Ambiguous},
      {"LQR", "Ratio of liquid assets to total assets", ExpectedSign::Negative},
      {"MNGMT", "Total expenses over total generated revenues", ExpectedSign::Negative},
      {"IIP", "Net non-interest income over total assets", ExpectedSign::Positive},
      {"DPZTG", "Quarterly growth of deposits", ExpectedSign::Negative},
      {"DVRSTY", "Non-interest income over operating income", ExpectedSign::Negative},
      {"HHI", "Herfindahl index for assets", ExpectedSign::Positive},
      {"GDP", "Quarterly real GDP growth", ExpectedSign::Ambiguous},
      {"INF", "CPI growth rate", ExpectedSign::Positive},
  };
  return defs;
}

const VariableDef* find_variable_def(const std::string& name) {
  for (const auto& d : registered_variables())
    if (d.name == name) return &d;
  return nullptr;
}

PanelDataset::PanelDataset(std::vector<std::string> units, std::vector<Ownership> ownership,
                           std::vector<int> row_bank, std::vector<int> row_period,
                           std::vector<std::string> var_names,
                           std::vector<std::vector<double>> columns)
    : units_(std::move(units)),
      ownership_(std::move(ownership)),
      row_bank_(std::move(row_bank)),
      row_period_(std::move(row_period)),
      var_names_(std::move(var_names)),
      columns_(std::move(columns)) {
  const long n = n_rows();
  if (ownership_.size() != units_.size()) throw PanelError("ownership count != bank count");
  if (row_period_.size() != static_cast<size_t>(n)) throw PanelError("row arrays misaligned");
  for (const auto& c : columns_)
    if (c.size() != static_cast<size_t>(n)) throw PanelError("column length != row count");

  // Sort rows by (bank, period).
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](long a, long b) {
    if (row_bank_[a] != row_bank_[b]) return row_bank_[a] < row_bank_[b];
    return row_period_[a] < row_period_[b];
  });
  auto permute = [&](auto& v) {
    auto copy = v;
    for (long i = 0; i < n; ++i) v[i] = copy[order[i]];
  };
  permute(row_bank_);
  permute(row_period_);
  for (auto& c : columns_) permute(c);

  for (long i = 1; i < n; ++i) {
    if (row_bank_[i] == row_bank_[i - 1] && row_period_[i] == row_period_[i - 1])
      throw PanelError("duplicate (bank, period) key: bank '" + units_[row_bank_[i]] +
                       "', period " + std::to_string(row_period_[i]));
  }
  for (size_t v = 0; v < columns_.size(); ++v)
    for (long i = 0; i < n; ++i)
      if (!std::isfinite(columns_[v][i]))
        throw PanelError("non-finite value in column '" + var_names_[v] + "'");

  // Balance: every bank shares one contiguous period range.
  std::vector<std::vector<int>> per_bank(units_.size());
  for (long i = 0; i < n; ++i) per_bank[row_bank_[i]].push_back(row_period_[i]);
  balanced_ = !per_bank.empty() && !per_bank[0].empty();
  for (const auto& p : per_bank) {
    if (p.empty() || p != per_bank[0]) balanced_ = false;
  }
  if (balanced_) {
    for (size_t t = 1; t < per_bank[0].size(); ++t)
      if (per_bank[0][t] != per_bank[0][t - 1] + 1) balanced_ = false;
  }
  if (balanced_) {
    periods_ = per_bank[0];
    T_ = static_cast<int>(periods_.size());
  }
}

int PanelDataset::T() const {
  if (!balanced_) throw PanelError("unbalanced panel has no common T");
  return T_;
}

const std::vector<int>& PanelDataset::periods() const {
  if (!balanced_) throw PanelError("unbalanced panel has no common period range");
  return periods_;
}

bool PanelDataset::has_var(const std::string& name) const {
  return std::find(var_names_.begin(), var_names_.end(), name) != var_names_.end();
}

int PanelDataset::var_index(const std::string& name) const {
  auto it = std::find(var_names_.begin(), var_names_.end(), name);
  if (it == var_names_.end()) throw PanelError("unknown variable '" + name + "'");
  return static_cast<int>(it - var_names_.begin());
}

const std::vector<double>& PanelDataset::column(const std::string& name) const {
  return columns_[var_index(name)];
}

PanelDataset PanelDataset::with_column(const std::string& name, std::vector<double> values) const {
  if (has_var(name)) throw PanelError("column '" + name + "' already exists");
  auto names = var_names_;
  names.push_back(name);
  auto cols = columns_;
  cols.push_back(std::move(values));
  return PanelDataset(units_, ownership_, row_bank_, row_period_, std::move(names),
                      std::move(cols));
}

PanelDataset PanelDataset::select_banks(const std::vector<int>& banks) const {
  std::vector<int> remap(units_.size(), -1);
  std::vector<std::string> new_units;
  std::vector<Ownership> new_own;
  for (int b : banks) {
    remap[b] = static_cast<int>(new_units.size());
    new_units.push_back(units_[b]);
    new_own.push_back(ownership_[b]);
  }
  std::vector<int> rb, rp;
  std::vector<std::vector<double>> cols(columns_.size());
  for (long i = 0; i < n_rows(); ++i) {
    if (remap[row_bank_[i]] < 0) continue;
    rb.push_back(remap[row_bank_[i]]);
    rp.push_back(row_period_[i]);
    for (size_t v = 0; v < columns_.size(); ++v) cols[v].push_back(columns_[v][i]);
  }
  return PanelDataset(std::move(new_units), std::move(new_own), std::move(rb), std::move(rp),
                      var_names_, std::move(cols));
}

PanelDataset PanelDataset::select_ownership(Ownership group) const {
  std::vector<int> keep;
  for (int b = 0; b < n_banks(); ++b)
    if (ownership_[b] == group) keep.push_back(b);
  if (keep.empty()) throw PanelError("no banks with ownership '" + to_string(group) + "'");
  return select_banks(keep);
}

PanelDataset PanelDataset::drop_banks(const std::vector<std::string>& ids) const {
  std::set<std::string> drop(ids.begin(), ids.end());
  for (const auto& id : ids)
    if (std::find(units_.begin(), units_.end(), id) == units_.end())
      throw PanelError("cannot drop unknown bank '" + id + "'");
  std::vector<int> keep;
  for (int b = 0; b < n_banks(); ++b)
    if (!drop.count(units_[b])) keep.push_back(b);
  return select_banks(keep);
}

int parse_period(const std::string& token) {
  auto to_int = [&](const std::string& s) {
    size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(s, &pos);
    } catch (const std::exception&) {
      throw PanelError("unparseable period '" + token + "'");
    }
    if (pos != s.size()) throw PanelError("unparseable period '" + token + "'");
    return v;
  };
  auto qpos = token.find('Q');
  if (qpos == std::string::npos) qpos = token.find('q');
  if (qpos != std::string::npos) {
    const int year = to_int(token.substr(0, qpos));
    const int quarter = to_int(token.substr(qpos + 1));
    if (quarter < 1 || quarter > 4) throw PanelError("bad quarter in period '" + token + "'");
    return year * 4 + quarter;
  }
  return to_int(token);
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

PanelDataset load_panel(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw PanelError("empty input");
  const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
  auto cols = split_line(header, delim);
  if (cols.size() < 3 || cols[0] != "bank_id" || cols[1] != "period" || cols[2] != "ownership")
    throw PanelError("header must start with bank_id,period,ownership");
  std::vector<std::string> var_names(cols.begin() + 3, cols.end());

  std::vector<std::string> units;
  std::unordered_map<std::string, int> unit_index;
  std::vector<Ownership> ownership;
  std::vector<int> row_bank, row_period;
  std::vector<std::vector<double>> columns(var_names.size());
  // For duplicate diagnostics: (bank,period) -> input row number.
  std::unordered_map<std::string, long> seen;

  std::string line;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_line(line, delim);
    if (fields.size() != cols.size())
      throw PanelError("row " + std::to_string(lineno) + ": expected " +
                       std::to_string(cols.size()) + " fields, got " +
                       std::to_string(fields.size()));
    const std::string& bank = fields[0];
    int period = parse_period(fields[1]);
    Ownership own = parse_ownership(fields[2]);

    auto it = unit_index.find(bank);
    int b;
    if (it == unit_index.end()) {
      b = static_cast<int>(units.size());
      unit_index[bank] = b;
      units.push_back(bank);
      ownership.push_back(own);
    } else {
      b = it->second;
      if (ownership[b] != own)
        throw PanelError("row " + std::to_string(lineno) + ": ownership of bank '" + bank +
                         "' changed across rows");
    }
    std::string key = bank + "\x1f" + std::to_string(period);
    auto dup = seen.find(key);
    if (dup != seen.end())
      throw PanelError("duplicate (bank, period) = ('" + bank + "', " + fields[1] + ") at rows " +
                       std::to_string(dup->second) + " and " + std::to_string(lineno));
    seen[key] = lineno;

    row_bank.push_back(b);
    row_period.push_back(period);
    for (size_t v = 0; v < var_names.size(); ++v) {
      const std::string& cell = fields[3 + v];
      char* end = nullptr;
      double x = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(x))
        throw PanelError("row " + std::to_string(lineno) + ", column '" + var_names[v] +
                         "': unparseable numeric cell '" + cell + "'");
      columns[v].push_back(x);
    }
  }
  return PanelDataset(std::move(units), std::move(ownership), std::move(row_bank),
                      std::move(row_period), std::move(var_names), std::move(columns));
}

PanelDataset load_panel_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw PanelError("cannot open data file: " + path);
  return load_panel(f);
}

void write_panel(std::ostream& out, const PanelDataset& data) {
  out << "bank_id,period,ownership";
  for (const auto& v : data.var_names()) out << ',' << v;
  out << '\n';
  out.precision(17);
  for (long i = 0; i < data.n_rows(); ++i) {
    int b = data.row_bank()[i];
    out << data.units()[b] << ',' << data.row_period()[i] << ','
        << to_string(data.ownership(b));
    for (size_t v = 0; v < data.var_names().size(); ++v) out << ',' << data.column((int)v)[i];
    out << '\n';
  }
}

SummaryDecomposition summarize(const PanelDataset& data, const std::string& var) {
  if (!data.balanced()) throw PanelError("summarize: unbalanced panel unsupported");
  const auto& x = data.column(var);
  const int n = data.n_banks();
  const int T = data.T();
  const long N = data.n_rows();

  SummaryDecomposition s;
  s.n_obs = N;
  s.n_banks = n;
  s.periods_per_bank = T;

  double grand = 0;
  for (double v : x) grand += v;
  grand /= static_cast<double>(N);
  s.mean = grand;

  std::vector<double> bank_mean(n, 0.0);
  for (int b = 0; b < n; ++b) {
    for (int t = 0; t < T; ++t) bank_mean[b] += data.value(b, t, data.var_index(var));
    bank_mean[b] /= T;
  }

  double ss_overall = 0, ss_between = 0, ss_within = 0;
  s.min_overall = s.max_overall = x[0];
  s.min_between = s.max_between = bank_mean[0];
  double w0 = x[0] - bank_mean[0] + grand;
  s.min_within = s.max_within = w0;
  for (int b = 0; b < n; ++b) {
    ss_between += (bank_mean[b] - grand) * (bank_mean[b] - grand);
    s.min_between = std::min(s.min_between, bank_mean[b]);
    s.max_between = std::max(s.max_between, bank_mean[b]);
    for (int t = 0; t < T; ++t) {
      double v = data.value(b, t, data.var_index(var));
      ss_overall += (v - grand) * (v - grand);
      double w = v - bank_mean[b] + grand;  // within deviation recentered at grand mean
      ss_within += (w - grand) * (w - grand);
      s.min_overall = std::min(s.min_overall, v);
      s.max_overall = std::max(s.max_overall, v);
      s.min_within = std::min(s.min_within, w);
      s.max_within = std::max(s.max_within, w);
    }
  }
  // SS identity: ss_overall = T * ss_between + ss_within on a balanced panel.
  s.sd_overall = N > 1 ? std::sqrt(ss_overall / (N - 1)) : 0.0;
  s.sd_between = n > 1 ? std::sqrt(ss_between / (n - 1)) : 0.0;
  s.sd_within = N > 1 ? std::sqrt(ss_within / (N - 1)) : 0.0;
  return s;
}

std::vector<std::vector<double>> correlation_matrix(const PanelDataset& data,
                                                    const std::vector<std::string>& vars) {
  if (vars.size() < 2) throw PanelError("correlation_matrix: need at least 2 variables");
  const long N = data.n_rows();
  const int k = static_cast<int>(vars.size());
  std::vector<const std::vector<double>*> cols;
  std::vector<double> means(k, 0.0), sds(k, 0.0);
  for (int j = 0; j < k; ++j) {
    cols.push_back(&data.column(vars[j]));
    for (double v : *cols[j]) means[j] += v;
    means[j] /= N;
    for (double v : *cols[j]) sds[j] += (v - means[j]) * (v - means[j]);
    if (sds[j] <= 0.0)
      throw PanelError("correlation_matrix: zero-variance column '" + vars[j] + "'");
    sds[j] = std::sqrt(sds[j]);
  }
  std::vector<std::vector<double>> r(k, std::vector<double>(k, 1.0));
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      double cov = 0;
      for (long i = 0; i < N; ++i)
        cov += ((*cols[a])[i] - means[a]) * ((*cols[b])[i] - means[b]);
      double v = cov / (sds[a] * sds[b]);
      r[a][b] = r[b][a] = std::clamp(v, -1.0, 1.0);
    }
  }
  return r;
}

PanelDataset within_demean(const PanelDataset& data, const std::vector<std::string>& vars) {
  if (!data.balanced()) throw PanelError("within_demean: unbalanced panel unsupported");
  const int n = data.n_banks();
  const int T = data.T();
  std::vector<std::vector<double>> cols;
  for (size_t v = 0; v < data.var_names().size(); ++v) cols.push_back(data.column((int)v));
  for (const auto& name : vars) {
    int v = data.var_index(name);
    for (int b = 0; b < n; ++b) {
      double m = 0;
      for (int t = 0; t < T; ++t) m += cols[v][data.row_index(b, t)];
      m /= T;
      for (int t = 0; t < T; ++t) cols[v][data.row_index(b, t)] -= m;
    }
  }
  std::vector<Ownership> own;
  for (int b = 0; b < n; ++b) own.push_back(data.ownership(b));
  return PanelDataset(data.units(), std::move(own), data.row_bank(), data.row_period(),
                      data.var_names(), std::move(cols));
}

PanelDataset first_difference(const PanelDataset& data) {
  if (!data.balanced() || data.T() < 2)
    throw PanelError("first_difference: need a balanced panel with T >= 2");
  const int n = data.n_banks();
  const int T = data.T();
  std::vector<int> rb, rp;
  std::vector<std::vector<double>> cols(data.var_names().size());
  for (int b = 0; b < n; ++b) {
    for (int t = 1; t < T; ++t) {
      rb.push_back(b);
      rp.push_back(data.periods()[t]);
      for (size_t v = 0; v < cols.size(); ++v)
        cols[v].push_back(data.value(b, t, (int)v) - data.value(b, t - 1, (int)v));
    }
  }
  std::vector<Ownership> own;
  for (int b = 0; b < n; ++b) own.push_back(data.ownership(b));
  return PanelDataset(data.units(), std::move(own), std::move(rb), std::move(rp),
                      data.var_names(), std::move(cols));
}

std::vector<double> lag(const PanelDataset& data, const std::string& var, int k) {
  if (k < 1) throw PanelError("lag: k must be >= 1");
  if (!data.balanced()) throw PanelError("lag: unbalanced panel unsupported");
  if (k >= data.T()) throw PanelError("lag: k >= T");
  const int v = data.var_index(var);
  std::vector<double> out(data.n_rows(), kNaN);
  for (int b = 0; b < data.n_banks(); ++b)
    for (int t = k; t < data.T(); ++t) out[data.row_index(b, t)] = data.value(b, t - k, v);
  return out;
}

}  // namespace nim
