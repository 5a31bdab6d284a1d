#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace nim {

enum class Ownership { Foreign, State, Private };

std::string to_string(Ownership o);
Ownership parse_ownership(const std::string& s);  // throws on unknown label

enum class ExpectedSign { Positive, Negative, Ambiguous, NotApplicable };

struct VariableDef {
  std::string name;
  std::string description;
  ExpectedSign expected_sign;
};

// The 13 pre-registered variable codes with descriptions and expected signs.
const std::vector<VariableDef>& registered_variables();
const VariableDef* find_variable_def(const std::string& name);

struct SummaryDecomposition {
  double mean = 0;
  double sd_overall = 0, sd_between = 0, sd_within = 0;
  double min_overall = 0, max_overall = 0;
  double min_between = 0, max_between = 0;
  double min_within = 0, max_within = 0;
  long n_obs = 0;
  int n_banks = 0;
  int periods_per_bank = 0;
};

struct PanelError : std::runtime_error {
  explicit PanelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Immutable bank-by-quarter observation table. Rows are stored sorted by
// (bank, period); every transform returns a new dataset.
class PanelDataset {
 public:
  PanelDataset(std::vector<std::string> units, std::vector<Ownership> ownership,
               std::vector<int> row_bank, std::vector<int> row_period,
               std::vector<std::string> var_names, std::vector<std::vector<double>> columns);

  int n_banks() const { return static_cast<int>(units_.size()); }
  long n_rows() const { return static_cast<long>(row_bank_.size()); }
  bool balanced() const { return balanced_; }
  // Periods per bank; only meaningful on a balanced panel.
  int T() const;

  const std::vector<std::string>& units() const { return units_; }
  Ownership ownership(int bank) const { return ownership_[bank]; }
  const std::vector<int>& row_bank() const { return row_bank_; }
  const std::vector<int>& row_period() const { return row_period_; }
  const std::vector<int>& periods() const;  // shared period range (balanced only)

  const std::vector<std::string>& var_names() const { return var_names_; }
  bool has_var(const std::string& name) const;
  int var_index(const std::string& name) const;  // throws PanelError on miss
  const std::vector<double>& column(const std::string& name) const;
  const std::vector<double>& column(int var) const { return columns_[var]; }

  // Row index of (bank, t) on a balanced panel, t = 0..T-1 within the bank.
  long row_index(int bank, int t) const { return static_cast<long>(bank) * T_ + t; }
  double value(int bank, int t, int var) const { return columns_[var][row_index(bank, t)]; }

  // New dataset with an extra column (aligned to rows).
  PanelDataset with_column(const std::string& name, std::vector<double> values) const;
  // New dataset restricted to the given banks (indices into units()).
  PanelDataset select_banks(const std::vector<int>& banks) const;
  PanelDataset select_ownership(Ownership group) const;
  PanelDataset drop_banks(const std::vector<std::string>& ids) const;

 private:
  std::vector<std::string> units_;
  std::vector<Ownership> ownership_;
  std::vector<int> row_bank_;
  std::vector<int> row_period_;
  std::vector<std::string> var_names_;
  std::vector<std::vector<double>> columns_;
  bool balanced_ = false;
  int T_ = 0;
  std::vector<int> periods_;
};

// Parses "2001Q4" or a plain integer into a quarter ordinal (year*4+quarter).
int parse_period(const std::string& token);

// Reads delimiter-separated text (comma default, tab accepted) with header
// bank_id, period, ownership, then numeric variable columns.
PanelDataset load_panel(std::istream& in);
PanelDataset load_panel_file(const std::string& path);
void write_panel(std::ostream& out, const PanelDataset& data);

SummaryDecomposition summarize(const PanelDataset& data, const std::string& var);

// Pearson correlation matrix over the listed variables (symmetric, unit
// diagonal). Zero-variance columns are rejected by name.
std::vector<std::vector<double>> correlation_matrix(const PanelDataset& data,
                                                    const std::vector<std::string>& vars);

// Each listed column replaced by its deviation from the bank mean.
PanelDataset within_demean(const PanelDataset& data, const std::vector<std::string>& vars);

// Per bank, T-1 rows of x_t - x_{t-1} for every column.
PanelDataset first_difference(const PanelDataset& data);

// Column of var lagged k periods within each bank; the first k periods per
// bank are NaN. Never crosses a bank boundary.
std::vector<double> lag(const PanelDataset& data, const std::string& var, int k);

}  // namespace nim
