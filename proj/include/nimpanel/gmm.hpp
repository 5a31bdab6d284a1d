#pragma once

#include <limits>
#include <set>
#include <string>
#include <vector>

#include "nimpanel/estimation.hpp"

namespace nim {

// How instruments are constructed for the differenced and level equations.
struct InstrumentPolicy {
  int min_lag = 2;                 // deepest usable level lag is t - min_lag
  int max_lag = 4;                 // 0 = unlimited
  bool collapse = false;           // one column per lag depth instead of per (t, lag)
  int level_instrument_lag = 1;    // levels are instrumented by lag-1 differences
  // Variables listed here instrument themselves (in differences for the
  // differenced equation, in levels for the level equation). Everything else
  // is treated as predetermined and gets GMM-style lag blocks.
  std::set<std::string> exogenous;

  void validate() const;
  int lag_cap(int t) const;  // deepest lag usable at differenced period t (1-based)
};

// Per-bank block instrument matrix for one bank layout (identical across
// banks on a balanced panel); the mapping records column provenance.
struct InstrumentSet {
  int diff_columns = 0;
  int level_columns = 0;   // 0 for pure difference GMM
  struct ColumnOrigin {
    std::string variable;
    int lag = 0;           // level lag depth for GMM columns, 0 for own-instrument
    int period = 0;        // 1-based differenced period the block row belongs to; 0 if shared
    bool level_equation = false;
  };
  std::vector<ColumnOrigin> origins;

  int total_columns() const { return diff_columns + level_columns; }
};

// Column layout for the differenced (and, for system GMM, level) equations,
// given a balanced panel with T periods and dep_lags p.
InstrumentSet build_instruments(const ModelSpec& spec, const InstrumentPolicy& policy,
                                const PanelDataset& data);

// Uncapped, uncollapsed dependent-variable column count: (T-1)(T-2)/2.
long uncapped_instrument_count(int T);

EstimationResult estimate_diff_gmm(const ModelSpec& spec, const InstrumentPolicy& policy,
                                   const PanelDataset& data);
EstimationResult estimate_sys_gmm(const ModelSpec& spec, const InstrumentPolicy& policy,
                                  const PanelDataset& data);

// W = (sum_i Z_i' e_i e_i' Z_i)^+ from per-bank moment contributions.
Matrix two_step_weight(const std::vector<Matrix>& Z_per_bank,
                       const std::vector<Vector>& resid_per_bank, bool* degenerate = nullptr);

}  // namespace nim
