#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nimpanel/gmm.hpp"

namespace nim {

struct RegressorProcess {
  enum class Kind { IidNormal, BankConstant, TimeConstant };
  Kind kind = Kind::IidNormal;
  double mean = 0;
  double sd = 1;
  // Loading of the regressor on the bank effect mu_i (for Hausman power
  // studies); zero keeps the error-component orthogonality by construction.
  double mu_loading = 0;
};

// Parameters of the simulated error-component process.
struct DGPSpec {
  int n_banks = 10;
  int T = 10;
  double psi1 = 0.0;             // persistence, |psi1| < 1
  double xi = 0.0;               // constant
  std::vector<std::string> regressor_names;
  std::vector<double> delta;     // coefficients, aligned with regressor_names
  std::vector<RegressorProcess> processes;  // aligned with regressor_names
  double sigma_mu = 1.0;
  double sigma_eps = 1.0;
  int burn_in = 50;
  std::uint64_t seed = 1;
  int n_foreign = 0;             // leading banks labelled foreign,
  int n_state = 0;               // then state; the remainder private

  void validate() const;
  double truth(const std::string& coef_name) const;
};

// Scenario with marginal moments matched to a quarterly 23-bank, 42-quarter
// commercial-bank panel (scales only, not joint dynamics).
DGPSpec turkey_like_scenario(std::uint64_t seed);

// Simulates NIM_{i,t} = xi + psi1 * NIM_{i,t-1} + delta' x_{i,t} + mu_i + eps_{i,t}
// with stationary initialization and per-bank deterministic RNG streams.
PanelDataset generate_panel(const DGPSpec& spec);

struct CoefficientSummary {
  double truth = 0;
  double mean = 0;
  double bias = 0;
  double rmse = 0;
};

struct MonteCarloSummary {
  int reps = 0;
  int failures = 0;
  std::map<std::string, CoefficientSummary> coefficients;
  // Rejection frequency at alpha = 0.05 for each diagnostic attached to the
  // estimation results (Sargan, AR(1), AR(2), ...).
  std::map<std::string, double> rejection_rate;
};

MonteCarloSummary monte_carlo(const DGPSpec& dgp, const ModelSpec& model,
                              const InstrumentPolicy& policy, int reps);

struct FisherInputs {
  double loan_rate = 0;     // real
  double deposit_rate = 0;  // real
  double inflation = 0;

  void validate() const;  // rates > -1
};

// (loan - deposit) * (1 + inflation); identical to the expanded
// (1+loan)(1+pi) - (1+deposit)(1+pi) form.
double nominal_margin(const FisherInputs& inputs);

}  // namespace nim
