#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nimpanel/estimation.hpp"
#include "nimpanel/simulate.hpp"
#include "nimpanel/spec_tests.hpp"

namespace nim {

enum class OutputFormat { Text, Csv, Json };
OutputFormat parse_format(const std::string& s);

// Significance stars: *** 1%, ** 5%, * 10%.
std::string stars(double p_value);

using LabelledResult = std::pair<std::string, EstimationResult>;

// Journal-style coefficient table: one column per result, estimate
// with stars, standard error in parentheses beneath, then the Observations /
// R-squared / Sargan / AR(1) / AR(2) / Number of Banks block.
std::string render_estimates(const std::vector<LabelledResult>& results, OutputFormat fmt);

// Correlation lower-triangle plus per-variable Overall/Between/Within blocks.
std::string render_descriptives(const PanelDataset& data, const std::vector<std::string>& vars,
                                OutputFormat fmt);

std::string render_tests(const std::vector<TestResult>& tests, OutputFormat fmt);
std::string render_chow(const ChowResult& chow, OutputFormat fmt);
std::string render_monte_carlo(const MonteCarloSummary& mc, OutputFormat fmt);

// Machine-readable result record (authoritative precision).
std::string result_to_json(const EstimationResult& r);
EstimationResult result_from_json(const std::string& text);

}  // namespace nim
