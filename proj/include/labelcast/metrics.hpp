#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "labelcast/core.hpp"

namespace labelcast {

/// F1 with positive class 1. Returns 0 when precision+recall is 0; returns 1
/// when neither side contains a positive (vacuous perfection).
double f1_binary(std::span<const int> predictions, std::span<const int> references);

/// One-vs-rest F1 per class, unweighted mean. A class absent from both sides
/// contributes 1.0 so label sets with rare classes stay comparable.
double f1_macro(std::span<const int> predictions, std::span<const int> references,
                std::span<const int> classes);

/// Per-label F1: binary labels use f1_binary, multiclass use f1_macro.
double f1_for_label(const LabelDef& label, std::span<const int> predictions,
                    std::span<const int> references);

constexpr double kCostReductionSentinel = 1e12;

struct CostReduction {
  double factor = 1.0;
  bool zero_method_cost = false;  // sentinel applied
};

/// baseline cost / method cost. Factors below 1 are reported, not clamped;
/// a zero method cost maps to a flagged sentinel.
CostReduction cost_reduction_factor(double method_blended_cost, double baseline_blended_cost);

// Quality upper bound: per request the oracle keeps the baseline label when
// any cascade model agreed with it, else the most expensive model's output.
struct OracleInputs {
  // cascade order; outputs[model][i] is the solo output for request i
  std::vector<std::string> models;
  std::map<std::string, std::vector<int>> outputs;
  std::vector<int> baseline;
};

std::vector<int> oracle_cascade_predictions(const OracleInputs& in);
double oracle_cascade_f1(const OracleInputs& in, const LabelDef& label);

struct EvaluationReport {
  std::map<std::string, double> per_label_f1;
  double average_f1 = 0.0;  // unweighted mean over labels
  double cost_reduction_factor = 1.0;
  bool cost_reduction_flagged = false;
  double oracle_f1 = 0.0;
  bool has_oracle = false;
  std::string config_hash;
  std::map<std::string, double> usage_fractions;  // serving model -> share of label requests
  double skipped_fraction = 0.0;
  std::int64_t emails = 0;
  std::string f1_aggregation = "macro";  // documented choice

  std::string to_json() const;  // deterministic, for report files
};

}  // namespace labelcast
