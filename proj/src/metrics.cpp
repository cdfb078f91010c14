#include "labelcast/metrics.hpp"

#include <algorithm>

#include <json.hpp>

namespace labelcast {

using nlohmann::json;

namespace {

double f1_one_vs_rest(std::span<const int> predictions, std::span<const int> references,
                      int positive) {
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    bool p = predictions[i] == positive;
    bool r = references[i] == positive;
    if (p && r) ++tp;
    else if (p && !r) ++fp;
    else if (!p && r) ++fn;
  }
  if (tp == 0 && fp == 0 && fn == 0) return 1.0;  // vacuous perfection
  double precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  double recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1_binary(std::span<const int> predictions, std::span<const int> references) {
  if (predictions.size() != references.size() || predictions.empty())
    throw LengthMismatch("f1_binary needs equal nonempty sequences");
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if ((predictions[i] != 0 && predictions[i] != 1) ||
        (references[i] != 0 && references[i] != 1))
      throw ValueOutOfClassSet("f1_binary values must be 0 or 1");
  return f1_one_vs_rest(predictions, references, 1);
}

double f1_macro(std::span<const int> predictions, std::span<const int> references,
                std::span<const int> classes) {
  if (predictions.size() != references.size() || predictions.empty())
    throw LengthMismatch("f1_macro needs equal nonempty sequences");
  auto in_classes = [&classes](int v) {
    return std::find(classes.begin(), classes.end(), v) != classes.end();
  };
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (!in_classes(predictions[i]) || !in_classes(references[i]))
      throw ValueOutOfClassSet("f1_macro value outside the class set");
  double acc = 0.0;
  for (int c : classes) acc += f1_one_vs_rest(predictions, references, c);
  return acc / static_cast<double>(classes.size());
}

double f1_for_label(const LabelDef& label, std::span<const int> predictions,
                    std::span<const int> references) {
  if (label.is_binary()) return f1_binary(predictions, references);
  return f1_macro(predictions, references, label.classes);
}

CostReduction cost_reduction_factor(double method_blended_cost, double baseline_blended_cost) {
  CostReduction r;
  if (method_blended_cost <= 0.0) {
    r.factor = kCostReductionSentinel;
    r.zero_method_cost = true;
    return r;
  }
  r.factor = baseline_blended_cost / method_blended_cost;
  return r;
}

std::vector<int> oracle_cascade_predictions(const OracleInputs& in) {
  if (in.models.empty()) throw ConfigError("oracle needs at least one model");
  const std::size_t n = in.baseline.size();
  std::vector<const std::vector<int>*> outs;
  for (const auto& m : in.models) {
    auto it = in.outputs.find(m);
    if (it == in.outputs.end()) throw ConfigError("oracle missing cached outputs for " + m);
    if (it->second.size() != n) throw LengthMismatch("oracle output length mismatch for " + m);
    outs.push_back(&it->second);
  }
  std::vector<int> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool agreed = false;
    for (const auto* o : outs) {
      if ((*o)[i] == in.baseline[i]) {
        agreed = true;
        break;
      }
    }
    pred[i] = agreed ? in.baseline[i] : (*outs.back())[i];
  }
  return pred;
}

double oracle_cascade_f1(const OracleInputs& in, const LabelDef& label) {
  auto pred = oracle_cascade_predictions(in);
  return f1_for_label(label, pred, in.baseline);
}

std::string EvaluationReport::to_json() const {
  json j;
  j["per_label_f1"] = per_label_f1;
  j["average_f1"] = average_f1;
  j["cost_reduction_factor"] = cost_reduction_factor;
  j["cost_reduction_flagged"] = cost_reduction_flagged;
  if (has_oracle) j["oracle_f1"] = oracle_f1;
  j["config_hash"] = config_hash;
  j["usage_fractions"] = usage_fractions;
  j["skipped_fraction"] = skipped_fraction;
  j["emails"] = emails;
  j["f1_aggregation"] = f1_aggregation;
  return j.dump(2);
}

}  // namespace labelcast
