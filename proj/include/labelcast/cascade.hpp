#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "labelcast/backend.hpp"
#include "labelcast/core.hpp"

namespace labelcast {

struct CascadeConfig {
  std::vector<std::string> models;   // ordered by strictly increasing size_rank
  std::vector<double> thresholds;    // same length, each in [0,1]
  std::string label_name;

  void validate(const Backend& backend) const;
};

struct CascadeAttempt {
  std::string model;
  double confidence = 0.0;
  int value = 0;
  bool valid = true;  // false: malformed or out-of-class output; never accepted
  Micros cost = 0;
  TokenUsage usage;
};

struct CascadeTrace {
  std::vector<CascadeAttempt> attempts;
  std::string chosen_model;
  LabelValue chosen_value;
  Micros total_cost = 0;
  bool fell_through = false;
};

// Mined forward implication: once the condition label was assigned the
// condition value, the consequence label is assigned without a model call.
struct SkipRule {
  std::string condition_label;
  int condition_value = 0;
  std::string consequence_label;
  int consequence_value = 0;
  double support = 0.0;
  double confidence = 0.0;
};

// Backend failure mid-cascade, with the attempts billed so far attached.
struct CascadeBackendFailure : BackendUnavailable {
  CascadeTrace partial_trace;
  CascadeBackendFailure(const std::string& what, CascadeTrace t)
      : BackendUnavailable(what), partial_trace(std::move(t)) {}
};

/// exp(mean of token logprobs): the geometric mean of per-token probabilities.
double logprob_to_confidence(std::span<const double> token_logprobs);

/// Rules may only point forward in schema order (no cycles by construction).
void validate_skip_rules(const LabelSchema& schema, const std::vector<SkipRule>& rules);

/// Walks the cascade; stops at the first model whose confidence clears its
/// threshold. When none does, the last (most expensive) model's value is kept
/// and fell_through is set. A malformed output counts as confidence 0 (the
/// attempt is still billed), forcing escalation.
CascadeTrace run_cascade(const Email& email, const LabelDef& label, const CascadeConfig& cfg,
                         Backend& backend);

enum class Method { Cascade, Classifier };
enum class Provenance { Cascade, Classifier, Skipped };

struct LabelOutcome {
  LabelValue value;
  Provenance provenance = Provenance::Cascade;
  Micros cost = 0;
  double blended_cost = 0.0;  // reporting-only 3:1 blend over the billed tokens
  std::string model;          // serving model ("" when skipped)
  double confidence = 0.0;
  double entry_confidence = 0.0;  // first cascade attempt; drift signal
  bool fell_through = false;
  std::vector<CascadeAttempt> attempts;  // cascade provenance only
};

struct EmailLabels {
  std::string email_id;
  std::vector<LabelOutcome> outcomes;  // schema order
  Micros total_cost = 0;
};

class BinaryClassifier;  // classifier.hpp

// Everything needed to label one email end to end. Labels are evaluated in
// schema order; skip rules may only point forward, so no cycles.
struct LabelingEngine {
  const LabelSchema* schema = nullptr;
  std::map<std::string, Method> plan;                 // label -> method
  std::map<std::string, CascadeConfig> cascades;      // label -> cascade
  std::vector<SkipRule> skip_rules;
  std::string embedding_model;                        // for Classifier labels
  const BinaryClassifier* classifier = nullptr;       // optional

  EmailLabels label_email(const Email& email, Backend& backend) const;
};

}  // namespace labelcast
