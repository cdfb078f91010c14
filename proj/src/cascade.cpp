#include "labelcast/cascade.hpp"

#include <cmath>

#include "labelcast/classifier.hpp"

namespace labelcast {

void CascadeConfig::validate(const Backend& backend) const {
  if (models.empty()) throw ConfigError("cascade with no models");
  if (thresholds.size() != models.size())
    throw ConfigError("cascade thresholds count != model count");
  int prev_rank = -1;
  for (const auto& m : models) {
    if (!backend.has_model(m)) throw ConfigError("cascade references unknown model: " + m);
    int rank = backend.spec(m).size_rank;
    if (rank <= prev_rank)
      throw ConfigError("cascade models must be ordered by strictly increasing size_rank");
    prev_rank = rank;
  }
  for (double t : thresholds)
    if (t < 0.0 || t > 1.0) throw ConfigError("cascade threshold outside [0,1]");
}

double logprob_to_confidence(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) throw EmptyLogprobs("no token logprobs");
  double sum = 0.0;
  for (double lp : token_logprobs) sum += lp;
  return std::exp(sum / static_cast<double>(token_logprobs.size()));
}

CascadeTrace run_cascade(const Email& email, const LabelDef& label, const CascadeConfig& cfg,
                         Backend& backend) {
  CascadeTrace trace;
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    const std::string& model = cfg.models[i];
    CascadeAttempt attempt;
    attempt.model = model;
    try {
      GenerationResult r = backend.generate_label(model, email, label);
      attempt.value = r.value.value;
      attempt.usage = r.usage;
      attempt.cost = request_cost(backend.spec(model), r.usage);
      // a value outside the class set is treated as confidence 0 and escalates
      attempt.valid = label.contains(attempt.value);
      if (attempt.valid) attempt.confidence = logprob_to_confidence(r.token_logprobs);
    } catch (const MalformedOutput& m) {
      attempt.usage = m.usage;
      attempt.cost = request_cost(backend.spec(model), m.usage);
      attempt.value = label.classes.front();
      attempt.confidence = 0.0;
      attempt.valid = false;
    } catch (const BackendUnavailable& e) {
      for (const auto& a : trace.attempts) trace.total_cost += a.cost;
      throw CascadeBackendFailure(e.what(), std::move(trace));
    }
    trace.attempts.push_back(attempt);
    if (attempt.valid && attempt.confidence >= cfg.thresholds[i]) {
      trace.fell_through = false;
      break;
    }
    // set only while every attempt so far missed its threshold; reaching the
    // end of the loop in this state is the fallthrough case
    trace.fell_through = true;
  }
  const CascadeAttempt& last = trace.attempts.back();
  trace.chosen_model = last.model;
  trace.chosen_value = {label.name, last.value};
  for (const auto& a : trace.attempts) trace.total_cost += a.cost;
  return trace;
}

void validate_skip_rules(const LabelSchema& schema, const std::vector<SkipRule>& rules) {
  for (const auto& r : rules) {
    int cond = schema.index_of(r.condition_label);
    int cons = schema.index_of(r.consequence_label);
    if (cond < 0 || cons < 0)
      throw ConfigError("skip rule references unknown label: " + r.condition_label + " -> " +
                        r.consequence_label);
    if (cond >= cons)
      throw ConfigError("skip rule must point forward in schema order: " + r.condition_label +
                        " -> " + r.consequence_label);
    const LabelDef& cond_def = schema.labels[static_cast<std::size_t>(cond)];
    const LabelDef& cons_def = schema.labels[static_cast<std::size_t>(cons)];
    if (!cond_def.contains(r.condition_value) || !cons_def.contains(r.consequence_value))
      throw ConfigError("skip rule value outside its label class set");
  }
}

EmailLabels LabelingEngine::label_email(const Email& email, Backend& backend) const {
  if (!schema) throw ConfigError("labeling engine without schema");
  EmailLabels out;
  out.email_id = email.id;

  std::map<std::string, int> assigned;
  for (const auto& label : schema->labels) {
    auto method_it = plan.find(label.name);
    if (method_it == plan.end()) throw ConfigError("plan does not cover label: " + label.name);

    // forward skip rules fire on values assigned earlier in schema order
    const SkipRule* fired = nullptr;
    for (const auto& rule : skip_rules) {
      if (rule.consequence_label != label.name) continue;
      auto it = assigned.find(rule.condition_label);
      if (it != assigned.end() && it->second == rule.condition_value) {
        fired = &rule;
        break;
      }
    }

    LabelOutcome outcome;
    if (fired) {
      outcome.value = {label.name, fired->consequence_value};
      outcome.provenance = Provenance::Skipped;
    } else if (method_it->second == Method::Cascade) {
      auto cfg_it = cascades.find(label.name);
      if (cfg_it == cascades.end())
        throw ConfigError("no cascade config for label: " + label.name);
      CascadeTrace trace = run_cascade(email, label, cfg_it->second, backend);
      outcome.value = trace.chosen_value;
      outcome.provenance = Provenance::Cascade;
      outcome.cost = trace.total_cost;
      outcome.model = trace.chosen_model;
      outcome.confidence = trace.attempts.back().confidence;
      outcome.entry_confidence = trace.attempts.front().confidence;
      outcome.fell_through = trace.fell_through;
      outcome.attempts = trace.attempts;
      for (const auto& a : trace.attempts)
        outcome.blended_cost +=
            blended_price(backend.spec(a.model)) *
            static_cast<double>(a.usage.input_tokens + a.usage.output_tokens);
    } else {
      if (!classifier) throw ConfigError("plan routes to classifier but none is loaded");
      if (!label.is_binary())
        throw ConfigError("classifier can only serve binary labels: " + label.name);
      bool cached = backend.embedding_cache().get(embedding_model, email.id).has_value();
      auto embedding = backend.embed(embedding_model, email);
      auto probs = classifier->predict(embedding);
      int idx = -1;
      for (std::size_t i = 0; i < classifier->label_names().size(); ++i)
        if (classifier->label_names()[i] == label.name) idx = static_cast<int>(i);
      if (idx < 0) throw ConfigError("classifier was not trained on label: " + label.name);
      double p = probs[static_cast<std::size_t>(idx)];
      int v = p >= 0.5 ? 1 : 0;  // tie at exactly 0.5 resolves to 1
      outcome.value = {label.name, v};
      outcome.provenance = Provenance::Classifier;
      outcome.model = embedding_model;
      outcome.confidence = v == 1 ? p : 1.0 - p;
      if (!cached) {
        // the one embedding call this email pays for; later labels hit the cache
        const ModelSpec& es = backend.spec(embedding_model);
        TokenUsage usage{std::max<std::int64_t>(1, email.token_count_estimate), 0};
        outcome.cost = request_cost(es, usage);
        outcome.blended_cost =
            blended_price(es) * static_cast<double>(usage.input_tokens + usage.output_tokens);
      }
    }
    assigned[label.name] = outcome.value.value;
    out.outcomes.push_back(std::move(outcome));
  }
  for (const auto& o : out.outcomes) out.total_cost += o.cost;
  return out;
}

}  // namespace labelcast
