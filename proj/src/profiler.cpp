#include "labelcast/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>

#include "labelcast/kernels.hpp"
#include "labelcast/metrics.hpp"
#include "labelcast/rng.hpp"

namespace labelcast {

namespace {

template <typename F>
void parallel_for_capture(std::int64_t n, F&& f) {
  std::exception_ptr err = nullptr;
  std::mutex err_mu;
  kernels::parallel_for(n, [&](std::int64_t i) {
    try {
      f(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (!err) err = std::current_exception();
    }
  });
  if (err) std::rethrow_exception(err);
}

double baseline_request_blended(Backend& backend, const std::string& baseline_model,
                                const Email& email) {
  const ModelSpec& spec = backend.spec(baseline_model);
  TokenUsage usage{std::max<std::int64_t>(1, email.token_count_estimate), 1};
  if (auto hint = backend.usage_hint(baseline_model)) usage = *hint;
  return blended_price(spec) *
         static_cast<double>(usage.input_tokens + usage.output_tokens);
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace

std::vector<double> ProfilerKnobs::default_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 20; ++i) g.push_back(static_cast<double>(i) * 0.05);
  return g;
}

std::string LabelingConfig::config_hash() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [label, method] : plan)
    os << label << '=' << (method == Method::Cascade ? 'c' : 'f') << ';';
  os << '|';
  for (std::size_t i = 0; i < cascade_models.size(); ++i)
    os << cascade_models[i] << '@' << thresholds[i] << ';';
  os << '|';
  for (const auto& r : skip_rules)
    os << r.condition_label << '=' << r.condition_value << "->" << r.consequence_label << '='
       << r.consequence_value << ';';
  os << '|' << embedding_model;
  return hex64(fnv1a64(os.str()));
}

// ---------------------------------------------------------------------------
// SoloCache
// ---------------------------------------------------------------------------

void SoloCache::put(const std::string& model, const std::string& email_id,
                    const std::string& label, SoloRecord r) {
  by_model_[model][email_id][label] = r;
}

const SoloRecord& SoloCache::get(const std::string& model, const std::string& email_id,
                                 const std::string& label) const {
  auto m = by_model_.find(model);
  if (m != by_model_.end()) {
    auto e = m->second.find(email_id);
    if (e != m->second.end()) {
      auto l = e->second.find(label);
      if (l != e->second.end()) return l->second;
    }
  }
  throw ConfigError("missing cached solo output: " + model + "/" + email_id + "/" + label);
}

bool SoloCache::has(const std::string& model, const std::string& email_id,
                    const std::string& label) const {
  auto m = by_model_.find(model);
  if (m == by_model_.end()) return false;
  auto e = m->second.find(email_id);
  if (e == m->second.end()) return false;
  return e->second.count(label) > 0;
}

// ---------------------------------------------------------------------------
// scoring
// ---------------------------------------------------------------------------

namespace {

// serving codes per request
constexpr int kSkipped = -1;
constexpr int kClassifier = -2;

struct RequestOutcome {
  int value = 0;
  int code = 0;            // model index, kSkipped, or kClassifier
  double blended = 0.0;    // blended cost billed by this request
  double entry_confidence = std::numeric_limits<double>::quiet_NaN();
};

TradeoffPoint score_outcomes(const LabelingConfig& config, const LabelSchema& schema,
                             const std::vector<std::string>& model_names,
                             const std::vector<RequestOutcome>& outcomes,
                             const std::vector<int>& baseline, double baseline_blended_total,
                             std::int64_t emails) {
  const int L = static_cast<int>(schema.labels.size());
  TradeoffPoint point;
  point.config = config;
  point.config_hash = config.config_hash();

  double config_blended = 0.0;
  std::map<std::string, std::int64_t> served;
  std::int64_t skipped = 0;
  for (const auto& o : outcomes) config_blended += o.blended;

  double f1_sum = 0.0;
  std::vector<int> preds, refs;
  for (int l = 0; l < L; ++l) {
    preds.clear();
    refs.clear();
    for (std::int64_t e = 0; e < emails; ++e) {
      const auto& o = outcomes[static_cast<std::size_t>(e) * L + l];
      preds.push_back(o.value);
      refs.push_back(baseline[static_cast<std::size_t>(e) * L + l]);
      if (o.code == kSkipped) ++skipped;
      else if (o.code == kClassifier) ++served["classifier"];
      else ++served[model_names[static_cast<std::size_t>(o.code)]];
    }
    double f1 = f1_for_label(schema.labels[static_cast<std::size_t>(l)], preds, refs);
    point.per_label_f1[schema.labels[static_cast<std::size_t>(l)].name] = f1;
    f1_sum += f1;
  }
  point.quality = f1_sum / static_cast<double>(L);

  CostReduction cr = cost_reduction_factor(config_blended, baseline_blended_total);
  point.cost_reduction = cr.factor;
  point.cost_flagged = cr.zero_method_cost;

  const double total_requests = static_cast<double>(emails) * L;
  for (const auto& [name, count] : served)
    point.usage_fractions[name] = static_cast<double>(count) / total_requests;
  point.skipped_fraction = static_cast<double>(skipped) / total_requests;
  return point;
}

const SkipRule* find_firing_rule(const std::vector<SkipRule>& rules, const std::string& label,
                                 const std::map<std::string, int>& assigned) {
  for (const auto& rule : rules) {
    if (rule.consequence_label != label) continue;
    auto it = assigned.find(rule.condition_label);
    if (it != assigned.end() && it->second == rule.condition_value) return &rule;
  }
  return nullptr;
}

}  // namespace

TradeoffPoint evaluate_cached(const LabelingConfig& config, const CachedRun& run,
                              std::vector<double>* entry_confidences) {
  const LabelSchema& schema = *run.schema;
  const int L = run.label_count();
  const std::int64_t n = static_cast<std::int64_t>(run.email_ids.size());

  std::vector<int> cascade_idx;
  for (const auto& m : config.cascade_models) {
    auto it = run.model_index.find(m);
    if (it == run.model_index.end())
      throw ConfigError("config uses model absent from the cached run: " + m);
    cascade_idx.push_back(it->second);
  }
  for (const auto& label : schema.labels)
    if (!config.plan.count(label.name))
      throw ConfigError("plan does not cover label: " + label.name);

  std::vector<RequestOutcome> outcomes(static_cast<std::size_t>(n) * L);
  parallel_for_capture(n, [&](std::int64_t e) {
    std::map<std::string, int> assigned;
    bool embed_billed = false;
    for (int l = 0; l < L; ++l) {
      const LabelDef& label = schema.labels[static_cast<std::size_t>(l)];
      RequestOutcome& out = outcomes[static_cast<std::size_t>(e) * L + l];
      const SkipRule* fired = find_firing_rule(config.skip_rules, label.name, assigned);
      if (fired) {
        out.value = fired->consequence_value;
        out.code = kSkipped;
      } else if (config.plan.at(label.name) == Method::Cascade) {
        if (cascade_idx.empty()) throw ConfigError("plan routes to an empty cascade");
        for (std::size_t j = 0; j < cascade_idx.size(); ++j) {
          const SoloRecord& rec =
              run.records[static_cast<std::size_t>(cascade_idx[j])]
                         [static_cast<std::size_t>(e) * L + l];
          out.blended += rec.blended;
          if (j == 0) out.entry_confidence = rec.confidence;
          out.value = rec.value;
          out.code = cascade_idx[j];
          if (rec.valid && rec.confidence >= config.thresholds[j]) break;
          // otherwise the last model's value is kept (fallthrough)
        }
      } else {
        int slot = run.binary_slot[static_cast<std::size_t>(l)];
        if (slot < 0 || run.classifier_values.empty())
          throw ConfigError("plan routes to classifier but run has no classifier outputs");
        out.value = run.classifier_values[static_cast<std::size_t>(e)][static_cast<std::size_t>(slot)];
        out.code = kClassifier;
        if (!embed_billed) {
          out.blended += run.embed_blended[static_cast<std::size_t>(e)];
          embed_billed = true;
        }
      }
      assigned[label.name] = out.value;
    }
  });

  double baseline_total = 0.0;
  for (double b : run.baseline_blended) baseline_total += b;

  if (entry_confidences) {
    entry_confidences->clear();
    for (const auto& o : outcomes)
      if (!std::isnan(o.entry_confidence)) entry_confidences->push_back(o.entry_confidence);
  }
  return score_outcomes(config, schema, run.models, outcomes, run.baseline, baseline_total,
                        n);
}

TradeoffPoint evaluate_config(const LabelingConfig& config, const std::vector<Email>& calibration,
                              const LabelTable& baseline, const LabelSchema& schema,
                              Backend& backend, const std::string& baseline_model,
                              const BinaryClassifier* classifier) {
  const int L = static_cast<int>(schema.labels.size());
  const std::int64_t n = static_cast<std::int64_t>(calibration.size());
  for (const auto& email : calibration)
    for (const auto& label : schema.labels)
      if (!baseline.has(email.id, label.name))
        throw MissingBaselineLabel("email " + email.id + " lacks baseline for " + label.name);

  validate_skip_rules(schema, config.skip_rules);
  LabelingEngine engine;
  engine.schema = &schema;
  engine.plan = config.plan;
  engine.skip_rules = config.skip_rules;
  engine.embedding_model = config.embedding_model;
  engine.classifier = classifier;
  CascadeConfig cascade;
  cascade.models = config.cascade_models;
  cascade.thresholds = config.thresholds;
  if (!cascade.models.empty()) cascade.validate(backend);
  for (const auto& label : schema.labels) {
    cascade.label_name = label.name;
    engine.cascades[label.name] = cascade;
  }

  std::vector<std::string> model_names = config.cascade_models;
  std::map<std::string, int> model_idx;
  for (std::size_t i = 0; i < model_names.size(); ++i)
    model_idx[model_names[i]] = static_cast<int>(i);

  std::vector<RequestOutcome> outcomes(static_cast<std::size_t>(n) * L);
  std::vector<int> baseline_values(static_cast<std::size_t>(n) * L);
  std::vector<double> baseline_blended(static_cast<std::size_t>(n));
  parallel_for_capture(n, [&](std::int64_t e) {
    const Email& email = calibration[static_cast<std::size_t>(e)];
    EmailLabels labels = engine.label_email(email, backend);
    for (int l = 0; l < L; ++l) {
      const LabelOutcome& lo = labels.outcomes[static_cast<std::size_t>(l)];
      RequestOutcome& out = outcomes[static_cast<std::size_t>(e) * L + l];
      out.value = lo.value.value;
      out.blended = lo.blended_cost;
      if (lo.provenance == Provenance::Skipped) out.code = kSkipped;
      else if (lo.provenance == Provenance::Classifier) out.code = kClassifier;
      else {
        out.code = model_idx.at(lo.model);
        out.entry_confidence = lo.entry_confidence;
      }
      baseline_values[static_cast<std::size_t>(e) * L + l] =
          baseline.get(email.id, schema.labels[static_cast<std::size_t>(l)].name);
    }
    baseline_blended[static_cast<std::size_t>(e)] =
        baseline_request_blended(backend, baseline_model, email) * L;
  });

  double baseline_total = 0.0;
  for (double b : baseline_blended) baseline_total += b;
  return score_outcomes(config, schema, model_names, outcomes, baseline_values, baseline_total,
                        n);
}

// ---------------------------------------------------------------------------
// rank_models
// ---------------------------------------------------------------------------

std::vector<TradeoffPoint> rank_models(const std::vector<std::string>& pool,
                                       const std::vector<Email>& calibration,
                                       const LabelTable& baseline, const LabelSchema& schema,
                                       Backend& backend, const std::string& baseline_model,
                                       SoloCache& cache) {
  if (pool.empty()) throw ConfigError("rank_models needs a nonempty pool");
  if (calibration.empty()) throw ConfigError("rank_models needs a nonempty calibration set");
  const int L = static_cast<int>(schema.labels.size());
  const std::int64_t n = static_cast<std::int64_t>(calibration.size());

  for (const auto& email : calibration)
    for (const auto& label : schema.labels)
      if (!baseline.has(email.id, label.name))
        throw MissingBaselineLabel("email " + email.id + " lacks baseline for " + label.name);

  std::vector<double> baseline_blended(static_cast<std::size_t>(n));
  for (std::int64_t e = 0; e < n; ++e)
    baseline_blended[static_cast<std::size_t>(e)] =
        baseline_request_blended(backend, baseline_model, calibration[static_cast<std::size_t>(e)]);

  std::vector<TradeoffPoint> points;
  for (const auto& model : pool) {
    const ModelSpec& spec = backend.spec(model);
    std::vector<SoloRecord> records(static_cast<std::size_t>(n) * L);
    parallel_for_capture(n, [&](std::int64_t e) {
      const Email& email = calibration[static_cast<std::size_t>(e)];
      for (int l = 0; l < L; ++l) {
        const LabelDef& label = schema.labels[static_cast<std::size_t>(l)];
        SoloRecord rec;
        try {
          GenerationResult r = backend.generate_label(model, email, label);
          rec.value = r.value.value;
          rec.cost = request_cost(spec, r.usage);
          rec.blended = blended_price(spec) *
                        static_cast<double>(r.usage.input_tokens + r.usage.output_tokens);
          rec.valid = label.contains(rec.value);
          rec.confidence = rec.valid ? logprob_to_confidence(r.token_logprobs) : 0.0;
        } catch (const MalformedOutput& m) {
          rec.value = label.classes.front();
          rec.valid = false;
          rec.cost = request_cost(spec, m.usage);
          rec.blended = blended_price(spec) *
                        static_cast<double>(m.usage.input_tokens + m.usage.output_tokens);
          rec.confidence = 0.0;
        }
        rec.agreed = rec.value == baseline.get(email.id, label.name);
        records[static_cast<std::size_t>(e) * L + l] = rec;
      }
    });
    for (std::int64_t e = 0; e < n; ++e)
      for (int l = 0; l < L; ++l)
        cache.put(model, calibration[static_cast<std::size_t>(e)].id,
                  schema.labels[static_cast<std::size_t>(l)].name,
                  records[static_cast<std::size_t>(e) * L + l]);

    TradeoffPoint point;
    point.config.plan = [&schema] {
      std::map<std::string, Method> plan;
      for (const auto& l : schema.labels) plan[l.name] = Method::Cascade;
      return plan;
    }();
    point.config.cascade_models = {model};
    point.config.thresholds = {0.0};
    point.config_hash = point.config.config_hash();

    double blended_total = 0.0, baseline_total = 0.0, f1_sum = 0.0;
    std::vector<int> preds, refs;
    for (int l = 0; l < L; ++l) {
      preds.clear();
      refs.clear();
      for (std::int64_t e = 0; e < n; ++e) {
        const SoloRecord& rec = records[static_cast<std::size_t>(e) * L + l];
        preds.push_back(rec.value);
        refs.push_back(baseline.get(calibration[static_cast<std::size_t>(e)].id,
                                    schema.labels[static_cast<std::size_t>(l)].name));
        blended_total += rec.blended;
      }
      double f1 = f1_for_label(schema.labels[static_cast<std::size_t>(l)], preds, refs);
      point.per_label_f1[schema.labels[static_cast<std::size_t>(l)].name] = f1;
      f1_sum += f1;
    }
    for (std::int64_t e = 0; e < n; ++e)
      baseline_total += baseline_blended[static_cast<std::size_t>(e)] * L;
    point.quality = f1_sum / static_cast<double>(L);
    CostReduction cr = cost_reduction_factor(blended_total, baseline_total);
    point.cost_reduction = cr.factor;
    point.cost_flagged = cr.zero_method_cost;
    point.usage_fractions[model] = 1.0;
    points.push_back(std::move(point));
  }
  return points;
}

// ---------------------------------------------------------------------------
// threshold pruning and sweep
// ---------------------------------------------------------------------------

std::vector<double> prune_thresholds(const std::vector<SoloRecord>& outputs,
                                     const std::vector<double>& grid, double poor_cutoff,
                                     double min_slice, bool* warned) {
  if (warned) *warned = false;
  if (outputs.empty() || grid.empty()) return grid;

  std::vector<std::pair<double, bool>> by_conf;  // (confidence, agreed)
  by_conf.reserve(outputs.size());
  for (const auto& o : outputs) by_conf.emplace_back(o.confidence, o.agreed);
  std::sort(by_conf.begin(), by_conf.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const double total = static_cast<double>(by_conf.size());
  auto slice_stats = [&by_conf](double v) {  // outputs with confidence < v
    std::size_t count = 0, agreed = 0;
    for (const auto& [conf, ok] : by_conf) {
      if (conf >= v) break;
      ++count;
      if (ok) ++agreed;
    }
    return std::pair<std::size_t, std::size_t>{count, agreed};
  };

  double floor = -1.0;
  for (double v : grid) {
    auto [count, agreed] = slice_stats(v);
    if (count == 0 || static_cast<double>(count) < min_slice * total) continue;
    if (static_cast<double>(agreed) / static_cast<double>(count) < poor_cutoff) {
      floor = v;
      break;
    }
  }
  if (floor < 0.0) return grid;  // nothing poor anywhere: no pruning

  // pruning only means something if quality is acceptable above the floor
  std::size_t above = 0, above_agreed = 0;
  for (const auto& [conf, ok] : by_conf) {
    if (conf < floor) continue;
    ++above;
    if (ok) ++above_agreed;
  }
  if (above == 0 ||
      static_cast<double>(above_agreed) / static_cast<double>(above) < poor_cutoff) {
    if (warned) *warned = true;
    return grid;
  }

  std::vector<double> reduced;
  for (double v : grid)
    if (v >= floor) reduced.push_back(v);
  if (reduced.empty()) {
    if (warned) *warned = true;
    return grid;
  }
  return reduced;
}

std::vector<TradeoffPoint> sweep_thresholds(
    const std::vector<std::string>& cascade_models,
    const std::vector<std::vector<double>>& grids, const CachedRun& run,
    const std::string& embedding_model,
    const std::function<void(const LabelingConfig&)>& probe) {
  if (cascade_models.size() != grids.size())
    throw ConfigError("one threshold grid per cascade model required");
  std::int64_t combos = 1;
  for (const auto& g : grids) {
    if (g.empty()) throw ConfigError("empty threshold grid");
    combos *= static_cast<std::int64_t>(g.size());
  }

  std::map<std::string, Method> plan;
  for (const auto& l : run.schema->labels) plan[l.name] = Method::Cascade;

  std::vector<LabelingConfig> configs(static_cast<std::size_t>(combos));
  for (std::int64_t c = 0; c < combos; ++c) {
    LabelingConfig cfg;
    cfg.plan = plan;
    cfg.cascade_models = cascade_models;
    cfg.embedding_model = embedding_model;
    std::int64_t rem = c;
    cfg.thresholds.resize(grids.size());
    for (std::size_t m = 0; m < grids.size(); ++m) {
      cfg.thresholds[m] = grids[m][static_cast<std::size_t>(rem) % grids[m].size()];
      rem /= static_cast<std::int64_t>(grids[m].size());
    }
    if (probe) probe(cfg);
    configs[static_cast<std::size_t>(c)] = std::move(cfg);
  }

  std::vector<TradeoffPoint> points(static_cast<std::size_t>(combos));
  parallel_for_capture(combos, [&](std::int64_t c) {
    points[static_cast<std::size_t>(c)] =
        evaluate_cached(configs[static_cast<std::size_t>(c)], run);
  });
  return points;
}

// ---------------------------------------------------------------------------
// pareto front and tradeoff choice
// ---------------------------------------------------------------------------

std::vector<TradeoffPoint> pareto_front(std::vector<TradeoffPoint> points) {
  std::sort(points.begin(), points.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    if (a.cost_reduction != b.cost_reduction) return a.cost_reduction > b.cost_reduction;
    if (a.quality != b.quality) return a.quality > b.quality;
    return a.config_hash < b.config_hash;
  });
  std::vector<TradeoffPoint> front;
  double best_quality = -1.0;
  for (auto& p : points) {
    if (p.quality > best_quality) {
      best_quality = p.quality;
      front.push_back(std::move(p));
    }
  }
  return front;
}

TradeoffPoint choose_tradeoff(const std::vector<TradeoffPoint>& front, double w_quality,
                              double w_cost, double cost_anchor) {
  if (front.empty()) throw EmptyFront("cannot choose from an empty front");
  double q_min = front.front().quality, c_min = front.front().cost_reduction;
  for (const auto& p : front) {
    q_min = std::min(q_min, p.quality);
    c_min = std::min(c_min, p.cost_reduction);
  }
  const double q_span = 1.0 - q_min;            // baseline quality anchors the max
  const double c_span = cost_anchor - c_min;    // cheapest selected model anchors the max

  const TradeoffPoint* best = nullptr;
  double best_score = 0.0;
  for (const auto& p : front) {
    double qn = q_span > 0.0 ? (p.quality - q_min) / q_span : 1.0;
    double cn = c_span > 0.0 ? (p.cost_reduction - c_min) / c_span : 1.0;
    double score = w_quality * qn + w_cost * cn;
    if (!best || score > best_score ||
        (score == best_score && p.config_hash < best->config_hash)) {
      best = &p;
      best_score = score;
    }
  }
  return *best;
}

double normalized_hypervolume(const std::vector<TradeoffPoint>& points, double cost_anchor) {
  if (points.empty() || cost_anchor <= 0.0) return 0.0;
  std::vector<std::pair<double, double>> norm;  // (c_hat, q_hat)
  for (const auto& p : points)
    norm.emplace_back(std::clamp(p.cost_reduction / cost_anchor, 0.0, 1.0),
                      std::clamp(p.quality, 0.0, 1.0));
  std::sort(norm.begin(), norm.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double area = 0.0, best_q = 0.0;
  for (const auto& [c, q] : norm) {
    if (q > best_q) {
      area += (q - best_q) * c;
      best_q = q;
    }
  }
  return area;
}

// ---------------------------------------------------------------------------
// skip rules and method assignment
// ---------------------------------------------------------------------------

std::vector<SkipRule> mine_skip_rules(const LabelSchema& schema,
                                      const std::vector<Email>& calibration,
                                      const LabelTable& baseline, double epsilon,
                                      double min_support) {
  if (epsilon <= 0.0 || epsilon >= 0.5) throw ConfigError("epsilon must lie in (0, 0.5)");
  if (min_support <= 0.0 || min_support >= 1.0)
    throw ConfigError("min_support must lie in (0, 1)");
  if (calibration.empty()) throw ConfigError("cannot mine rules from an empty calibration set");

  const double n = static_cast<double>(calibration.size());
  std::vector<SkipRule> rules;
  for (std::size_t i = 0; i < schema.labels.size(); ++i) {
    const LabelDef& cond = schema.labels[i];
    for (std::size_t j = i + 1; j < schema.labels.size(); ++j) {
      const LabelDef& cons = schema.labels[j];
      for (int v : cond.classes) {
        std::int64_t cond_count = 0;
        std::map<int, std::int64_t> cons_counts;
        for (const auto& email : calibration) {
          if (baseline.get(email.id, cond.name) != v) continue;
          ++cond_count;
          ++cons_counts[baseline.get(email.id, cons.name)];
        }
        double support = static_cast<double>(cond_count) / n;
        if (cond_count == 0 || support < min_support) continue;
        auto best = std::max_element(
            cons_counts.begin(), cons_counts.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
        double concentration =
            static_cast<double>(best->second) / static_cast<double>(cond_count);
        if (concentration >= 1.0 - epsilon) {
          SkipRule rule;
          rule.condition_label = cond.name;
          rule.condition_value = v;
          rule.consequence_label = cons.name;
          rule.consequence_value = best->first;
          rule.support = support;
          rule.confidence = concentration;
          rules.push_back(std::move(rule));
        }
      }
    }
  }
  return rules;
}

std::map<std::string, Method> assign_methods(const LabelSchema& schema,
                                             const std::map<std::string, double>& classifier_f1,
                                             const std::map<std::string, double>& cascade_f1,
                                             double tolerance) {
  std::map<std::string, Method> plan;
  for (const auto& label : schema.labels) {
    if (!label.is_binary()) {
      plan[label.name] = Method::Cascade;
      continue;
    }
    auto clf = classifier_f1.find(label.name);
    auto cas = cascade_f1.find(label.name);
    if (clf == classifier_f1.end() || cas == cascade_f1.end()) {
      plan[label.name] = Method::Cascade;
      continue;
    }
    // the classifier is the cheaper method; it wins ties
    plan[label.name] = clf->second >= cas->second - tolerance ? Method::Classifier
                                                              : Method::Cascade;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Profiler
// ---------------------------------------------------------------------------

Profiler::Profiler(const LabelSchema& schema, ProfilerKnobs knobs,
                   OperatorConstraints constraints, Backend& backend)
    : schema_(schema), knobs_(std::move(knobs)), constraints_(std::move(constraints)),
      backend_(backend) {
  schema_.validate();
  if (knobs_.model_pool.empty()) throw ConfigError("profiler needs a model pool");
  if (knobs_.threshold_grid.empty()) knobs_.threshold_grid = ProfilerKnobs::default_grid();
  if (!std::is_sorted(knobs_.threshold_grid.begin(), knobs_.threshold_grid.end()))
    throw ConfigError("threshold grid must be sorted ascending");
}

std::vector<std::string> Profiler::constrained_pool() const {
  std::vector<std::string> pool;
  for (const auto& name : knobs_.model_pool) {
    if (constraints_.allowed_model_pool) {
      const auto& allowed = *constraints_.allowed_model_pool;
      if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) continue;
    }
    const std::string& family = backend_.spec(name).family;
    bool banned = std::find(constraints_.banned_families.begin(),
                            constraints_.banned_families.end(),
                            family) != constraints_.banned_families.end();
    if (banned) continue;
    pool.push_back(name);
  }
  if (pool.empty()) throw ConfigError("operator constraints leave an empty model pool");
  if (constraints_.allowed_model_pool)
    for (const auto& name : *constraints_.allowed_model_pool)
      if (std::find(knobs_.model_pool.begin(), knobs_.model_pool.end(), name) ==
          knobs_.model_pool.end())
        throw ConfigError("allowed_model_pool references unregistered model: " + name);
  return pool;
}

std::vector<std::string> Profiler::select_cascade(
    const std::vector<TradeoffPoint>& solo_points) const {
  auto front = pareto_front(solo_points);
  std::vector<const TradeoffPoint*> selected;
  for (const auto& p : front) selected.push_back(&p);

  if (constraints_.max_cascade_size &&
      static_cast<int>(selected.size()) > *constraints_.max_cascade_size) {
    // keep the quality anchor, fill the rest with the biggest cost reducers
    std::sort(selected.begin(), selected.end(), [](const auto* a, const auto* b) {
      if (a->quality != b->quality) return a->quality > b->quality;
      return a->config_hash < b->config_hash;
    });
    std::vector<const TradeoffPoint*> kept = {selected.front()};
    std::vector<const TradeoffPoint*> rest(selected.begin() + 1, selected.end());
    std::sort(rest.begin(), rest.end(), [](const auto* a, const auto* b) {
      if (a->cost_reduction != b->cost_reduction) return a->cost_reduction > b->cost_reduction;
      return a->config_hash < b->config_hash;
    });
    for (const auto* p : rest) {
      if (static_cast<int>(kept.size()) >= *constraints_.max_cascade_size) break;
      kept.push_back(p);
    }
    selected = std::move(kept);
  }

  std::vector<std::string> models;
  for (const auto* p : selected) models.push_back(p->config.cascade_models.front());
  std::sort(models.begin(), models.end(), [this](const std::string& a, const std::string& b) {
    return backend_.spec(a).size_rank < backend_.spec(b).size_rank;
  });
  return models;
}

CachedRun Profiler::build_run(const std::vector<Email>& emails, const LabelTable& baseline,
                              const std::vector<std::string>& models, const SoloCache& cache,
                              const BinaryClassifier* classifier) const {
  CachedRun run;
  run.schema = &schema_;
  const int L = static_cast<int>(schema_.labels.size());
  run.models = models;
  for (std::size_t i = 0; i < models.size(); ++i)
    run.model_index[models[i]] = static_cast<int>(i);
  run.records.resize(models.size());

  run.binary_slot.assign(static_cast<std::size_t>(L), -1);
  int slot = 0;
  for (int l = 0; l < L; ++l)
    if (schema_.labels[static_cast<std::size_t>(l)].is_binary())
      run.binary_slot[static_cast<std::size_t>(l)] = slot++;

  for (const auto& email : emails) {
    run.email_ids.push_back(email.id);
    for (const auto& label : schema_.labels)
      run.baseline.push_back(baseline.get(email.id, label.name));
  }
  for (std::size_t m = 0; m < models.size(); ++m) {
    run.records[m].reserve(run.baseline.size());
    for (const auto& email : emails)
      for (const auto& label : schema_.labels)
        run.records[m].push_back(cache.get(models[m], email.id, label.name));
  }
  for (const auto& email : emails) {
    double b = baseline_request_blended(backend_, knobs_.baseline_model, email);
    for (int l = 0; l < L; ++l) run.baseline_blended.push_back(b);
  }

  const ModelSpec* embed_spec =
      knobs_.embedding_model.empty() ? nullptr : &backend_.spec(knobs_.embedding_model);
  for (const auto& email : emails) {
    double blended = 0.0;
    if (embed_spec) {
      TokenUsage usage{std::max<std::int64_t>(1, email.token_count_estimate), 0};
      if (auto hint = backend_.usage_hint(knobs_.embedding_model))
        usage = TokenUsage{hint->input_tokens, 0};
      blended = blended_price(*embed_spec) *
                static_cast<double>(usage.input_tokens + usage.output_tokens);
    }
    run.embed_blended.push_back(blended);
  }

  if (classifier) {
    run.classifier_values.resize(emails.size());
    for (std::size_t e = 0; e < emails.size(); ++e) {
      auto embedding = backend_.embed(knobs_.embedding_model, emails[e]);
      run.classifier_values[e] = classifier->predict_values(embedding);
    }
  }
  return run;
}

ProfileResult Profiler::profile(const std::vector<Email>& calibration,
                                const LabelTable& baseline) {
  if (calibration.empty()) throw ConfigError("empty calibration set");
  ProfileResult result;
  const int L = static_cast<int>(schema_.labels.size());

  auto pool = constrained_pool();
  SoloCache cache;
  result.solo_points = rank_models(pool, calibration, baseline, schema_, backend_,
                                   knobs_.baseline_model, cache);
  if (on_config_evaluated)
    for (const auto& p : result.solo_points) on_config_evaluated(p.config);

  result.cascade_models = select_cascade(result.solo_points);

  // cost anchor: solo factor of the cheapest (first) selected model
  result.cost_anchor = 1.0;
  for (const auto& p : result.solo_points)
    if (p.config.cascade_models.front() == result.cascade_models.front())
      result.cost_anchor = p.cost_reduction;

  // per-model reduced grids from the solo confidences
  CachedRun pool_run = build_run(calibration, baseline, result.cascade_models, cache, nullptr);
  for (std::size_t m = 0; m < result.cascade_models.size(); ++m) {
    bool warned = false;
    auto reduced = prune_thresholds(pool_run.records[m], knobs_.threshold_grid,
                                    knobs_.prune_poor_cutoff, knobs_.prune_min_slice, &warned);
    result.reduced_grids.push_back(std::move(reduced));
    result.prune_warnings.push_back(warned);
  }

  result.swept = sweep_thresholds(result.cascade_models, result.reduced_grids, pool_run,
                                  knobs_.embedding_model, on_config_evaluated);
  result.front = pareto_front(result.swept);
  result.balanced =
      choose_tradeoff(result.front, constraints_.w_quality, constraints_.w_cost,
                      result.cost_anchor);

  // classifier over frozen embeddings for the binary labels
  auto binary_names = schema_.binary_label_names();
  const BinaryClassifier* classifier_ptr = nullptr;
  if (!binary_names.empty() && !knobs_.embedding_model.empty()) {
    std::vector<double> embeddings;
    std::vector<int> targets;
    int dim = 0;
    for (const auto& email : calibration) {
      auto v = backend_.embed(knobs_.embedding_model, email);
      dim = static_cast<int>(v.size());
      embeddings.insert(embeddings.end(), v.begin(), v.end());
      for (const auto& name : binary_names) targets.push_back(baseline.get(email.id, name));
    }
    result.classifier = BinaryClassifier::train(
        embeddings, static_cast<int>(calibration.size()), dim, targets, binary_names,
        knobs_.classifier);
    classifier_ptr = &*result.classifier;

    // in-sample per-label F1 on the calibration set
    std::vector<std::vector<int>> preds(binary_names.size());
    std::vector<std::vector<int>> refs(binary_names.size());
    for (std::size_t e = 0; e < calibration.size(); ++e) {
      auto embedding = backend_.embed(knobs_.embedding_model, calibration[e]);
      auto values = classifier_ptr->predict_values(embedding);
      for (std::size_t b = 0; b < binary_names.size(); ++b) {
        preds[b].push_back(values[b]);
        refs[b].push_back(baseline.get(calibration[e].id, binary_names[b]));
      }
    }
    for (std::size_t b = 0; b < binary_names.size(); ++b)
      result.classifier_f1[binary_names[b]] = f1_binary(preds[b], refs[b]);
  }

  auto plan = assign_methods(schema_, result.classifier_f1, result.balanced.per_label_f1,
                             knobs_.method_tolerance);
  auto rules = mine_skip_rules(schema_, calibration, baseline, knobs_.skip_epsilon,
                               knobs_.skip_min_support);

  result.chosen.plan = std::move(plan);
  result.chosen.cascade_models = result.balanced.config.cascade_models;
  result.chosen.thresholds = result.balanced.config.thresholds;
  result.chosen.skip_rules = std::move(rules);
  result.chosen.embedding_model = knobs_.embedding_model;
  if (on_config_evaluated) on_config_evaluated(result.chosen);

  CachedRun final_run =
      build_run(calibration, baseline, result.cascade_models, cache, classifier_ptr);
  result.chosen_point = evaluate_cached(result.chosen, final_run, &result.drift_reference);

  // structural search-space accounting
  const double P = static_cast<double>(pool.size());
  const double G = static_cast<double>(knobs_.threshold_grid.size());
  result.stats.exhaustive_configs = std::pow(1.0 + G, P) - 1.0;
  result.stats.independent_configs =
      P + std::pow(G, static_cast<double>(result.cascade_models.size()));
  double pruned_product = 1.0;
  for (const auto& g : result.reduced_grids) pruned_product *= static_cast<double>(g.size());
  result.stats.pruned_configs = P + pruned_product;
  result.stats.reduction_vs_exhaustive =
      result.stats.exhaustive_configs / result.stats.pruned_configs;
  result.stats.swept_combinations = static_cast<std::int64_t>(result.swept.size());
  result.stats.generate_calls =
      static_cast<std::int64_t>(pool.size()) * static_cast<std::int64_t>(calibration.size()) * L;
  result.stats.embed_calls = static_cast<std::int64_t>(calibration.size());
  return result;
}

Profiler::GrowthResult Profiler::grow(const std::vector<Email>& stream,
                                      const LabelTable& stream_labels,
                                      const std::vector<Email>& validation,
                                      const LabelTable& validation_labels) {
  if (validation.empty()) throw ConfigError("grow_calibration needs a validation set");
  std::set<std::string> validation_ids;
  for (const auto& e : validation) validation_ids.insert(e.id);
  for (const auto& e : stream)
    if (validation_ids.count(e.id))
      throw ConfigError("validation set overlaps the calibration stream: " + e.id);

  const CalibrationSchedule& sched = knobs_.schedule;
  if (sched.initial < 1 || sched.increment < 1 || sched.cap < 1)
    throw ConfigError("calibration schedule values must be positive");

  GrowthResult out;
  const int available = static_cast<int>(stream.size());
  const int cap = std::min(sched.cap, available);
  int size = std::min(sched.initial, cap);
  int below_count = 0;
  double prev_hv = -1.0;
  bool first = true;

  for (;;) {
    std::vector<Email> calibration(stream.begin(), stream.begin() + size);
    out.profile = profile(calibration, stream_labels);
    out.calibration_size = size;

    // score the front on the held-out validation set, from fresh solo runs
    SoloCache validation_cache;
    rank_models(out.profile.cascade_models, validation, validation_labels, schema_, backend_,
                knobs_.baseline_model, validation_cache);
    CachedRun validation_run =
        build_run(validation, validation_labels, out.profile.cascade_models, validation_cache,
                  nullptr);
    std::vector<TradeoffPoint> validation_points;
    for (const auto& p : out.profile.front)
      validation_points.push_back(evaluate_cached(p.config, validation_run));
    double hv = normalized_hypervolume(validation_points, out.profile.cost_anchor);

    GrowthRound round;
    round.size = size;
    round.hypervolume = hv;
    round.improvement = first ? hv : hv - prev_hv;
    TradeoffPoint balanced_val =
        evaluate_cached(out.profile.balanced.config, validation_run);
    round.balanced_validation_quality = balanced_val.quality;
    out.rounds.push_back(round);

    if (!first && round.improvement < sched.delta) {
      ++below_count;
      if (below_count >= sched.confirmation_window) {
        out.converged = true;
        return out;
      }
    } else if (!first) {
      below_count = 0;
    }
    prev_hv = hv;
    first = false;

    if (size >= cap) {
      out.converged = false;  // cap reached without convergence
      return out;
    }
    size = std::min(size + sched.increment, cap);
  }
}

}  // namespace labelcast
