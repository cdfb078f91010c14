#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "labelcast/backend.hpp"
#include "labelcast/cascade.hpp"
#include "labelcast/classifier.hpp"
#include "labelcast/core.hpp"
#include "labelcast/dataset.hpp"

namespace labelcast {

struct CalibrationSchedule {
  int initial = 100;
  int increment = 100;
  int cap = 1000;
  double delta = 0.01;          // hypervolume gain that still counts as progress
  int confirmation_window = 2;  // consecutive below-delta increments before stopping
};

struct ProfilerKnobs {
  std::vector<std::string> model_pool;  // generative candidates, by name
  std::string baseline_model;
  std::string embedding_model;
  std::vector<double> threshold_grid;  // sorted ascending
  CalibrationSchedule schedule;
  // method-per-label and cascade order are derived during profiling

  double skip_epsilon = 0.05;
  double skip_min_support = 0.05;
  double method_tolerance = 0.02;  // classifier may trail the cascade by this much
  double prune_poor_cutoff = 0.5;
  double prune_min_slice = 0.01;  // a slice this small is noise, not evidence
  TrainingConfig classifier;

  static std::vector<double> default_grid();  // 0.00 .. 1.00 step 0.05
};

struct OperatorConstraints {
  std::optional<std::vector<std::string>> allowed_model_pool;
  std::vector<std::string> banned_families;
  std::optional<int> max_cascade_size;
  double w_quality = 1.0;
  double w_cost = 1.0;
};

// Full labeling configuration: per-label method plan, one shared cascade
// (models ascending by size_rank plus thresholds), mined skip rules.
struct LabelingConfig {
  std::map<std::string, Method> plan;
  std::vector<std::string> cascade_models;
  std::vector<double> thresholds;
  std::vector<SkipRule> skip_rules;
  std::string embedding_model;

  std::string config_hash() const;
};

struct TradeoffPoint {
  LabelingConfig config;
  double quality = 0.0;         // average F1 vs baseline labels
  double cost_reduction = 1.0;  // baseline blended cost / config blended cost
  bool cost_flagged = false;    // sentinel applied (zero config cost)
  std::map<std::string, double> per_label_f1;
  std::map<std::string, double> usage_fractions;  // serving model -> request share
  double skipped_fraction = 0.0;
  std::string config_hash;
};

// ---------------------------------------------------------------------------
// cached solo outputs
// ---------------------------------------------------------------------------

// One (model, email, label) generation captured during rank_models. Threshold
// sweeps and final evaluations replay these tuples instead of calling the
// backend again.
struct SoloRecord {
  int value = 0;
  double confidence = 0.0;
  bool valid = true;  // in-class, well-formed output
  Micros cost = 0;
  double blended = 0.0;
  bool agreed = false;  // matched the baseline label
};

class SoloCache {
 public:
  void put(const std::string& model, const std::string& email_id, const std::string& label,
           SoloRecord r);
  const SoloRecord& get(const std::string& model, const std::string& email_id,
                        const std::string& label) const;
  bool has(const std::string& model, const std::string& email_id, const std::string& label) const;

 private:
  std::map<std::string, std::map<std::string, std::map<std::string, SoloRecord>>> by_model_;
};

// Flat indexed view over the cache for one email set: request r = email * L + label.
struct CachedRun {
  const LabelSchema* schema = nullptr;
  std::vector<std::string> email_ids;
  std::vector<int> baseline;                      // per request
  std::vector<std::string> models;                // cached models
  std::map<std::string, int> model_index;
  std::vector<std::vector<SoloRecord>> records;   // [model][request]
  std::vector<double> baseline_blended;           // per request
  std::vector<double> embed_blended;              // per email
  std::vector<std::vector<int>> classifier_values;  // [email][binary slot]; may be empty
  std::vector<int> binary_slot;                   // label index -> slot or -1

  int label_count() const { return schema ? static_cast<int>(schema->labels.size()) : 0; }
  std::size_t requests() const { return baseline.size(); }
};

// ---------------------------------------------------------------------------
// profiling operations
// ---------------------------------------------------------------------------

/// Runs the full labeling pipeline live against a backend and scores it
/// against the baseline labels.
TradeoffPoint evaluate_config(const LabelingConfig& config, const std::vector<Email>& calibration,
                              const LabelTable& baseline, const LabelSchema& schema,
                              Backend& backend, const std::string& baseline_model,
                              const BinaryClassifier* classifier);

/// Same scoring, replayed from cached solo outputs; no backend calls.
TradeoffPoint evaluate_cached(const LabelingConfig& config, const CachedRun& run,
                              std::vector<double>* entry_confidences = nullptr);

/// Solo-evaluates every pool model (threshold-0 cascade of one) once per
/// label per email, filling the cache. Returns one tradeoff point per model.
std::vector<TradeoffPoint> rank_models(const std::vector<std::string>& pool,
                                       const std::vector<Email>& calibration,
                                       const LabelTable& baseline, const LabelSchema& schema,
                                       Backend& backend, const std::string& baseline_model,
                                       SoloCache& cache);

/// Drops grid values below the model's confidence floor. The floor is the
/// smallest grid value v whose below-v outputs (at least min_slice of all
/// outputs) agree with the baseline less often than poor_cutoff. When even
/// the outputs at or above the floor are poor, pruning is meaningless: the
/// full grid is returned and *warned is set.
std::vector<double> prune_thresholds(const std::vector<SoloRecord>& outputs,
                                     const std::vector<double>& grid, double poor_cutoff,
                                     double min_slice, bool* warned = nullptr);

/// Evaluates the cascade for every combination of the per-model grids,
/// entirely from cached tuples. Combination order is the mixed-radix count
/// over the grids, so results are deterministic.
std::vector<TradeoffPoint> sweep_thresholds(
    const std::vector<std::string>& cascade_models,
    const std::vector<std::vector<double>>& grids, const CachedRun& run,
    const std::string& embedding_model,
    const std::function<void(const LabelingConfig&)>& probe = nullptr);

/// Maximal set under (quality, cost_reduction) dominance; exact ties on both
/// coordinates keep the lexicographically smallest config hash.
std::vector<TradeoffPoint> pareto_front(std::vector<TradeoffPoint> points);

/// Min-max normalizes the front (quality against the baseline's 1.0 anchor,
/// cost reduction against the cheapest selected model's factor) and returns
/// the argmax of w_q * q + w_c * c. (1,0) and (0,1) degenerate to the
/// quality-focus and cost-focus picks.
TradeoffPoint choose_tradeoff(const std::vector<TradeoffPoint>& front, double w_quality,
                              double w_cost, double cost_anchor);

/// Emits one rule per (condition label, condition value, consequence label)
/// whose consequence concentration reaches 1 - epsilon with enough support.
/// Conditions only point forward in schema order.
std::vector<SkipRule> mine_skip_rules(const LabelSchema& schema,
                                      const std::vector<Email>& calibration,
                                      const LabelTable& baseline, double epsilon,
                                      double min_support);

/// Multiclass labels go to the cascade; binary labels go to the classifier
/// unless its per-label F1 trails the cascade's by more than the tolerance.
std::map<std::string, Method> assign_methods(const LabelSchema& schema,
                                             const std::map<std::string, double>& classifier_f1,
                                             const std::map<std::string, double>& cascade_f1,
                                             double tolerance);

/// Dominated area of the front in normalized coordinates, reference (0,0).
double normalized_hypervolume(const std::vector<TradeoffPoint>& points, double cost_anchor);

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

struct SearchStats {
  std::int64_t generate_calls = 0;  // rank_models only; the sweep adds none
  std::int64_t embed_calls = 0;
  std::int64_t swept_combinations = 0;
  double exhaustive_configs = 0.0;   // sum over model subsets of grid products
  double independent_configs = 0.0;  // solo ranking + full-grid sweep
  double pruned_configs = 0.0;       // solo ranking + reduced-grid sweep
  double reduction_vs_exhaustive = 0.0;
};

struct ProfileResult {
  std::vector<TradeoffPoint> solo_points;
  std::vector<std::string> cascade_models;
  std::vector<std::vector<double>> reduced_grids;
  std::vector<bool> prune_warnings;
  std::vector<TradeoffPoint> swept;
  std::vector<TradeoffPoint> front;
  TradeoffPoint balanced;
  std::map<std::string, double> classifier_f1;
  LabelingConfig chosen;
  TradeoffPoint chosen_point;
  std::vector<double> drift_reference;  // entry-model confidences, chosen config
  double cost_anchor = 1.0;
  SearchStats stats;
  std::optional<BinaryClassifier> classifier;
};

class Profiler {
 public:
  Profiler(const LabelSchema& schema, ProfilerKnobs knobs, OperatorConstraints constraints,
           Backend& backend);

  /// One full profiling pass over a fixed calibration set.
  ProfileResult profile(const std::vector<Email>& calibration, const LabelTable& baseline);

  struct GrowthRound {
    int size = 0;
    double hypervolume = 0.0;
    double improvement = 0.0;
    double balanced_validation_quality = 0.0;
  };
  struct GrowthResult {
    ProfileResult profile;
    std::vector<GrowthRound> rounds;
    int calibration_size = 0;
    bool converged = false;  // false = cap reached without convergence
  };

  /// Incrementally grows the calibration set from the stream until the
  /// validation-front hypervolume stops improving, or the cap is hit.
  /// Stream and validation must be disjoint by email id.
  GrowthResult grow(const std::vector<Email>& stream, const LabelTable& stream_labels,
                    const std::vector<Email>& validation, const LabelTable& validation_labels);

  /// Invoked for every configuration the profiler evaluates; lets tests prove
  /// that no constraint-violating config is ever scored.
  std::function<void(const LabelingConfig&)> on_config_evaluated;

  const ProfilerKnobs& knobs() const { return knobs_; }
  const OperatorConstraints& constraints() const { return constraints_; }

 private:
  std::vector<std::string> constrained_pool() const;
  std::vector<std::string> select_cascade(const std::vector<TradeoffPoint>& solo_points) const;
  CachedRun build_run(const std::vector<Email>& emails, const LabelTable& baseline,
                      const std::vector<std::string>& models, const SoloCache& cache,
                      const BinaryClassifier* classifier) const;

  const LabelSchema& schema_;
  ProfilerKnobs knobs_;
  OperatorConstraints constraints_;
  Backend& backend_;
};

}  // namespace labelcast
