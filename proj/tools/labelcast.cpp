// labelcast CLI: mock-world | profile | label | evaluate | simulate-load | drift-check
// Exit codes: 0 success, 2 configuration error, 3 backend failure.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "labelcast/config.hpp"
#include "labelcast/drift.hpp"
#include "labelcast/kernels.hpp"
#include "labelcast/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace labelcast;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
}

json point_to_json(const TradeoffPoint& p) {
  json j;
  j["quality"] = p.quality;
  j["cost_reduction"] = p.cost_reduction;
  j["cost_flagged"] = p.cost_flagged;
  j["config_hash"] = p.config_hash.empty() ? p.config.config_hash() : p.config_hash;
  j["per_label_f1"] = p.per_label_f1;
  j["usage_fractions"] = p.usage_fractions;
  j["skipped_fraction"] = p.skipped_fraction;
  j["cascade_models"] = p.config.cascade_models;
  j["thresholds"] = p.config.thresholds;
  return j;
}

struct LoadedWorld {
  AppConfig config;
  std::vector<Email> emails;
  std::shared_ptr<LabelTable> baseline;
  std::unique_ptr<Backend> backend;
};

std::vector<Email> load_emails_any(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return load_emails_csv(path);
  return load_emails_jsonl(path);
}

LoadedWorld load_world(const std::string& config_path) {
  LoadedWorld w;
  w.config = load_config(config_path);
  w.emails = load_emails_any(w.config.resolve(w.config.paths.emails));
  w.baseline = std::make_shared<LabelTable>(
      load_labels_jsonl(w.config.resolve(w.config.paths.baseline_labels)));
  w.backend = make_backend(w.config, w.baseline);
  return w;
}

int cmd_mock_world(const std::string& out_dir, std::uint64_t seed, int emails) {
  fs::create_directories(out_dir);
  AppConfig config = default_mock_config(seed);
  if (emails > 0) config.world.emails = emails;
  MockWorld world = generate_mock_world(config.world);
  config.schema = world.schema;

  save_config(config, (fs::path(out_dir) / "config.json").string());
  save_emails_jsonl(world.emails, (fs::path(out_dir) / config.paths.emails).string());
  save_labels_jsonl(*world.baseline, (fs::path(out_dir) / config.paths.baseline_labels).string());
  auto trace = generate_arrival_trace(seed, 48, 120, 200, 5,
                                      {"standard", "premium", "batch"});
  save_trace_csv(trace, (fs::path(out_dir) / config.paths.arrivals).string());
  std::cout << "mock world: " << world.emails.size() << " emails, "
            << trace.size() << " arrivals, seed " << seed << "\n";
  return 0;
}

int cmd_profile(const std::string& config_path, const std::string& out_dir, std::int64_t now_ms) {
  fs::create_directories(out_dir);
  LoadedWorld w = load_world(config_path);
  const AppConfig& config = w.config;

  std::string cache_path = (fs::path(out_dir) / config.paths.embedding_cache).string();
  w.backend->embedding_cache().load(cache_path);

  int validation = std::min<int>(config.validation_count,
                                 static_cast<int>(w.emails.size()) / 2);
  std::vector<Email> validation_set(w.emails.begin(), w.emails.begin() + validation);
  std::vector<Email> stream(w.emails.begin() + validation, w.emails.end());

  OperatorConstraints constraints =
      config.enforce_constraints ? config.constraints : OperatorConstraints{};
  constraints.w_quality = config.constraints.w_quality;
  constraints.w_cost = config.constraints.w_cost;
  Profiler profiler(config.schema, config.knobs, constraints, *w.backend);
  auto growth = profiler.grow(stream, *w.baseline, validation_set, *w.baseline);
  ProfileResult& result = growth.profile;

  save_labeling_config(result.chosen, (fs::path(out_dir) / "chosen_config.json").string());
  if (result.classifier)
    result.classifier->save((fs::path(out_dir) / "classifier.bin").string());

  std::string csv = "quality,cost_reduction,config_hash\n";
  for (const auto& p : result.front)
    csv += fmt_double(p.quality) + "," + fmt_double(p.cost_reduction) + "," + p.config_hash + "\n";
  write_file((fs::path(out_dir) / "pareto.csv").string(), csv);

  DriftState drift;
  drift.reference_sample = result.drift_reference;
  drift.last_profile_time_ms = now_ms;
  drift.period_ms = config.drift.period_ms;
  drift.swd_threshold = config.drift.swd_threshold;
  save_drift_state(drift, (fs::path(out_dir) / "drift_state.json").string());

  json report;
  report["calibration_size"] = growth.calibration_size;
  report["converged"] = growth.converged;
  json rounds = json::array();
  for (const auto& r : growth.rounds)
    rounds.push_back({{"size", r.size},
                      {"hypervolume", r.hypervolume},
                      {"improvement", r.improvement},
                      {"balanced_validation_quality", r.balanced_validation_quality}});
  report["growth"] = rounds;
  report["cascade_models"] = result.cascade_models;
  json grids = json::array();
  for (std::size_t m = 0; m < result.reduced_grids.size(); ++m)
    grids.push_back({{"model", result.cascade_models[m]},
                     {"grid", result.reduced_grids[m]},
                     {"pruning_fallback", static_cast<bool>(result.prune_warnings[m])}});
  report["reduced_grids"] = grids;
  json solo = json::array();
  for (const auto& p : result.solo_points) solo.push_back(point_to_json(p));
  report["solo_points"] = solo;
  report["front_size"] = result.front.size();
  report["balanced"] = point_to_json(result.balanced);
  report["chosen"] = point_to_json(result.chosen_point);
  report["classifier_f1"] = result.classifier_f1;
  report["cost_anchor"] = result.cost_anchor;
  json skip = json::array();
  for (const auto& r : result.chosen.skip_rules)
    skip.push_back({{"condition_label", r.condition_label},
                    {"condition_value", r.condition_value},
                    {"consequence_label", r.consequence_label},
                    {"consequence_value", r.consequence_value},
                    {"support", r.support},
                    {"confidence", r.confidence}});
  report["skip_rules"] = skip;
  // search-space accounting: exhaustive -> knob independence -> pruned grids
  const SearchStats& st = result.stats;
  report["search_space"] = {
      {"exhaustive_configs", st.exhaustive_configs},
      {"independent_configs", st.independent_configs},
      {"pruned_configs", st.pruned_configs},
      {"reduction_vs_exhaustive", st.reduction_vs_exhaustive},
      {"swept_combinations", st.swept_combinations},
      {"generate_calls_bound", st.generate_calls},
      {"embed_calls_bound", st.embed_calls}};
  json counters = json::object();
  for (const auto& [model, c] : w.backend->counters().snapshot())
    counters[model] = {{"generate_calls", c.generate_calls},
                       {"embed_calls", c.embed_calls},
                       {"billed_micros", c.billed}};
  report["backend_counters"] = counters;
  write_file((fs::path(out_dir) / "profile_report.json").string(), report.dump(2) + "\n");

  w.backend->embedding_cache().save(cache_path);
  std::cout << "profiled: cascade " << result.cascade_models.size() << " models, front "
            << result.front.size() << " points, chosen quality "
            << fmt_double(result.chosen_point.quality) << " at "
            << fmt_double(result.chosen_point.cost_reduction) << "x\n";
  return 0;
}

int cmd_label(const std::string& config_path, const std::string& chosen_path,
              const std::string& classifier_path, const std::string& out_dir) {
  fs::create_directories(out_dir);
  LoadedWorld w = load_world(config_path);
  LabelingConfig chosen = load_labeling_config(chosen_path);

  std::string cache_path = (fs::path(out_dir) / w.config.paths.embedding_cache).string();
  w.backend->embedding_cache().load(cache_path);

  std::optional<BinaryClassifier> classifier;
  std::string clf_path = classifier_path;
  if (clf_path.empty()) {
    fs::path sibling = fs::path(chosen_path).parent_path() / "classifier.bin";
    if (fs::exists(sibling)) clf_path = sibling.string();
  }
  if (!clf_path.empty()) classifier = BinaryClassifier::load(clf_path);

  validate_skip_rules(w.config.schema, chosen.skip_rules);
  LabelingEngine engine;
  engine.schema = &w.config.schema;
  engine.plan = chosen.plan;
  engine.skip_rules = chosen.skip_rules;
  engine.embedding_model = chosen.embedding_model;
  engine.classifier = classifier ? &*classifier : nullptr;
  CascadeConfig cascade;
  cascade.models = chosen.cascade_models;
  cascade.thresholds = chosen.thresholds;
  if (!cascade.models.empty()) {
    cascade.validate(*w.backend);
    for (const auto& label : w.config.schema.labels) {
      cascade.label_name = label.name;
      engine.cascades[label.name] = cascade;
    }
  }

  std::vector<EmailLabels> results(w.emails.size());
  std::exception_ptr err;
  std::mutex err_mu;
  kernels::parallel_for(static_cast<std::int64_t>(w.emails.size()), [&](std::int64_t i) {
    try {
      results[static_cast<std::size_t>(i)] =
          engine.label_email(w.emails[static_cast<std::size_t>(i)], *w.backend);
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (!err) err = std::current_exception();
    }
  });
  if (err) std::rethrow_exception(err);

  LabelTable produced;
  std::ostringstream traces;
  for (const auto& r : results) {
    for (const auto& o : r.outcomes) {
      produced.set(r.email_id, o.value.label_name, o.value.value);
      json t;
      t["email_id"] = r.email_id;
      t["label_name"] = o.value.label_name;
      t["value"] = o.value.value;
      t["provenance"] = o.provenance == Provenance::Skipped ? "skipped"
                        : o.provenance == Provenance::Classifier ? "classifier"
                                                                 : "cascade";
      t["model"] = o.model;
      t["confidence"] = o.confidence;
      t["entry_confidence"] = o.entry_confidence;
      t["fell_through"] = o.fell_through;
      t["cost_micros"] = o.cost;
      t["blended_cost"] = o.blended_cost;
      if (!o.attempts.empty()) {
        json attempts = json::array();
        for (const auto& a : o.attempts)
          attempts.push_back({{"model", a.model},
                              {"confidence", a.confidence},
                              {"value", a.value},
                              {"cost_micros", a.cost}});
        t["attempts"] = attempts;
      }
      traces << t.dump() << '\n';
    }
  }
  save_labels_jsonl(produced, (fs::path(out_dir) / "labels.jsonl").string());
  write_file((fs::path(out_dir) / "traces.jsonl").string(), traces.str());
  w.backend->embedding_cache().save(cache_path);
  std::cout << "labeled " << w.emails.size() << " emails with config "
            << chosen.config_hash() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& labels_path,
                 const std::string& traces_path, const std::string& chosen_path,
                 const std::string& out_dir, bool with_oracle) {
  fs::create_directories(out_dir);
  LoadedWorld w = load_world(config_path);
  LabelTable produced = load_labels_jsonl(labels_path);

  const LabelSchema& schema = w.config.schema;
  EvaluationReport report;
  report.emails = static_cast<std::int64_t>(w.emails.size());

  double f1_sum = 0.0;
  std::vector<int> preds, refs;
  for (const auto& label : schema.labels) {
    preds.clear();
    refs.clear();
    for (const auto& email : w.emails) {
      preds.push_back(produced.get(email.id, label.name));
      refs.push_back(w.baseline->get(email.id, label.name));
    }
    double f1 = f1_for_label(label, preds, refs);
    report.per_label_f1[label.name] = f1;
    f1_sum += f1;
  }
  report.average_f1 = f1_sum / static_cast<double>(schema.labels.size());

  // costs and usage from the labeling traces
  double produced_blended = 0.0;
  std::map<std::string, std::int64_t> served;
  std::int64_t skipped = 0, total_requests = 0;
  {
    std::ifstream in(traces_path);
    if (!in) throw ConfigError("cannot open traces: " + traces_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json t = json::parse(line);
      produced_blended += t.value("blended_cost", 0.0);
      ++total_requests;
      std::string prov = t.value("provenance", "cascade");
      if (prov == "skipped") ++skipped;
      else if (prov == "classifier") ++served["classifier"];
      else ++served[t.value("model", std::string("unknown"))];
    }
  }
  double baseline_blended = 0.0;
  for (const auto& email : w.emails) {
    const ModelSpec& base = w.backend->spec(w.config.knobs.baseline_model);
    TokenUsage usage{std::max<std::int64_t>(1, email.token_count_estimate), 1};
    if (auto hint = w.backend->usage_hint(w.config.knobs.baseline_model)) usage = *hint;
    baseline_blended += blended_price(base) *
                        static_cast<double>(usage.input_tokens + usage.output_tokens) *
                        static_cast<double>(schema.labels.size());
  }
  CostReduction cr = cost_reduction_factor(produced_blended, baseline_blended);
  report.cost_reduction_factor = cr.factor;
  report.cost_reduction_flagged = cr.zero_method_cost;
  if (total_requests > 0) {
    for (const auto& [name, count] : served)
      report.usage_fractions[name] =
          static_cast<double>(count) / static_cast<double>(total_requests);
    report.skipped_fraction =
        static_cast<double>(skipped) / static_cast<double>(total_requests);
  }

  if (!chosen_path.empty()) {
    LabelingConfig chosen = load_labeling_config(chosen_path);
    report.config_hash = chosen.config_hash();
    if (with_oracle && w.config.backend_kind == "mock" && !chosen.cascade_models.empty()) {
      double oracle_sum = 0.0;
      for (const auto& label : schema.labels) {
        OracleInputs oracle;
        oracle.models = chosen.cascade_models;
        for (const auto& email : w.emails)
          oracle.baseline.push_back(w.baseline->get(email.id, label.name));
        for (const auto& model : chosen.cascade_models) {
          auto& outs = oracle.outputs[model];
          for (const auto& email : w.emails)
            outs.push_back(w.backend->generate_label(model, email, label).value.value);
        }
        oracle_sum += oracle_cascade_f1(oracle, label);
      }
      report.oracle_f1 = oracle_sum / static_cast<double>(schema.labels.size());
      report.has_oracle = true;
    }
  }

  write_file((fs::path(out_dir) / "evaluation_report.json").string(), report.to_json() + "\n");
  std::cout << "average F1 " << fmt_double(report.average_f1) << ", cost reduction "
            << fmt_double(report.cost_reduction_factor) << "x\n";
  return 0;
}

int cmd_simulate_load(const std::string& config_path, const std::string& trace_path,
                      const std::string& chosen_path, const std::string& report_path,
                      const std::string& out_dir, const std::string& penalty,
                      std::int64_t capacity, const std::string& instances_csv,
                      const std::string& policy_file) {
  fs::create_directories(out_dir);
  AppConfig config = load_config(config_path);
  auto trace = load_trace_csv(trace_path.empty() ? config.resolve(config.paths.arrivals)
                                                 : trace_path);

  LabelingConfig chosen = load_labeling_config(chosen_path);
  if (chosen.cascade_models.empty()) throw ConfigError("chosen config has no cascade");

  // cost model from the chosen cascade: per-request run cost from the models'
  // typical usage, base instance costs from config or derived
  auto baseline_table = std::make_shared<LabelTable>();  // mock backend only for specs
  std::unique_ptr<Backend> backend = make_backend(config, baseline_table);
  SimulationInputs inputs;
  for (const auto& name : chosen.cascade_models) {
    const ModelSpec& spec = backend->spec(name);
    TokenUsage usage{128, 1};
    if (auto hint = backend->usage_hint(name)) usage = *hint;
    inputs.cost_model.run_cost.push_back(request_cost(spec, usage));
  }
  if (config.provisioning.base_costs.size() == inputs.cost_model.run_cost.size()) {
    inputs.cost_model.base_cost = config.provisioning.base_costs;
  } else {
    for (Micros z : inputs.cost_model.run_cost)
      inputs.cost_model.base_cost.push_back(z * 100);
  }
  inputs.cost_model.penalty =
      Ratio::parse_decimal(penalty.empty() ? config.provisioning.penalty : penalty);
  inputs.cost_model.capacity = capacity > 0 ? capacity : config.provisioning.capacity;
  inputs.cost_model.demand_per_request = config.provisioning.demand_per_request;

  const int m = inputs.cost_model.models();
  inputs.initial_state.instances.assign(static_cast<std::size_t>(m), 1);
  inputs.initial_state.served.assign(static_cast<std::size_t>(m), 0);
  if (!instances_csv.empty()) {
    // explicit bottleneck set from the command line
    std::vector<std::int64_t> parsed;
    std::istringstream is(instances_csv);
    std::string tok;
    while (std::getline(is, tok, ',')) parsed.push_back(std::stoll(tok));
    if (static_cast<int>(parsed.size()) != m)
      throw ConfigError("--instances needs one value per cascade model");
    inputs.initial_state.instances = parsed;
  } else if (static_cast<int>(config.provisioning.initial_instances.size()) == m) {
    inputs.initial_state.instances = config.provisioning.initial_instances;
  } else if (!report_path.empty()) {
    // initial allocation follows the usage fractions measured while profiling
    std::ifstream in(report_path);
    if (in) {
      json report = json::parse(in);
      auto fractions = report.at("chosen").value("usage_fractions", json::object());
      double cascade_share = 0.0;
      for (int i = 0; i < m; ++i)
        cascade_share += fractions.value(chosen.cascade_models[static_cast<std::size_t>(i)], 0.0);
      for (int i = 0; i < m; ++i) {
        double f = fractions.value(chosen.cascade_models[static_cast<std::size_t>(i)], 0.0);
        double share = cascade_share > 0 ? f / cascade_share : 1.0 / m;
        inputs.initial_state.instances[static_cast<std::size_t>(i)] = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(share * config.provisioning.fleet_size)));
      }
    }
  }
  int classifier_labels = 0;
  for (const auto& [label, method] : chosen.plan)
    if (method == Method::Classifier) ++classifier_labels;
  inputs.cpu_requests_per_arrival = classifier_labels;
  inputs.cpu_request_cost = std::max<Micros>(1, inputs.cost_model.run_cost.front() / 100);
  inputs.policies = config.provisioning.policies;
  if (!policy_file.empty()) {
    std::ifstream in(policy_file);
    if (!in) throw ConfigError("cannot open policy file: " + policy_file);
    json pj = json::parse(in);
    inputs.policies.clear();
    for (const auto& p : pj) {
      OrgPolicy pol;
      pol.group = p.at("group").get<std::string>();
      pol.kind = p.at("kind").get<std::string>() == "delay_stagger"
                     ? OrgPolicy::Kind::DelayStagger
                     : OrgPolicy::Kind::QualityDowngrade;
      pol.target_model = p.value("target_model", 0);
      pol.kappa = p.value("kappa", 1.0);
      inputs.policies.push_back(pol);
    }
  }
  inputs.entry_by_group = config.provisioning.entry_by_group;

  SimulationSummary summary = simulate_with_baselines(trace, inputs);

  std::string csv =
      "timestamp_ms,email_id,user_group,action,model,marginal_cost,cumulative_total,deferred_ms\n";
  for (const auto& row : summary.greedy.ledger) {
    csv += std::to_string(row.timestamp_ms) + "," + row.email_id + "," + row.group + "," +
           row.action + "," + std::to_string(row.model) + "," +
           row.marginal_cost.to_decimal_string() + "," +
           row.cumulative_total.to_decimal_string() + "," + std::to_string(row.deferred_ms) +
           "\n";
  }
  write_file((fs::path(out_dir) / "ledger.csv").string(), csv);

  auto outcome_json = [](const SimulationOutcome& o) {
    json j;
    j["instance_cost"] = o.final_cost.instance_cost.to_decimal_string();
    j["run_cost"] = o.final_cost.run_cost.to_decimal_string();
    j["total"] = o.final_cost.total.to_decimal_string();
    j["cost_increase"] = o.cost_increase.to_decimal_string();
    j["instances"] = o.final_state.instances;
    j["served"] = o.final_state.served;
    return j;
  };
  json out;
  out["greedy"] = outcome_json(summary.greedy);
  out["always_provision"] = outcome_json(summary.always_provision);
  out["always_escalate"] = outcome_json(summary.always_escalate);
  out["provision_over_greedy"] = summary.provision_over_greedy;
  out["escalate_over_greedy"] = summary.escalate_over_greedy;
  out["penalty"] = inputs.cost_model.penalty.to_decimal_string();
  out["capacity"] = inputs.cost_model.capacity;
  out["requests"] = trace.size();
  out["classifier_traffic"] = {{"requests_per_arrival", inputs.cpu_requests_per_arrival},
                               {"flat_cost_micros", inputs.cpu_request_cost},
                               {"total_micros", summary.greedy.cpu_cost_total}};
  write_file((fs::path(out_dir) / "summary.json").string(), out.dump(2) + "\n");
  std::cout << "simulated " << trace.size() << " requests: cost increase ratios "
            << fmt_double(summary.provision_over_greedy) << "x (always-provision), "
            << fmt_double(summary.escalate_over_greedy) << "x (always-escalate)\n";
  return 0;
}

int cmd_drift_check(const std::string& state_path, const std::string& recent_path,
                    std::int64_t now_ms, int window) {
  DriftState state = load_drift_state(state_path);
  std::vector<double> recent;
  std::ifstream in(recent_path);
  if (!in) throw ConfigError("cannot open recent sample: " + recent_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.is_number()) {
      recent.push_back(j.get<double>());
    } else if (j.is_object() && j.value("provenance", "") == "cascade") {
      recent.push_back(j.at("entry_confidence").get<double>());
    }
  }
  if (window > 0 && static_cast<int>(recent.size()) > window)
    recent.erase(recent.begin(), recent.end() - window);
  ReprofileDecision d = should_reprofile(state, now_ms, recent);
  json out;
  out["reprofile"] = d.reprofile;
  out["reason"] = d.reason == ReprofileReason::Periodic ? "periodic"
                  : d.reason == ReprofileReason::Drift  ? "drift"
                                                        : "hold";
  out["swd"] = d.swd_value;
  out["elapsed_ms"] = d.elapsed_ms;
  out["recent_samples"] = recent.size();
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cost-aware email importance labeling"};
  app.require_subcommand(1);

  std::string config_path = "config.json";
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  app.add_option("--config", config_path, "main config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "seed for generation commands");

  auto* mock = app.add_subcommand("mock-world", "generate a seeded synthetic dataset");
  int emails = 0;
  mock->add_option("--emails", emails, "email count (default from config template)");

  auto* profile = app.add_subcommand("profile", "profile knobs and pick the balanced config");
  std::int64_t now_ms = 0;
  profile->add_option("--now", now_ms, "injected profiling timestamp (ms)");

  auto* label = app.add_subcommand("label", "apply a chosen config to the dataset");
  std::string chosen_path, classifier_path;
  label->add_option("--chosen", chosen_path, "chosen_config.json path");
  label->add_option("--classifier", classifier_path, "classifier weights file");

  auto* evaluate = app.add_subcommand("evaluate", "score produced labels against the baseline");
  std::string labels_path, traces_path, eval_chosen;
  bool no_oracle = false;
  evaluate->add_option("--labels", labels_path, "produced labels jsonl")->required();
  evaluate->add_option("--traces", traces_path, "labeling traces jsonl")->required();
  evaluate->add_option("--chosen", eval_chosen, "chosen_config.json for hash and oracle");
  evaluate->add_flag("--no-oracle", no_oracle, "skip the oracle-cascade reference");

  auto* sim = app.add_subcommand("simulate-load", "replay an arrival trace through provisioning");
  std::string trace_path, sim_chosen, sim_report, penalty;
  std::int64_t capacity = 0;
  sim->add_option("--trace", trace_path, "arrival trace csv");
  sim->add_option("--chosen", sim_chosen, "chosen_config.json path");
  sim->add_option("--report", sim_report, "profile_report.json for initial allocation");
  sim->add_option("--penalty", penalty, "provisioning penalty factor (decimal)");
  sim->add_option("--capacity", capacity, "instance capacity in demand units");
  std::string instances_csv, policy_file;
  sim->add_option("--instances", instances_csv, "initial instances per model, comma separated");
  sim->add_option("--policy-file", policy_file, "json file with org policies");

  auto* drift = app.add_subcommand("drift-check", "evaluate the re-profiling triggers");
  std::string state_path, recent_path;
  std::int64_t drift_now = 0;
  drift->add_option("--state", state_path, "drift_state.json")->required();
  drift->add_option("--recent", recent_path, "recent confidences (jsonl)")->required();
  drift->add_option("--now", drift_now, "injected current time (ms)")->required();
  int drift_window = 1000;
  drift->add_option("--window", drift_window, "recent-sample window (default 1000)");

  try {
    app.parse(argc, argv);
    if (mock->parsed()) return cmd_mock_world(out_dir, seed, emails);
    if (profile->parsed()) return cmd_profile(config_path, out_dir, now_ms);
    if (label->parsed()) {
      if (chosen_path.empty()) chosen_path = (fs::path(out_dir) / "chosen_config.json").string();
      return cmd_label(config_path, chosen_path, classifier_path, out_dir);
    }
    if (evaluate->parsed())
      return cmd_evaluate(config_path, labels_path, traces_path, eval_chosen, out_dir,
                          !no_oracle);
    if (sim->parsed()) {
      if (sim_chosen.empty()) sim_chosen = (fs::path(out_dir) / "chosen_config.json").string();
      return cmd_simulate_load(config_path, trace_path, sim_chosen, sim_report, out_dir, penalty,
                               capacity, instances_csv, policy_file);
    }
    if (drift->parsed()) return cmd_drift_check(state_path, recent_path, drift_now, drift_window);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const BackendUnavailable& e) {
    std::cerr << "backend failure: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const MissingBaselineLabel& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
