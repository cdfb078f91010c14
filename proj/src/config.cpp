#include "labelcast/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace labelcast {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json schema_to_json(const LabelSchema& schema) {
  json out = json::array();
  for (const auto& l : schema.labels) out.push_back({{"name", l.name}, {"classes", l.classes}});
  return out;
}

LabelSchema schema_from_json(const json& j) {
  LabelSchema s;
  for (const auto& l : j)
    s.labels.push_back({l.at("name").get<std::string>(), l.at("classes").get<std::vector<int>>()});
  s.validate();
  return s;
}

json model_to_json(const ModelSpec& m) {
  return {{"name", m.name},
          {"kind", m.kind == ModelKind::Generative ? "generative" : "embedding"},
          {"price_in", m.price_in},
          {"price_out", m.price_out},
          {"size_rank", m.size_rank},
          {"family", m.family}};
}

ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  m.name = j.at("name").get<std::string>();
  m.kind = j.at("kind").get<std::string>() == "embedding" ? ModelKind::Embedding
                                                          : ModelKind::Generative;
  m.price_in = j.at("price_in").get<Micros>();
  m.price_out = j.at("price_out").get<Micros>();
  m.size_rank = j.at("size_rank").get<int>();
  m.family = j.value("family", std::string());
  return m;
}

json mock_to_json(const MockModelConfig& c) {
  return {{"seed", c.seed},
          {"agreement_rate", c.agreement_rate},
          {"confidence_when_correct", {{"mean", c.confidence_when_correct.mean},
                                       {"stddev", c.confidence_when_correct.stddev}}},
          {"confidence_when_wrong", {{"mean", c.confidence_when_wrong.mean},
                                     {"stddev", c.confidence_when_wrong.stddev}}},
          {"usage_profile", {{"input_tokens", c.usage_profile.input_tokens},
                             {"output_tokens", c.usage_profile.output_tokens}}}};
}

MockModelConfig mock_from_json(const json& j) {
  MockModelConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.agreement_rate = j.at("agreement_rate").get<double>();
  c.confidence_when_correct = {j.at("confidence_when_correct").at("mean").get<double>(),
                               j.at("confidence_when_correct").at("stddev").get<double>()};
  c.confidence_when_wrong = {j.at("confidence_when_wrong").at("mean").get<double>(),
                             j.at("confidence_when_wrong").at("stddev").get<double>()};
  c.usage_profile = {j.at("usage_profile").at("input_tokens").get<std::int64_t>(),
                     j.at("usage_profile").at("output_tokens").get<std::int64_t>()};
  return c;
}

json training_to_json(const TrainingConfig& t) {
  return {{"beta1", t.beta1},
          {"beta2", t.beta2},
          {"adam_eps", t.adam_eps},
          {"max_lr", t.max_lr},
          {"weight_decay", t.weight_decay},
          {"dropout_rate", t.dropout_rate},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"seed", t.seed},
          {"hidden1", t.hidden1},
          {"hidden2", t.hidden2},
          {"pos_weight_cap", t.pos_weight_cap},
          {"warmup_fraction", t.warmup_fraction},
          {"initial_div", t.initial_div},
          {"final_div", t.final_div}};
}

TrainingConfig training_from_json(const json& j) {
  TrainingConfig t;
  t.beta1 = j.value("beta1", t.beta1);
  t.beta2 = j.value("beta2", t.beta2);
  t.adam_eps = j.value("adam_eps", t.adam_eps);
  t.max_lr = j.value("max_lr", t.max_lr);
  t.weight_decay = j.value("weight_decay", t.weight_decay);
  t.dropout_rate = j.value("dropout_rate", t.dropout_rate);
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.seed = j.value("seed", t.seed);
  t.hidden1 = j.value("hidden1", t.hidden1);
  t.hidden2 = j.value("hidden2", t.hidden2);
  t.pos_weight_cap = j.value("pos_weight_cap", t.pos_weight_cap);
  t.warmup_fraction = j.value("warmup_fraction", t.warmup_fraction);
  t.initial_div = j.value("initial_div", t.initial_div);
  t.final_div = j.value("final_div", t.final_div);
  return t;
}

json policy_to_json(const OrgPolicy& p) {
  json j;
  j["group"] = p.group;
  j["kind"] = p.kind == OrgPolicy::Kind::QualityDowngrade ? "quality_downgrade" : "delay_stagger";
  j["target_model"] = p.target_model;
  j["kappa"] = p.kappa;
  return j;
}

OrgPolicy policy_from_json(const json& j) {
  OrgPolicy p;
  p.group = j.at("group").get<std::string>();
  p.kind = j.at("kind").get<std::string>() == "delay_stagger" ? OrgPolicy::Kind::DelayStagger
                                                              : OrgPolicy::Kind::QualityDowngrade;
  p.target_model = j.value("target_model", 0);
  p.kappa = j.value("kappa", 1.0);
  return p;
}

json rule_to_json(const SkipRule& r) {
  return {{"condition_label", r.condition_label},
          {"condition_value", r.condition_value},
          {"consequence_label", r.consequence_label},
          {"consequence_value", r.consequence_value},
          {"support", r.support},
          {"confidence", r.confidence}};
}

SkipRule rule_from_json(const json& j) {
  SkipRule r;
  r.condition_label = j.at("condition_label").get<std::string>();
  r.condition_value = j.at("condition_value").get<int>();
  r.consequence_label = j.at("consequence_label").get<std::string>();
  r.consequence_value = j.at("consequence_value").get<int>();
  r.support = j.value("support", 0.0);
  r.confidence = j.value("confidence", 0.0);
  return r;
}

}  // namespace

std::string AppConfig::resolve(const std::string& path) const {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / p).string();
}

void AppConfig::validate() const {
  schema.validate();
  if (models.empty()) throw ConfigError("config lists no models");
  std::set<int> ranks;
  for (const auto& m : models) {
    if (m.price_in < 0 || m.price_out < 0) throw ConfigError("negative price: " + m.name);
    if (!ranks.insert(m.size_rank).second)
      throw ConfigError("duplicate size_rank in model pool: " + m.name);
  }
  auto find_model = [this](const std::string& name) {
    for (const auto& m : models)
      if (m.name == name) return true;
    return false;
  };
  for (const auto& name : knobs.model_pool)
    if (!find_model(name)) throw ConfigError("pool references unknown model: " + name);
  if (!knobs.baseline_model.empty() && !find_model(knobs.baseline_model))
    throw ConfigError("unknown baseline model: " + knobs.baseline_model);
  if (!knobs.embedding_model.empty() && !find_model(knobs.embedding_model))
    throw ConfigError("unknown embedding model: " + knobs.embedding_model);
  if (backend_kind != "mock" && backend_kind != "http")
    throw ConfigError("backend_kind must be mock or http");
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  AppConfig c;
  c.base_dir = fs::path(path).parent_path().string();
  if (j.contains("schema")) c.schema = schema_from_json(j.at("schema"));
  const json models_json = j.value("models", json::array());
  for (const auto& m : models_json) c.models.push_back(model_from_json(m));
  const json mocks_json = j.value("mock_models", json::object());
  for (const auto& [name, mock] : mocks_json.items()) c.mock_models[name] = mock_from_json(mock);
  c.backend_kind = j.value("backend_kind", c.backend_kind);
  if (j.contains("http")) {
    const json& h = j.at("http");
    c.http.base_url = h.value("base_url", std::string());
    c.http.path = h.value("path", c.http.path);
    c.http.api_key_env = h.value("api_key_env", std::string());
    c.http.timeout_seconds = h.value("timeout_seconds", c.http.timeout_seconds);
    c.http.max_attempts = h.value("max_attempts", c.http.max_attempts);
  }
  if (j.contains("profiler")) {
    const json& p = j.at("profiler");
    c.knobs.model_pool = p.value("model_pool", std::vector<std::string>{});
    c.knobs.baseline_model = p.value("baseline_model", std::string());
    c.knobs.embedding_model = p.value("embedding_model", std::string());
    c.knobs.threshold_grid = p.value("threshold_grid", ProfilerKnobs::default_grid());
    if (p.contains("schedule")) {
      const json& s = p.at("schedule");
      c.knobs.schedule.initial = s.value("initial", c.knobs.schedule.initial);
      c.knobs.schedule.increment = s.value("increment", c.knobs.schedule.increment);
      c.knobs.schedule.cap = s.value("cap", c.knobs.schedule.cap);
      c.knobs.schedule.delta = s.value("delta", c.knobs.schedule.delta);
      c.knobs.schedule.confirmation_window =
          s.value("confirmation_window", c.knobs.schedule.confirmation_window);
    }
    c.knobs.skip_epsilon = p.value("skip_epsilon", c.knobs.skip_epsilon);
    c.knobs.skip_min_support = p.value("skip_min_support", c.knobs.skip_min_support);
    c.knobs.method_tolerance = p.value("method_tolerance", c.knobs.method_tolerance);
    c.knobs.prune_poor_cutoff = p.value("prune_poor_cutoff", c.knobs.prune_poor_cutoff);
    c.knobs.prune_min_slice = p.value("prune_min_slice", c.knobs.prune_min_slice);
    if (p.contains("classifier")) c.knobs.classifier = training_from_json(p.at("classifier"));
  }
  c.enforce_constraints = j.value("enforce_constraints", false);
  if (j.contains("constraints")) {
    const json& k = j.at("constraints");
    if (k.contains("available_model_pool"))
      c.constraints.allowed_model_pool = k.at("available_model_pool").get<std::vector<std::string>>();
    c.constraints.banned_families = k.value("banned_families", std::vector<std::string>{});
    if (k.contains("max_cascade_size"))
      c.constraints.max_cascade_size = k.at("max_cascade_size").get<int>();
    c.constraints.w_quality = k.value("w_quality", 1.0);
    c.constraints.w_cost = k.value("w_cost", 1.0);
  }
  if (j.contains("drift")) {
    const json& d = j.at("drift");
    c.drift.period_ms = d.value("period_ms", c.drift.period_ms);
    c.drift.swd_threshold = d.value("swd_threshold", c.drift.swd_threshold);
    c.drift.recent_window = d.value("recent_window", c.drift.recent_window);
  }
  if (j.contains("world")) {
    const json& w = j.at("world");
    c.world.seed = w.value("seed", c.world.seed);
    c.world.emails = w.value("emails", c.world.emails);
    if (w.contains("priority_marginal")) {
      auto v = w.at("priority_marginal").get<std::vector<double>>();
      if (v.size() != 5) throw ConfigError("priority_marginal needs 5 entries");
      std::copy(v.begin(), v.end(), c.world.priority_marginal.begin());
    }
    if (w.contains("binary_given_priority")) {
      c.world.binary_given_priority.clear();
      for (const auto& [name, probs] : w.at("binary_given_priority").items()) {
        auto v = probs.get<std::vector<double>>();
        if (v.size() != 5) throw ConfigError("binary_given_priority needs 5 entries per label");
        std::array<double, 5> arr{};
        std::copy(v.begin(), v.end(), arr.begin());
        c.world.binary_given_priority[name] = arr;
      }
    }
    c.world.body_min_words = w.value("body_min_words", c.world.body_min_words);
    c.world.body_max_words = w.value("body_max_words", c.world.body_max_words);
  }
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.embedding_signal = j.value("embedding_signal", c.embedding_signal);
  c.validation_count = j.value("validation_count", c.validation_count);
  if (j.contains("provisioning")) {
    const json& p = j.at("provisioning");
    c.provisioning.base_costs = p.value("base_costs", std::vector<Micros>{});
    c.provisioning.penalty = p.value("penalty", c.provisioning.penalty);
    c.provisioning.capacity = p.value("capacity", c.provisioning.capacity);
    c.provisioning.demand_per_request =
        p.value("demand_per_request", c.provisioning.demand_per_request);
    c.provisioning.initial_instances =
        p.value("initial_instances", std::vector<std::int64_t>{});
    c.provisioning.fleet_size = p.value("fleet_size", c.provisioning.fleet_size);
    if (p.contains("entry_by_group"))
      c.provisioning.entry_by_group =
          p.at("entry_by_group").get<std::map<std::string, int>>();
    const json policies_json = p.value("policies", json::array());
    for (const auto& pol : policies_json)
      c.provisioning.policies.push_back(policy_from_json(pol));
  }
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    c.paths.emails = p.value("emails", c.paths.emails);
    c.paths.baseline_labels = p.value("baseline_labels", c.paths.baseline_labels);
    c.paths.arrivals = p.value("arrivals", c.paths.arrivals);
    c.paths.embedding_cache = p.value("embedding_cache", c.paths.embedding_cache);
  }
  c.validate();
  return c;
}

void save_config(const AppConfig& c, const std::string& path) {
  json j;
  j["schema"] = schema_to_json(c.schema);
  j["models"] = json::array();
  for (const auto& m : c.models) j["models"].push_back(model_to_json(m));
  j["mock_models"] = json::object();
  for (const auto& [name, mock] : c.mock_models) j["mock_models"][name] = mock_to_json(mock);
  j["backend_kind"] = c.backend_kind;
  j["http"] = {{"base_url", c.http.base_url},
               {"path", c.http.path},
               {"api_key_env", c.http.api_key_env},
               {"timeout_seconds", c.http.timeout_seconds},
               {"max_attempts", c.http.max_attempts}};
  j["profiler"] = {
      {"model_pool", c.knobs.model_pool},
      {"baseline_model", c.knobs.baseline_model},
      {"embedding_model", c.knobs.embedding_model},
      {"threshold_grid", c.knobs.threshold_grid},
      {"schedule",
       {{"initial", c.knobs.schedule.initial},
        {"increment", c.knobs.schedule.increment},
        {"cap", c.knobs.schedule.cap},
        {"delta", c.knobs.schedule.delta},
        {"confirmation_window", c.knobs.schedule.confirmation_window}}},
      {"skip_epsilon", c.knobs.skip_epsilon},
      {"skip_min_support", c.knobs.skip_min_support},
      {"method_tolerance", c.knobs.method_tolerance},
      {"prune_poor_cutoff", c.knobs.prune_poor_cutoff},
      {"prune_min_slice", c.knobs.prune_min_slice},
      {"classifier", training_to_json(c.knobs.classifier)}};
  j["enforce_constraints"] = c.enforce_constraints;
  json k;
  if (c.constraints.allowed_model_pool)
    k["available_model_pool"] = *c.constraints.allowed_model_pool;
  k["banned_families"] = c.constraints.banned_families;
  if (c.constraints.max_cascade_size) k["max_cascade_size"] = *c.constraints.max_cascade_size;
  k["w_quality"] = c.constraints.w_quality;
  k["w_cost"] = c.constraints.w_cost;
  j["constraints"] = k;
  j["drift"] = {{"period_ms", c.drift.period_ms},
                {"swd_threshold", c.drift.swd_threshold},
                {"recent_window", c.drift.recent_window}};
  json bg = json::object();
  for (const auto& [name, probs] : c.world.binary_given_priority)
    bg[name] = std::vector<double>(probs.begin(), probs.end());
  j["world"] = {{"seed", c.world.seed},
                {"emails", c.world.emails},
                {"priority_marginal", std::vector<double>(c.world.priority_marginal.begin(),
                                                          c.world.priority_marginal.end())},
                {"binary_given_priority", bg},
                {"body_min_words", c.world.body_min_words},
                {"body_max_words", c.world.body_max_words}};
  j["embedding_dim"] = c.embedding_dim;
  j["embedding_signal"] = c.embedding_signal;
  j["validation_count"] = c.validation_count;
  json pol = json::array();
  for (const auto& p : c.provisioning.policies) pol.push_back(policy_to_json(p));
  j["provisioning"] = {{"base_costs", c.provisioning.base_costs},
                       {"penalty", c.provisioning.penalty},
                       {"capacity", c.provisioning.capacity},
                       {"demand_per_request", c.provisioning.demand_per_request},
                       {"initial_instances", c.provisioning.initial_instances},
                       {"fleet_size", c.provisioning.fleet_size},
                       {"entry_by_group", c.provisioning.entry_by_group},
                       {"policies", pol}};
  j["paths"] = {{"emails", c.paths.emails},
                {"baseline_labels", c.paths.baseline_labels},
                {"arrivals", c.paths.arrivals},
                {"embedding_cache", c.paths.embedding_cache}};

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write config: " + path);
  out << j.dump(2) << '\n';
}

AppConfig default_mock_config(std::uint64_t seed) {
  AppConfig c;
  DefaultPool pool = default_pool(seed);
  c.models = pool.generative;
  c.models.push_back(pool.embedding);
  c.models.push_back(pool.baseline);
  c.mock_models = pool.mock_configs;
  for (const auto& m : pool.generative) c.knobs.model_pool.push_back(m.name);
  c.knobs.baseline_model = pool.baseline.name;
  c.knobs.embedding_model = pool.embedding.name;
  c.knobs.threshold_grid = ProfilerKnobs::default_grid();
  c.knobs.schedule = {200, 200, 800, 0.01, 2};
  c.world.seed = seed;
  c.world.emails = 1400;
  c.validation_count = 200;
  // run costs for the default cascade land at roughly 11.6k / 12.2k / 162k
  // micros per request, so these base costs keep the provision-vs-escalate
  // comparison live instead of one branch always winning
  c.provisioning.base_costs = {1200, 2400, 160000};
  c.provisioning.penalty = "2";
  c.provisioning.capacity = 6;
  c.provisioning.demand_per_request = 1;
  c.provisioning.fleet_size = 24;
  c.provisioning.entry_by_group = {{"premium", 1}};
  OrgPolicy downgrade;
  downgrade.group = "premium";
  downgrade.kind = OrgPolicy::Kind::QualityDowngrade;
  downgrade.target_model = 0;
  OrgPolicy stagger;
  stagger.group = "batch";
  stagger.kind = OrgPolicy::Kind::DelayStagger;
  stagger.kappa = 0.5;
  c.provisioning.policies = {downgrade, stagger};
  return c;
}

std::unique_ptr<Backend> make_backend(const AppConfig& config,
                                      std::shared_ptr<const LabelTable> baseline) {
  if (config.backend_kind == "http")
    return std::make_unique<HttpBackend>(config.models, config.http);
  if (!baseline) throw ConfigError("mock backend needs baseline labels");
  return std::make_unique<MockBackend>(config.models, config.mock_models, std::move(baseline),
                                       config.schema, config.embedding_dim,
                                       config.embedding_signal);
}

void save_labeling_config(const LabelingConfig& config, const std::string& path) {
  json j;
  json plan;
  for (const auto& [label, method] : config.plan)
    plan[label] = method == Method::Cascade ? "cascade" : "classifier";
  j["plan"] = plan;
  j["cascade_models"] = config.cascade_models;
  j["thresholds"] = config.thresholds;
  json rules = json::array();
  for (const auto& r : config.skip_rules) rules.push_back(rule_to_json(r));
  j["skip_rules"] = rules;
  j["embedding_model"] = config.embedding_model;
  j["config_hash"] = config.config_hash();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write labeling config: " + path);
  out << j.dump(2) << '\n';
}

LabelingConfig load_labeling_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open labeling config: " + path);
  json j = json::parse(in);
  LabelingConfig c;
  for (const auto& [label, method] : j.at("plan").items())
    c.plan[label] = method.get<std::string>() == "classifier" ? Method::Classifier
                                                              : Method::Cascade;
  c.cascade_models = j.at("cascade_models").get<std::vector<std::string>>();
  c.thresholds = j.at("thresholds").get<std::vector<double>>();
  const json rules_json = j.value("skip_rules", json::array());
  for (const auto& r : rules_json) c.skip_rules.push_back(rule_from_json(r));
  c.embedding_model = j.value("embedding_model", std::string());
  return c;
}

}  // namespace labelcast
