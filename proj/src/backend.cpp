#include "labelcast/backend.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "labelcast/rng.hpp"

namespace labelcast {

using nlohmann::json;

// ---------------------------------------------------------------------------
// InvocationCounters
// ---------------------------------------------------------------------------

void InvocationCounters::record(const std::string& model, const TokenUsage& usage, Micros cost,
                                bool is_embed) {
  std::lock_guard<std::mutex> lock(mu_);
  auto& c = per_model_[model];
  if (is_embed) ++c.embed_calls;
  else ++c.generate_calls;
  c.input_tokens += usage.input_tokens;
  c.output_tokens += usage.output_tokens;
  c.billed += cost;
}

ModelCounters InvocationCounters::get(const std::string& model) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = per_model_.find(model);
  return it == per_model_.end() ? ModelCounters{} : it->second;
}

std::map<std::string, ModelCounters> InvocationCounters::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return per_model_;
}

std::int64_t InvocationCounters::total_generate_calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::int64_t n = 0;
  for (const auto& [k, v] : per_model_) n += v.generate_calls;
  return n;
}

std::int64_t InvocationCounters::total_embed_calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::int64_t n = 0;
  for (const auto& [k, v] : per_model_) n += v.embed_calls;
  return n;
}

Micros InvocationCounters::total_billed() const {
  std::lock_guard<std::mutex> lock(mu_);
  Micros n = 0;
  for (const auto& [k, v] : per_model_) n += v.billed;
  return n;
}

void InvocationCounters::reset() {
  std::lock_guard<std::mutex> lock(mu_);
  per_model_.clear();
}

// ---------------------------------------------------------------------------
// EmbeddingCache
// ---------------------------------------------------------------------------

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& model,
                                                       const std::string& email_id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find({model, email_id});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const std::string& model, const std::string& email_id,
                         std::vector<double> vec) {
  std::unique_lock lock(mu_);
  entries_[{model, email_id}] = std::move(vec);
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

void EmbeddingCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return;
  std::unique_lock lock(mu_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    entries_[{j.at("model").get<std::string>(), j.at("email_id").get<std::string>()}] =
        j.at("values").get<std::vector<double>>();
  }
}

void EmbeddingCache::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write embedding cache: " + path);
  std::shared_lock lock(mu_);
  for (const auto& [key, vec] : entries_) {
    json j;
    j["model"] = key.first;
    j["email_id"] = key.second;
    j["values"] = vec;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Backend
// ---------------------------------------------------------------------------

GenerationResult Backend::generate_label(const std::string& model, const Email& email,
                                         const LabelDef& label) {
  const ModelSpec& s = spec(model);
  if (s.kind != ModelKind::Generative)
    throw ConfigError("generate_label on non-generative model: " + model);
  try {
    GenerationResult r = generate_uncached(model, email, label);
    counters_.record(model, r.usage, request_cost(s, r.usage), false);
    return r;
  } catch (const MalformedOutput& m) {
    counters_.record(model, m.usage, request_cost(s, m.usage), false);
    throw;
  }
}

std::vector<double> Backend::embed(const std::string& model, const Email& email) {
  const ModelSpec& s = spec(model);
  if (s.kind != ModelKind::Embedding) throw ConfigError("embed on non-embedding model: " + model);
  if (auto hit = cache_.get(model, email.id)) return *hit;
  std::vector<double> vec = embed_uncached(model, email);
  TokenUsage usage{std::max<std::int64_t>(1, email.token_count_estimate), 0};
  counters_.record(model, usage, request_cost(s, usage), true);
  cache_.put(model, email.id, vec);
  return vec;
}

// ---------------------------------------------------------------------------
// MockBackend
// ---------------------------------------------------------------------------

void MockModelConfig::validate() const {
  if (agreement_rate < 0.0 || agreement_rate > 1.0)
    throw ConfigError("agreement_rate outside [0,1]");
  if (confidence_when_correct.mean <= 0.0 || confidence_when_correct.mean > 1.0 ||
      confidence_when_wrong.mean <= 0.0 || confidence_when_wrong.mean > 1.0)
    throw ConfigError("mock confidence means must lie in (0,1]");
  if (usage_profile.input_tokens < 0 || usage_profile.output_tokens < 0)
    throw ConfigError("negative usage profile");
}

MockBackend::MockBackend(std::vector<ModelSpec> pool,
                         std::map<std::string, MockModelConfig> configs,
                         std::shared_ptr<const LabelTable> baseline_labels,
                         const LabelSchema& schema, int embedding_dim, double embedding_signal)
    : configs_(std::move(configs)),
      baseline_(std::move(baseline_labels)),
      schema_(schema),
      embedding_dim_(embedding_dim),
      embedding_signal_(embedding_signal) {
  for (auto& s : pool) pool_[s.name] = s;
  // configs may cover more models than this instance serves
  for (const auto& [name, cfg] : configs_) cfg.validate();
  if (embedding_dim_ < 1) throw ConfigError("embedding_dim must be positive");
}

const ModelSpec& MockBackend::spec(const std::string& model) const {
  auto it = pool_.find(model);
  if (it == pool_.end()) throw ConfigError("unknown model: " + model);
  return it->second;
}

bool MockBackend::has_model(const std::string& model) const { return pool_.count(model) > 0; }

std::optional<TokenUsage> MockBackend::usage_hint(const std::string& model) const {
  auto it = configs_.find(model);
  if (it == configs_.end()) return std::nullopt;
  return it->second.usage_profile;
}

const MockModelConfig& MockBackend::mock_config(const std::string& model) const {
  auto it = configs_.find(model);
  if (it == configs_.end()) throw ConfigError("no mock config for model: " + model);
  return it->second;
}

GenerationResult MockBackend::generate_uncached(const std::string& model, const Email& email,
                                                const LabelDef& label) {
  const MockModelConfig& cfg = mock_config(model);
  std::uint64_t h = hash_combine(cfg.seed, fnv1a64(model));
  h = hash_combine(h, fnv1a64(email.id));
  h = hash_combine(h, fnv1a64(label.name));
  Rng rng(h);

  int baseline = baseline_->get(email.id, label.name);
  bool agreed = rng.uniform01() < cfg.agreement_rate;
  int value = baseline;
  if (!agreed) {
    // uniform over the other classes; on a binary label this flips the bit
    std::vector<int> others;
    for (int c : label.classes)
      if (c != baseline) others.push_back(c);
    value = others.empty() ? baseline : others[rng.below(others.size())];
    if (others.empty()) agreed = true;
  }
  const ConfidenceParams& cp = agreed ? cfg.confidence_when_correct : cfg.confidence_when_wrong;
  double confidence = rng.truncated_normal01(cp.mean, cp.stddev);

  GenerationResult r;
  r.value = {label.name, value};
  // single output token whose logprob is ln(confidence), so the cascade's
  // logprob-to-confidence conversion inverts it exactly in tests
  r.token_logprobs = {std::log(confidence)};
  r.usage = cfg.usage_profile;
  return r;
}

std::vector<double> MockBackend::embed_uncached(const std::string& model, const Email& email) {
  std::uint64_t h = hash_combine(mock_config(model).seed, fnv1a64("embed"));
  h = hash_combine(h, fnv1a64(model));
  h = hash_combine(h, fnv1a64(email.id));
  Rng rng(h);
  std::vector<double> v(static_cast<std::size_t>(embedding_dim_));
  for (auto& x : v) x = rng.gaussian();
  if (embedding_signal_ != 0.0) {
    // bias one leading coordinate per binary label so a classifier trained on
    // these embeddings has something to find
    auto binaries = schema_.binary_label_names();
    for (std::size_t i = 0; i < binaries.size() && i < v.size(); ++i) {
      if (baseline_->has(email.id, binaries[i])) {
        int y = baseline_->get(email.id, binaries[i]);
        v[i] += embedding_signal_ * (y == 1 ? 1.0 : -1.0);
      }
    }
  }
  return v;
}

}  // namespace labelcast
