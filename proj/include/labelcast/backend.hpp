#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "labelcast/core.hpp"
#include "labelcast/dataset.hpp"

namespace labelcast {

struct GenerationResult {
  LabelValue value;
  std::vector<double> token_logprobs;  // nonempty, each entry <= 0
  TokenUsage usage;
};

// Per-model invocation accounting. Every generate/embed call that actually
// reaches a backend increments exactly one counter; embedding cache hits do not.
struct ModelCounters {
  std::int64_t generate_calls = 0;
  std::int64_t embed_calls = 0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  Micros billed = 0;
};

class InvocationCounters {
 public:
  void record(const std::string& model, const TokenUsage& usage, Micros cost, bool is_embed);
  ModelCounters get(const std::string& model) const;
  std::map<std::string, ModelCounters> snapshot() const;
  std::int64_t total_generate_calls() const;
  std::int64_t total_embed_calls() const;
  Micros total_billed() const;
  void reset();

 private:
  mutable std::mutex mu_;
  std::map<std::string, ModelCounters> per_model_;
};

// Embedding vectors keyed by (model, email id). Concurrent reads, exclusive
// writes; optionally persisted as JSONL so reruns skip the backend entirely.
class EmbeddingCache {
 public:
  std::optional<std::vector<double>> get(const std::string& model, const std::string& email_id) const;
  void put(const std::string& model, const std::string& email_id, std::vector<double> vec);
  std::size_t size() const;

  void load(const std::string& path);  // missing file is fine
  void save(const std::string& path) const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::pair<std::string, std::string>, std::vector<double>> entries_;
};

// Uniform invocation surface over generative and embedding models.
// Implementations must be thread-safe.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Single-label generation. Throws BackendUnavailable / MalformedOutput.
  GenerationResult generate_label(const std::string& model, const Email& email,
                                  const LabelDef& label);

  /// Embedding with (model, email id) caching; same email embeds once.
  std::vector<double> embed(const std::string& model, const Email& email);

  const InvocationCounters& counters() const { return counters_; }
  InvocationCounters& counters() { return counters_; }
  EmbeddingCache& embedding_cache() { return cache_; }

  virtual const ModelSpec& spec(const std::string& model) const = 0;
  virtual bool has_model(const std::string& model) const = 0;

  /// Typical per-request usage when the backend knows it (mock profiles);
  /// callers fall back to the character-based token estimate otherwise.
  virtual std::optional<TokenUsage> usage_hint(const std::string& model) const {
    (void)model;
    return std::nullopt;
  }

 protected:
  virtual GenerationResult generate_uncached(const std::string& model, const Email& email,
                                             const LabelDef& label) = 0;
  virtual std::vector<double> embed_uncached(const std::string& model, const Email& email) = 0;

  InvocationCounters counters_;
  EmbeddingCache cache_;
};

// ---------------------------------------------------------------------------
// deterministic mock backend
// ---------------------------------------------------------------------------

struct ConfidenceParams {
  double mean = 0.9;
  double stddev = 0.05;  // 0 = constant
};

struct MockModelConfig {
  std::uint64_t seed = 0;
  double agreement_rate = 1.0;  // probability of emitting the baseline's label
  ConfidenceParams confidence_when_correct{0.9, 0.05};
  ConfidenceParams confidence_when_wrong{0.5, 0.1};
  TokenUsage usage_profile{128, 1};

  void validate() const;
};

// Every response is a pure function of (config seed, model name, email id,
// label name), so concurrency and call order cannot perturb a run.
class MockBackend : public Backend {
 public:
  MockBackend(std::vector<ModelSpec> pool, std::map<std::string, MockModelConfig> configs,
              std::shared_ptr<const LabelTable> baseline_labels, const LabelSchema& schema,
              int embedding_dim = 64, double embedding_signal = 0.0);

  const ModelSpec& spec(const std::string& model) const override;
  bool has_model(const std::string& model) const override;
  std::optional<TokenUsage> usage_hint(const std::string& model) const override;
  const MockModelConfig& mock_config(const std::string& model) const;
  int embedding_dim() const { return embedding_dim_; }

 protected:
  GenerationResult generate_uncached(const std::string& model, const Email& email,
                                     const LabelDef& label) override;
  std::vector<double> embed_uncached(const std::string& model, const Email& email) override;

 private:
  std::map<std::string, ModelSpec> pool_;
  std::map<std::string, MockModelConfig> configs_;
  std::shared_ptr<const LabelTable> baseline_;
  LabelSchema schema_;
  int embedding_dim_;
  double embedding_signal_;
};

}  // namespace labelcast
