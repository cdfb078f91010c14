#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace labelcast {

// Currency is carried as exact integer micro-units so that cost accounting
// and allocation comparisons are order-stable.
using Micros = std::int64_t;

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BackendUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LengthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValueOutOfClassSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyLogprobs : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateReference : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingBaselineLabel : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyFront : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output a model produced that cannot be mapped into the label's class set.
// Carries the token usage so the attempt can still be billed.
struct TokenUsage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct MalformedOutput : std::runtime_error {
  TokenUsage usage;
  explicit MalformedOutput(const std::string& what, TokenUsage u = {})
      : std::runtime_error(what), usage(u) {}
};

// ---------------------------------------------------------------------------
// domain types
// ---------------------------------------------------------------------------

struct Email {
  std::string id;
  std::string subject;
  std::string body;
  std::map<std::string, std::string> metadata;  // sender, timestamp, ... opaque
  std::int64_t token_count_estimate = 1;
};

/// ceil(characters / 4); at least 1 for nonempty subject+body.
std::int64_t estimate_tokens(const std::string& subject, const std::string& body);

struct LabelDef {
  std::string name;
  std::vector<int> classes;  // ordered; {0,1} for binary labels

  bool is_binary() const { return classes.size() == 2 && classes[0] == 0 && classes[1] == 1; }
  bool contains(int v) const {
    return std::find(classes.begin(), classes.end(), v) != classes.end();
  }

  static LabelDef binary(std::string n) { return {std::move(n), {0, 1}}; }
  static LabelDef multiclass(std::string n, std::vector<int> cls) {
    return {std::move(n), std::move(cls)};
  }
};

struct LabelSchema {
  std::vector<LabelDef> labels;

  const LabelDef* find(const std::string& name) const;
  int index_of(const std::string& name) const;  // -1 when absent
  std::vector<std::string> binary_label_names() const;

  /// Throws ConfigError on duplicate names or multiclass labels with < 3 classes.
  void validate() const;

  /// Priority 1..5 plus the four binary labels, in evaluation order.
  static LabelSchema default_schema();
};

struct LabelValue {
  std::string label_name;
  int value = 0;

  bool operator==(const LabelValue&) const = default;
};

enum class ModelKind { Generative, Embedding };

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::Generative;
  Micros price_in = 0;   // micro-units per input token
  Micros price_out = 0;  // micro-units per output token
  int size_rank = 1;     // proxy for parameter count; unique within a pool
  std::string family;
};

// ---------------------------------------------------------------------------
// cost arithmetic
// ---------------------------------------------------------------------------

/// price_in * input_tokens + price_out * output_tokens, exact in micro-units.
Micros request_cost(const ModelSpec& spec, const TokenUsage& usage);

/// Single per-token price under the standard 3:1 input:output blend.
/// Used only for reduction-factor reporting, never for per-request billing.
/// Exact: integer micro prices make this a multiple of 0.25.
double blended_price(const ModelSpec& spec);

}  // namespace labelcast
