#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "labelcast/backend.hpp"
#include "labelcast/core.hpp"
#include "labelcast/dataset.hpp"
#include "labelcast/provision.hpp"

namespace labelcast {

// Synthetic dataset + baseline labels with a controlled conditional label
// structure: Priority is drawn from a marginal, each binary label from
// P(label = 1 | Priority). That is enough to reproduce concentrated label
// co-occurrences (and their absence) on demand.
struct MockWorldSpec {
  std::uint64_t seed = 1;
  int emails = 1000;
  std::array<double, 5> priority_marginal{0.15, 0.20, 0.20, 0.25, 0.20};
  // label name -> P(value = 1 | priority = 1..5)
  std::map<std::string, std::array<double, 5>> binary_given_priority{
      {"NeedsReply", {0.30, 0.40, 0.50, 0.60, 0.70}},
      {"IsUrgent", {0.20, 0.30, 0.50, 0.97, 0.80}},
      {"NeedsAction", {0.30, 0.45, 0.55, 0.65, 0.60}},
      {"NeedsScheduling", {0.30, 0.02, 0.40, 0.50, 0.60}},
  };
  int body_min_words = 20;
  int body_max_words = 160;
};

struct MockWorld {
  LabelSchema schema;
  std::vector<Email> emails;
  std::shared_ptr<LabelTable> baseline;
};

MockWorld generate_mock_world(const MockWorldSpec& spec);

// Table-shaped default pool: five generative models of increasing size plus
// one embedding model, priced so the solo blended-cost reduction factors
// against the baseline come out at 105/100/90/20/10 (and 100 for embeddings).
struct DefaultPool {
  std::vector<ModelSpec> generative;  // ascending size_rank
  ModelSpec embedding;
  ModelSpec baseline;                 // the reference frontier model
  std::map<std::string, MockModelConfig> mock_configs;
};

DefaultPool default_pool(std::uint64_t seed);

/// Peak-load arrival trace: a steady phase followed by a burst phase with a
/// multiplied arrival rate. Deterministic in the seed.
std::vector<LoadRequest> generate_arrival_trace(std::uint64_t seed, int steady_requests,
                                                int burst_requests, std::int64_t steady_gap_ms,
                                                std::int64_t burst_gap_ms,
                                                const std::vector<std::string>& groups);

}  // namespace labelcast
