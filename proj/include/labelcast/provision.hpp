#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "labelcast/core.hpp"

namespace labelcast {

// Exact rational arithmetic for penalty-scaled instance costs. 128-bit
// components keep p^n exact deep into a provisioning burst; overflow throws
// rather than silently wrapping, so comparisons stay order-stable.
struct Ratio {
  using Wide = __int128;
  Wide num = 0;
  Wide den = 1;  // > 0, reduced

  static Ratio of(std::int64_t v) { return {v, 1}; }
  static Ratio parse_decimal(const std::string& s);  // "1.5" -> 3/2

  Ratio normalized() const;
  Ratio operator+(const Ratio& o) const;
  Ratio operator-(const Ratio& o) const;
  Ratio operator*(const Ratio& o) const;
  bool operator==(const Ratio& o) const;
  bool operator<(const Ratio& o) const;
  bool operator<=(const Ratio& o) const { return *this < o || *this == o; }

  Ratio pow(std::int64_t e) const;
  double to_double() const;
  std::string to_decimal_string(int max_digits = 24) const;
};

struct ProvisionCostModel {
  std::vector<Micros> base_cost;  // c_i per model, cascade order
  Ratio penalty{2, 1};            // p >= 1
  std::vector<Micros> run_cost;   // z_i strictly increasing
  std::int64_t capacity = 1;      // C, demand units per instance
  std::int64_t demand_per_request = 1;  // D_req = D / r

  int models() const { return static_cast<int>(run_cost.size()); }
  void validate() const;
};

struct ProvisioningState {
  std::vector<std::int64_t> instances;  // n_i, positive
  std::vector<std::int64_t> served;     // k_i, nonnegative

  void validate(const ProvisionCostModel& m) const;
};

struct AllocationDecision {
  int model = 0;             // serving model index
  bool provisioned = false;  // a new instance was added there
  Ratio marginal_cost;       // run cost plus any instance cost
};

/// One step of the greedy rule: scan models from `entry` up; serve on free
/// capacity; at a full model provision when c_i * p^n_i undercuts the
/// run-cost step to the next model, else escalate. The top of the cascade
/// always provisions, which makes allocation total.
AllocationDecision allocate_request(ProvisioningState& state, const ProvisionCostModel& model,
                                    int entry = 0);

struct CostBreakdown {
  Ratio instance_cost;
  Ratio run_cost;
  Ratio total;
};

/// InstanceCost = sum c_i (p^n_i - 1)/(p - 1) (n_i * c_i when p == 1);
/// RunCost = sum k_i z_i. Exact.
CostBreakdown total_cost(const ProvisioningState& state, const ProvisionCostModel& model);

struct OrgPolicy {
  enum class Kind { QualityDowngrade, DelayStagger };
  std::string group;
  Kind kind = Kind::QualityDowngrade;
  int target_model = 0;  // QualityDowngrade: entry override, below the planned entry
  double kappa = 1.0;    // DelayStagger: delay = kappa * at-capacity duration
};

struct LoadRequest {
  std::int64_t timestamp_ms = 0;
  std::string email_id;
  std::string group;
};

std::vector<LoadRequest> load_trace_csv(const std::string& path);
void save_trace_csv(const std::vector<LoadRequest>& trace, const std::string& path);

enum class AllocStrategy { Greedy, AlwaysProvision, AlwaysEscalate };

struct LedgerRow {
  std::int64_t timestamp_ms = 0;
  std::string email_id;
  std::string group;
  std::string action;  // served | provisioned | deferred
  int model = -1;
  Ratio marginal_cost;
  Ratio cumulative_total;  // total_cost(state) after the event
  std::int64_t deferred_ms = 0;
};

struct SimulationOutcome {
  std::vector<LedgerRow> ledger;
  ProvisioningState final_state;
  CostBreakdown initial_cost;
  CostBreakdown final_cost;
  Ratio cost_increase;      // final - initial, SLM provisioning and serving only
  Micros cpu_cost_total = 0;  // flat-rate classifier traffic
};

struct SimulationInputs {
  ProvisionCostModel cost_model;
  ProvisioningState initial_state;
  std::vector<OrgPolicy> policies;              // keyed by group
  std::map<std::string, int> entry_by_group;    // planned entry model per group (default 0)
  // classifier-served labels ride along each arrival at a flat CPU cost;
  // they are billed in the ledger but never consume SLM capacity
  int cpu_requests_per_arrival = 0;
  Micros cpu_request_cost = 0;
};

/// Deterministic discrete-event replay ordered by (timestamp, arrival seq).
/// Policies apply first while the entry instance is at capacity. Served
/// requests never migrate, instances are never released.
SimulationOutcome simulate_load(const std::vector<LoadRequest>& trace,
                                const SimulationInputs& inputs, AllocStrategy strategy);

struct SimulationSummary {
  SimulationOutcome greedy;
  SimulationOutcome always_provision;
  SimulationOutcome always_escalate;
  double provision_over_greedy = 1.0;  // cost-increase ratios
  double escalate_over_greedy = 1.0;
};

SimulationSummary simulate_with_baselines(const std::vector<LoadRequest>& trace,
                                          const SimulationInputs& inputs);

}  // namespace labelcast
