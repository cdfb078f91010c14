#include <doctest.h>

#include <climits>
#include <filesystem>
#include <fstream>

#include "labelcast/provision.hpp"
#include "labelcast/rng.hpp"

using namespace labelcast;

namespace {

ProvisionCostModel two_model(Micros c0, Micros c1, const char* p, Micros z0, Micros z1,
                             std::int64_t capacity) {
  ProvisionCostModel m;
  m.base_cost = {c0, c1};
  m.run_cost = {z0, z1};
  m.penalty = Ratio::parse_decimal(p);
  m.capacity = capacity;
  m.demand_per_request = 1;
  return m;
}

// ---------------------------------------------------------------------------
// exhaustive oracle over all per-request decision sequences, in integers
// scaled by pden^max_exp so every cost is exact
// ---------------------------------------------------------------------------

struct BruteInstance {
  std::vector<std::int64_t> base_cost, run_cost;  // micros
  std::int64_t pnum = 2, pden = 1;
  std::int64_t capacity = 1, demand = 1;
  std::vector<std::int64_t> n0, k0;
  int requests = 0;
};

std::int64_t ipow(std::int64_t b, std::int64_t e) {
  std::int64_t acc = 1;
  for (std::int64_t i = 0; i < e; ++i) acc *= b;
  return acc;
}

struct BruteSearch {
  const BruteInstance& inst;
  std::int64_t max_exp;
  std::vector<std::int64_t> n, k;
  std::int64_t best = INT64_MAX;

  explicit BruteSearch(const BruteInstance& i) : inst(i), n(i.n0), k(i.k0) {
    max_exp = i.requests;
    for (std::int64_t v : i.n0) max_exp = std::max(max_exp, v + i.requests);
  }

  std::int64_t scale() const { return ipow(inst.pden, max_exp); }

  // marginal instance cost c * p^n in scaled integers
  std::int64_t inst_cost(std::size_t i) const {
    return inst.base_cost[i] * ipow(inst.pnum, n[i]) * ipow(inst.pden, max_exp - n[i]);
  }

  void dfs(int depth, std::int64_t acc) {
    if (depth == inst.requests) {
      best = std::min(best, acc);
      return;
    }
    for (std::size_t i = 0; i < inst.run_cost.size(); ++i) {
      std::int64_t add = inst.run_cost[i] * scale();
      bool provisioned = false;
      if (k[i] * inst.demand < n[i] * inst.capacity) {
        k[i] += 1;
      } else {
        add += inst_cost(i);
        n[i] += 1;
        k[i] += 1;
        provisioned = true;
      }
      dfs(depth + 1, acc + add);
      k[i] -= 1;
      if (provisioned) n[i] -= 1;
    }
  }

  std::int64_t run() {
    dfs(0, 0);
    return best;
  }
};

// greedy cost increase replayed through allocate_request
Ratio greedy_increase(const BruteInstance& inst) {
  ProvisionCostModel model;
  model.base_cost.assign(inst.base_cost.begin(), inst.base_cost.end());
  model.run_cost.assign(inst.run_cost.begin(), inst.run_cost.end());
  model.penalty = Ratio{inst.pnum, inst.pden}.normalized();
  model.capacity = inst.capacity;
  model.demand_per_request = inst.demand;
  ProvisioningState state;
  state.instances = inst.n0;
  state.served = inst.k0;
  Ratio before = total_cost(state, model).total;
  for (int r = 0; r < inst.requests; ++r) allocate_request(state, model);
  return total_cost(state, model).total - before;
}

bool ratio_equals_scaled(const Ratio& r, std::int64_t scaled, std::int64_t scale) {
  // r == scaled / scale
  Ratio rhs{scaled, scale};
  return r == rhs.normalized();
}

// single saturating stage: models past the first have slack for every request
BruteInstance random_instance(Rng& rng, int max_requests) {
  BruteInstance inst;
  int m = 2 + static_cast<int>(rng.below(2));
  inst.requests = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_requests - 3)));
  std::int64_t z = 1 + static_cast<std::int64_t>(rng.below(40));
  for (int i = 0; i < m; ++i) {
    inst.run_cost.push_back(z);
    z += 1 + static_cast<std::int64_t>(rng.below(120));
    inst.base_cost.push_back(1 + static_cast<std::int64_t>(rng.below(60)));
  }
  switch (rng.below(3)) {
    case 0: inst.pnum = 3; inst.pden = 2; break;  // 1.5
    case 1: inst.pnum = 2; inst.pden = 1; break;
    default: inst.pnum = 5; inst.pden = 1; break;
  }
  inst.capacity = 1;
  inst.demand = 1;
  inst.n0.push_back(1 + static_cast<std::int64_t>(rng.below(3)));
  inst.k0.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(inst.n0[0] + 1))));
  for (int i = 1; i < m; ++i) {
    std::int64_t slack = inst.requests + 1 + static_cast<std::int64_t>(rng.below(4));
    std::int64_t used = static_cast<std::int64_t>(rng.below(3));
    inst.n0.push_back(used + slack);
    inst.k0.push_back(used);
  }
  return inst;
}

}  // namespace

// ---------------------------------------------------------------------------
// exact rational arithmetic
// ---------------------------------------------------------------------------

TEST_CASE("ratio parses decimals exactly") {
  Ratio r = Ratio::parse_decimal("1.5");
  CHECK(r == (Ratio{3, 2}));
  CHECK(Ratio::parse_decimal("2") == Ratio::of(2));
  CHECK(Ratio::parse_decimal("0.25") == (Ratio{1, 4}));
  CHECK_THROWS_AS(Ratio::parse_decimal("x"), ConfigError);
}

TEST_CASE("ratio arithmetic and decimal rendering") {
  Ratio a{3, 2}, b{1, 4};
  CHECK((a + b) == (Ratio{7, 4}));
  CHECK((a - b) == (Ratio{5, 4}));
  CHECK((a * b) == (Ratio{3, 8}));
  CHECK(a.pow(3) == (Ratio{27, 8}));
  CHECK(b < a);
  CHECK((Ratio{27, 8}).to_decimal_string() == "3.375");
  CHECK(Ratio::of(-7).to_decimal_string() == "-7");
}

TEST_CASE("total_cost matches the worked fixtures") {
  SUBCASE("single model geometric term") {
    ProvisionCostModel m;
    m.base_cost = {10};
    m.run_cost = {1};
    m.penalty = Ratio::of(2);
    m.capacity = 8;
    ProvisioningState s{{1}, {5}};
    auto cost = total_cost(s, m);
    CHECK(cost.instance_cost == Ratio::of(10));
    CHECK(cost.run_cost == Ratio::of(5));
    CHECK(cost.total == Ratio::of(15));
  }
  SUBCASE("the five-request scenario state totals 21") {
    auto m = two_model(1, 4, "2", 1, 2, 2);
    ProvisioningState s{{1, 2}, {2, 3}};
    auto cost = total_cost(s, m);
    CHECK(cost.instance_cost == Ratio::of(13));
    CHECK(cost.run_cost == Ratio::of(8));
    CHECK(cost.total == Ratio::of(21));
  }
  SUBCASE("penalty 1 degenerates to a linear sum") {
    ProvisionCostModel m;
    m.base_cost = {2};
    m.run_cost = {1};
    m.penalty = Ratio::of(1);
    m.capacity = 100;
    ProvisioningState s{{3}, {0}};
    CHECK(total_cost(s, m).instance_cost == Ratio::of(6));
  }
  SUBCASE("fractional penalty stays exact") {
    ProvisionCostModel m;
    m.base_cost = {8};
    m.run_cost = {1};
    m.penalty = Ratio::parse_decimal("1.5");
    m.capacity = 100;
    ProvisioningState s{{3}, {0}};
    // 8 * ((1.5^3 - 1) / 0.5) = 8 * 19/4 = 38
    CHECK(total_cost(s, m).instance_cost == Ratio::of(38));
  }
}

TEST_CASE("allocate_request follows the scan-provision-escalate rule") {
  SUBCASE("free capacity serves without provisioning") {
    ProvisionCostModel m;
    m.base_cost = {3};
    m.run_cost = {1};
    m.penalty = Ratio::of(2);
    m.capacity = 10;
    ProvisioningState s{{1}, {0}};
    auto d = allocate_request(s, m);
    CHECK(d.model == 0);
    CHECK_FALSE(d.provisioned);
    CHECK(s.served[0] == 1);
    CHECK(s.instances[0] == 1);
  }
  SUBCASE("escalates when the instance penalty beats the run-cost step") {
    auto m = two_model(1, 4, "2", 1, 2, 2);
    ProvisioningState s{{1, 1}, {2, 0}};
    auto d = allocate_request(s, m);  // inst 2 >= step 1 -> move up
    CHECK(d.model == 1);
    CHECK_FALSE(d.provisioned);
    CHECK(s.served == std::vector<std::int64_t>{2, 1});
  }
  SUBCASE("provisions when the run-cost step is the expensive option") {
    auto m = two_model(1, 4, "2", 1, 10, 2);
    ProvisioningState s{{1, 1}, {2, 0}};
    auto d = allocate_request(s, m);  // inst 2 < step 9 -> provision here
    CHECK(d.model == 0);
    CHECK(d.provisioned);
    CHECK(s.instances[0] == 2);
    CHECK(s.served[0] == 3);
  }
  SUBCASE("the top of the cascade always provisions") {
    auto m = two_model(1, 4, "2", 1, 2, 2);
    ProvisioningState s{{1, 1}, {2, 2}};  // both full
    auto d = allocate_request(s, m);
    CHECK(d.model == 1);
    CHECK(d.provisioned);
    CHECK(s.instances[1] == 2);
  }
}

TEST_CASE("the five-request worked trace ends at n=(1,2), k=(2,3), total 21") {
  auto m = two_model(1, 4, "2", 1, 2, 2);
  ProvisioningState s{{1, 1}, {0, 0}};
  std::vector<std::pair<int, bool>> decisions;
  for (int r = 0; r < 5; ++r) {
    auto d = allocate_request(s, m);
    decisions.emplace_back(d.model, d.provisioned);
  }
  CHECK(decisions == std::vector<std::pair<int, bool>>{
                         {0, false}, {0, false}, {1, false}, {1, false}, {1, true}});
  CHECK(s.instances == std::vector<std::int64_t>{1, 2});
  CHECK(s.served == std::vector<std::int64_t>{2, 3});
  CHECK(total_cost(s, m).total == Ratio::of(21));
}

TEST_CASE("greedy equals the brute-force minimum on random small instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 80; ++trial) {
    BruteInstance inst = random_instance(rng, 9);
    BruteSearch search(inst);
    long long best = search.run();
    Ratio greedy = greedy_increase(inst);
    CHECK(ratio_equals_scaled(greedy, best, search.scale()));
  }
}

TEST_CASE("capacity safety: a plain serve never oversubscribes an instance") {
  Rng rng(31337);
  for (int trial = 0; trial < 40; ++trial) {
    ProvisionCostModel m;
    int models = 2 + static_cast<int>(rng.below(2));
    std::int64_t z = 1 + static_cast<std::int64_t>(rng.below(10));
    for (int i = 0; i < models; ++i) {
      m.run_cost.push_back(z);
      z += 1 + static_cast<std::int64_t>(rng.below(30));
      m.base_cost.push_back(1 + static_cast<std::int64_t>(rng.below(20)));
    }
    m.penalty = Ratio::parse_decimal("1.5");
    m.demand_per_request = 1 + static_cast<std::int64_t>(rng.below(3));
    m.capacity = m.demand_per_request * (1 + static_cast<std::int64_t>(rng.below(4)));
    ProvisioningState s;
    s.instances.assign(static_cast<std::size_t>(models), 1);
    s.served.assign(static_cast<std::size_t>(models), 0);
    for (int r = 0; r < 30; ++r) {
      allocate_request(s, m);
      for (int i = 0; i < models; ++i)
        CHECK(s.served[static_cast<std::size_t>(i)] * m.demand_per_request <=
              s.instances[static_cast<std::size_t>(i)] * m.capacity);
    }
  }
}

TEST_CASE("one-step lookahead decides identically to full lookahead") {
  // a full-lookahead variant compares c_i p^n against min over k of z_{i+k}-z_i;
  // z is strictly increasing so the min sits at k = 1
  auto allocate_full_lookahead = [](ProvisioningState& state, const ProvisionCostModel& model) {
    const int m = model.models();
    for (int i = 0; i < m; ++i) {
      if (state.served[i] * model.demand_per_request < state.instances[i] * model.capacity) {
        state.served[i] += 1;
        return std::pair<int, bool>{i, false};
      }
      Ratio inst_cost =
          Ratio::of(model.base_cost[i]) * model.penalty.pow(state.instances[i]);
      if (i + 1 < m) {
        Ratio best_step = Ratio::of(model.run_cost[i + 1] - model.run_cost[i]);
        for (int k = i + 2; k < m; ++k) {
          Ratio step = Ratio::of(model.run_cost[k] - model.run_cost[i]);
          if (step < best_step) best_step = step;
        }
        if (inst_cost < best_step) {
          state.instances[i] += 1;
          state.served[i] += 1;
          return std::pair<int, bool>{i, true};
        }
        continue;
      }
      state.instances[i] += 1;
      state.served[i] += 1;
      return std::pair<int, bool>{i, true};
    }
    throw std::logic_error("unreachable");
  };

  Rng rng(777);
  for (int trial = 0; trial < 50; ++trial) {
    BruteInstance inst = random_instance(rng, 12);
    ProvisionCostModel model;
    model.base_cost.assign(inst.base_cost.begin(), inst.base_cost.end());
    model.run_cost.assign(inst.run_cost.begin(), inst.run_cost.end());
    model.penalty = Ratio{inst.pnum, inst.pden}.normalized();
    model.capacity = inst.capacity;
    model.demand_per_request = inst.demand;
    ProvisioningState a{inst.n0, inst.k0}, b{inst.n0, inst.k0};
    for (int r = 0; r < inst.requests; ++r) {
      auto da = allocate_request(a, model);
      auto [model_b, prov_b] = allocate_full_lookahead(b, model);
      CHECK(da.model == model_b);
      CHECK(da.provisioned == prov_b);
    }
  }
}

TEST_CASE("greedy total cost is non-decreasing in the penalty factor") {
  Rng rng(11);
  std::vector<LoadRequest> trace;
  for (int i = 0; i < 60; ++i) trace.push_back({i * 10, "r" + std::to_string(i), "g"});

  double prev = -1.0;
  for (const char* p : {"1", "1.5", "2", "5"}) {
    SimulationInputs inputs;
    inputs.cost_model.base_cost = {50, 400};
    inputs.cost_model.run_cost = {10, 500};
    inputs.cost_model.penalty = Ratio::parse_decimal(p);
    inputs.cost_model.capacity = 4;
    inputs.cost_model.demand_per_request = 1;
    inputs.initial_state = {{2, 8}, {0, 0}};
    auto outcome = simulate_load(trace, inputs, AllocStrategy::Greedy);
    double total = outcome.cost_increase.to_double();
    CHECK(total >= prev);
    prev = total;
  }
}

// ---------------------------------------------------------------------------
// simulator
// ---------------------------------------------------------------------------

TEST_CASE("under-load traffic costs the same under every strategy") {
  std::vector<LoadRequest> trace;
  for (int i = 0; i < 10; ++i) trace.push_back({i * 100, "r" + std::to_string(i), "g"});
  SimulationInputs inputs;
  inputs.cost_model.base_cost = {10, 100};
  inputs.cost_model.run_cost = {1, 50};
  inputs.cost_model.penalty = Ratio::of(2);
  inputs.cost_model.capacity = 6;
  inputs.cost_model.demand_per_request = 1;
  inputs.initial_state = {{2, 2}, {0, 0}};  // 12 slots on the entry model
  auto summary = simulate_with_baselines(trace, inputs);
  CHECK(summary.greedy.cost_increase == summary.always_provision.cost_increase);
  CHECK(summary.greedy.cost_increase == summary.always_escalate.cost_increase);
  CHECK(summary.greedy.final_state.instances == std::vector<std::int64_t>{2, 2});
}

TEST_CASE("ledger marginals reconcile with the recomputed totals") {
  std::vector<LoadRequest> trace;
  for (int i = 0; i < 40; ++i) trace.push_back({i * 5, "r" + std::to_string(i), "g"});
  SimulationInputs inputs;
  inputs.cost_model.base_cost = {5, 40};
  inputs.cost_model.run_cost = {10, 60};
  inputs.cost_model.penalty = Ratio::parse_decimal("1.5");
  inputs.cost_model.capacity = 3;
  inputs.cost_model.demand_per_request = 1;
  inputs.initial_state = {{1, 1}, {0, 0}};
  auto outcome = simulate_load(trace, inputs, AllocStrategy::Greedy);
  Ratio acc = outcome.initial_cost.total;
  for (const auto& row : outcome.ledger) {
    acc = acc + row.marginal_cost;
    CHECK(acc == row.cumulative_total);
  }
  CHECK(acc == outcome.final_cost.total);
}

TEST_CASE("quality downgrade enters at the cheaper model while the entry is full") {
  SimulationInputs inputs;
  inputs.cost_model.base_cost = {10, 1000};
  inputs.cost_model.run_cost = {1, 100};
  inputs.cost_model.penalty = Ratio::of(2);
  inputs.cost_model.capacity = 2;
  inputs.cost_model.demand_per_request = 1;
  inputs.initial_state = {{5, 1}, {0, 2}};  // model 1 already full, model 0 has room
  inputs.entry_by_group = {{"vip", 1}};
  OrgPolicy p;
  p.group = "vip";
  p.kind = OrgPolicy::Kind::QualityDowngrade;
  p.target_model = 0;
  inputs.policies = {p};

  std::vector<LoadRequest> trace = {{0, "r0", "vip"}};
  auto outcome = simulate_load(trace, inputs, AllocStrategy::Greedy);
  REQUIRE(outcome.ledger.size() == 1);
  CHECK(outcome.ledger[0].model == 0);
  CHECK(outcome.ledger[0].action == "served");
  CHECK(outcome.final_state.instances == std::vector<std::int64_t>{5, 1});  // no penalty
}

TEST_CASE("delay stagger defers and is served plainly once capacity frees") {
  SimulationInputs inputs;
  inputs.cost_model.base_cost = {10, 100000};
  inputs.cost_model.run_cost = {1, 100000 + 1};
  inputs.cost_model.penalty = Ratio::of(2);
  inputs.cost_model.capacity = 2;
  inputs.cost_model.demand_per_request = 1;
  inputs.initial_state = {{1, 9}, {2, 0}};  // model 0 full from the start (t=0)
  OrgPolicy p;
  p.group = "batch";
  p.kind = OrgPolicy::Kind::DelayStagger;
  p.kappa = 1.0;
  inputs.policies = {p};

  std::vector<LoadRequest> trace = {
      {10000, "delayed", "batch"},   // at capacity for 10 s -> deferred 10 s
      {15000, "pusher", "standard"}, // provisioning frees a slot meanwhile
  };
  auto outcome = simulate_load(trace, inputs, AllocStrategy::Greedy);
  REQUIRE(outcome.ledger.size() == 3);
  CHECK(outcome.ledger[0].action == "deferred");
  CHECK(outcome.ledger[0].deferred_ms == 10000);
  CHECK(outcome.ledger[1].email_id == "pusher");
  CHECK(outcome.ledger[1].action == "provisioned");
  CHECK(outcome.ledger[2].email_id == "delayed");
  CHECK(outcome.ledger[2].timestamp_ms == 20000);
  CHECK(outcome.ledger[2].action == "served");  // free slot, no provisioning
  CHECK(outcome.ledger[2].model == 0);
}

TEST_CASE("a group without a policy passes straight through") {
  SimulationInputs with_policy;
  with_policy.cost_model.base_cost = {10, 100};
  with_policy.cost_model.run_cost = {1, 50};
  with_policy.cost_model.penalty = Ratio::of(2);
  with_policy.cost_model.capacity = 1;
  with_policy.cost_model.demand_per_request = 1;
  with_policy.initial_state = {{1, 1}, {0, 0}};
  OrgPolicy p;
  p.group = "other";
  p.kind = OrgPolicy::Kind::DelayStagger;
  with_policy.policies = {p};
  SimulationInputs without = with_policy;
  without.policies.clear();

  std::vector<LoadRequest> trace;
  for (int i = 0; i < 6; ++i) trace.push_back({i, "r" + std::to_string(i), "unknown"});
  auto a = simulate_load(trace, with_policy, AllocStrategy::Greedy);
  auto b = simulate_load(trace, without, AllocStrategy::Greedy);
  CHECK(a.final_cost.total == b.final_cost.total);
  CHECK(a.final_state.instances == b.final_state.instances);
}

TEST_CASE("malformed traces are rejected") {
  auto dir = std::filesystem::temp_directory_path() / "lc_prov_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "bad.csv").string();
  {
    std::ofstream out(path);
    out << "timestamp_ms,email_id,user_group\n100,a,g\n50,b,g\n";  // goes backwards
  }
  CHECK_THROWS_AS(load_trace_csv(path), ConfigError);
  {
    std::ofstream out(path);
    out << "timestamp_ms,email_id,user_group\nnot_a_number,a,g\n";
  }
  CHECK_THROWS_AS(load_trace_csv(path), ConfigError);
}

TEST_CASE("cost model validation rejects bad shapes") {
  ProvisionCostModel m;
  m.base_cost = {1, 2};
  m.run_cost = {5, 5};  // not strictly increasing
  m.penalty = Ratio::of(2);
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.run_cost = {5, 6};
  m.penalty = Ratio::parse_decimal("0.5");  // below 1
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.penalty = Ratio::of(2);
  m.capacity = 3;
  m.demand_per_request = 2;  // slots must divide capacity
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.capacity = 4;
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("classifier traffic rides the ledger at flat cost without touching capacity") {
  SimulationInputs inputs;
  inputs.cost_model.base_cost = {10, 100};
  inputs.cost_model.run_cost = {5, 50};
  inputs.cost_model.penalty = Ratio::of(2);
  inputs.cost_model.capacity = 4;
  inputs.cost_model.demand_per_request = 1;
  inputs.initial_state = {{2, 2}, {0, 0}};
  inputs.cpu_requests_per_arrival = 4;
  inputs.cpu_request_cost = 3;

  std::vector<LoadRequest> trace;
  for (int i = 0; i < 5; ++i) trace.push_back({i, "r" + std::to_string(i), "g"});
  auto outcome = simulate_load(trace, inputs, AllocStrategy::Greedy);
  int cpu_rows = 0;
  for (const auto& row : outcome.ledger)
    if (row.action == "cpu") {
      ++cpu_rows;
      CHECK(row.model == -1);
      CHECK(row.marginal_cost == Ratio::of(12));  // 4 labels at 3 micros
    }
  CHECK(cpu_rows == 5);
  CHECK(outcome.cpu_cost_total == 60);
  CHECK(outcome.final_state.instances == std::vector<std::int64_t>{2, 2});  // no provisioning
}
