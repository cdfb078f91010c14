#include "labelcast/provision.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

namespace labelcast {

namespace {

using i128 = __int128;

i128 checked_mul(i128 a, i128 b, const char* what) {
  i128 out;
  if (__builtin_mul_overflow(a, b, &out))
    throw std::overflow_error(std::string("ratio overflow in ") + what);
  return out;
}

i128 checked_add(i128 a, i128 b, const char* what) {
  i128 out;
  if (__builtin_add_overflow(a, b, &out))
    throw std::overflow_error(std::string("ratio overflow in ") + what);
  return out;
}

Ratio make_reduced(i128 num, i128 den, const char* what) {
  (void)what;
  if (den == 0) throw std::invalid_argument("ratio with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 a = num < 0 ? -num : num;
  i128 b = den;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return {num, den};
}

std::string wide_to_string(i128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
  std::string digits;
  while (u > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) digits.push_back('-');
  std::reverse(digits.begin(), digits.end());
  return digits;
}

}  // namespace

Ratio Ratio::normalized() const { return make_reduced(num, den, "normalize"); }

Ratio Ratio::parse_decimal(const std::string& s) {
  if (s.empty()) throw ConfigError("empty decimal");
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  std::int64_t ip = 0;
  bool any = false;
  for (; i < s.size() && s[i] != '.'; ++i) {
    if (s[i] < '0' || s[i] > '9') throw ConfigError("bad decimal: " + s);
    ip = ip * 10 + (s[i] - '0');
    any = true;
  }
  i128 num = ip;
  i128 den = 1;
  if (i < s.size() && s[i] == '.') {
    for (++i; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') throw ConfigError("bad decimal: " + s);
      num = num * 10 + (s[i] - '0');
      den *= 10;
      any = true;
    }
  }
  if (!any) throw ConfigError("bad decimal: " + s);
  if (neg) num = -num;
  return make_reduced(num, den, "parse");
}

Ratio Ratio::operator+(const Ratio& o) const {
  Ratio a = normalized(), b = o.normalized();
  i128 g = [](i128 x, i128 y) { while (y) { i128 t = x % y; x = y; y = t; } return x; }(a.den, b.den);
  i128 bd = b.den / g;
  i128 lhs = checked_mul(a.num, bd, "add");
  i128 rhs = checked_mul(b.num, a.den / g, "add");
  return make_reduced(checked_add(lhs, rhs, "add"), checked_mul(a.den, bd, "add"), "add");
}

Ratio Ratio::operator-(const Ratio& o) const {
  Ratio neg{-o.num, o.den};
  return *this + neg;
}

Ratio Ratio::operator*(const Ratio& o) const {
  // cross-reduce first so intermediate products stay small
  Ratio a = make_reduced(num, o.den, "mul");
  Ratio b = make_reduced(o.num, den, "mul");
  return make_reduced(checked_mul(a.num, b.num, "mul"), checked_mul(a.den, b.den, "mul"), "mul");
}

bool Ratio::operator==(const Ratio& o) const {
  Ratio a = normalized(), b = o.normalized();
  return a.num == b.num && a.den == b.den;
}

bool Ratio::operator<(const Ratio& o) const {
  Ratio a = normalized(), b = o.normalized();
  return checked_mul(a.num, b.den, "cmp") < checked_mul(b.num, a.den, "cmp");
}

Ratio Ratio::pow(std::int64_t e) const {
  if (e < 0) throw std::invalid_argument("negative ratio exponent");
  Ratio acc = Ratio::of(1);
  Ratio base = this->normalized();
  while (e > 0) {
    if (e & 1) acc = acc * base;
    base = base * base;
    e >>= 1;
  }
  return acc;
}

double Ratio::to_double() const {
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string Ratio::to_decimal_string(int max_digits) const {
  Ratio r = normalized();
  std::string out;
  i128 n = r.num;
  if (n < 0) {
    out.push_back('-');
    n = -n;
  }
  out += wide_to_string(n / r.den);
  i128 rem = n % r.den;
  if (rem == 0) return out;
  out.push_back('.');
  for (int d = 0; d < max_digits && rem != 0; ++d) {
    rem *= 10;
    out.push_back(static_cast<char>('0' + static_cast<int>(rem / r.den)));
    rem %= r.den;
  }
  return out;
}

void ProvisionCostModel::validate() const {
  if (run_cost.empty()) throw ConfigError("cost model needs at least one model");
  if (base_cost.size() != run_cost.size())
    throw ConfigError("base_cost and run_cost sizes differ");
  for (std::size_t i = 1; i < run_cost.size(); ++i)
    if (run_cost[i] <= run_cost[i - 1])
      throw ConfigError("run costs must be strictly increasing up the cascade");
  for (Micros c : base_cost)
    if (c < 0) throw ConfigError("negative base cost");
  if (penalty < Ratio::of(1)) throw ConfigError("penalty must be >= 1");
  if (capacity <= 0 || demand_per_request <= 0)
    throw ConfigError("capacity and per-request demand must be positive");
  if (capacity % demand_per_request != 0)
    throw ConfigError("instance capacity must be a whole number of request slots");
}

void ProvisioningState::validate(const ProvisionCostModel& m) const {
  if (instances.size() != m.run_cost.size() || served.size() != m.run_cost.size())
    throw ConfigError("state size does not match cost model");
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i] < 1) throw ConfigError("each model needs at least one instance");
    if (served[i] < 0) throw ConfigError("negative served count");
    if (served[i] * m.demand_per_request > instances[i] * m.capacity + m.demand_per_request)
      throw ConfigError("served demand exceeds capacity beyond one admission");
  }
}

AllocationDecision allocate_request(ProvisioningState& state, const ProvisionCostModel& model,
                                    int entry) {
  model.validate();
  state.validate(model);
  const int m = model.models();
  if (entry < 0 || entry >= m) throw ConfigError("entry model out of range");

  for (int i = entry; i < m; ++i) {
    if (state.served[i] * model.demand_per_request < state.instances[i] * model.capacity) {
      // free instance capacity here
      state.served[i] += 1;
      return {i, false, Ratio::of(model.run_cost[i])};
    }
    Ratio inst_cost = Ratio::of(model.base_cost[i]) * model.penalty.pow(state.instances[i]);
    if (i + 1 < m) {
      Ratio run_step = Ratio::of(model.run_cost[i + 1] - model.run_cost[i]);
      if (inst_cost < run_step) {
        state.instances[i] += 1;  // cheaper to add an instance here
        state.served[i] += 1;
        return {i, true, inst_cost + Ratio::of(model.run_cost[i])};
      }
      continue;  // try the next more expensive model
    }
    // top of the cascade: the run-cost step is infinite, always provision
    state.instances[i] += 1;
    state.served[i] += 1;
    return {i, true, inst_cost + Ratio::of(model.run_cost[i])};
  }
  throw ConfigError("unreachable: allocation is total");
}

CostBreakdown total_cost(const ProvisioningState& state, const ProvisionCostModel& model) {
  CostBreakdown out;
  out.instance_cost = Ratio::of(0);
  out.run_cost = Ratio::of(0);
  const Ratio one = Ratio::of(1);
  for (int i = 0; i < model.models(); ++i) {
    Ratio geom;
    if (model.penalty == one) {
      geom = Ratio::of(state.instances[i]);
    } else {
      geom = (model.penalty.pow(state.instances[i]) - one) *
             make_reduced((model.penalty - one).den, (model.penalty - one).num, "inv");
    }
    out.instance_cost = out.instance_cost + Ratio::of(model.base_cost[i]) * geom;
    out.run_cost = out.run_cost + Ratio::of(state.served[i] * model.run_cost[i]);
  }
  out.total = out.instance_cost + out.run_cost;
  return out;
}

std::vector<LoadRequest> load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace: " + path);
  std::vector<LoadRequest> trace;
  std::string line;
  std::size_t lineno = 0;
  std::int64_t prev_t = INT64_MIN;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("timestamp_ms", 0) == 0) continue;  // header
    std::istringstream row(line);
    std::string t_str, email, group;
    if (!std::getline(row, t_str, ',') || !std::getline(row, email, ','))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed trace row");
    std::getline(row, group, ',');
    LoadRequest r;
    try {
      r.timestamp_ms = std::stoll(t_str);
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad timestamp");
    }
    if (r.timestamp_ms < prev_t)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": trace not time-ordered");
    prev_t = r.timestamp_ms;
    r.email_id = email;
    r.group = group;
    trace.push_back(std::move(r));
  }
  return trace;
}

void save_trace_csv(const std::vector<LoadRequest>& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write trace: " + path);
  out << "timestamp_ms,email_id,user_group\n";
  for (const auto& r : trace)
    out << r.timestamp_ms << ',' << r.email_id << ',' << r.group << '\n';
}

namespace {

struct PendingRequest {
  std::int64_t time_ms;
  std::int64_t seq;
  const LoadRequest* req;
  bool already_deferred;

  bool operator>(const PendingRequest& o) const {
    if (time_ms != o.time_ms) return time_ms > o.time_ms;
    return seq > o.seq;
  }
};

bool is_full(const ProvisioningState& s, const ProvisionCostModel& m, int i) {
  return s.served[i] * m.demand_per_request >= s.instances[i] * m.capacity;
}

AllocationDecision allocate_always_provision(ProvisioningState& state,
                                             const ProvisionCostModel& model, int entry) {
  if (!is_full(state, model, entry)) {
    state.served[entry] += 1;
    return {entry, false, Ratio::of(model.run_cost[entry])};
  }
  Ratio inst_cost = Ratio::of(model.base_cost[entry]) * model.penalty.pow(state.instances[entry]);
  state.instances[entry] += 1;
  state.served[entry] += 1;
  return {entry, true, inst_cost + Ratio::of(model.run_cost[entry])};
}

AllocationDecision allocate_always_escalate(ProvisioningState& state,
                                            const ProvisionCostModel& model, int entry) {
  const int m = model.models();
  for (int i = entry; i < m; ++i) {
    if (!is_full(state, model, i)) {
      state.served[i] += 1;
      return {i, false, Ratio::of(model.run_cost[i])};
    }
  }
  int top = m - 1;
  Ratio inst_cost = Ratio::of(model.base_cost[top]) * model.penalty.pow(state.instances[top]);
  state.instances[top] += 1;
  state.served[top] += 1;
  return {top, true, inst_cost + Ratio::of(model.run_cost[top])};
}

}  // namespace

SimulationOutcome simulate_load(const std::vector<LoadRequest>& trace,
                                const SimulationInputs& inputs, AllocStrategy strategy) {
  const ProvisionCostModel& model = inputs.cost_model;
  model.validate();
  SimulationOutcome out;
  ProvisioningState state = inputs.initial_state;
  state.validate(model);

  std::map<std::string, const OrgPolicy*> policy_by_group;
  for (const auto& p : inputs.policies) policy_by_group[p.group] = &p;

  out.initial_cost = total_cost(state, model);

  // track when each model last became full, for delay staggering; models full
  // in the initial state count as full since the simulation epoch (t = 0)
  std::vector<std::int64_t> full_since(static_cast<std::size_t>(model.models()), -1);
  auto refresh_full = [&](std::int64_t now) {
    for (int i = 0; i < model.models(); ++i) {
      bool f = is_full(state, model, i);
      if (f && full_since[static_cast<std::size_t>(i)] < 0)
        full_since[static_cast<std::size_t>(i)] = now;
      else if (!f)
        full_since[static_cast<std::size_t>(i)] = -1;
    }
  };
  refresh_full(0);

  std::priority_queue<PendingRequest, std::vector<PendingRequest>, std::greater<>> queue;
  for (std::size_t i = 0; i < trace.size(); ++i)
    queue.push({trace[i].timestamp_ms, static_cast<std::int64_t>(i), &trace[i], false});

  while (!queue.empty()) {
    PendingRequest pending = queue.top();
    queue.pop();
    const LoadRequest& req = *pending.req;
    refresh_full(pending.time_ms);

    int entry = 0;
    if (auto it = inputs.entry_by_group.find(req.group); it != inputs.entry_by_group.end())
      entry = it->second;
    if (entry < 0 || entry >= model.models())
      throw ConfigError("entry model out of range for group " + req.group);

    // org policies apply only while the planned entry instance is at capacity;
    // unknown groups pass straight through
    const OrgPolicy* policy = nullptr;
    if (auto it = policy_by_group.find(req.group); it != policy_by_group.end())
      policy = it->second;
    if (policy && is_full(state, model, entry)) {
      if (policy->kind == OrgPolicy::Kind::DelayStagger && !pending.already_deferred) {
        std::int64_t full_start = full_since[static_cast<std::size_t>(entry)];
        std::int64_t at_capacity_ms = full_start < 0 ? 0 : pending.time_ms - full_start;
        std::int64_t delay =
            static_cast<std::int64_t>(policy->kappa * static_cast<double>(at_capacity_ms));
        if (delay > 0) {
          LedgerRow row;
          row.timestamp_ms = pending.time_ms;
          row.email_id = req.email_id;
          row.group = req.group;
          row.action = "deferred";
          row.deferred_ms = delay;
          row.cumulative_total = total_cost(state, model).total;
          out.ledger.push_back(std::move(row));
          queue.push({pending.time_ms + delay, pending.seq, pending.req, true});
          continue;
        }
      } else if (policy->kind == OrgPolicy::Kind::QualityDowngrade) {
        if (policy->target_model >= entry)
          throw ConfigError("downgrade target must be below the planned entry model");
        entry = policy->target_model;
      }
    }

    AllocationDecision d;
    switch (strategy) {
      case AllocStrategy::Greedy:
        d = allocate_request(state, model, entry);
        break;
      case AllocStrategy::AlwaysProvision:
        d = allocate_always_provision(state, model, entry);
        break;
      case AllocStrategy::AlwaysEscalate:
        d = allocate_always_escalate(state, model, entry);
        break;
    }
    refresh_full(pending.time_ms);

    LedgerRow row;
    row.timestamp_ms = pending.time_ms;
    row.email_id = req.email_id;
    row.group = req.group;
    row.action = d.provisioned ? "provisioned" : "served";
    row.model = d.model;
    row.marginal_cost = d.marginal_cost;
    row.cumulative_total = total_cost(state, model).total;
    out.ledger.push_back(std::move(row));

    if (inputs.cpu_requests_per_arrival > 0) {
      Micros flat = inputs.cpu_request_cost * inputs.cpu_requests_per_arrival;
      out.cpu_cost_total += flat;
      LedgerRow cpu;
      cpu.timestamp_ms = pending.time_ms;
      cpu.email_id = req.email_id;
      cpu.group = req.group;
      cpu.action = "cpu";
      cpu.model = -1;
      cpu.marginal_cost = Ratio::of(flat);
      cpu.cumulative_total = total_cost(state, model).total;  // SLM side only
      out.ledger.push_back(std::move(cpu));
    }
  }

  out.final_state = state;
  out.final_cost = total_cost(state, model);
  out.cost_increase = out.final_cost.total - out.initial_cost.total;
  return out;
}

SimulationSummary simulate_with_baselines(const std::vector<LoadRequest>& trace,
                                          const SimulationInputs& inputs) {
  SimulationSummary s;
  s.greedy = simulate_load(trace, inputs, AllocStrategy::Greedy);
  s.always_provision = simulate_load(trace, inputs, AllocStrategy::AlwaysProvision);
  s.always_escalate = simulate_load(trace, inputs, AllocStrategy::AlwaysEscalate);
  double g = s.greedy.cost_increase.to_double();
  double ap = s.always_provision.cost_increase.to_double();
  double ae = s.always_escalate.cost_increase.to_double();
  s.provision_over_greedy = g > 0 ? ap / g : (ap > 0 ? 1e18 : 1.0);
  s.escalate_over_greedy = g > 0 ? ae / g : (ae > 0 ? 1e18 : 1.0);
  return s;
}

}  // namespace labelcast
