#include "labelcast/mockworld.hpp"

#include <algorithm>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "labelcast/rng.hpp"

namespace labelcast {

namespace {

const char* kSubjectWords[] = {"quarterly", "review",  "schedule", "budget",  "meeting",
                               "urgent",    "update",  "contract", "invoice", "report",
                               "planning",  "release", "outage",   "hiring",  "renewal"};

const char* kBodyWords[] = {
    "please",  "find",     "attached", "the",      "latest",   "numbers",  "before",
    "friday",  "we",       "need",     "your",     "approval", "on",       "this",
    "thanks",  "regards",  "team",     "project",  "deadline", "moved",    "call",
    "tomorrow", "client",  "asked",    "for",      "a",        "follow",   "up",
    "draft",   "ready",    "review",   "when",     "you",      "can",      "costs",
    "tracking", "above",   "forecast", "let",      "me",       "know",     "if",
    "anything", "blocks",  "delivery", "notes",    "from",     "yesterday", "are",
    "shared"};

int draw_from(Rng& rng, const double* probs, int n) {
  double u = rng.uniform01();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;
}

}  // namespace

MockWorld generate_mock_world(const MockWorldSpec& spec) {
  MockWorld world;
  world.schema = LabelSchema::default_schema();
  world.baseline = std::make_shared<LabelTable>();

  double marginal_sum = 0.0;
  for (double p : spec.priority_marginal) marginal_sum += p;
  if (marginal_sum <= 0.0) throw ConfigError("priority marginal must have positive mass");
  std::array<double, 5> marginal = spec.priority_marginal;
  for (double& p : marginal) p /= marginal_sum;

  Rng rng(hash_combine(spec.seed, fnv1a64("mock-world")));
  world.emails.reserve(static_cast<std::size_t>(spec.emails));
  for (int i = 0; i < spec.emails; ++i) {
    Email e;
    std::ostringstream id;
    id << "email-" << std::setw(6) << std::setfill('0') << i;
    e.id = id.str();

    std::ostringstream subject;
    int subject_words = 2 + static_cast<int>(rng.below(4));
    for (int w = 0; w < subject_words; ++w) {
      if (w) subject << ' ';
      subject << kSubjectWords[rng.below(std::size(kSubjectWords))];
    }
    e.subject = subject.str();

    std::ostringstream body;
    int span = std::max(1, spec.body_max_words - spec.body_min_words + 1);
    int body_words = spec.body_min_words + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
    for (int w = 0; w < body_words; ++w) {
      if (w) body << ' ';
      body << kBodyWords[rng.below(std::size(kBodyWords))];
    }
    e.body = body.str();
    e.metadata["sender"] = "user-" + std::to_string(rng.below(64)) + "@example.com";
    e.metadata["timestamp"] = std::to_string(1700000000 + i * 61);
    e.token_count_estimate = estimate_tokens(e.subject, e.body);

    int priority_idx = draw_from(rng, marginal.data(), 5);
    world.baseline->set(e.id, "Priority", priority_idx + 1);
    for (const auto& label : world.schema.labels) {
      if (!label.is_binary()) continue;
      auto it = spec.binary_given_priority.find(label.name);
      double p1 = it == spec.binary_given_priority.end()
                      ? 0.5
                      : it->second[static_cast<std::size_t>(priority_idx)];
      world.baseline->set(e.id, label.name, rng.uniform01() < p1 ? 1 : 0);
    }
    world.emails.push_back(std::move(e));
  }
  return world;
}

DefaultPool default_pool(std::uint64_t seed) {
  DefaultPool pool;
  // baseline blended price 12600 micro per token; solo factors 105/100/90/20/10
  auto gen = [](const std::string& name, Micros price, int rank, const std::string& family) {
    ModelSpec s;
    s.name = name;
    s.kind = ModelKind::Generative;
    s.price_in = price;
    s.price_out = price;
    s.size_rank = rank;
    s.family = family;
    return s;
  };
  pool.generative = {
      gen("slm-3b", 120, 1, "alpha"),
      gen("slm-8b", 126, 2, "bravo"),
      gen("slm-27b", 140, 3, "gamma"),
      gen("slm-32b", 630, 4, "delta"),
      gen("slm-70b", 1260, 5, "bravo"),
  };
  pool.embedding = gen("embed-large", 126, 6, "epsilon");
  pool.embedding.kind = ModelKind::Embedding;
  pool.baseline = gen("frontier-xl", 12600, 9, "frontier");

  auto mock = [seed](std::uint64_t salt, double agreement, double mu_ok, double sd_ok,
                     double mu_bad, double sd_bad, std::int64_t in_tokens) {
    MockModelConfig c;
    c.seed = hash_combine(seed, salt);
    c.agreement_rate = agreement;
    c.confidence_when_correct = {mu_ok, sd_ok};
    c.confidence_when_wrong = {mu_bad, sd_bad};
    c.usage_profile = {in_tokens, 1};
    return c;
  };
  // the mid-size models are dominated on the solo front (cheaper models match
  // or beat their agreement), so the selected cascade is the 3-model shape
  pool.mock_configs["slm-3b"] = mock(1, 0.80, 0.88, 0.06, 0.62, 0.10, 96);
  pool.mock_configs["slm-8b"] = mock(2, 0.88, 0.89, 0.05, 0.63, 0.10, 96);
  pool.mock_configs["slm-27b"] = mock(3, 0.86, 0.90, 0.05, 0.65, 0.09, 112);
  pool.mock_configs["slm-32b"] = mock(4, 0.85, 0.92, 0.04, 0.68, 0.08, 112);
  pool.mock_configs["slm-70b"] = mock(5, 0.97, 0.94, 0.03, 0.70, 0.08, 128);
  pool.mock_configs["embed-large"] = mock(6, 1.0, 0.99, 0.0, 0.5, 0.1, 96);
  pool.mock_configs["frontier-xl"] = mock(7, 1.0, 0.97, 0.02, 0.5, 0.1, 128);
  return pool;
}

std::vector<LoadRequest> generate_arrival_trace(std::uint64_t seed, int steady_requests,
                                                int burst_requests, std::int64_t steady_gap_ms,
                                                std::int64_t burst_gap_ms,
                                                const std::vector<std::string>& groups) {
  Rng rng(hash_combine(seed, fnv1a64("arrivals")));
  std::vector<LoadRequest> trace;
  std::int64_t t = 0;
  int id = 0;
  auto push = [&](std::int64_t gap) {
    LoadRequest r;
    r.timestamp_ms = t;
    r.email_id = "req-" + std::to_string(id++);
    r.group = groups.empty() ? "default" : groups[rng.below(groups.size())];
    trace.push_back(std::move(r));
    t += gap;
  };
  for (int i = 0; i < steady_requests; ++i) push(steady_gap_ms);
  for (int i = 0; i < burst_requests; ++i) push(burst_gap_ms);
  return trace;
}

}  // namespace labelcast
