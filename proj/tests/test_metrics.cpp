#include <doctest.h>

#include "labelcast/metrics.hpp"
#include "labelcast/rng.hpp"

using namespace labelcast;

TEST_CASE("binary F1 fixtures") {
  std::vector<int> mixed = {1, 0, 1, 1, 0};
  CHECK(f1_binary(mixed, mixed) == 1.0);

  std::vector<int> preds = {1, 1, 0, 0};
  std::vector<int> refs = {1, 0, 1, 0};
  CHECK(f1_binary(preds, refs) == 0.5);  // TP=1 FP=1 FN=1

  std::vector<int> zeros = {0, 0, 0};
  std::vector<int> one_pos = {0, 1, 0};
  CHECK(f1_binary(zeros, one_pos) == 0.0);
}

TEST_CASE("binary F1 vacuous perfection and errors") {
  std::vector<int> zeros = {0, 0};
  CHECK(f1_binary(zeros, zeros) == 1.0);  // no positives anywhere
  std::vector<int> a = {1, 0}, b = {1};
  CHECK_THROWS_AS(f1_binary(a, b), LengthMismatch);
  std::vector<int> bad = {2, 0};
  CHECK_THROWS_AS(f1_binary(bad, a), ValueOutOfClassSet);
}

TEST_CASE("macro F1 fixtures") {
  std::vector<int> classes5 = {1, 2, 3, 4, 5};
  std::vector<int> perfect = {1, 2, 3, 4, 5, 3, 2};
  CHECK(f1_macro(perfect, perfect, classes5) == 1.0);

  // hand-computed: class 1 -> 1.0, class 2 -> 2/3, class 3 -> 0
  std::vector<int> preds = {1, 2, 2};
  std::vector<int> refs = {1, 2, 3};
  std::vector<int> classes3 = {1, 2, 3};
  CHECK(f1_macro(preds, refs, classes3) == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("two-class macro equals the mean of both one-vs-rest binaries") {
  Rng rng(21);
  std::vector<int> classes = {0, 1};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> preds, refs;
    for (int i = 0; i < 40; ++i) {
      preds.push_back(static_cast<int>(rng.below(2)));
      refs.push_back(static_cast<int>(rng.below(2)));
    }
    std::vector<int> flipped_p, flipped_r;
    for (int v : preds) flipped_p.push_back(1 - v);
    for (int v : refs) flipped_r.push_back(1 - v);
    double macro = f1_macro(preds, refs, classes);
    double mean_binary = (f1_binary(preds, refs) + f1_binary(flipped_p, flipped_r)) / 2.0;
    CHECK(macro == doctest::Approx(mean_binary).epsilon(1e-12));
  }
}

TEST_CASE("a class absent from both sides contributes vacuous 1.0") {
  std::vector<int> classes = {1, 2, 3};
  std::vector<int> preds = {1, 1, 2, 2};
  std::vector<int> refs = {1, 1, 2, 2};
  CHECK(f1_macro(preds, refs, classes) == 1.0);  // class 3 vacuous
}

TEST_CASE("cost reduction factor fixtures") {
  CHECK(cost_reduction_factor(10.0, 10.0).factor == 1.0);
  CHECK(cost_reduction_factor(1.0, 167.0).factor == 167.0);
  CHECK(cost_reduction_factor(100.0, 10.0).factor == doctest::Approx(0.1));  // not clamped
  auto zero = cost_reduction_factor(0.0, 5.0);
  CHECK(zero.zero_method_cost);
  CHECK(zero.factor == kCostReductionSentinel);
}

TEST_CASE("oracle picks any agreeing model, else the most expensive output") {
  OracleInputs in;
  in.models = {"small", "large"};
  in.baseline = {1, 0, 1, 1};
  in.outputs["small"] = {1, 1, 0, 0};
  in.outputs["large"] = {0, 0, 0, 1};
  // req0: small agrees -> 1; req1: large agrees -> 0; req2: none -> large 0; req3: large -> 1
  auto pred = oracle_cascade_predictions(in);
  CHECK(pred == std::vector<int>{1, 0, 0, 1});

  SUBCASE("perfect model gives oracle F1 1.0") {
    in.outputs["small"] = in.baseline;
    CHECK(oracle_cascade_f1(in, LabelDef::binary("B")) == 1.0);
  }
  SUBCASE("nobody ever agrees: oracle equals the top model's solo F1") {
    in.baseline = {1, 1, 1, 1};
    in.outputs["small"] = {0, 0, 0, 0};
    in.outputs["large"] = {0, 0, 0, 0};
    CHECK(oracle_cascade_f1(in, LabelDef::binary("B")) ==
          f1_binary(in.outputs["large"], in.baseline));
  }
}

TEST_CASE("oracle F1 with constructed partial coverage matches the closed form") {
  // 95% of requests are covered by at least one agreeing model; the rest pick
  // the top model's wrong output. Baseline all ones, wrongs are zeros, so
  // TP = 95, FN = 5, FP = 0 -> precision 1, recall .95, F1 = 2*.95/1.95.
  OracleInputs in;
  in.models = {"a", "b"};
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    in.baseline.push_back(1);
    bool a_covers = i % 2 == 0 && i < 95;
    bool b_covers = i % 2 == 1 && i < 95;
    in.outputs["a"].push_back(a_covers ? 1 : 0);
    in.outputs["b"].push_back(b_covers ? 1 : 0);
  }
  double expected = 2.0 * 0.95 / 1.95;
  CHECK(oracle_cascade_f1(in, LabelDef::binary("B")) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("evaluation reports serialize deterministically") {
  EvaluationReport r;
  r.per_label_f1 = {{"Priority", 0.91}, {"IsUrgent", 0.85}};
  r.average_f1 = 0.88;
  r.cost_reduction_factor = 120.5;
  r.config_hash = "abc123";
  r.usage_fractions = {{"slm-3b", 0.7}, {"classifier", 0.25}};
  r.skipped_fraction = 0.05;
  r.emails = 42;
  std::string a = r.to_json();
  std::string b = r.to_json();
  CHECK(a == b);
  CHECK(a.find("\"f1_aggregation\": \"macro\"") != std::string::npos);
}
