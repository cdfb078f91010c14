#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>

#include "labelcast/classifier.hpp"
#include "labelcast/rng.hpp"

using namespace labelcast;

namespace {

// two well-separated gaussian blobs in 2-D, one per class, for both labels
struct Blobs {
  std::vector<double> x;
  std::vector<int> y;
  int n = 0;

  static Blobs make(int per_class, std::uint64_t seed, double separation = 6.0) {
    Blobs b;
    Rng rng(seed);
    for (int i = 0; i < 2 * per_class; ++i) {
      int cls = i % 2;
      double cx = cls == 0 ? 0.0 : separation;
      b.x.push_back(cx + rng.gaussian());
      b.x.push_back(cx + rng.gaussian());
      b.y.push_back(cls);
      b.y.push_back(cls);  // second label mirrors the first
      ++b.n;
    }
    return b;
  }
};

TrainingConfig small_config() {
  TrainingConfig cfg;
  cfg.hidden1 = 16;
  cfg.hidden2 = 8;
  cfg.epochs = 20;
  cfg.batch_size = 32;
  cfg.max_lr = 5e-3;
  cfg.seed = 9;
  return cfg;
}

}  // namespace

TEST_CASE("empty training set is rejected") {
  CHECK_THROWS_AS(BinaryClassifier::train({}, 0, 2, {}, {"A"}, small_config()), ShapeMismatch);
}

TEST_CASE("shape mismatches are rejected") {
  std::vector<double> x(10, 0.0);
  std::vector<int> y(4, 0);
  CHECK_THROWS_AS(BinaryClassifier::train(x, 3, 4, y, {"A", "B"}, small_config()),
                  ShapeMismatch);
}

TEST_CASE("separable blobs reach 99 percent held-out accuracy") {
  auto start = std::chrono::steady_clock::now();
  Blobs train_set = Blobs::make(500, 101);
  Blobs holdout = Blobs::make(250, 202);

  auto clf = BinaryClassifier::train(train_set.x, train_set.n, 2, train_set.y, {"A", "B"},
                                     small_config());
  int correct = 0, total = 0;
  for (int i = 0; i < holdout.n; ++i) {
    std::vector<double> e = {holdout.x[2 * i], holdout.x[2 * i + 1]};
    auto values = clf.predict_values(e);
    for (int l = 0; l < 2; ++l) {
      correct += values[static_cast<std::size_t>(l)] == holdout.y[2 * i + l] ? 1 : 0;
      ++total;
    }
  }
  double acc = static_cast<double>(correct) / total;
  CHECK(acc >= 0.99);
  auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(std::chrono::duration_cast<std::chrono::seconds>(elapsed).count() < 30);

  // probabilities on training points are confidently on the right side
  std::vector<double> pt = {train_set.x[0], train_set.x[1]};
  auto probs = clf.predict(pt);
  double p = train_set.y[0] == 1 ? probs[0] : 1.0 - probs[0];
  CHECK(p > 0.99);
}

TEST_CASE("training twice with the same seed gives bit-identical weights") {
  Blobs b = Blobs::make(100, 77);
  auto c1 = BinaryClassifier::train(b.x, b.n, 2, b.y, {"A", "B"}, small_config());
  auto c2 = BinaryClassifier::train(b.x, b.n, 2, b.y, {"A", "B"}, small_config());
  CHECK(c1.net().w1 == c2.net().w1);
  CHECK(c1.net().w2 == c2.net().w2);
  CHECK(c1.net().w3 == c2.net().w3);
  CHECK(c1.net().b3 == c2.net().b3);
}

TEST_CASE("all-zero weights predict exactly one half, and ties resolve to 1") {
  Blobs b = Blobs::make(10, 3);
  TrainingConfig cfg = small_config();
  cfg.epochs = 1;
  auto clf = BinaryClassifier::train(b.x, b.n, 2, b.y, {"A", "B"}, cfg);
  auto& net = clf.mutable_net();
  std::fill(net.w1.begin(), net.w1.end(), 0.0f);
  std::fill(net.w2.begin(), net.w2.end(), 0.0f);
  std::fill(net.w3.begin(), net.w3.end(), 0.0f);
  std::fill(net.b1.begin(), net.b1.end(), 0.0f);
  std::fill(net.b2.begin(), net.b2.end(), 0.0f);
  std::fill(net.b3.begin(), net.b3.end(), 0.0f);
  std::vector<double> e = {1.0, -2.0};
  auto probs = clf.predict(e);
  CHECK(probs[0] == 0.5);
  CHECK(probs[1] == 0.5);
  auto values = clf.predict_values(e);
  CHECK(values[0] == 1);  // tie goes to the positive class
  CHECK(values[1] == 1);
}

TEST_CASE("predict rejects wrong embedding dimension") {
  Blobs b = Blobs::make(20, 4);
  auto clf = BinaryClassifier::train(b.x, b.n, 2, b.y, {"A", "B"}, small_config());
  std::vector<double> wrong = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(clf.predict(wrong), ShapeMismatch);
}

// ---------------------------------------------------------------------------
// gradient checking (float64 path)
// ---------------------------------------------------------------------------

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(41);
  auto net = mlp::Net<double>::init(4, 8, 8, 3, rng);
  const int batch = 16;
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < batch; ++i) {
    for (int d = 0; d < 4; ++d) x.push_back(rng.gaussian());
    for (int l = 0; l < 3; ++l) y.push_back(static_cast<int>(rng.below(2)));
  }
  std::vector<double> weights = {1.0, 2.5, 1.0};  // exercise pos-weighting too
  double max_rel = gradient_check(net, x, batch, y, weights);
  CHECK(max_rel < 1e-4);
}

TEST_CASE("gradient norm vanishes at a converged constant-target model") {
  Rng rng(42);
  auto net = mlp::Net<double>::init(3, 6, 4, 2, rng);
  const int batch = 12;
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < batch; ++i) {
    for (int d = 0; d < 3; ++d) x.push_back(rng.gaussian());
    y.push_back(1);
    y.push_back(1);
  }
  // converge hard onto the constant target by driving the output bias
  for (auto& b : net.b3) b = 30.0;
  std::fill(net.w3.begin(), net.w3.end(), 0.0);

  auto grads = mlp::Grads<double>::like(net);
  mlp::loss_and_grad(net, x.data(), y.data(), batch, {}, &grads);
  CHECK(grads.norm() < 1e-6);
  CHECK(gradient_check(net, x, batch, y, {}) < 1e-4);
}

TEST_CASE("increasing a weight with positive gradient increases the loss") {
  Rng rng(43);
  auto net = mlp::Net<double>::init(3, 6, 4, 2, rng);
  const int batch = 8;
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < batch; ++i) {
    for (int d = 0; d < 3; ++d) x.push_back(rng.gaussian());
    y.push_back(static_cast<int>(rng.below(2)));
    y.push_back(static_cast<int>(rng.below(2)));
  }
  auto grads = mlp::Grads<double>::like(net);
  double base = mlp::loss_and_grad(net, x.data(), y.data(), batch, {}, &grads);

  // find a weight with a clearly positive gradient
  std::size_t idx = 0;
  bool found = false;
  for (std::size_t i = 0; i < grads.w1.size(); ++i)
    if (grads.w1[i] > 1e-3) {
      idx = i;
      found = true;
      break;
    }
  REQUIRE(found);
  net.w1[idx] += 1e-4;
  double bumped = mlp::loss_and_grad<double>(net, x.data(), y.data(), batch, {}, nullptr);
  CHECK(bumped > base);
}

// ---------------------------------------------------------------------------
// optimizer and schedule
// ---------------------------------------------------------------------------

TEST_CASE("one AdamW step matches the closed form to 1e-12") {
  TrainingConfig cfg;  // beta1 0.9, beta2 0.98, eps 1e-9
  cfg.weight_decay = 0.01;
  double theta = 2.0, m = 0.0, v = 0.0;
  const double a = 0.5;             // quadratic target
  const double g = theta - a;       // d/dtheta 0.5*(theta-a)^2
  const double lr = 1e-3;
  adamw_update(theta, m, v, g, 1, lr, cfg);
  // bias-corrected first step: mhat = g, vhat = g^2
  double expected = 2.0 - lr * (g / (std::abs(g) + cfg.adam_eps)) - lr * cfg.weight_decay * 2.0;
  CHECK(std::abs(theta - expected) < 1e-12);
}

TEST_CASE("weight_decay zero reproduces plain Adam bit-exactly") {
  Blobs b = Blobs::make(60, 5);
  TrainingConfig with_wd = small_config();
  with_wd.weight_decay = 0.0;
  auto c1 = BinaryClassifier::train(b.x, b.n, 2, b.y, {"A", "B"}, with_wd);

  // a hand-stepped plain-Adam reference would be the whole trainer again; the
  // decoupled term is lr*wd*theta, so wd=0 must equal a run whose decay term
  // is algebraically removed. Equivalence is checked through the update rule.
  double theta1 = 1.25, m1 = 0.0, v1 = 0.0;
  double theta2 = 1.25, m2 = 0.0, v2 = 0.0;
  TrainingConfig plain = with_wd;
  for (int t = 1; t <= 50; ++t) {
    double g = std::sin(0.1 * t);
    adamw_update(theta1, m1, v1, g, t, 1e-3, with_wd);
    m2 = plain.beta1 * m2 + (1 - plain.beta1) * g;
    v2 = plain.beta2 * v2 + (1 - plain.beta2) * g * g;
    double mhat = m2 / (1 - std::pow(plain.beta1, t));
    double vhat = v2 / (1 - std::pow(plain.beta2, t));
    theta2 -= 1e-3 * (mhat / (std::sqrt(vhat) + plain.adam_eps));
    CHECK(theta1 == theta2);  // bit-exact
  }
  (void)c1;
}

TEST_CASE("one-cycle schedule: below max at start, max exactly once, monotone anneal") {
  TrainingConfig cfg;
  const std::int64_t total = 200;
  int hits = 0;
  double prev = -1.0;
  bool annealing = false;
  for (std::int64_t s = 0; s < total; ++s) {
    double lr = one_cycle_lr(cfg, s, total);
    CHECK(lr <= cfg.max_lr);
    CHECK(lr > 0.0);
    if (s == 0) CHECK(lr < cfg.max_lr);
    if (lr == cfg.max_lr) {
      ++hits;
      annealing = true;
    } else if (annealing) {
      CHECK(lr < prev);  // strictly decreasing after the peak
    } else if (s > 0) {
      CHECK(lr > prev);  // strictly increasing before it
    }
    prev = lr;
  }
  CHECK(hits == 1);
  CHECK(one_cycle_lr(cfg, total - 1, total) == doctest::Approx(cfg.max_lr / cfg.final_div));
}

TEST_CASE("total steps equal epochs times ceil(n over batch)") {
  Blobs b = Blobs::make(53, 8);  // n = 106
  TrainingConfig cfg = small_config();
  cfg.epochs = 7;
  cfg.batch_size = 25;  // ceil(106/25) = 5
  auto clf = BinaryClassifier::train(b.x, b.n, 2, b.y, {"A", "B"}, cfg);
  CHECK(clf.steps_taken() == 7 * 5);
}

TEST_CASE("dropout zero makes train and eval forward passes agree") {
  Rng rng(50);
  auto net = mlp::Net<float>::init(4, 8, 8, 2, rng);
  std::vector<float> x;
  for (int i = 0; i < 4 * 6; ++i) x.push_back(static_cast<float>(rng.gaussian()));
  mlp::ForwardScratch<float> train_pass, eval_pass;
  mlp::DropoutMasks empty;  // no masks = dropout off
  mlp::forward_batch(net, x.data(), 6, train_pass, &empty);
  mlp::forward_batch(net, x.data(), 6, eval_pass, nullptr);
  CHECK(train_pass.p == eval_pass.p);
}

TEST_CASE("positive-class weights are inverse frequency capped at 10x") {
  //  label 0: 2 of 10 positive -> 8/2 = 4; label 1: 1 of 10 -> 9 -> capped at weight_cap
  std::vector<int> targets;
  for (int i = 0; i < 10; ++i) {
    targets.push_back(i < 2 ? 1 : 0);
    targets.push_back(i < 1 ? 1 : 0);
  }
  auto w = BinaryClassifier::positive_class_weights(targets, 10, 2, 5.0);
  CHECK(w[0] == doctest::Approx(4.0));
  CHECK(w[1] == doctest::Approx(5.0));  // 9 capped to 5
}

TEST_CASE("non-finite embeddings are rejected before training") {
  std::vector<double> x = {1.0, std::numeric_limits<double>::quiet_NaN()};
  std::vector<int> y = {1};
  CHECK_THROWS_AS(BinaryClassifier::train(x, 1, 2, y, {"A"}, small_config()), ShapeMismatch);
}

TEST_CASE("classifier weights round-trip through the versioned file") {
  Blobs b = Blobs::make(50, 21);
  auto clf = BinaryClassifier::train(b.x, b.n, 2, b.y, {"First", "Second"}, small_config());
  auto dir = std::filesystem::temp_directory_path() / "lc_clf_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "clf.bin").string();
  clf.save(path);
  auto loaded = BinaryClassifier::load(path);
  CHECK(loaded.label_names() == clf.label_names());
  CHECK(loaded.net().w1 == clf.net().w1);
  CHECK(loaded.net().b3 == clf.net().b3);
  std::vector<double> e = {0.3, -0.7};
  CHECK(loaded.predict(e) == clf.predict(e));
}

TEST_CASE("median inference latency stays under a millisecond") {
  Rng rng(60);
  const int dim = 48;
  std::vector<double> x;
  std::vector<int> y;
  const int n = 64;
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) x.push_back(rng.gaussian());
    for (int l = 0; l < 4; ++l) y.push_back(static_cast<int>(rng.below(2)));
  }
  TrainingConfig cfg;  // production widths 256 x 64
  cfg.epochs = 1;
  auto clf = BinaryClassifier::train(x, n, dim, y, {"A", "B", "C", "D"}, cfg);

  std::vector<double> e(static_cast<std::size_t>(dim), 0.1);
  std::vector<double> samples;
  for (int i = 0; i < 201; ++i) {
    auto start = std::chrono::steady_clock::now();
    auto probs = clf.predict(e);
    auto elapsed = std::chrono::steady_clock::now() - start;
    samples.push_back(std::chrono::duration<double, std::milli>(elapsed).count());
    (void)probs;
  }
  std::sort(samples.begin(), samples.end());
  CHECK(samples[samples.size() / 2] < 1.0);
}
