#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <thread>

#include "labelcast/core.hpp"
#include "labelcast/drift.hpp"
#include "labelcast/rng.hpp"

using namespace labelcast;

namespace {

// independent oracle: integrate |F_X(t) - F_Y(t)| over the value axis, the
// dual form of the quantile integral
double w1_by_cdf(std::vector<double> x, std::vector<double> y) {
  std::vector<double> grid = x;
  grid.insert(grid.end(), y.begin(), y.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  auto cdf = [](const std::vector<double>& s, double t) {
    return static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin()) /
           static_cast<double>(s.size());
  };
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    acc += std::abs(cdf(x, grid[i]) - cdf(y, grid[i])) * (grid[i + 1] - grid[i]);
  return acc;
}

}  // namespace

TEST_CASE("identical samples have zero distance") {
  std::vector<double> x = {0.3, 0.9, 0.1, 0.5};
  CHECK(wasserstein1(x, x) == 0.0);
  CHECK(swd(x, x) == 0.0);
}

TEST_CASE("worked example: unit shift of four points") {
  std::vector<double> x = {0, 1, 2, 3};
  std::vector<double> y = {1, 2, 3, 4};
  CHECK(wasserstein1(x, y) == doctest::Approx(1.0).epsilon(1e-15));
  // sigma = sqrt(1.25), SWD = 1/sqrt(1.25)
  CHECK(swd(x, y) == doctest::Approx(0.8944271909999159).epsilon(1e-12));
}

TEST_CASE("constant reference is degenerate") {
  std::vector<double> x = {5, 5, 5};
  std::vector<double> y = {1, 2};
  CHECK_THROWS_AS(swd(x, y), DegenerateReference);
}

TEST_CASE("location-shift identity holds to 1e-12 over random samples") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 2 + rng.below(60);
    std::vector<double> x;
    for (std::size_t i = 0; i < n; ++i) x.push_back(rng.gaussian());
    double sigma = population_stddev(x);
    if (sigma == 0.0) continue;
    double c = rng.gaussian() * 3.0;
    std::vector<double> y;
    for (double v : x) y.push_back(v + c);
    CHECK(swd(x, y) == doctest::Approx(std::abs(c) / sigma).epsilon(1e-12));
  }
}

TEST_CASE("swd is invariant under common positive scaling and shifts") {
  Rng rng(9);
  std::vector<double> x, y;
  for (int i = 0; i < 37; ++i) x.push_back(rng.uniform01());
  for (int i = 0; i < 23; ++i) y.push_back(rng.uniform01() * 1.4 - 0.2);
  double base = swd(x, y);
  for (double scale : {0.25, 3.0, 17.5}) {
    std::vector<double> xs, ys;
    for (double v : x) xs.push_back(v * scale);
    for (double v : y) ys.push_back(v * scale);
    CHECK(swd(xs, ys) == doctest::Approx(base).epsilon(1e-9));
  }
  // a common shift rescales neither W1's numerator nor sigma
  std::vector<double> xs, ys;
  for (double v : x) xs.push_back(v + 11.0);
  for (double v : y) ys.push_back(v + 11.0);
  CHECK(swd(xs, ys) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("unequal sample sizes integrate exactly on the merged quantile grid") {
  Rng rng(10);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> x, y;
    std::size_t n = 2 + rng.below(40);
    std::size_t m = 1 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) x.push_back(rng.gaussian());
    for (std::size_t i = 0; i < m; ++i) y.push_back(rng.gaussian() * 0.5 + 0.3);
    CHECK(wasserstein1(x, y) == doctest::Approx(w1_by_cdf(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("distance is positive iff the empirical distributions differ") {
  std::vector<double> x = {0.1, 0.2, 0.3};
  std::vector<double> same = {0.3, 0.1, 0.2};  // same multiset, different order
  CHECK(wasserstein1(x, same) == 0.0);
  std::vector<double> other = {0.1, 0.2, 0.30001};
  CHECK(wasserstein1(x, other) > 0.0);
}

TEST_CASE("reprofile decisions follow the two-factor rule") {
  DriftState state;
  state.reference_sample = {0.5, 0.6, 0.7, 0.8};
  state.last_profile_time_ms = 0;

  SUBCASE("a day elapsed forces periodic reprofiling even with zero drift") {
    auto d = should_reprofile(state, 25LL * 3600 * 1000, state.reference_sample);
    CHECK(d.reprofile);
    CHECK(d.reason == ReprofileReason::Periodic);
  }
  SUBCASE("large drift triggers within the period") {
    // shift by 2 sigma: sigma ~.1118, shift .25 -> SWD ~2.24 > 1
    std::vector<double> recent;
    for (double v : state.reference_sample) recent.push_back(v + 0.25);
    auto d = should_reprofile(state, 3600 * 1000, recent);
    CHECK(d.reprofile);
    CHECK(d.reason == ReprofileReason::Drift);
    CHECK(d.swd_value > 1.0);
  }
  SUBCASE("small drift inside the period holds") {
    std::vector<double> recent;
    for (double v : state.reference_sample) recent.push_back(v + 0.03);
    auto d = should_reprofile(state, 3600 * 1000, recent);
    CHECK_FALSE(d.reprofile);
    CHECK(d.reason == ReprofileReason::None);
    CHECK(d.swd_value < 1.0);
  }
}

TEST_CASE("drift state round-trips through json") {
  DriftState s;
  s.reference_sample = {0.25, 0.5, 0.75};
  s.last_profile_time_ms = 123456789;
  s.period_ms = 1000;
  s.swd_threshold = 0.8;
  auto dir = std::filesystem::temp_directory_path() / "lc_drift_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "state.json").string();
  save_drift_state(s, path);
  DriftState back = load_drift_state(path);
  CHECK(back.reference_sample == s.reference_sample);
  CHECK(back.last_profile_time_ms == s.last_profile_time_ms);
  CHECK(back.period_ms == s.period_ms);
  CHECK(back.swd_threshold == s.swd_threshold);
}

TEST_CASE("recent window keeps the newest values under concurrent appends") {
  RecentWindow window(100);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&window, t] {
      for (int i = 0; i < 200; ++i) window.push(0.001 * i + t);
    });
  for (auto& th : threads) th.join();
  CHECK(window.size() == 100);
  auto snap = window.snapshot();
  CHECK(snap.size() == 100);
}
