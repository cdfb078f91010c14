#include <functional>
// Serial-vs-OpenMP throughput comparison for the data-parallel kernels:
// the classifier matmuls and a cached threshold-sweep evaluation shaped like
// the profiler's inner loop. `--smoke` runs tiny sizes for CI.

#include <chrono>
#include <cstring>
#include <iostream>
#include <vector>

#include "labelcast/kernels.hpp"
#include "labelcast/rng.hpp"

using namespace labelcast;

namespace {

using clock_type = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
  auto start = clock_type::now();
  for (int i = 0; i < reps; ++i) fn();
  auto end = clock_type::now();
  return std::chrono::duration<double, std::milli>(end - start).count() /
         static_cast<double>(reps);
}

void bench_matmul(int m, int k, int n, int reps) {
  Rng rng(42);
  std::vector<float> a(static_cast<std::size_t>(m) * k), b(static_cast<std::size_t>(k) * n);
  std::vector<float> c1(static_cast<std::size_t>(m) * n), c2(c1.size());
  for (auto& x : a) x = static_cast<float>(rng.gaussian());
  for (auto& x : b) x = static_cast<float>(rng.gaussian());

  double serial = time_ms([&] { kernels::matmul_serial(a.data(), b.data(), c1.data(), m, k, n); }, reps);
  double par = time_ms([&] { kernels::matmul(a.data(), b.data(), c2.data(), m, k, n); }, reps);
  bool identical = std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(float)) == 0;
  std::cout << "matmul " << m << "x" << k << "x" << n << ": serial " << serial << " ms, parallel "
            << par << " ms, speedup " << (par > 0 ? serial / par : 0.0)
            << (identical ? " (bit-identical)" : " (MISMATCH)") << "\n";
}

// cascade walk over cached (confidence, cost) tuples, the sweep's hot loop
struct Tuple {
  float confidence;
  float cost;
};

void bench_sweep(int requests, int models, int combos, int reps) {
  Rng rng(7);
  std::vector<Tuple> tuples(static_cast<std::size_t>(requests) * models);
  for (auto& t : tuples) {
    t.confidence = static_cast<float>(rng.uniform01());
    t.cost = static_cast<float>(1.0 + rng.uniform01());
  }
  std::vector<float> thresholds(static_cast<std::size_t>(combos) * models);
  for (auto& t : thresholds) t = static_cast<float>(rng.uniform01());
  std::vector<double> totals_serial(static_cast<std::size_t>(combos));
  std::vector<double> totals_par(static_cast<std::size_t>(combos));

  auto eval_combo = [&](int c, std::vector<double>& totals) {
    double total = 0.0;
    const float* th = &thresholds[static_cast<std::size_t>(c) * models];
    for (int r = 0; r < requests; ++r) {
      const Tuple* row = &tuples[static_cast<std::size_t>(r) * models];
      for (int j = 0; j < models; ++j) {
        total += row[j].cost;
        if (row[j].confidence >= th[j]) break;
      }
    }
    totals[static_cast<std::size_t>(c)] = total;
  };

  double serial = time_ms(
      [&] {
        for (int c = 0; c < combos; ++c) eval_combo(c, totals_serial);
      },
      reps);
  double par = time_ms(
      [&] {
        kernels::parallel_for(combos, [&](std::int64_t c) {
          eval_combo(static_cast<int>(c), totals_par);
        });
      },
      reps);
  bool identical = totals_serial == totals_par;
  std::cout << "sweep " << combos << " combos x " << requests << " requests x " << models
            << " models: serial " << serial << " ms, parallel " << par << " ms, speedup "
            << (par > 0 ? serial / par : 0.0) << (identical ? " (bit-identical)" : " (MISMATCH)")
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  bool smoke = argc > 1 && std::string(argv[1]) == "--smoke";
  std::cout << "threads: " << kernels::max_threads() << "\n";
  if (smoke) {
    bench_matmul(64, 64, 64, 3);
    bench_sweep(2000, 3, 27, 3);
    return 0;
  }
  bench_matmul(256, 256, 256, 5);
  bench_matmul(512, 384, 256, 3);
  bench_matmul(1024, 256, 64, 3);
  bench_sweep(25000, 3, 343, 3);
  bench_sweep(25000, 5, 1024, 1);
  return 0;
}
