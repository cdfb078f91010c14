#include <doctest.h>

#include <array>
#include <atomic>
#include <cstring>

#include "labelcast/kernels.hpp"
#include "labelcast/rng.hpp"

using namespace labelcast;

namespace {

template <typename T>
std::vector<T> random_matrix(Rng& rng, int rows, int cols) {
  std::vector<T> m(static_cast<std::size_t>(rows) * cols);
  for (auto& x : m) x = static_cast<T>(rng.gaussian());
  return m;
}

}  // namespace

TEST_CASE("parallel matmul is bit-identical to the serial reference") {
  Rng rng(5);
  const std::vector<std::array<int, 3>> shapes = {{1, 1, 1}, {3, 7, 5}, {17, 33, 9}, {64, 48, 32}};
  for (auto [m, k, n] : shapes) {
    auto a = random_matrix<float>(rng, m, k);
    auto b = random_matrix<float>(rng, k, n);
    std::vector<float> c_serial(static_cast<std::size_t>(m) * n);
    std::vector<float> c_parallel(c_serial.size());
    kernels::matmul_serial(a.data(), b.data(), c_serial.data(), m, k, n);
    kernels::matmul(a.data(), b.data(), c_parallel.data(), m, k, n);
    CHECK(std::memcmp(c_serial.data(), c_parallel.data(), c_serial.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("transposed-variant kernels match their serial references bit-exactly") {
  Rng rng(6);
  const int m = 21, k = 34, n = 13;
  auto a = random_matrix<double>(rng, m, k);
  auto b_bt = random_matrix<double>(rng, n, k);
  std::vector<double> c1(static_cast<std::size_t>(m) * n), c2(c1.size());
  kernels::matmul_bt_serial(a.data(), b_bt.data(), c1.data(), m, k, n);
  kernels::matmul_bt(a.data(), b_bt.data(), c2.data(), m, k, n);
  CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0);

  auto b_at = random_matrix<double>(rng, m, n);
  std::vector<double> d1(static_cast<std::size_t>(k) * n), d2(d1.size());
  kernels::matmul_at_serial(a.data(), b_at.data(), d1.data(), m, k, n);
  kernels::matmul_at(a.data(), b_at.data(), d2.data(), m, k, n);
  CHECK(std::memcmp(d1.data(), d2.data(), d1.size() * sizeof(double)) == 0);
}

TEST_CASE("transposed variants agree with the plain kernel on materialized transposes") {
  Rng rng(7);
  const int m = 9, k = 11, n = 6;
  auto a = random_matrix<double>(rng, m, k);
  auto b = random_matrix<double>(rng, k, n);
  std::vector<double> expected(static_cast<std::size_t>(m) * n);
  kernels::matmul_serial(a.data(), b.data(), expected.data(), m, k, n);

  // B^T stored as n x k
  std::vector<double> bt(static_cast<std::size_t>(n) * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < n; ++j)
      bt[static_cast<std::size_t>(j) * k + i] = b[static_cast<std::size_t>(i) * n + j];
  std::vector<double> got(expected.size());
  kernels::matmul_bt(a.data(), bt.data(), got.data(), m, k, n);
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<std::atomic<int>> counts(1000);
  kernels::parallel_for(1000, [&](std::int64_t i) { counts[static_cast<std::size_t>(i)]++; });
  for (const auto& c : counts) CHECK(c.load() == 1);
}
