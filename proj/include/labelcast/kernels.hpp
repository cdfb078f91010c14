#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

// Data-parallel inner loops. Each kernel has a *_serial reference twin; the
// parallel versions partition work so that every output element is computed
// by exactly one thread with a fixed summation order, which keeps results
// bit-identical to the serial reference at any thread count. Tests assert
// the equality; bench_kernels compares throughput.

namespace labelcast::kernels {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <typename F>
void parallel_for(std::int64_t n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) f(i);
#else
  for (std::int64_t i = 0; i < n; ++i) f(i);
#endif
}

// C[m x n] = A[m x k] * B[k x n], row-major.
template <typename T>
void matmul_serial(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = T(0);
    for (int p = 0; p < k; ++p) {
      T aip = a[static_cast<std::size_t>(i) * k + p];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = T(0);
    for (int p = 0; p < k; ++p) {
      T aip = a[static_cast<std::size_t>(i) * k + p];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
#else
  matmul_serial(a, b, c, m, k, n);
#endif
}

// C[m x n] = A[m x k] * B[n x k]^T
template <typename T>
void matmul_bt_serial(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T acc = T(0);
      const T* arow = a + static_cast<std::size_t>(i) * k;
      const T* brow = b + static_cast<std::size_t>(j) * k;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
  }
}

template <typename T>
void matmul_bt(const T* a, const T* b, T* c, int m, int k, int n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T acc = T(0);
      const T* arow = a + static_cast<std::size_t>(i) * k;
      const T* brow = b + static_cast<std::size_t>(j) * k;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
  }
#else
  matmul_bt_serial(a, b, c, m, k, n);
#endif
}

// C[k x n] = A[m x k]^T * B[m x n]
template <typename T>
void matmul_at_serial(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < k; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = T(0);
    for (int p = 0; p < m; ++p) {
      T api = a[static_cast<std::size_t>(p) * k + i];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

template <typename T>
void matmul_at(const T* a, const T* b, T* c, int m, int k, int n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = T(0);
    for (int p = 0; p < m; ++p) {
      T api = a[static_cast<std::size_t>(p) * k + i];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
#else
  matmul_at_serial(a, b, c, m, k, n);
#endif
}

}  // namespace labelcast::kernels
