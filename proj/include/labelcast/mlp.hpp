#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "labelcast/core.hpp"
#include "labelcast/kernels.hpp"
#include "labelcast/rng.hpp"

// Templated feed-forward core shared by the float32 production path and the
// float64 gradient-check path. Three weight matrices, two ReLU hidden layers,
// independent sigmoid heads.

namespace labelcast::mlp {

template <typename T>
struct Net {
  int in_dim = 0, h1 = 0, h2 = 0, out_dim = 0;
  std::vector<T> w1, b1;  // h1 x in
  std::vector<T> w2, b2;  // h2 x h1
  std::vector<T> w3, b3;  // out x h2

  static Net init(int in_dim, int h1, int h2, int out_dim, Rng& rng) {
    Net n;
    n.in_dim = in_dim;
    n.h1 = h1;
    n.h2 = h2;
    n.out_dim = out_dim;
    auto fill = [&rng](std::vector<T>& w, int rows, int cols) {
      w.resize(static_cast<std::size_t>(rows) * cols);
      double scale = std::sqrt(2.0 / static_cast<double>(cols));
      for (auto& x : w) x = static_cast<T>(rng.gaussian() * scale);
    };
    fill(n.w1, h1, in_dim);
    fill(n.w2, h2, h1);
    fill(n.w3, out_dim, h2);
    n.b1.assign(static_cast<std::size_t>(h1), T(0));
    n.b2.assign(static_cast<std::size_t>(h2), T(0));
    n.b3.assign(static_cast<std::size_t>(out_dim), T(0));
    return n;
  }

  std::size_t param_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
  }

  // flat parameter view in a fixed order, for optimizers and finite differences
  template <typename F>
  void for_each_param(F&& f) {
    for (auto& x : w1) f(x);
    for (auto& x : b1) f(x);
    for (auto& x : w2) f(x);
    for (auto& x : b2) f(x);
    for (auto& x : w3) f(x);
    for (auto& x : b3) f(x);
  }
};

template <typename T>
struct Grads {
  std::vector<T> w1, b1, w2, b2, w3, b3;

  static Grads like(const Net<T>& n) {
    Grads g;
    g.w1.assign(n.w1.size(), T(0));
    g.b1.assign(n.b1.size(), T(0));
    g.w2.assign(n.w2.size(), T(0));
    g.b2.assign(n.b2.size(), T(0));
    g.w3.assign(n.w3.size(), T(0));
    g.b3.assign(n.b3.size(), T(0));
    return g;
  }

  template <typename F>
  void for_each(F&& f) {
    for (auto& x : w1) f(x);
    for (auto& x : b1) f(x);
    for (auto& x : w2) f(x);
    for (auto& x : b2) f(x);
    for (auto& x : w3) f(x);
    for (auto& x : b3) f(x);
  }

  double norm() const {
    double s = 0;
    for (const auto* v : {&w1, &b1, &w2, &b2, &w3, &b3})
      for (T x : *v) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
  }
};

inline double softplus(double x) {
  // log(1 + e^x), overflow-safe
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Inverted-dropout masks; entries are 0 or 1/(1-rate). Empty = dropout off.
struct DropoutMasks {
  std::vector<double> m1, m2;
};

template <typename T>
struct ForwardScratch {
  std::vector<T> z1, a1, z2, a2, z3, p;
};

template <typename T>
void forward_batch(const Net<T>& net, const T* x, int batch, ForwardScratch<T>& s,
                   const DropoutMasks* drop) {
  const int in = net.in_dim, h1 = net.h1, h2 = net.h2, out = net.out_dim;
  s.z1.resize(static_cast<std::size_t>(batch) * h1);
  s.z2.resize(static_cast<std::size_t>(batch) * h2);
  s.z3.resize(static_cast<std::size_t>(batch) * out);
  kernels::matmul_bt(x, net.w1.data(), s.z1.data(), batch, in, h1);
  for (int b = 0; b < batch; ++b)
    for (int j = 0; j < h1; ++j) s.z1[static_cast<std::size_t>(b) * h1 + j] += net.b1[j];
  s.a1 = s.z1;
  for (auto& v : s.a1) v = v > T(0) ? v : T(0);
  if (drop && !drop->m1.empty())
    for (std::size_t i = 0; i < s.a1.size(); ++i) s.a1[i] *= static_cast<T>(drop->m1[i]);

  kernels::matmul_bt(s.a1.data(), net.w2.data(), s.z2.data(), batch, h1, h2);
  for (int b = 0; b < batch; ++b)
    for (int j = 0; j < h2; ++j) s.z2[static_cast<std::size_t>(b) * h2 + j] += net.b2[j];
  s.a2 = s.z2;
  for (auto& v : s.a2) v = v > T(0) ? v : T(0);
  if (drop && !drop->m2.empty())
    for (std::size_t i = 0; i < s.a2.size(); ++i) s.a2[i] *= static_cast<T>(drop->m2[i]);

  kernels::matmul_bt(s.a2.data(), net.w3.data(), s.z3.data(), batch, h2, out);
  for (int b = 0; b < batch; ++b)
    for (int j = 0; j < out; ++j) s.z3[static_cast<std::size_t>(b) * out + j] += net.b3[j];
  s.p.resize(s.z3.size());
  for (std::size_t i = 0; i < s.z3.size(); ++i)
    s.p[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(s.z3[i]))));
}

// Mean positive-weighted binary cross-entropy over batch x labels, computed
// from logits. Returns the loss; fills grads when non-null.
template <typename T>
double loss_and_grad(const Net<T>& net, const T* x, const int* y, int batch,
                     const std::vector<double>& pos_weight, Grads<T>* grads,
                     const DropoutMasks* drop = nullptr, ForwardScratch<T>* scratch = nullptr) {
  if (batch <= 0) throw ShapeMismatch("empty batch");
  const int in = net.in_dim, h1 = net.h1, h2 = net.h2, out = net.out_dim;
  ForwardScratch<T> local;
  ForwardScratch<T>& s = scratch ? *scratch : local;
  forward_batch(net, x, batch, s, drop);

  const double denom = static_cast<double>(batch) * out;
  double loss = 0.0;
  std::vector<T> dz3(static_cast<std::size_t>(batch) * out);
  for (int b = 0; b < batch; ++b) {
    for (int j = 0; j < out; ++j) {
      std::size_t i = static_cast<std::size_t>(b) * out + j;
      double z = static_cast<double>(s.z3[i]);
      double w = pos_weight.empty() ? 1.0 : pos_weight[static_cast<std::size_t>(j)];
      double p = 1.0 / (1.0 + std::exp(-z));
      if (y[i] == 1) {
        loss += w * softplus(-z);
        dz3[i] = static_cast<T>(-w * (1.0 - p) / denom);
      } else {
        loss += softplus(z);
        dz3[i] = static_cast<T>(p / denom);
      }
    }
  }
  loss /= denom;
  if (!std::isfinite(loss)) throw NonFiniteLoss("loss diverged");
  if (!grads) return loss;

  // dW3 = dz3^T . a2 ; da2 = dz3 . W3
  kernels::matmul_at(dz3.data(), s.a2.data(), grads->w3.data(), batch, out, h2);
  for (int j = 0; j < out; ++j) {
    T acc = T(0);
    for (int b = 0; b < batch; ++b) acc += dz3[static_cast<std::size_t>(b) * out + j];
    grads->b3[static_cast<std::size_t>(j)] = acc;
  }
  std::vector<T> da2(static_cast<std::size_t>(batch) * h2);
  kernels::matmul(dz3.data(), net.w3.data(), da2.data(), batch, out, h2);
  if (drop && !drop->m2.empty())
    for (std::size_t i = 0; i < da2.size(); ++i) da2[i] *= static_cast<T>(drop->m2[i]);
  for (std::size_t i = 0; i < da2.size(); ++i)
    if (s.z2[i] <= T(0)) da2[i] = T(0);

  kernels::matmul_at(da2.data(), s.a1.data(), grads->w2.data(), batch, h2, h1);
  for (int j = 0; j < h2; ++j) {
    T acc = T(0);
    for (int b = 0; b < batch; ++b) acc += da2[static_cast<std::size_t>(b) * h2 + j];
    grads->b2[static_cast<std::size_t>(j)] = acc;
  }
  std::vector<T> da1(static_cast<std::size_t>(batch) * h1);
  kernels::matmul(da2.data(), net.w2.data(), da1.data(), batch, h2, h1);
  if (drop && !drop->m1.empty())
    for (std::size_t i = 0; i < da1.size(); ++i) da1[i] *= static_cast<T>(drop->m1[i]);
  for (std::size_t i = 0; i < da1.size(); ++i)
    if (s.z1[i] <= T(0)) da1[i] = T(0);

  kernels::matmul_at(da1.data(), x, grads->w1.data(), batch, h1, in);
  for (int j = 0; j < h1; ++j) {
    T acc = T(0);
    for (int b = 0; b < batch; ++b) acc += da1[static_cast<std::size_t>(b) * h1 + j];
    grads->b1[static_cast<std::size_t>(j)] = acc;
  }
  return loss;
}

}  // namespace labelcast::mlp
