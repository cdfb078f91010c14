#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "labelcast/core.hpp"
#include "labelcast/mlp.hpp"

namespace labelcast {

struct TrainingConfig {
  // optimizer defaults; these must round-trip through config files exactly
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  double max_lr = 5e-4;
  double weight_decay = 1e-5;
  double dropout_rate = 0.1;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 1;

  int hidden1 = 256;
  int hidden2 = 64;
  double pos_weight_cap = 10.0;

  // one-cycle shape
  double warmup_fraction = 0.3;
  double initial_div = 25.0;  // start lr = max_lr / initial_div
  double final_div = 1e4;    // end lr = max_lr / final_div

  void validate() const;
  std::string content_hash() const;  // stable hash stored in saved model headers
};

/// One-cycle schedule with cosine ramp and cosine annealing: starts at
/// max_lr/initial_div, reaches max_lr exactly once, then anneals monotonically
/// to max_lr/final_div.
double one_cycle_lr(const TrainingConfig& cfg, std::int64_t step, std::int64_t total_steps);

/// Single AdamW parameter update with the configured betas/eps; weight decay
/// is decoupled, so weight_decay = 0 reproduces plain Adam bit-exactly.
template <typename T>
void adamw_update(T& theta, T& m, T& v, T grad, std::int64_t t, double lr,
                  const TrainingConfig& cfg) {
  m = static_cast<T>(cfg.beta1 * m + (1.0 - cfg.beta1) * grad);
  v = static_cast<T>(cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad);
  double mhat = static_cast<double>(m) / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  double vhat = static_cast<double>(v) / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  theta = static_cast<T>(theta - lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps)) -
                         lr * cfg.weight_decay * theta);
}

// Jointly trained over all binary labels on frozen embeddings. float32
// production path; prediction never touches a model backend.
class BinaryClassifier {
 public:
  /// embeddings: n x dim row-major; targets: n x |labels| in {0,1}.
  /// Deterministic given cfg.seed. Throws ShapeMismatch / NonFiniteLoss.
  static BinaryClassifier train(const std::vector<double>& embeddings, int n, int dim,
                                const std::vector<int>& targets,
                                std::vector<std::string> label_names,
                                const TrainingConfig& cfg);

  /// Per-label probabilities; dropout disabled.
  std::vector<double> predict(std::span<const double> embedding) const;

  /// Thresholded at 0.5; a tie at exactly 0.5 resolves to 1.
  std::vector<int> predict_values(std::span<const double> embedding) const;

  const std::vector<std::string>& label_names() const { return label_names_; }
  const std::string& config_hash() const { return config_hash_; }
  int input_dim() const { return net_.in_dim; }
  int label_count() const { return net_.out_dim; }
  std::int64_t steps_taken() const { return steps_taken_; }
  const mlp::Net<float>& net() const { return net_; }
  mlp::Net<float>& mutable_net() { return net_; }

  /// Versioned binary file with a JSON header; loadable without training data.
  void save(const std::string& path) const;
  static BinaryClassifier load(const std::string& path);

  static std::vector<double> positive_class_weights(const std::vector<int>& targets, int n,
                                                    int labels, double cap);

 private:
  mlp::Net<float> net_;
  std::vector<std::string> label_names_;
  std::uint64_t seed_ = 0;
  std::string config_hash_;
  std::int64_t steps_taken_ = 0;
};

/// Compares analytic gradients against central finite differences (step 1e-5)
/// on a float64 path over all parameters; returns the max relative error.
double gradient_check(mlp::Net<double>& net, const std::vector<double>& x, int batch,
                      const std::vector<int>& y, const std::vector<double>& pos_weight);

}  // namespace labelcast
