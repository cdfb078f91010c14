#include "labelcast/classifier.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "labelcast/rng.hpp"

namespace labelcast {

using nlohmann::json;

void TrainingConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw ConfigError("epochs and batch_size must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout_rate outside [0,1)");
  if (hidden1 < 1 || hidden2 < 1) throw ConfigError("hidden sizes must be positive");
  if (max_lr <= 0.0) throw ConfigError("max_lr must be positive");
  if (warmup_fraction <= 0.0 || warmup_fraction >= 1.0)
    throw ConfigError("warmup_fraction outside (0,1)");
}

std::string TrainingConfig::content_hash() const {
  std::ostringstream os;
  os.precision(17);
  os << beta1 << '|' << beta2 << '|' << adam_eps << '|' << max_lr << '|' << weight_decay << '|'
     << dropout_rate << '|' << epochs << '|' << batch_size << '|' << seed << '|' << hidden1
     << '|' << hidden2 << '|' << pos_weight_cap << '|' << warmup_fraction << '|' << initial_div
     << '|' << final_div;
  std::uint64_t h = fnv1a64(os.str());
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

double one_cycle_lr(const TrainingConfig& cfg, std::int64_t step, std::int64_t total_steps) {
  const double lo = cfg.max_lr / cfg.initial_div;
  const double end = cfg.max_lr / cfg.final_div;
  if (total_steps <= 1) return cfg.max_lr;
  const std::int64_t last = total_steps - 1;
  std::int64_t peak = static_cast<std::int64_t>(cfg.warmup_fraction * static_cast<double>(last));
  peak = std::clamp<std::int64_t>(peak, 1, last);
  const double pi = 3.14159265358979323846;
  if (step <= peak) {
    double t = static_cast<double>(step) / static_cast<double>(peak);
    return lo + (cfg.max_lr - lo) * (1.0 - std::cos(pi * t)) / 2.0;
  }
  double t = static_cast<double>(step - peak) / static_cast<double>(last - peak);
  return end + (cfg.max_lr - end) * (1.0 + std::cos(pi * t)) / 2.0;
}

std::vector<double> BinaryClassifier::positive_class_weights(const std::vector<int>& targets,
                                                             int n, int labels, double cap) {
  std::vector<double> w(static_cast<std::size_t>(labels), 1.0);
  for (int j = 0; j < labels; ++j) {
    std::int64_t pos = 0;
    for (int i = 0; i < n; ++i) pos += targets[static_cast<std::size_t>(i) * labels + j];
    std::int64_t neg = n - pos;
    if (pos > 0 && neg > 0)
      w[static_cast<std::size_t>(j)] =
          std::min(cap, static_cast<double>(neg) / static_cast<double>(pos));
  }
  return w;
}

BinaryClassifier BinaryClassifier::train(const std::vector<double>& embeddings, int n, int dim,
                                         const std::vector<int>& targets,
                                         std::vector<std::string> label_names,
                                         const TrainingConfig& cfg) {
  cfg.validate();
  const int labels = static_cast<int>(label_names.size());
  if (n < 1) throw ShapeMismatch("empty training set");
  if (labels < 1) throw ShapeMismatch("no binary labels to train on");
  if (embeddings.size() != static_cast<std::size_t>(n) * dim)
    throw ShapeMismatch("embedding matrix shape mismatch");
  if (targets.size() != static_cast<std::size_t>(n) * labels)
    throw ShapeMismatch("target matrix shape mismatch");
  for (double v : embeddings)
    if (!std::isfinite(v)) throw ShapeMismatch("non-finite value in embeddings");

  std::vector<float> x(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) x[i] = static_cast<float>(embeddings[i]);

  Rng rng(hash_combine(cfg.seed, 0x636c617373ULL));
  BinaryClassifier clf;
  clf.seed_ = cfg.seed;
  clf.config_hash_ = cfg.content_hash();
  clf.label_names_ = std::move(label_names);
  clf.net_ = mlp::Net<float>::init(dim, cfg.hidden1, cfg.hidden2, labels, rng);

  auto pos_weight = positive_class_weights(targets, n, labels, cfg.pos_weight_cap);

  const std::int64_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::int64_t total_steps = static_cast<std::int64_t>(cfg.epochs) * batches_per_epoch;

  auto grads = mlp::Grads<float>::like(clf.net_);
  auto m = mlp::Grads<float>::like(clf.net_);
  auto v = mlp::Grads<float>::like(clf.net_);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  std::vector<float> bx;
  std::vector<int> by;
  mlp::ForwardScratch<float> scratch;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += cfg.batch_size) {
      int bsz = std::min(cfg.batch_size, n - start);
      bx.resize(static_cast<std::size_t>(bsz) * dim);
      by.resize(static_cast<std::size_t>(bsz) * labels);
      for (int b = 0; b < bsz; ++b) {
        int src = order[static_cast<std::size_t>(start + b)];
        std::copy_n(x.begin() + static_cast<std::size_t>(src) * dim, dim,
                    bx.begin() + static_cast<std::size_t>(b) * dim);
        std::copy_n(targets.begin() + static_cast<std::size_t>(src) * labels, labels,
                    by.begin() + static_cast<std::size_t>(b) * labels);
      }

      mlp::DropoutMasks masks;
      if (cfg.dropout_rate > 0.0) {
        double keep = 1.0 - cfg.dropout_rate;
        masks.m1.resize(static_cast<std::size_t>(bsz) * cfg.hidden1);
        masks.m2.resize(static_cast<std::size_t>(bsz) * cfg.hidden2);
        for (auto& mm : masks.m1) mm = rng.uniform01() < keep ? 1.0 / keep : 0.0;
        for (auto& mm : masks.m2) mm = rng.uniform01() < keep ? 1.0 / keep : 0.0;
      }

      grads.for_each([](float& g) { g = 0.0f; });
      mlp::loss_and_grad(clf.net_, bx.data(), by.data(), bsz, pos_weight, &grads,
                         cfg.dropout_rate > 0.0 ? &masks : nullptr, &scratch);

      double lr = one_cycle_lr(cfg, step, total_steps);
      std::int64_t t = step + 1;
      auto update = [&](std::vector<float>& theta, std::vector<float>& gm, std::vector<float>& gv,
                        const std::vector<float>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i)
          adamw_update(theta[i], gm[i], gv[i], g[i], t, lr, cfg);
      };
      update(clf.net_.w1, m.w1, v.w1, grads.w1);
      update(clf.net_.b1, m.b1, v.b1, grads.b1);
      update(clf.net_.w2, m.w2, v.w2, grads.w2);
      update(clf.net_.b2, m.b2, v.b2, grads.b2);
      update(clf.net_.w3, m.w3, v.w3, grads.w3);
      update(clf.net_.b3, m.b3, v.b3, grads.b3);
      ++step;
    }
  }
  clf.steps_taken_ = step;
  return clf;
}

std::vector<double> BinaryClassifier::predict(std::span<const double> embedding) const {
  if (static_cast<int>(embedding.size()) != net_.in_dim)
    throw ShapeMismatch("embedding dimension mismatch");
  std::vector<float> x(embedding.size());
  for (std::size_t i = 0; i < embedding.size(); ++i) x[i] = static_cast<float>(embedding[i]);
  mlp::ForwardScratch<float> s;
  mlp::forward_batch(net_, x.data(), 1, s, nullptr);
  std::vector<double> probs(s.p.size());
  for (std::size_t i = 0; i < s.p.size(); ++i) probs[i] = static_cast<double>(s.p[i]);
  return probs;
}

std::vector<int> BinaryClassifier::predict_values(std::span<const double> embedding) const {
  auto probs = predict(embedding);
  std::vector<int> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= 0.5 ? 1 : 0;
  return out;
}

namespace {
constexpr char kMagic[8] = {'L', 'C', 'C', 'L', 'F', '0', '0', '1'};
}

void BinaryClassifier::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write classifier file: " + path);
  json header;
  header["in_dim"] = net_.in_dim;
  header["hidden1"] = net_.h1;
  header["hidden2"] = net_.h2;
  header["out_dim"] = net_.out_dim;
  header["labels"] = label_names_;
  header["seed"] = seed_;
  header["config_hash"] = config_hash_;
  header["dtype"] = "f32";
  std::string h = header.dump();
  std::uint64_t hlen = h.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  auto dump = [&out](const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
  };
  dump(net_.w1);
  dump(net_.b1);
  dump(net_.w2);
  dump(net_.b2);
  dump(net_.w3);
  dump(net_.b3);
}

BinaryClassifier BinaryClassifier::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open classifier file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("not a classifier file: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string h(hlen, '\0');
  in.read(h.data(), static_cast<std::streamsize>(hlen));
  json header = json::parse(h);

  BinaryClassifier clf;
  int in_dim = header.at("in_dim").get<int>();
  int h1 = header.at("hidden1").get<int>();
  int h2 = header.at("hidden2").get<int>();
  int out_dim = header.at("out_dim").get<int>();
  clf.label_names_ = header.at("labels").get<std::vector<std::string>>();
  clf.seed_ = header.value("seed", std::uint64_t{0});
  clf.config_hash_ = header.value("config_hash", std::string());
  clf.net_.in_dim = in_dim;
  clf.net_.h1 = h1;
  clf.net_.h2 = h2;
  clf.net_.out_dim = out_dim;
  auto slurp = [&in, &path](std::vector<float>& v, std::size_t count) {
    v.resize(count);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw ConfigError("truncated classifier file: " + path);
  };
  slurp(clf.net_.w1, static_cast<std::size_t>(h1) * in_dim);
  slurp(clf.net_.b1, static_cast<std::size_t>(h1));
  slurp(clf.net_.w2, static_cast<std::size_t>(h2) * h1);
  slurp(clf.net_.b2, static_cast<std::size_t>(h2));
  slurp(clf.net_.w3, static_cast<std::size_t>(out_dim) * h2);
  slurp(clf.net_.b3, static_cast<std::size_t>(out_dim));
  return clf;
}

double gradient_check(mlp::Net<double>& net, const std::vector<double>& x, int batch,
                      const std::vector<int>& y, const std::vector<double>& pos_weight) {
  auto grads = mlp::Grads<double>::like(net);
  mlp::loss_and_grad(net, x.data(), y.data(), batch, pos_weight, &grads);

  const double h = 1e-5;
  double max_rel = 0.0;
  std::vector<double*> params;
  net.for_each_param([&params](double& p) { params.push_back(&p); });
  std::vector<double*> grad_ptrs;
  grads.for_each([&grad_ptrs](double& g) { grad_ptrs.push_back(&g); });

  for (std::size_t i = 0; i < params.size(); ++i) {
    double saved = *params[i];
    *params[i] = saved + h;
    double up = mlp::loss_and_grad<double>(net, x.data(), y.data(), batch, pos_weight, nullptr);
    *params[i] = saved - h;
    double down = mlp::loss_and_grad<double>(net, x.data(), y.data(), batch, pos_weight, nullptr);
    *params[i] = saved;
    double numeric = (up - down) / (2.0 * h);
    double analytic = *grad_ptrs[i];
    double rel = std::abs(analytic - numeric) /
                 std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace labelcast
