#include "labelcast/drift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "labelcast/core.hpp"

namespace labelcast {

using nlohmann::json;

double wasserstein1(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ConfigError("wasserstein1 needs nonempty samples");
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  const std::size_t n = xs.size(), m = ys.size();
  if (n == m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(xs[i] - ys[i]);
    return acc / static_cast<double>(n);
  }

  // integrate |F_X^-1(u) - F_Y^-1(u)| over the merged grid {i/n} U {j/m};
  // breakpoints are walked with exact integer cross-multiplication
  double acc = 0.0;
  std::size_t i = 0, j = 0;  // current quantile piece: xs[i] on ((i)/n,(i+1)/n]
  std::uint64_t prev_num = 0;
  const std::uint64_t denom = static_cast<std::uint64_t>(n) * m;
  while (i < n && j < m) {
    // next breakpoint: min((i+1)/n, (j+1)/m) as fractions over n*m
    std::uint64_t xi = static_cast<std::uint64_t>(i + 1) * m;
    std::uint64_t yj = static_cast<std::uint64_t>(j + 1) * n;
    std::uint64_t next_num = std::min(xi, yj);
    acc += std::abs(xs[i] - ys[j]) * static_cast<double>(next_num - prev_num);
    prev_num = next_num;
    if (xi == next_num) ++i;
    if (yj == next_num) ++j;
  }
  return acc / static_cast<double>(denom);
}

double population_stddev(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  return std::sqrt(var);
}

double swd(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2) throw ConfigError("swd reference needs at least 2 samples");
  if (y.empty()) throw ConfigError("swd recent sample is empty");
  double sigma = population_stddev(x);
  if (sigma == 0.0) throw DegenerateReference("reference sample has zero stddev");
  return wasserstein1(x, y) / sigma;
}

void DriftState::validate() const {
  if (reference_sample.size() < 2)
    throw ConfigError("drift reference sample needs at least 2 values");
  if (period_ms <= 0) throw ConfigError("drift period must be positive");
}

ReprofileDecision should_reprofile(const DriftState& state, std::int64_t now_ms,
                                   std::span<const double> recent) {
  state.validate();
  if (recent.empty()) throw ConfigError("should_reprofile needs a nonempty recent sample");
  ReprofileDecision d;
  d.elapsed_ms = now_ms - state.last_profile_time_ms;
  if (d.elapsed_ms >= state.period_ms) {
    d.reprofile = true;
    d.reason = ReprofileReason::Periodic;
    d.swd_value = swd(state.reference_sample, recent);
    return d;
  }
  d.swd_value = swd(state.reference_sample, recent);
  if (d.swd_value > state.swd_threshold) {
    d.reprofile = true;
    d.reason = ReprofileReason::Drift;
  }
  return d;
}

void RecentWindow::push(double confidence) {
  std::lock_guard<std::mutex> lock(mu_);
  buf_.push_back(confidence);
  while (buf_.size() > capacity_) buf_.pop_front();
}

std::vector<double> RecentWindow::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return {buf_.begin(), buf_.end()};
}

std::size_t RecentWindow::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return buf_.size();
}

DriftState load_drift_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open drift state: " + path);
  json j = json::parse(in);
  DriftState s;
  s.reference_sample = j.at("reference_sample").get<std::vector<double>>();
  s.last_profile_time_ms = j.at("last_profile_time_ms").get<std::int64_t>();
  s.period_ms = j.value("period_ms", s.period_ms);
  s.swd_threshold = j.value("swd_threshold", s.swd_threshold);
  return s;
}

void save_drift_state(const DriftState& state, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write drift state: " + path);
  json j;
  j["reference_sample"] = state.reference_sample;
  j["last_profile_time_ms"] = state.last_profile_time_ms;
  j["period_ms"] = state.period_ms;
  j["swd_threshold"] = state.swd_threshold;
  out << j.dump(2) << '\n';
}

}  // namespace labelcast
