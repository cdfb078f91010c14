#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace labelcast {

/// Exact Wasserstein-1 distance between two empirical distributions.
/// Equal sample sizes reduce to the mean absolute difference of the sorted
/// samples; unequal sizes are integrated exactly on the merged quantile grid.
double wasserstein1(std::span<const double> x, std::span<const double> y);

/// Population standard deviation (divides by n, not n-1).
double population_stddev(std::span<const double> x);

/// W1(x, y) / std(x). Throws DegenerateReference when std(x) == 0.
double swd(std::span<const double> x, std::span<const double> y);

enum class ReprofileReason { None, Periodic, Drift };

struct ReprofileDecision {
  bool reprofile = false;
  ReprofileReason reason = ReprofileReason::None;
  double swd_value = 0.0;
  std::int64_t elapsed_ms = 0;
};

struct DriftState {
  std::vector<double> reference_sample;  // entry-model confidences at profiling time
  std::int64_t last_profile_time_ms = 0;
  std::int64_t period_ms = 24LL * 60 * 60 * 1000;
  double swd_threshold = 1.0;

  void validate() const;  // reference size >= 2
};

/// Periodic first, then drift: reprofile when a period elapsed, else when the
/// SWD of the recent window against the reference exceeds the threshold.
/// Timestamps are injected; nothing reads the wall clock.
ReprofileDecision should_reprofile(const DriftState& state, std::int64_t now_ms,
                                   std::span<const double> recent);

// Confidences from the most recent labeled emails. Appends may race; readers
// take a consistent snapshot.
class RecentWindow {
 public:
  explicit RecentWindow(std::size_t capacity = 1000) : capacity_(capacity) {}
  void push(double confidence);
  std::vector<double> snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::size_t capacity_;
  std::deque<double> buf_;
};

DriftState load_drift_state(const std::string& path);
void save_drift_state(const DriftState& state, const std::string& path);

}  // namespace labelcast
