#pragma once

#include <memory>
#include <string>
#include <vector>

#include "labelcast/backend.hpp"
#include "labelcast/http_backend.hpp"
#include "labelcast/mockworld.hpp"
#include "labelcast/profiler.hpp"
#include "labelcast/provision.hpp"

namespace labelcast {

struct DriftConfig {
  std::int64_t period_ms = 24LL * 60 * 60 * 1000;
  double swd_threshold = 1.0;
  int recent_window = 1000;
};

struct ProvisioningConfig {
  std::vector<Micros> base_costs;  // aligned with the chosen cascade models
  std::string penalty = "2";       // exact decimal
  std::int64_t capacity = 4;
  std::int64_t demand_per_request = 1;
  std::vector<std::int64_t> initial_instances;  // explicit; empty = derive from usage
  int fleet_size = 12;                          // instances spread by usage fraction
  std::map<std::string, int> entry_by_group;
  std::vector<OrgPolicy> policies;
};

struct PathsConfig {
  // relative paths resolve against the config file's directory
  std::string emails = "emails.jsonl";
  std::string baseline_labels = "baseline_labels.jsonl";
  std::string arrivals = "arrivals.csv";
  std::string embedding_cache = "embedding_cache.jsonl";
};

struct AppConfig {
  LabelSchema schema = LabelSchema::default_schema();
  std::vector<ModelSpec> models;  // pool + embedding + baseline
  std::map<std::string, MockModelConfig> mock_models;
  std::string backend_kind = "mock";  // mock | http
  HttpEndpointConfig http;
  ProfilerKnobs knobs;
  OperatorConstraints constraints;
  bool enforce_constraints = false;
  DriftConfig drift;
  MockWorldSpec world;
  int embedding_dim = 48;
  double embedding_signal = 2.5;
  int validation_count = 200;  // head of the dataset held out for growth
  ProvisioningConfig provisioning;
  PathsConfig paths;

  std::string base_dir;  // directory of the loaded config file; not serialized

  std::string resolve(const std::string& path) const;
  void validate() const;
};

AppConfig load_config(const std::string& path);
void save_config(const AppConfig& config, const std::string& path);

/// Default mock-world config: table-shaped pool, default knobs and schedule.
AppConfig default_mock_config(std::uint64_t seed);

/// Builds the configured backend. Mock backends need the baseline label table.
std::unique_ptr<Backend> make_backend(const AppConfig& config,
                                      std::shared_ptr<const LabelTable> baseline);

// chosen_config.json round-trip
void save_labeling_config(const LabelingConfig& config, const std::string& path);
LabelingConfig load_labeling_config(const std::string& path);

}  // namespace labelcast
