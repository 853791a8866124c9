#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dashmech/agents.hpp"
#include "dashmech/common.hpp"
#include "dashmech/dashboard.hpp"

namespace dashmech {

struct AlgorithmSpec {
  enum class Kind { ProportionalShare, SoftmaxSingleItem, RandomPower, Custom };
  Kind kind = Kind::ProportionalShare;
  double temperature = 1.0;           // SoftmaxSingleItem
  double k_min = 0.5, k_max = 2.0;    // RandomPower: per-stage exponent range
  // Custom: ex-post marginal allocation for agent i at a value profile.
  std::function<double(std::size_t, const std::vector<double>&)> custom;
  bool single_item() const { return kind == Kind::SoftmaxSingleItem; }
};

struct PolicyConfig {
  PolicyKind kind = PolicyKind::LastStage;
  int k = 1;
};

struct RebalanceConfig {
  enum class Mode { Off, Reference, IR } mode = Mode::Off;
  double rate = 1.0;       // eta
  double dead_band = 0.0;  // suppress rebalancing while |B| <= dead_band * inferred value
};

struct SingleCallConfig {
  bool enabled = false;
  double rho = 0.2;
};

struct OutputConfig {
  std::string dir = "out";
  // Number of leading stages whose dashboards are dumped as JSON;
  // -1 selects all stages when t <= 100 and none otherwise.
  int dump_dashboards = -1;
  bool quiet = false;
};

struct ExperimentConfig {
  PaymentFormat format = PaymentFormat::AllPay;
  double vmax = 1.0;
  int stages = 10;
  std::uint64_t seed = 1;
  std::uint64_t seed_end = 0;  // inclusive sweep end; 0 means single run
  std::size_t grid = kGridKnots;
  std::size_t bid_grid = 257;
  AlgorithmSpec algorithm;
  std::vector<AgentSpec> agents;
  PolicyConfig policy;
  RebalanceConfig rebalance;
  SingleCallConfig single_call;
  OutputConfig output;
  ToleranceConfig tol;
  bool record_replay = true;
  bool record_best_response = false;  // per-stage bid grid search (expensive)

  // which fields the config document set explicitly (config wins over CLI
  // flags for everything except seeds and the output directory)
  bool grid_explicit = false;
  bool quiet_explicit = false;

  bool is_sweep() const { return seed_end > seed; }
};

// Raised on malformed configs; `where` is a JSON-pointer-style location.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& what, std::string where_)
      : std::runtime_error(what + " (at " + where_ + ")"), where(std::move(where_)) {}
  std::string where;
};

// Parses and validates a config document; throws ConfigError with the
// offending location.  `parse_config_file` reports parse errors with the line
// and column in the file.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig parse_config_file(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

// Semantic checks shared by parsing and direct struct construction.
void validate_config(const ExperimentConfig& cfg);

}  // namespace dashmech
