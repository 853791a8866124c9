#pragma once

#include <optional>
#include <vector>

#include "dashmech/config.hpp"
#include "dashmech/rebalancing.hpp"
#include "dashmech/rng.hpp"
#include "dashmech/single_call.hpp"

namespace dashmech {

// One stage's allocation algorithm, with the per-stage randomness (if any)
// already resolved.  Marginal probabilities are per agent; single-item
// algorithms realize one winner, everything else realizes each agent
// independently at its marginal.
class StageAlgorithm {
 public:
  StageAlgorithm(const AlgorithmSpec& spec, double vmax, int stage, const Rng& run_root);

  std::vector<double> marginals(const std::vector<double>& values) const;
  double marginal(std::size_t i, std::vector<double> values, double own_value) const;

  // Samples the single-agent projection z -> x_i(z, v_{-i}) onto the grid.
  MonotoneRule project(std::size_t i, const std::vector<double>& values,
                       std::size_t knots, double min_slope) const;

  std::vector<int> realize(const std::vector<double>& probs, Rng& stream) const;

  bool single_item() const { return spec_.single_item(); }

 private:
  AlgorithmSpec spec_;
  double vmax_;
  double power_ = 1.0;  // RandomPower exponent for this stage
};

struct StageAgentRecord {
  double value = 0.0;
  double bid = 0.0;
  double inferred = 0.0;
  double alloc_prob = 0.0;
  int realized = 0;
  double payment = 0.0;           // realized payment for the stage format
  double expected_payment = 0.0;  // bid-weighted expectation of the payment
  double truthful_payment = 0.0;  // payment-identity payment at the inferred value
  double residual = 0.0;
  double resolved = 0.0;
  double balance = 0.0;  // after the stage
  bool extrapolated = false;
  double br_gap = 0.0;  // best-response utility gap (when recorded)
};

struct StageRecord {
  int stage = 0;
  std::vector<StageAgentRecord> agents;
};

// Running aggregates that make post-hoc regret and rationalizable-set
// analysis possible without storing every stage rule: sums over stages of the
// realized bid-allocation curve, its derivative, and the payment curve on a
// fixed bid grid, plus the realized outcome sums the formulas need.
struct ReplayAggregates {
  std::vector<double> grid;
  std::vector<std::vector<double>> sum_alloc;        // [agent][grid]
  std::vector<std::vector<double>> sum_alloc_slope;  // [agent][grid]
  std::vector<std::vector<double>> sum_pay;          // [agent][grid]
  std::vector<std::vector<double>> sum_truthful_pay;  // payment identity at infer(g)
  std::vector<double> sum_real_alloc;
  std::vector<double> sum_real_pay;  // expected payment at the played bid
  std::vector<double> sum_real_bid;
  std::vector<double> min_slope_term_allpay;  // min over stages/grid of x'(v) v^3
  std::vector<double> min_slope_term_wpb;     // min over stages/grid of x'(v)/x(v) v^3
  int stages = 0;
};

struct Trace {
  ExperimentConfig config;
  std::vector<StageRecord> stages;
  std::vector<BalanceLedger> ledgers;
  std::optional<ReplayAggregates> replay;
  // Dashboards published in the leading stages (for JSON dumps).
  std::vector<std::vector<Dashboard>> published;
};

Trace run_dashboard_mechanism(const ExperimentConfig& cfg);

// Sequential truthful mechanism: charges the payment-identity payment of each
// agent's stage projection at the reported value.  Realization draws share
// the dashboard run's substreams, so equal probabilities realize equally.
Trace run_truthful_mechanism(const ExperimentConfig& cfg,
                             const std::vector<std::vector<double>>& reported);

}  // namespace dashmech
