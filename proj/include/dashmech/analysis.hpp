#pragma once

#include <functional>
#include <vector>

#include "dashmech/engine.hpp"

namespace dashmech {

// Outstanding balance per stage: cumulative (truthful payment at the inferred
// value) minus (expected payment actually charged).  Positive means the agent
// underpaid.  `realized` is the ledger path (realized-payment accounting).
struct BalanceSeries {
  std::vector<double> expected;
  std::vector<double> realized;
};
BalanceSeries outstanding_balance(const Trace& trace, std::size_t agent);

struct Inconsistency {
  double alloc_gap = 0.0;   // |mean forecast alloc at bids - mean alloc at inferred values|
  double payment_gap = 0.0; // epsilon = |B(t)| / t
};
Inconsistency incentive_inconsistency(const Trace& trace, std::size_t agent);

// Hindsight regret over the replay bid grid for a static-value agent:
// max over grid bids of mean utility minus realized mean utility.
struct RegretResult {
  double regret = 0.0;
  double best_bid = 0.0;
};
RegretResult hindsight_regret(const Trace& trace, std::size_t agent);

struct RationalizablePoint {
  double bid = 0.0;
  double value = 0.0;
  double regret = 0.0;
  bool skipped = false;  // derivative vanished or endpoint excluded
};

// Boundary of the (value, regret) rationalizable set sampled on the replay
// bid grid:
//   all-pay:          v(b) = 1 / mean x~'(b)
//   winner-pays-bid:  v(b) = b + mean x~(b) / mean x~'(b)
// with regret(b) evaluated at v(b).
std::vector<RationalizablePoint> rationalizable_boundary(const Trace& trace,
                                                         std::size_t agent);

// Same computation on raw aggregates (mean curves of the stage bid rules).
std::vector<RationalizablePoint> rationalizable_boundary(const ReplayAggregates& agg,
                                                         std::size_t agent,
                                                         PaymentFormat format,
                                                         double vmax, double fd_step);

// Inconsistency of the constant-bid strategy at grid bid index j, evaluated
// on the same realized stage rules: |mean truthful payment at infer(g_j) -
// mean charged payment at g_j|.
double constant_bid_inconsistency(const Trace& trace, std::size_t agent, std::size_t j);

// Strong-monotonicity constant measured from the realized stage rules:
// sqrt(min over stages and grid of x'(v) v^3) for all-pay, with the
// log-derivative x'(v)/x(v) in place of x'(v) for winner-pays-bid.
double measured_alpha(const Trace& trace, std::size_t agent);

struct ValueInterval {
  double lo = 0.0;
  double hi = 0.0;
  double minimizing_value = 0.0;
  double min_regret = 0.0;
};

// Sub-level set {v(b) : regret(b) <= regret_bound} of the boundary.
// Throws when the set is empty (inconsistent bound).
ValueInterval value_interval(const std::vector<RationalizablePoint>& boundary,
                             double regret_bound);

// Central-difference second derivative with step h.
double second_derivative(const std::function<double(double)>& f, double x, double h);

// Smallest discrete second difference of the (value, regret) boundary curve;
// non-negative (up to tolerance) means the sampled curve is convex.
double boundary_convexity_defect(const std::vector<RationalizablePoint>& boundary);

}  // namespace dashmech
