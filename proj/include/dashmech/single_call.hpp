#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "dashmech/dashboard.hpp"
#include "dashmech/rebalancing.hpp"
#include "dashmech/rng.hpp"

namespace dashmech {

struct InstrumentConfig {
  double rho = 0.2;  // exploration probability, in (0, 1)
  double vmax = 1.0;
  std::uint64_t seed = 0;
};

// One agent's share of a single instrumented draw.
struct InstrumentedOutcome {
  double sampled_value = 0.0;    // the value actually fed to the algorithm
  bool explored = false;         // input was resampled from U[0, vmax]
  int realized_alloc = 0;        // algorithm's realized 0/1 outcome
  int own_value_alloc = 0;       // realized_alloc when the own value was used
  double below_indicator = 0.0;  // realized_alloc * vmax / v when explored below v
  double implicit_payment = 0.0;
};

// Blackbox contract: given a value profile and a random stream, return one
// realized 0/1 allocation per agent.  Called exactly once per draw.
using Blackbox = std::function<std::vector<int>(const std::vector<double>&, Rng&)>;

// Runs one instrumented draw: each input is independently replaced by
// U[0, vmax] with probability rho, the blackbox is called once, and the
// implicit-payment variables are filled in per agent.
std::vector<InstrumentedOutcome> instrument_draw(const Blackbox& algorithm,
                                                 const std::vector<double>& values,
                                                 const InstrumentConfig& cfg, Rng& stream);

// Expectation form of the instrumented rule:
//   x_ins(v) = (1 - rho) * valloc(v) + rho * avg_alloc.
MonotoneRule instrumented_rule(const MonotoneRule& valloc, double rho, double avg_alloc);

// L2 isotonic regression by pool-adjacent-violators: fitted levels for
// outcomes already sorted by value.  Each level is the mean of its block.
std::vector<double> isotonic_levels(const std::vector<double>& outcomes);

// Continuous rule from an isotonic fit: PAVA over value-sorted points, linear
// interpolation between block midpoints, clamped to [0, 1], slope floored.
MonotoneRule isotonic_rule(std::vector<std::pair<double, double>> points, double vmax,
                           std::size_t knots = kGridKnots, double min_slope = kMinSlope);

// Empirical average allocation of exploration data.
double empirical_average_alloc(const std::vector<std::pair<double, double>>& points);

// Dashboard from exploration rounds only: ealloc = (1-rho) * isotonic + rho * avg.
// Falls back to `initial_rule` (flagged) while no exploration data exists.
Dashboard build_instrumented_dashboard(const std::vector<std::pair<double, double>>& exploration_data,
                                       double rho, PaymentFormat format,
                                       const MonotoneRule& initial_rule, int stage = 0,
                                       ToleranceConfig tol = {});

// Balance update for single-call stages: B' = B + p_hat - realized * bid.
// `strategy_plain` (the dashboard strategy without the rebalancing component)
// splits the change into the residual and resolved ledger entries.
void update_balance_singlecall(BalanceLedger& ledger, int stage, double implicit_payment,
                               int realized_alloc, double actual_bid,
                               double strategy_plain = 0.0);

}  // namespace dashmech
