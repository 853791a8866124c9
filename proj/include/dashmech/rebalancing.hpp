#pragma once

#include <utility>
#include <vector>

#include "dashmech/dashboard.hpp"

namespace dashmech {

// Per-agent outstanding-balance ledger.  Positive balance means the agent has
// underpaid relative to the truthful payments and owes the mechanism.
struct LedgerEntry {
  int stage = 0;
  double residual = 0.0;  // new payment residual added this stage
  double resolved = 0.0;  // balance resolved this stage
  bool realized = true;   // allocation realized (always true for all-pay)
};

struct BalanceLedger {
  double balance = 0.0;
  double rate = 1.0;  // rebalancing rate eta in (0, 1]
  double initial_balance = 0.0;
  std::vector<LedgerEntry> entries;
};

// Dashboard with transfer balance * rate.  The winner-pays-bid variant with a
// positive transfer is flagged non-invertible and is usable for analysis only.
Dashboard reference_rebalancing(const MonotoneRule& ealloc, PaymentFormat format,
                                double balance, double rate, int stage = 0,
                                ToleranceConfig tol = {});

// Allocation rule x(z) = (meet_x / meet_v^e) * z^e with e = gamma / (1-gamma),
// sampled on a uniform grid and clamped to [0, 1].  Exponents above
// kExponentCap are capped (flagged through *exponent_capped); the grid probs
// are floored so every segment keeps slope >= min_slope.
MonotoneRule linear_bid_rule(double gamma, double meet_v, double meet_x, double vmax,
                             std::size_t knots = kGridKnots, double min_slope = kMinSlope,
                             bool* exponent_capped = nullptr);

struct IRSplice {
  double v_dagger = 0.0;
  double gamma = kGammaHigh;
  MonotoneRule low_rule;
  MonotoneRule spliced;
  bool saturated = false;  // no solution below vmax; whole population low-valued
};

// Individually-rational winner-pays-bid rebalancing: transfer stays 0, low
// values are served by a linear-bid piece up to v_dagger, above it the
// reference rebalancing bids apply.  For balance >= 0 the low piece bids the
// full value; for balance < 0 it bids gamma_low * value.
std::pair<Dashboard, IRSplice> ir_rebalancing(const MonotoneRule& ealloc, double balance,
                                              double rate, int stage = 0,
                                              ToleranceConfig tol = {});

// Payment residual and balance resolved for one stage of the reference
// rebalancing dashboard.
//   all-pay:          delta = s(v) - s_hat(v),              R = balance * rate
//   winner-pays-bid:  delta = [s(v) - s_hat(v)] * realized, R = [balance * rate / ealloc(v)] * realized
// where s is the transfer-0 strategy of the realized rule and s_hat of the
// dashboard rule.  Winner-pays-bid requires ealloc(v) >= rate.
std::pair<double, double> residual_and_resolved(const MonotoneRule& valloc,
                                                const MonotoneRule& ealloc,
                                                PaymentFormat format, double inferred_value,
                                                double balance, double rate, int realized);

// Balance updates.  `strategy_plain` is the published dashboard's strategy at
// the inferred value with the rebalancing component removed; it splits the
// update into the residual and resolved ledger entries.
void update_balance_allpay(BalanceLedger& ledger, int stage, double s_realized,
                           double actual_bid, double strategy_plain);

void update_balance_wpb(BalanceLedger& ledger, int stage, double s_realized,
                        double actual_bid, int realized_alloc, double strategy_plain);

}  // namespace dashmech
