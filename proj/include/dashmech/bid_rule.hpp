#pragma once

#include <functional>
#include <vector>

#include "dashmech/common.hpp"
#include "dashmech/monotone_rule.hpp"

namespace dashmech {

// Optimal bid for value v against allocation rule `rule` under the given
// payment format and transfer p(0):
//   winner-pays-bid:  v - (I(v) - transfer) / x(v)   with I(v) = integral of x
//   all-pay:          v x(v) - I(v) + transfer
// Throws NoWinRegionError for winner-pays-bid where x(v) < no_win_eps.
double bid_strategy(const MonotoneRule& rule, double v, PaymentFormat format,
                    double transfer = 0.0, double no_win_eps = kNoWinEps);

// How BidRule::derive treats a bid strategy that decreases near zero (which
// happens for winner-pays-bid with a positive transfer): reject, or keep only
// the increasing branch of the strategy.
enum class BranchPolicy { Reject, RestrictToIncreasing };

// A bid-space view of a monotone allocation rule: the strategy s(v), its
// inverse, and the bid allocation rule b -> x(s^{-1}(b)).  The strategy table
// holds exact bids at the rule's knots; within a segment the strategy is
// evaluated in closed form and inverted by bisection.
class BidRule {
 public:
  static BidRule derive(MonotoneRule rule, PaymentFormat format, double transfer,
                        BranchPolicy branch = BranchPolicy::Reject,
                        ToleranceConfig tol = {});

  double strategy(double v) const;

  // Value whose strategy bid equals b, by monotone bisection over the table.
  // Out-of-range bids clamp to the nearest domain endpoint with a flag.
  InferResult invert(double b) const;

  // Value recovered through the first-order condition
  //   winner-pays-bid: b + x~(b) / x~'(b),   all-pay: 1 / x~'(b).
  InferResult infer_foc(double b) const;

  double alloc_at_bid(double b) const;        // x~(b)
  double alloc_slope_at_bid(double b) const;  // x~'(b)

  double min_bid() const { return bids_.front(); }
  double max_bid() const { return bids_.back(); }
  double domain_lo() const { return table_values_.front(); }
  double domain_hi() const { return table_values_.back(); }

  const MonotoneRule& value_rule() const { return rule_; }
  PaymentFormat format() const { return format_; }
  double transfer() const { return transfer_; }
  const std::vector<double>& table_values() const { return table_values_; }
  const std::vector<double>& table_bids() const { return bids_; }

 private:
  InferResult invert_impl(double b, bool* clamped) const;

  MonotoneRule rule_;
  PaymentFormat format_ = PaymentFormat::AllPay;
  double transfer_ = 0.0;
  double invert_tol_ = 0.0;
  double no_win_eps_ = kNoWinEps;
  std::vector<double> table_values_;
  std::vector<double> bids_;
};

// First-order-condition value for an arbitrary bid-allocation curve, with the
// derivative taken by Richardson-extrapolated central differences.  Used when
// only the curve is available (published dashboards, averaged stage rules).
double foc_value(const std::function<double(double)>& bid_alloc, double b,
                 PaymentFormat format, double step = 1e-4);

// Allocation rule that is linear with slope `delta` above value V, where
// X = x(V), P = p(V) and B = P / X.  The winner-pays-bid bid-allocation rule
// above bid B has the closed form x~(B + beta) = X + delta * nu(beta).
struct LinearTail {
  double V;
  double X;
  double P;
  double delta;
  double bid_at_V() const { return P / X; }
  double alloc_at_offset(double beta) const;  // x~(B + beta)
};

// Numerical derivative of the linear-tail bid-allocation rule at bid B + beta.
// Degenerate when V <= B (payment exhausts surplus).
double linear_tail_slope(const LinearTail& tail, double beta, double step = 1e-6);

}  // namespace dashmech
