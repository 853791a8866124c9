#pragma once

#include <optional>
#include <vector>

#include "dashmech/bid_rule.hpp"
#include "dashmech/common.hpp"
#include "dashmech/monotone_rule.hpp"

namespace dashmech {

// Parameters of an individually-rational splice: below v_dagger the published
// bid map is the limit of the linear-bid family (bid = low_slope * v), above
// it the map equals the base rule's strategy with an effective transfer that
// keeps the map continuous at v_dagger.
struct SpliceInfo {
  double v_dagger = 0.0;
  double low_slope = 1.0;      // 1 for positive balance, gamma_low for negative
  double transfer_eff = 0.0;   // integral mass removed below v_dagger
  MonotoneRule base;           // unspliced dashboard rule
  bool saturated = false;      // v_dagger hit vmax
};

// A published single-agent dashboard: allocation rule estimate, payment
// format, transfer, and the induced bid-space maps.  `bid` gives the optimal
// bid for a value; `infer` inverts a bid back to a value.
class Dashboard {
 public:
  static Dashboard make(MonotoneRule ealloc, PaymentFormat format, double transfer,
                        int stage = 0, ToleranceConfig tol = {});

  // Winner-pays-bid dashboard whose positive transfer is handled by keeping
  // only the increasing branch of the strategy (used by single-call runs).
  static Dashboard make_branch_restricted(MonotoneRule ealloc, double transfer,
                                          int stage = 0, ToleranceConfig tol = {});

  static Dashboard make_spliced(MonotoneRule spliced, SpliceInfo info, int stage = 0,
                                ToleranceConfig tol = {});

  // Optimal bid for value v; the winner-pays-bid no-win region bids 0.
  double bid(double v) const;

  InferResult infer(double b) const;

  // Inferred value together with dv/db at the bid; slope is 0 when clamped.
  std::pair<InferResult, double> infer_with_slope(double b) const;

  // Forecast allocation probability for a bid: x~(b) = ealloc(infer(b)).
  double alloc_at_bid(double b) const;

  // Strategy of the published rule with the rebalancing component removed
  // (transfer 0); the reference point for residual accounting.
  double strategy_plain(double v) const;

  const MonotoneRule& ealloc() const { return ealloc_; }
  PaymentFormat format() const { return format_; }
  double transfer() const { return transfer_; }
  int stage_index() const { return stage_; }
  bool invertible() const { return invertible_; }
  bool fallback() const { return fallback_; }
  void set_fallback(bool f) { fallback_ = f; }
  const std::optional<BidRule>& bid_rule() const { return bid_rule_; }
  const std::optional<SpliceInfo>& splice() const { return splice_; }

 private:
  Dashboard() = default;

  PaymentFormat format_ = PaymentFormat::AllPay;
  MonotoneRule ealloc_;
  double transfer_ = 0.0;
  int stage_ = 0;
  bool invertible_ = true;
  bool fallback_ = false;
  ToleranceConfig tol_;
  std::optional<BidRule> bid_rule_;
  std::optional<SpliceInfo> splice_;
};

enum class PolicyKind { InferredValuesAll, KLookback, LastStage, LastWinningStage };

struct DashboardPolicy {
  PolicyKind kind = PolicyKind::LastStage;
  int k = 1;  // window for KLookback
  MonotoneRule initial_rule;
};

// Per-agent record of realized single-agent allocation rules, one per stage.
struct RuleHistory {
  std::vector<MonotoneRule> rules;
  std::vector<bool> won;

  void append(MonotoneRule rule, bool won_stage) {
    rules.push_back(std::move(rule));
    won.push_back(won_stage);
  }
  std::size_t stages() const { return rules.size(); }
};

// Pointwise mean of the policy's window of history rules; empty selections
// fall back to the policy's initial rule (flagged on the dashboard).
MonotoneRule policy_rule(const DashboardPolicy& policy, const RuleHistory& history,
                         bool* fallback = nullptr);

Dashboard build_dashboard(const DashboardPolicy& policy, const RuleHistory& history,
                          PaymentFormat format, double transfer, int stage = 0,
                          ToleranceConfig tol = {});

// Optimal bid of the dashboard for value v; delegates to Dashboard::bid.
double dashboard_bid(const Dashboard& d, double v);

// Value inferred from a bid; delegates to Dashboard::infer.
InferResult dashboard_infer(const Dashboard& d, double b);

}  // namespace dashmech
