#include "dashmech/dashboard.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dashmech {

Dashboard Dashboard::make(MonotoneRule ealloc, PaymentFormat format, double transfer,
                          int stage, ToleranceConfig tol) {
  Dashboard d;
  d.format_ = format;
  d.transfer_ = transfer;
  d.stage_ = stage;
  d.tol_ = tol;
  try {
    d.bid_rule_ = BidRule::derive(ealloc, format, transfer, BranchPolicy::Reject, tol);
    d.invertible_ = true;
  } catch (const NonInvertibleError&) {
    // Winner-pays-bid with positive transfer: usable for forward evaluation
    // and analysis only.
    d.invertible_ = false;
  }
  d.ealloc_ = std::move(ealloc);
  return d;
}

Dashboard Dashboard::make_branch_restricted(MonotoneRule ealloc, double transfer,
                                            int stage, ToleranceConfig tol) {
  Dashboard d;
  d.format_ = PaymentFormat::WinnerPaysBid;
  d.transfer_ = transfer;
  d.stage_ = stage;
  d.tol_ = tol;
  d.bid_rule_ = BidRule::derive(ealloc, PaymentFormat::WinnerPaysBid, transfer,
                                BranchPolicy::RestrictToIncreasing, tol);
  d.invertible_ = true;
  d.ealloc_ = std::move(ealloc);
  return d;
}

Dashboard Dashboard::make_spliced(MonotoneRule spliced, SpliceInfo info, int stage,
                                  ToleranceConfig tol) {
  Dashboard d;
  d.format_ = PaymentFormat::WinnerPaysBid;
  d.transfer_ = 0.0;
  d.stage_ = stage;
  d.tol_ = tol;
  d.invertible_ = true;
  d.ealloc_ = std::move(spliced);
  d.splice_ = std::move(info);
  return d;
}

double Dashboard::bid(double v) const {
  if (splice_) {
    if (v <= splice_->v_dagger) return splice_->low_slope * v;
    return bid_strategy(splice_->base, v, PaymentFormat::WinnerPaysBid,
                        splice_->transfer_eff, tol_.no_win_eps);
  }
  if (bid_rule_ && format_ == PaymentFormat::WinnerPaysBid &&
      v < bid_rule_->domain_lo()) {
    // Branch-restricted dashboards quote the lowest bid of the increasing
    // branch for values below it.
    if (bid_rule_->transfer() > 0.0) return bid_rule_->min_bid();
  }
  try {
    return bid_strategy(ealloc_, v, format_, transfer_, tol_.no_win_eps);
  } catch (const NoWinRegionError&) {
    return 0.0;  // no-win region: zero bid, zero forecast
  }
}

InferResult Dashboard::infer(double b) const {
  return infer_with_slope(b).first;
}

std::pair<InferResult, double> Dashboard::infer_with_slope(double b) const {
  if (splice_) {
    const double knee_bid = splice_->low_slope * splice_->v_dagger;
    if (b < 0.0) return {{0.0, true}, 0.0};
    if (b <= knee_bid)
      return {{b / splice_->low_slope, false}, 1.0 / splice_->low_slope};
    // High branch: bisection against the base strategy with the effective
    // transfer; monotone above v_dagger.
    const double vmax = splice_->base.vmax();
    const double hi_bid = bid(vmax);
    if (b >= hi_bid) return {{vmax, b > hi_bid + tol_.invert_tol_factor * vmax}, 0.0};
    double lo = splice_->v_dagger, hi = vmax;
    const double bis_tol = tol_.invert_tol_factor * vmax;
    while (hi - lo > bis_tol) {
      const double mid = 0.5 * (lo + hi);
      if (bid(mid) < b)
        lo = mid;
      else
        hi = mid;
    }
    const double v = 0.5 * (lo + hi);
    const double x = splice_->base.eval(v);
    const double m = splice_->base.slope_at(v);
    const double integral = splice_->base.cumulative(std::min(v, vmax));
    const double sprime = (integral - splice_->transfer_eff) * m / (x * x);
    return {{v, false}, sprime > 0.0 ? 1.0 / sprime : 0.0};
  }
  if (!invertible_ || !bid_rule_)
    throw std::logic_error("dashboard is not invertible (analysis-only)");
  const InferResult r = bid_rule_->invert(b);
  if (r.extrapolated) return {r, 0.0};
  const double slope = bid_rule_->alloc_slope_at_bid(b);
  const double m = ealloc_.slope_at(r.value);
  return {r, slope > 0.0 && m > 0.0 ? slope / m : 0.0};
}

double Dashboard::alloc_at_bid(double b) const {
  if (splice_) return ealloc_.eval(std::min(infer(b).value, ealloc_.vmax()));
  if (!invertible_ || !bid_rule_)
    throw std::logic_error("dashboard is not invertible (analysis-only)");
  return bid_rule_->alloc_at_bid(b);
}

double Dashboard::strategy_plain(double v) const {
  const MonotoneRule& base = splice_ ? splice_->base : ealloc_;
  try {
    return bid_strategy(base, v, format_, 0.0, tol_.no_win_eps);
  } catch (const NoWinRegionError&) {
    return 0.0;
  }
}

MonotoneRule policy_rule(const DashboardPolicy& policy, const RuleHistory& history,
                         bool* fallback) {
  if (fallback) *fallback = false;
  const std::size_t t = history.stages();
  auto fall_back = [&]() {
    if (fallback) *fallback = true;
    return policy.initial_rule;
  };
  switch (policy.kind) {
    case PolicyKind::InferredValuesAll: {
      if (t == 0) return fall_back();
      return MonotoneRule::average({history.rules.data(), t});
    }
    case PolicyKind::KLookback: {
      if (policy.k < 1) throw std::invalid_argument("lookback window must be >= 1");
      if (t == 0) return fall_back();
      const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(policy.k), t);
      return MonotoneRule::average({history.rules.data() + (t - w), w});
    }
    case PolicyKind::LastStage: {
      if (t == 0) return fall_back();
      return history.rules.back();
    }
    case PolicyKind::LastWinningStage: {
      for (std::size_t i = t; i-- > 0;)
        if (history.won[i]) return history.rules[i];
      return fall_back();
    }
  }
  throw std::logic_error("unknown policy kind");
}

Dashboard build_dashboard(const DashboardPolicy& policy, const RuleHistory& history,
                          PaymentFormat format, double transfer, int stage,
                          ToleranceConfig tol) {
  bool fallback = false;
  MonotoneRule rule = policy_rule(policy, history, &fallback);
  Dashboard d = Dashboard::make(std::move(rule), format, transfer, stage, tol);
  d.set_fallback(fallback);
  return d;
}

double dashboard_bid(const Dashboard& d, double v) { return d.bid(v); }

InferResult dashboard_infer(const Dashboard& d, double b) { return d.infer(b); }

}  // namespace dashmech
