#include "dashmech/bid_rule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dashmech {

double bid_strategy(const MonotoneRule& rule, double v, PaymentFormat format,
                    double transfer, double no_win_eps) {
  const double x = rule.eval(v);
  const double integral = rule.cumulative(std::min(v, rule.vmax()));
  if (format == PaymentFormat::AllPay) return v * x - integral + transfer;
  if (x < no_win_eps)
    throw NoWinRegionError("winner-pays-bid strategy undefined in the no-win region");
  return v - (integral - transfer) / x;
}

namespace {

// Exact strategy derivative within a segment:
//   all-pay:          s'(v) = v * x'(v)
//   winner-pays-bid:  s'(v) = (I(v) - transfer) * x'(v) / x(v)^2
double strategy_slope(const MonotoneRule& rule, double v, PaymentFormat format,
                      double transfer) {
  const double m = rule.slope_at(v);
  if (format == PaymentFormat::AllPay) return v * m;
  const double x = rule.eval(v);
  const double integral = rule.cumulative(std::min(v, rule.vmax()));
  return (integral - transfer) * m / (x * x);
}

}  // namespace

BidRule BidRule::derive(MonotoneRule rule, PaymentFormat format, double transfer,
                        BranchPolicy branch, ToleranceConfig tol) {
  if (!rule.strict())
    throw std::invalid_argument("bid rules require a strictly monotone allocation rule");
  BidRule out;
  out.format_ = format;
  out.transfer_ = transfer;
  out.invert_tol_ = tol.invert_tol_factor * rule.vmax();
  out.no_win_eps_ = tol.no_win_eps;

  const auto& values = rule.knot_values();
  const auto& probs = rule.knot_probs();
  std::size_t first = 0;
  if (format == PaymentFormat::WinnerPaysBid) {
    while (first < probs.size() && probs[first] < tol.no_win_eps) ++first;
    if (first + 1 >= probs.size())
      throw std::invalid_argument("rule has no win region");
  }

  // For winner-pays-bid the strategy derivative has the sign of
  // I(v) - transfer, so a positive transfer makes the strategy decrease until
  // the integral of the rule catches up with the transfer at v_dip.
  double branch_lo = values[first];
  if (format == PaymentFormat::WinnerPaysBid && transfer > 0.0) {
    if (rule.cumulative(rule.vmax()) <= transfer)
      throw NonInvertibleError("transfer exceeds the rule's total allocation mass",
                               values.size() - 2, values.front(), values.back());
    if (branch == BranchPolicy::Reject) {
      std::size_t seg = first;
      while (seg + 1 < values.size() && rule.cumulative_at_knot(seg + 1) <= transfer) ++seg;
      throw NonInvertibleError("positive transfer breaks winner-pays-bid invertibility",
                               seg, values[seg], values[std::min(seg + 1, values.size() - 1)]);
    }
    double lo = values[first], hi = rule.vmax();
    const double bis_tol = tol.invert_tol_factor * rule.vmax();
    while (hi - lo > bis_tol) {
      const double mid = 0.5 * (lo + hi);
      if (rule.cumulative(mid) < transfer)
        lo = mid;
      else
        hi = mid;
    }
    branch_lo = std::max(branch_lo, 0.5 * (lo + hi));
  }

  std::vector<double> tab_v, tab_b;
  tab_v.reserve(values.size() - first + 1);
  tab_b.reserve(values.size() - first + 1);
  for (std::size_t i = first; i < values.size(); ++i) {
    if (values[i] <= branch_lo) continue;
    if (tab_v.empty()) {
      tab_v.push_back(branch_lo);
      tab_b.push_back(bid_strategy(rule, branch_lo, format, transfer, tol.no_win_eps));
    }
    tab_v.push_back(values[i]);
    tab_b.push_back(bid_strategy(rule, values[i], format, transfer, tol.no_win_eps));
  }
  if (tab_v.empty()) {
    tab_v = {branch_lo, rule.vmax()};
    tab_b = {bid_strategy(rule, branch_lo, format, transfer, tol.no_win_eps),
             bid_strategy(rule, rule.vmax(), format, transfer, tol.no_win_eps)};
  }

  if (branch == BranchPolicy::RestrictToIncreasing) {
    // Coalesce table points whose bids do not strictly increase (flat spots
    // right at the dip round to equal bids in floating point).
    std::vector<double> fv{tab_v.front()}, fb{tab_b.front()};
    for (std::size_t i = 1; i < tab_v.size(); ++i) {
      if (tab_b[i] > fb.back()) {
        fv.push_back(tab_v[i]);
        fb.push_back(tab_b[i]);
      }
    }
    if (fv.size() < 2)
      throw NonInvertibleError("bid strategy has no increasing branch", 0, tab_v.front(),
                               tab_v.back());
    tab_v = std::move(fv);
    tab_b = std::move(fb);
  } else {
    for (std::size_t i = 0; i + 1 < tab_b.size(); ++i) {
      if (!(tab_b[i + 1] > tab_b[i]))
        throw NonInvertibleError("bid strategy is not strictly increasing", i, tab_v[i],
                                 tab_v[i + 1]);
    }
  }

  out.rule_ = std::move(rule);
  out.table_values_ = std::move(tab_v);
  out.bids_ = std::move(tab_b);
  return out;
}

double BidRule::strategy(double v) const {
  return bid_strategy(rule_, v, format_, transfer_, no_win_eps_);
}

InferResult BidRule::invert_impl(double b, bool* clamped) const {
  if (b <= bids_.front()) {
    if (clamped) *clamped = b < bids_.front() - invert_tol_;
    return {table_values_.front(), b < bids_.front() - invert_tol_};
  }
  if (b >= bids_.back()) {
    if (clamped) *clamped = b > bids_.back() + invert_tol_;
    return {table_values_.back(), b > bids_.back() + invert_tol_};
  }
  const auto it = std::upper_bound(bids_.begin(), bids_.end(), b);
  std::size_t seg = static_cast<std::size_t>(it - bids_.begin()) - 1;
  double lo = table_values_[seg], hi = table_values_[seg + 1];

  // Every table interval lies inside one rule segment, so the strategy can be
  // evaluated from cached segment parameters while bisecting.
  const std::size_t rs = rule_.segment(lo);
  const double v0 = rule_.knot_values()[rs];
  const double x0 = rule_.knot_probs()[rs];
  const double m = rule_.segment_slope(rs);
  const double c0 = rule_.cumulative_at_knot(rs);
  auto strat_local = [&](double v) {
    const double dv = v - v0;
    const double x = x0 + m * dv;
    const double integral = c0 + x0 * dv + 0.5 * m * dv * dv;
    return format_ == PaymentFormat::AllPay ? v * x - integral + transfer_
                                            : v - (integral - transfer_) / x;
  };
  while (hi - lo > invert_tol_) {
    const double mid = 0.5 * (lo + hi);
    if (strat_local(mid) < b)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), false};
}

InferResult BidRule::invert(double b) const { return invert_impl(b, nullptr); }

double BidRule::alloc_at_bid(double b) const {
  return rule_.eval(invert_impl(b, nullptr).value);
}

double BidRule::alloc_slope_at_bid(double b) const {
  const double v = invert_impl(b, nullptr).value;
  const double sprime = strategy_slope(rule_, v, format_, transfer_);
  if (sprime <= 0.0) return 0.0;
  return rule_.slope_at(v) / sprime;
}

InferResult BidRule::infer_foc(double b) const {
  bool clamped = false;
  const InferResult at = invert_impl(b, &clamped);
  if (clamped) return at;
  const double xb = rule_.eval(at.value);
  const double slope = alloc_slope_at_bid(b);
  if (slope <= 0.0) return {at.value, true};
  double v = format_ == PaymentFormat::WinnerPaysBid ? b + xb / slope : 1.0 / slope;
  return {v, false};
}

double foc_value(const std::function<double(double)>& bid_alloc, double b,
                 PaymentFormat format, double step) {
  const double h = std::max(step, 1e-9) * std::max(1.0, std::abs(b));
  auto central = [&](double hh) {
    return (bid_alloc(b + hh) - bid_alloc(b - hh)) / (2.0 * hh);
  };
  // Richardson extrapolation kills the O(h^2) term of the central difference.
  const double d1 = central(h);
  const double d2 = central(0.5 * h);
  const double deriv = (4.0 * d2 - d1) / 3.0;
  if (!(deriv > 0.0)) throw std::domain_error("bid-allocation derivative is not positive");
  if (format == PaymentFormat::WinnerPaysBid) return b + bid_alloc(b) / deriv;
  return 1.0 / deriv;
}

double LinearTail::alloc_at_offset(double beta) const {
  const double B = bid_at_V();
  const double a = V - B - beta;
  const double nu = std::sqrt(a * a + 2.0 * beta * X / delta) - a;
  return X + delta * nu;
}

double linear_tail_slope(const LinearTail& tail, double beta, double step) {
  if (!(tail.delta > 0.0) || !(tail.X > 0.0))
    throw std::domain_error("linear tail needs positive slope and allocation");
  if (tail.V - tail.bid_at_V() <= 0.0)
    throw std::domain_error("degenerate linear tail: payment equals surplus at V");
  const double h = step * std::max(1.0, tail.V);
  if (beta - h < 0.0) {
    // One-sided at the left end of the tail's bid range.
    return (tail.alloc_at_offset(beta + h) - tail.alloc_at_offset(beta)) / h;
  }
  return (tail.alloc_at_offset(beta + h) - tail.alloc_at_offset(beta - h)) / (2.0 * h);
}

}  // namespace dashmech
