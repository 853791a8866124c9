#include "dashmech/rebalancing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dashmech {

Dashboard reference_rebalancing(const MonotoneRule& ealloc, PaymentFormat format,
                                double balance, double rate, int stage,
                                ToleranceConfig tol) {
  if (!(rate > 0.0 && rate <= 1.0))
    throw std::invalid_argument("rebalancing rate must lie in (0, 1]");
  return Dashboard::make(ealloc, format, balance * rate, stage, tol);
}

MonotoneRule linear_bid_rule(double gamma, double meet_v, double meet_x, double vmax,
                             std::size_t knots, double min_slope, bool* exponent_capped) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(meet_v > 0.0 && meet_v <= vmax))
    throw std::invalid_argument("meet point value must lie in (0, vmax]");
  if (!(meet_x > 0.0 && meet_x <= 1.0))
    throw std::invalid_argument("meet point allocation must lie in (0, 1]");
  double exponent = gamma / (1.0 - gamma);
  bool capped = false;
  if (exponent > kExponentCap) {
    exponent = kExponentCap;
    capped = true;
  }
  if (exponent_capped) *exponent_capped = capped;

  std::vector<double> values(knots), probs(knots);
  for (std::size_t i = 0; i < knots; ++i) {
    const double z = vmax * static_cast<double>(i) / static_cast<double>(knots - 1);
    values[i] = z;
    double p = z <= 0.0 ? 0.0 : meet_x * std::pow(z / meet_v, exponent);
    if (!std::isfinite(p)) p = z < meet_v ? 0.0 : 1.0;
    // floor keeps every segment slope at least min_slope
    probs[i] = std::clamp(std::max(p, min_slope * z), 0.0, 1.0);
  }
  for (std::size_t i = 1; i < knots; ++i) probs[i] = std::max(probs[i], probs[i - 1]);
  return MonotoneRule::from_knots(std::move(values), std::move(probs), vmax,
                                  /*relaxed=*/true, min_slope);
}

namespace {

// Solves f(v) = target for continuous f on [lo, hi] with f(lo) <= target;
// returns hi (flagging *saturated) when f stays below the target.
template <typename F>
double solve_crossing(F&& f, double target, double lo, double hi, double tol,
                      bool* saturated) {
  if (saturated) *saturated = false;
  if (f(hi) < target) {
    if (saturated) *saturated = true;
    return hi;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::pair<Dashboard, IRSplice> ir_rebalancing(const MonotoneRule& ealloc, double balance,
                                              double rate, int stage, ToleranceConfig tol) {
  if (!(rate > 0.0 && rate <= 1.0))
    throw std::invalid_argument("rebalancing rate must lie in (0, 1]");
  if (!ealloc.strict())
    throw std::invalid_argument("ir rebalancing needs a strict dashboard rule");
  const double vmax = ealloc.vmax();
  const std::size_t knots = ealloc.knot_count();
  const double bis_tol = tol.invert_tol_factor * vmax;

  if (balance == 0.0) {
    IRSplice splice;
    splice.v_dagger = 0.0;
    splice.gamma = kGammaHigh;
    splice.low_rule = ealloc;
    splice.spliced = ealloc;
    return {Dashboard::make(ealloc, PaymentFormat::WinnerPaysBid, 0.0, stage, tol), splice};
  }

  auto dstrat = [&](double v) {
    return bid_strategy(ealloc, v, PaymentFormat::WinnerPaysBid, 0.0, tol.no_win_eps);
  };
  const double lo_start = ealloc.win_region_start(tol.no_win_eps);

  IRSplice splice;
  double v_dagger = 0.0;
  if (balance > 0.0) {
    splice.gamma = kGammaHigh;
    v_dagger = solve_crossing([&](double v) { return v - dstrat(v); }, balance,
                              lo_start, vmax, bis_tol, &splice.saturated);
  } else {
    splice.gamma = kGammaLow;
    v_dagger = solve_crossing(dstrat, -balance, lo_start, vmax, bis_tol,
                              &splice.saturated);
  }
  splice.v_dagger = v_dagger;

  const double meet_x = ealloc.eval(v_dagger);
  splice.low_rule = linear_bid_rule(splice.gamma, v_dagger, meet_x, vmax,
                                    knots, ealloc.min_slope());

  // Spliced rule: low piece below v_dagger, the dashboard rule above.
  std::vector<double> values(knots), probs(knots);
  const auto& gv = ealloc.knot_values();
  for (std::size_t i = 0; i < knots; ++i) {
    values[i] = gv[i];
    probs[i] = gv[i] < v_dagger ? std::min(splice.low_rule.eval(gv[i]), meet_x)
                                : ealloc.knot_probs()[i];
  }
  for (std::size_t i = 1; i < knots; ++i) probs[i] = std::max(probs[i], probs[i - 1]);
  splice.spliced = MonotoneRule::from_knots(std::move(values), std::move(probs), vmax,
                                            /*relaxed=*/true, ealloc.min_slope());

  SpliceInfo info;
  info.v_dagger = v_dagger;
  info.low_slope = balance > 0.0 ? 1.0 : kGammaLow;
  info.base = ealloc;
  info.saturated = splice.saturated;
  // Continuity of the bid map at v_dagger: the effective transfer equals the
  // allocation mass removed below v_dagger in the gamma limit.
  const double mass = ealloc.cumulative(v_dagger);
  if (balance > 0.0) {
    info.transfer_eff = mass;  // exact gamma -> 1 limit
  } else {
    info.transfer_eff = mass - meet_x * v_dagger * (1.0 - kGammaLow);
  }

  Dashboard d = Dashboard::make_spliced(splice.spliced, info, stage, tol);
  return {std::move(d), std::move(splice)};
}

std::pair<double, double> residual_and_resolved(const MonotoneRule& valloc,
                                                const MonotoneRule& ealloc,
                                                PaymentFormat format, double inferred_value,
                                                double balance, double rate, int realized) {
  const double s = bid_strategy(valloc, inferred_value, format, 0.0);
  const double s_hat = bid_strategy(ealloc, inferred_value, format, 0.0);
  if (format == PaymentFormat::AllPay) {
    return {s - s_hat, balance * rate};
  }
  const double x_hat = ealloc.eval(inferred_value);
  if (x_hat < rate)
    throw std::domain_error(
        "winner-pays-bid rebalancing requires dashboard support in [rate, 1]");
  const double delta = (s - s_hat) * realized;
  const double resolved = (balance * rate / x_hat) * realized;
  return {delta, resolved};
}

void update_balance_allpay(BalanceLedger& ledger, int stage, double s_realized,
                           double actual_bid, double strategy_plain) {
  LedgerEntry e;
  e.stage = stage;
  e.residual = s_realized - strategy_plain;
  e.resolved = actual_bid - strategy_plain;
  e.realized = true;
  ledger.balance += e.residual - e.resolved;  // = balance + s(v) - bid
  ledger.entries.push_back(e);
}

void update_balance_wpb(BalanceLedger& ledger, int stage, double s_realized,
                        double actual_bid, int realized_alloc, double strategy_plain) {
  LedgerEntry e;
  e.stage = stage;
  e.realized = realized_alloc != 0;
  if (realized_alloc != 0) {
    e.residual = s_realized - strategy_plain;
    e.resolved = actual_bid - strategy_plain;
    ledger.balance += e.residual - e.resolved;
  }
  ledger.entries.push_back(e);
}

}  // namespace dashmech
