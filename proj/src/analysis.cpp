#include "dashmech/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dashmech {

namespace {

double expected_payment(const StageAgentRecord& rec, PaymentFormat fmt) {
  (void)fmt;
  return rec.expected_payment;
}

const ReplayAggregates& replay_or_throw(const Trace& trace) {
  if (!trace.replay || trace.replay->stages == 0)
    throw std::logic_error("trace was recorded without replay aggregates");
  return *trace.replay;
}

double static_value_or_throw(const Trace& trace, std::size_t agent) {
  const double v = trace.stages.front().agents[agent].value;
  for (const auto& s : trace.stages)
    if (s.agents[agent].value != v)
      throw std::logic_error("hindsight regret needs a static-value agent");
  return v;
}

}  // namespace

BalanceSeries outstanding_balance(const Trace& trace, std::size_t agent) {
  BalanceSeries out;
  out.expected.reserve(trace.stages.size());
  out.realized.reserve(trace.stages.size());
  double acc = 0.0;
  for (const auto& s : trace.stages) {
    const auto& rec = s.agents[agent];
    acc += rec.truthful_payment - expected_payment(rec, trace.config.format);
    out.expected.push_back(acc);
    out.realized.push_back(rec.balance);
  }
  return out;
}

Inconsistency incentive_inconsistency(const Trace& trace, std::size_t agent) {
  Inconsistency out;
  const std::size_t t = trace.stages.size();
  double sum_forecast = 0.0, sum_alloc = 0.0, sum_pay = 0.0, sum_truthful = 0.0;
  for (const auto& s : trace.stages) {
    const auto& rec = s.agents[agent];
    sum_forecast += rec.alloc_prob;  // x~(b) = x(infer(b)) by construction
    sum_alloc += rec.alloc_prob;
    sum_pay += expected_payment(rec, trace.config.format);
    sum_truthful += rec.truthful_payment;
  }
  out.alloc_gap = std::abs(sum_forecast - sum_alloc) / static_cast<double>(t);
  out.payment_gap = std::abs(sum_pay - sum_truthful) / static_cast<double>(t);
  return out;
}

RegretResult hindsight_regret(const Trace& trace, std::size_t agent) {
  const ReplayAggregates& agg = replay_or_throw(trace);
  const double v = static_value_or_throw(trace, agent);
  const double t = static_cast<double>(agg.stages);
  const double realized = v * agg.sum_real_alloc[agent] / t - agg.sum_real_pay[agent] / t;
  RegretResult out;
  out.regret = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < agg.grid.size(); ++j) {
    const double u = v * agg.sum_alloc[agent][j] / t - agg.sum_pay[agent][j] / t;
    if (u - realized > out.regret) {
      out.regret = u - realized;
      out.best_bid = agg.grid[j];
    }
  }
  return out;
}

std::vector<RationalizablePoint> rationalizable_boundary(const Trace& trace,
                                                         std::size_t agent) {
  return rationalizable_boundary(replay_or_throw(trace), agent, trace.config.format,
                                 trace.config.vmax,
                                 trace.config.tol.fd_step_factor * trace.config.vmax);
}

std::vector<RationalizablePoint> rationalizable_boundary(const ReplayAggregates& agg,
                                                         std::size_t agent,
                                                         PaymentFormat fmt, double vmax,
                                                         double h) {
  const double t = static_cast<double>(agg.stages);
  const double real_alloc = agg.sum_real_alloc[agent] / t;
  const double real_pay = agg.sum_real_pay[agent] / t;
  const double real_bid = agg.sum_real_bid[agent] / t;

  std::vector<RationalizablePoint> out;
  out.reserve(agg.grid.size());
  for (std::size_t j = 0; j < agg.grid.size(); ++j) {
    RationalizablePoint p;
    p.bid = agg.grid[j];
    const double slope = agg.sum_alloc_slope[agent][j] / t;
    const double alloc = agg.sum_alloc[agent][j] / t;
    if (slope <= 0.0 || p.bid < h || p.bid > vmax - h) {
      p.skipped = true;
      out.push_back(p);
      continue;
    }
    if (fmt == PaymentFormat::AllPay) {
      p.value = 1.0 / slope;
      p.regret = p.value * alloc - p.bid - p.value * real_alloc + real_bid;
    } else {
      p.value = p.bid + alloc / slope;
      p.regret = alloc * (p.value - p.bid) - (p.value * real_alloc - real_pay);
    }
    out.push_back(p);
  }
  return out;
}

double constant_bid_inconsistency(const Trace& trace, std::size_t agent, std::size_t j) {
  const ReplayAggregates& agg = replay_or_throw(trace);
  const double t = static_cast<double>(agg.stages);
  return std::abs(agg.sum_truthful_pay[agent][j] - agg.sum_pay[agent][j]) / t;
}

double measured_alpha(const Trace& trace, std::size_t agent) {
  const ReplayAggregates& agg = replay_or_throw(trace);
  const double term = trace.config.format == PaymentFormat::AllPay
                          ? agg.min_slope_term_allpay[agent]
                          : agg.min_slope_term_wpb[agent];
  if (!(term > 0.0) || !std::isfinite(term)) return 0.0;
  return std::sqrt(term);
}

ValueInterval value_interval(const std::vector<RationalizablePoint>& boundary,
                             double regret_bound) {
  ValueInterval out;
  out.lo = std::numeric_limits<double>::infinity();
  out.hi = -std::numeric_limits<double>::infinity();
  out.min_regret = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& p : boundary) {
    if (p.skipped) continue;
    if (p.regret < out.min_regret) {
      out.min_regret = p.regret;
      out.minimizing_value = p.value;
    }
    if (p.regret <= regret_bound) {
      any = true;
      out.lo = std::min(out.lo, p.value);
      out.hi = std::max(out.hi, p.value);
    }
  }
  if (!any)
    throw std::domain_error("no rationalizable value meets the regret bound");
  return out;
}

double second_derivative(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

double boundary_convexity_defect(const std::vector<RationalizablePoint>& boundary) {
  std::vector<RationalizablePoint> pts;
  for (const auto& p : boundary)
    if (!p.skipped) pts.push_back(p);
  std::sort(pts.begin(), pts.end(),
            [](const auto& a, const auto& b) { return a.value < b.value; });
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double dv1 = pts[i].value - pts[i - 1].value;
    const double dv2 = pts[i + 1].value - pts[i].value;
    if (dv1 <= 0.0 || dv2 <= 0.0) continue;
    const double left = (pts[i].regret - pts[i - 1].regret) / dv1;
    const double right = (pts[i + 1].regret - pts[i].regret) / dv2;
    worst = std::min(worst, right - left);
  }
  return worst;
}

}  // namespace dashmech
