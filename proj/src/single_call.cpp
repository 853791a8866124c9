#include "dashmech/single_call.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dashmech {

std::vector<InstrumentedOutcome> instrument_draw(const Blackbox& algorithm,
                                                 const std::vector<double>& values,
                                                 const InstrumentConfig& cfg, Rng& stream) {
  if (!(cfg.rho > 0.0 && cfg.rho < 1.0))
    throw std::invalid_argument("instrumentation rate must lie in (0, 1)");
  const std::size_t n = values.size();
  std::vector<InstrumentedOutcome> out(n);
  std::vector<double> inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] < 0.0 || values[i] > cfg.vmax)
      throw std::domain_error("values must lie in [0, vmax]");
    Rng sub = stream.substream(0x5eed, i);
    const bool explore = sub.uniform() < cfg.rho;
    out[i].explored = explore;
    inputs[i] = explore ? sub.uniform(0.0, cfg.vmax) : values[i];
    out[i].sampled_value = inputs[i];
  }

  Rng alloc_stream = stream.substream(0xa110c);
  const std::vector<int> realized = algorithm(inputs, alloc_stream);
  if (realized.size() != n)
    throw std::runtime_error("blackbox returned wrong number of allocations");

  for (std::size_t i = 0; i < n; ++i) {
    const int a = realized[i];
    if (a != 0 && a != 1)
      throw std::runtime_error("blackbox allocations must be 0 or 1");
    out[i].realized_alloc = a;
    out[i].own_value_alloc = out[i].explored ? 0 : a;
    const bool below = out[i].explored && inputs[i] < values[i] && values[i] > 0.0;
    out[i].below_indicator = below ? a * cfg.vmax / values[i] : 0.0;
    out[i].implicit_payment =
        values[i] * (out[i].own_value_alloc -
                     (1.0 - cfg.rho) / cfg.rho * out[i].below_indicator);
  }
  return out;
}

MonotoneRule instrumented_rule(const MonotoneRule& valloc, double rho, double avg_alloc) {
  if (!(avg_alloc >= 0.0 && avg_alloc <= 1.0))
    throw std::invalid_argument("average allocation must lie in [0, 1]");
  std::vector<double> values = valloc.knot_values();
  std::vector<double> probs = valloc.knot_probs();
  for (double& p : probs) p = std::min(1.0, (1.0 - rho) * p + rho * avg_alloc);
  return MonotoneRule::from_knots(std::move(values), std::move(probs), valloc.vmax(),
                                  /*relaxed=*/true,
                                  valloc.min_slope() * (1.0 - rho) * (1.0 - 1e-9));
}

std::vector<double> isotonic_levels(const std::vector<double>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("isotonic fit needs at least one point");
  // Pool adjacent violators with a block stack: each block keeps its mean and
  // weight; merging happens while the stack is decreasing.
  std::vector<double> mean, weight;
  std::vector<std::size_t> count;
  mean.reserve(outcomes.size());
  for (double y : outcomes) {
    mean.push_back(y);
    weight.push_back(1.0);
    count.push_back(1);
    while (mean.size() > 1 && mean[mean.size() - 2] >= mean.back()) {
      const double w = weight[weight.size() - 2] + weight.back();
      const double m = (mean[mean.size() - 2] * weight[weight.size() - 2] +
                        mean.back() * weight.back()) /
                       w;
      mean.pop_back();
      weight.pop_back();
      const std::size_t c = count.back();
      count.pop_back();
      mean.back() = m;
      weight.back() = w;
      count.back() += c;
    }
  }
  std::vector<double> fitted;
  fitted.reserve(outcomes.size());
  for (std::size_t b = 0; b < mean.size(); ++b)
    fitted.insert(fitted.end(), count[b], mean[b]);
  return fitted;
}

double empirical_average_alloc(const std::vector<std::pair<double, double>>& points) {
  if (points.empty()) throw std::invalid_argument("no exploration data");
  double sum = 0.0;
  for (const auto& [v, y] : points) sum += y;
  return sum / static_cast<double>(points.size());
}

MonotoneRule isotonic_rule(std::vector<std::pair<double, double>> points, double vmax,
                           std::size_t knots, double min_slope) {
  if (points.empty()) throw std::invalid_argument("isotonic fit needs at least one point");
  std::sort(points.begin(), points.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> ys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) ys[i] = points[i].second;
  const std::vector<double> fit = isotonic_levels(ys);

  // Representative point per block: midpoint of the block's value span at the
  // block level; interpolation between them keeps the rule continuous.
  std::vector<double> bx, by;
  std::size_t i = 0;
  while (i < fit.size()) {
    std::size_t j = i;
    while (j + 1 < fit.size() && fit[j + 1] == fit[i]) ++j;
    bx.push_back(0.5 * (points[i].first + points[j].first));
    by.push_back(std::clamp(fit[i], 0.0, 1.0));
    i = j + 1;
  }

  auto interp = [&](double v) {
    if (v <= bx.front()) return by.front();
    if (v >= bx.back()) return by.back();
    const auto it = std::upper_bound(bx.begin(), bx.end(), v);
    const std::size_t k = static_cast<std::size_t>(it - bx.begin()) - 1;
    const double t = (v - bx[k]) / (bx[k + 1] - bx[k]);
    return by[k] + t * (by[k + 1] - by[k]);
  };

  // Blend with the identity ramp to floor the slope without leaving [0, 1].
  const double lambda = std::min(0.5, 2.0 * min_slope * vmax);
  return MonotoneRule::sample(
      [&](double v) { return (1.0 - lambda) * interp(v) + lambda * (v / vmax); }, vmax,
      knots, /*relaxed=*/false, min_slope);
}

Dashboard build_instrumented_dashboard(const std::vector<std::pair<double, double>>& exploration_data,
                                       double rho, PaymentFormat format,
                                       const MonotoneRule& initial_rule, int stage,
                                       ToleranceConfig tol) {
  if (exploration_data.empty()) {
    Dashboard d = Dashboard::make(initial_rule, format, 0.0, stage, tol);
    d.set_fallback(true);
    return d;
  }
  const double avg = empirical_average_alloc(exploration_data);
  const MonotoneRule fit = isotonic_rule(exploration_data, initial_rule.vmax(),
                                         initial_rule.knot_count(), tol.min_slope);
  return Dashboard::make(instrumented_rule(fit, rho, avg), format, 0.0, stage, tol);
}

void update_balance_singlecall(BalanceLedger& ledger, int stage, double implicit_payment,
                               int realized_alloc, double actual_bid,
                               double strategy_plain) {
  LedgerEntry e;
  e.stage = stage;
  e.realized = realized_alloc != 0;
  e.residual = implicit_payment - realized_alloc * strategy_plain;
  e.resolved = realized_alloc * (actual_bid - strategy_plain);
  ledger.balance += implicit_payment - realized_alloc * actual_bid;
  ledger.entries.push_back(e);
}

}  // namespace dashmech
