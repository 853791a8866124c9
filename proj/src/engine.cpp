#include "dashmech/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dashmech {

namespace {

// Substream purposes hung off the run root; keeping them named makes the
// derivation order-independent and the truthful run share the same draws.
enum : std::uint64_t {
  kStreamValues = 1,
  kStreamRealize = 2,
  kStreamLearner = 4,
  kStreamInstrument = 5,
  kStreamAlgorithm = 6,
};

}  // namespace

StageAlgorithm::StageAlgorithm(const AlgorithmSpec& spec, double vmax, int stage,
                               const Rng& run_root)
    : spec_(spec), vmax_(vmax) {
  if (spec_.kind == AlgorithmSpec::Kind::RandomPower) {
    Rng sub = run_root.substream(kStreamAlgorithm, static_cast<std::uint64_t>(stage));
    power_ = sub.uniform(spec_.k_min, spec_.k_max);
  }
}

std::vector<double> StageAlgorithm::marginals(const std::vector<double>& values) const {
  const std::size_t n = values.size();
  std::vector<double> out(n);
  switch (spec_.kind) {
    case AlgorithmSpec::Kind::ProportionalShare: {
      double sum = 0.0;
      for (double v : values) sum += v;
      for (std::size_t i = 0; i < n; ++i) out[i] = sum > 0.0 ? values[i] / sum : 1.0 / n;
      break;
    }
    case AlgorithmSpec::Kind::SoftmaxSingleItem: {
      double denom = 0.0;
      std::vector<double> e(n);
      for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::exp(values[i] / spec_.temperature);
        denom += e[i];
      }
      for (std::size_t i = 0; i < n; ++i) out[i] = e[i] / denom;
      break;
    }
    case AlgorithmSpec::Kind::RandomPower: {
      for (std::size_t i = 0; i < n; ++i)
        out[i] = std::pow(std::clamp(values[i] / vmax_, 0.0, 1.0), power_);
      break;
    }
    case AlgorithmSpec::Kind::Custom: {
      for (std::size_t i = 0; i < n; ++i) out[i] = spec_.custom(i, values);
      break;
    }
  }
  return out;
}

double StageAlgorithm::marginal(std::size_t i, std::vector<double> values,
                                double own_value) const {
  values[i] = own_value;
  return marginals(values)[i];
}

MonotoneRule StageAlgorithm::project(std::size_t i, const std::vector<double>& values,
                                     std::size_t knots, double min_slope) const {
  std::vector<double> profile = values;
  return MonotoneRule::sample(
      [&](double z) {
        profile[i] = z;
        return marginals(profile)[i];
      },
      vmax_, knots, /*relaxed=*/false, min_slope);
}

std::vector<int> StageAlgorithm::realize(const std::vector<double>& probs,
                                         Rng& stream) const {
  std::vector<int> out(probs.size(), 0);
  if (single_item()) {
    Rng sub = stream.substream(0xca7);
    out[sub.categorical(probs)] = 1;
    return out;
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    Rng sub = stream.substream(0xbead, i);
    out[i] = sub.uniform() < probs[i] ? 1 : 0;
  }
  return out;
}

namespace {

struct StageCurves {
  std::vector<double> alloc;     // x~(g) on the bid grid
  std::vector<double> slope;     // x~'(g)
  std::vector<double> pay;       // expected payment at g
  std::vector<double> truthful;  // payment identity of the stage rule at infer(g)
};

StageCurves stage_curves(const Dashboard& dash, const MonotoneRule& proj,
                         const std::vector<double>& grid, PaymentFormat fmt) {
  StageCurves c;
  const std::size_t k = grid.size();
  c.alloc.resize(k);
  c.slope.resize(k);
  c.pay.resize(k);
  c.truthful.resize(k);
  const double vmax = proj.vmax();
  for (std::size_t j = 0; j < k; ++j) {
    const auto [res, dvdb] = dash.infer_with_slope(grid[j]);
    const double v = std::min(res.value, vmax);
    c.alloc[j] = proj.eval(v);
    c.slope[j] = res.extrapolated ? 0.0 : proj.slope_at(v) * dvdb;
    c.pay[j] = fmt == PaymentFormat::WinnerPaysBid ? grid[j] * c.alloc[j] : grid[j];
    c.truthful[j] = proj.truthful_payment(v, 0.0);
  }
  return c;
}

double stage_utility(double value, double alloc, double pay) {
  return value * alloc - pay;
}

void validate_run(const ExperimentConfig& cfg) {
  if (cfg.agents.empty()) throw ConfigError("experiment needs at least one agent", "/agents");
  if (cfg.stages < 1) throw ConfigError("stage count must be positive", "/stages");
  if (!(cfg.vmax > 0.0)) throw ConfigError("vmax must be positive", "/vmax");
  if (cfg.rebalance.mode != RebalanceConfig::Mode::Off) {
    if (!(cfg.rebalance.rate > 0.0 && cfg.rebalance.rate <= 1.0))
      throw ConfigError("rebalancing rate must lie in (0, 1]", "/rebalancing/rate");
    if (cfg.format == PaymentFormat::AllPay &&
        cfg.rebalance.mode == RebalanceConfig::Mode::IR)
      throw ConfigError("the ir splice applies to winner-pays-bid only", "/rebalancing/mode");
    if (cfg.format == PaymentFormat::WinnerPaysBid &&
        cfg.rebalance.mode == RebalanceConfig::Mode::Reference && !cfg.single_call.enabled)
      throw ConfigError(
          "winner-pays-bid reference rebalancing is not invertible for positive "
          "balances; use mode \"ir\"",
          "/rebalancing/mode");
  }
  if (cfg.single_call.enabled) {
    if (!(cfg.single_call.rho > 0.0 && cfg.single_call.rho < 1.0))
      throw ConfigError("instrumentation rate must lie in (0, 1)", "/single_call/rho");
    if (cfg.rebalance.mode == RebalanceConfig::Mode::IR)
      throw ConfigError("single-call runs rebalance through the reference dashboard",
                        "/rebalancing/mode");
    for (std::size_t i = 0; i < cfg.agents.size(); ++i)
      if (cfg.agents[i].strategy.kind == AgentStrategy::Kind::Hedge)
        throw ConfigError("learners need counterfactual feedback; disable single_call",
                          "/agents/" + std::to_string(i));
  }
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
    const auto& vp = cfg.agents[i].values;
    auto in_range = [&](double v) { return v >= 0.0 && v <= cfg.vmax; };
    const std::string where = "/agents/" + std::to_string(i) + "/values";
    if (vp.kind == ValuePath::Kind::Static && !in_range(vp.value))
      throw ConfigError("static value outside [0, vmax]", where);
    if (vp.kind == ValuePath::Kind::Path) {
      if (vp.path.empty()) throw ConfigError("empty value path", where);
      for (double v : vp.path)
        if (!in_range(v)) throw ConfigError("path value outside [0, vmax]", where);
    }
    if (vp.kind == ValuePath::Kind::IidUniform &&
        !(in_range(vp.low) && in_range(vp.high) && vp.low <= vp.high))
      throw ConfigError("iid range outside [0, vmax]", where);
  }
  if (cfg.policy.kind == PolicyKind::KLookback && cfg.policy.k < 1)
    throw ConfigError("lookback window must be >= 1", "/dashboard/k");
}

}  // namespace

Trace run_dashboard_mechanism(const ExperimentConfig& cfg) {
  validate_run(cfg);
  const std::size_t n = cfg.agents.size();
  const Rng root(cfg.seed);
  const int dump_limit = cfg.output.dump_dashboards >= 0 ? cfg.output.dump_dashboards
                         : (cfg.stages <= 100 ? cfg.stages : 0);

  Trace trace;
  trace.config = cfg;
  trace.stages.reserve(static_cast<std::size_t>(cfg.stages));
  trace.ledgers.assign(n, BalanceLedger{0.0, cfg.rebalance.rate, 0.0, {}});

  DashboardPolicy policy;
  policy.kind = cfg.policy.kind;
  policy.k = cfg.policy.k;
  policy.initial_rule = MonotoneRule::linear_ramp(cfg.vmax, cfg.grid, cfg.tol.min_slope);

  std::vector<RuleHistory> histories(n);
  std::vector<std::vector<std::pair<double, double>>> exploration(n);
  std::vector<std::optional<HedgeLearner>> learners(n);
  std::vector<std::size_t> learner_arm(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.agents[i].strategy.kind == AgentStrategy::Kind::Hedge)
      learners[i].emplace(cfg.agents[i].strategy.hedge_arms, cfg.vmax,
                          root.substream(kStreamLearner, i).seed());
  }

  const bool want_curves =
      !cfg.single_call.enabled &&
      (cfg.record_replay || cfg.record_best_response ||
       std::any_of(learners.begin(), learners.end(), [](const auto& l) { return bool(l); }));
  if (cfg.record_replay && !cfg.single_call.enabled) {
    ReplayAggregates agg;
    agg.grid.resize(cfg.bid_grid);
    for (std::size_t j = 0; j < cfg.bid_grid; ++j)
      agg.grid[j] = cfg.vmax * static_cast<double>(j) / static_cast<double>(cfg.bid_grid - 1);
    agg.sum_alloc.assign(n, std::vector<double>(cfg.bid_grid, 0.0));
    agg.sum_alloc_slope.assign(n, std::vector<double>(cfg.bid_grid, 0.0));
    agg.sum_pay.assign(n, std::vector<double>(cfg.bid_grid, 0.0));
    agg.sum_truthful_pay.assign(n, std::vector<double>(cfg.bid_grid, 0.0));
    agg.sum_real_alloc.assign(n, 0.0);
    agg.sum_real_pay.assign(n, 0.0);
    agg.sum_real_bid.assign(n, 0.0);
    agg.min_slope_term_allpay.assign(n, std::numeric_limits<double>::infinity());
    agg.min_slope_term_wpb.assign(n, std::numeric_limits<double>::infinity());
    trace.replay = std::move(agg);
  }

  std::vector<double> grid;  // bid grid shared by learners / replay / br search
  if (want_curves) {
    grid.resize(cfg.bid_grid);
    for (std::size_t j = 0; j < cfg.bid_grid; ++j)
      grid[j] = cfg.vmax * static_cast<double>(j) / static_cast<double>(cfg.bid_grid - 1);
  }

  std::vector<double> prev_inferred(n, cfg.vmax);

  for (int s = 1; s <= cfg.stages; ++s) {
    const StageAlgorithm alg(cfg.algorithm, cfg.vmax, s, root);
    Rng stage_stream = root.substream(kStreamRealize, static_cast<std::uint64_t>(s));

    // 1. publish dashboards
    std::vector<Dashboard> dash;
    dash.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      bool fallback = false;
      MonotoneRule base = cfg.single_call.enabled
                              ? policy.initial_rule
                              : policy_rule(policy, histories[i], &fallback);
      if (cfg.single_call.enabled && !exploration[i].empty()) {
        const double avg = empirical_average_alloc(exploration[i]);
        base = instrumented_rule(
            isotonic_rule(exploration[i], cfg.vmax, cfg.grid, cfg.tol.min_slope),
            cfg.single_call.rho, avg);
      } else if (cfg.single_call.enabled) {
        fallback = true;
      }

      const double balance = trace.ledgers[i].balance;
      const bool dead_band = cfg.rebalance.dead_band > 0.0 &&
                             std::abs(balance) <= cfg.rebalance.dead_band * prev_inferred[i];
      Dashboard d = [&]() {
        if (cfg.rebalance.mode == RebalanceConfig::Mode::Off || dead_band || balance == 0.0)
          return Dashboard::make(base, cfg.format, 0.0, s, cfg.tol);
        if (cfg.format == PaymentFormat::AllPay)
          return reference_rebalancing(base, cfg.format, balance, cfg.rebalance.rate, s,
                                       cfg.tol);
        MonotoneRule clamped = base.clamped_support(cfg.rebalance.rate);
        if (cfg.rebalance.mode == RebalanceConfig::Mode::IR)
          return ir_rebalancing(clamped, balance, cfg.rebalance.rate, s, cfg.tol).first;
        // single-call reference: positive transfers keep only the increasing
        // branch, and are capped below the rule's allocation mass so that
        // branch exists (extreme balances resolve over several stages)
        double transfer = balance * cfg.rebalance.rate;
        if (transfer > 0.0) {
          transfer = std::min(transfer, 0.95 * clamped.cumulative(clamped.vmax()));
          return Dashboard::make_branch_restricted(clamped, transfer, s, cfg.tol);
        }
        return Dashboard::make(clamped, cfg.format, transfer, s, cfg.tol);
      }();
      d.set_fallback(fallback || d.fallback());
      if (!d.invertible())
        throw std::runtime_error("published dashboard is not invertible at stage " +
                                 std::to_string(s));
      dash.push_back(std::move(d));
    }

    // 2. bids
    std::vector<double> values(n), bids(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng vstream = root.substream(kStreamValues, i);
      values[i] = cfg.agents[i].values.at(s, vstream);
      switch (cfg.agents[i].strategy.kind) {
        case AgentStrategy::Kind::FollowDashboard:
          bids[i] = dash[i].bid(values[i]);
          break;
        case AgentStrategy::Kind::ConstantBid:
          bids[i] = cfg.agents[i].strategy.constant_bid;
          break;
        case AgentStrategy::Kind::Hedge:
          learner_arm[i] = learners[i]->act_index();
          bids[i] = learners[i]->grid()[learner_arm[i]];
          break;
      }
    }

    // 3. infer values
    std::vector<double> inferred(n);
    std::vector<bool> extrapolated(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const InferResult r = dash[i].infer(bids[i]);
      inferred[i] = std::clamp(r.value, 0.0, cfg.vmax);
      extrapolated[i] = r.extrapolated;
    }

    StageRecord record;
    record.stage = s;
    record.agents.resize(n);

    // 4. allocate (+ 5..7 payments, ledgers, state updates)
    if (cfg.single_call.enabled) {
      const Blackbox box = [&](const std::vector<double>& vals, Rng& r) {
        return alg.realize(alg.marginals(vals), r);
      };
      Rng draw_stream = root.substream(kStreamInstrument, static_cast<std::uint64_t>(s));
      const InstrumentConfig icfg{cfg.single_call.rho, cfg.vmax, cfg.seed};
      const std::vector<InstrumentedOutcome> outs =
          instrument_draw(box, inferred, icfg, draw_stream);

      std::vector<double> sampled(n);
      for (std::size_t i = 0; i < n; ++i) sampled[i] = outs[i].sampled_value;
      for (std::size_t i = 0; i < n; ++i) {
        auto& rec = record.agents[i];
        rec.value = values[i];
        rec.bid = bids[i];
        rec.inferred = inferred[i];
        rec.extrapolated = extrapolated[i];
        rec.alloc_prob = alg.marginal(i, sampled, sampled[i]);
        rec.realized = outs[i].realized_alloc;
        const int pays = cfg.format == PaymentFormat::AllPay ? 1 : outs[i].realized_alloc;
        rec.payment = pays * bids[i];
        rec.expected_payment = cfg.format == PaymentFormat::AllPay
                                   ? bids[i]
                                   : bids[i] * rec.alloc_prob;
        rec.truthful_payment = outs[i].implicit_payment;
        const double s_plain = dash[i].strategy_plain(inferred[i]);
        update_balance_singlecall(trace.ledgers[i], s, outs[i].implicit_payment, pays,
                                  bids[i], s_plain);
        const LedgerEntry& e = trace.ledgers[i].entries.back();
        rec.residual = e.residual;
        rec.resolved = e.resolved;
        rec.balance = trace.ledgers[i].balance;
        if (outs[i].explored)
          exploration[i].emplace_back(outs[i].sampled_value,
                                      static_cast<double>(outs[i].realized_alloc));
      }
    } else {
      const std::vector<double> probs = alg.marginals(inferred);
      const std::vector<int> realized = alg.realize(probs, stage_stream);
      std::vector<MonotoneRule> projections;
      projections.reserve(n);
      for (std::size_t i = 0; i < n; ++i)
        projections.push_back(alg.project(i, inferred, cfg.grid, cfg.tol.min_slope));

      for (std::size_t i = 0; i < n; ++i) {
        auto& rec = record.agents[i];
        rec.value = values[i];
        rec.bid = bids[i];
        rec.inferred = inferred[i];
        rec.extrapolated = extrapolated[i];
        rec.alloc_prob = probs[i];
        rec.realized = realized[i];
        rec.payment = (cfg.format == PaymentFormat::AllPay ? 1 : realized[i]) * bids[i];
        rec.expected_payment =
            cfg.format == PaymentFormat::AllPay ? bids[i] : bids[i] * probs[i];
        rec.truthful_payment = projections[i].truthful_payment(inferred[i], 0.0);

        const double s_plain = dash[i].strategy_plain(inferred[i]);
        if (cfg.format == PaymentFormat::AllPay) {
          const double s_real =
              bid_strategy(projections[i], inferred[i], PaymentFormat::AllPay, 0.0);
          update_balance_allpay(trace.ledgers[i], s, s_real, bids[i], s_plain);
        } else {
          double s_real = 0.0;
          try {
            s_real = bid_strategy(projections[i], inferred[i], PaymentFormat::WinnerPaysBid,
                                  0.0, cfg.tol.no_win_eps);
          } catch (const NoWinRegionError&) {
            s_real = 0.0;
          }
          update_balance_wpb(trace.ledgers[i], s, s_real, bids[i], realized[i], s_plain);
        }
        const LedgerEntry& e = trace.ledgers[i].entries.back();
        rec.residual = e.residual;
        rec.resolved = e.resolved;
        rec.balance = trace.ledgers[i].balance;
      }

      // per-stage curves for learners, replay aggregates, best-response search
      if (want_curves) {
        for (std::size_t i = 0; i < n; ++i) {
          const StageCurves curves = stage_curves(dash[i], projections[i], grid, cfg.format);
          if (learners[i]) {
            std::vector<double> utils(grid.size());
            for (std::size_t j = 0; j < grid.size(); ++j)
              utils[j] = stage_utility(values[i], curves.alloc[j], curves.pay[j]);
            learners[i]->update(utils);
          }
          if (trace.replay) {
            auto& agg = *trace.replay;
            for (std::size_t j = 0; j < grid.size(); ++j) {
              agg.sum_alloc[i][j] += curves.alloc[j];
              agg.sum_alloc_slope[i][j] += curves.slope[j];
              agg.sum_pay[i][j] += curves.pay[j];
              agg.sum_truthful_pay[i][j] += curves.truthful[j];
            }
            agg.sum_real_alloc[i] += probs[i];
            agg.sum_real_pay[i] += cfg.format == PaymentFormat::WinnerPaysBid
                                       ? bids[i] * probs[i]
                                       : bids[i];
            agg.sum_real_bid[i] += bids[i];
            const auto& kv = projections[i].knot_values();
            for (std::size_t seg = 0; seg + 1 < kv.size(); ++seg) {
              const double v = kv[seg + 1];  // slopes bind at segment right ends
              const double m = projections[i].segment_slope(seg);
              const double x = projections[i].knot_probs()[seg + 1];
              agg.min_slope_term_allpay[i] =
                  std::min(agg.min_slope_term_allpay[i], m * v * v * v);
              if (x > 0.0)
                agg.min_slope_term_wpb[i] =
                    std::min(agg.min_slope_term_wpb[i], m / x * v * v * v);
            }
          }
          if (cfg.record_best_response) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < grid.size(); ++j)
              best = std::max(best, stage_utility(values[i], curves.alloc[j], curves.pay[j]));
            const double expected_pay = cfg.format == PaymentFormat::WinnerPaysBid
                                            ? bids[i] * probs[i]
                                            : bids[i];
            const double realized_util = values[i] * probs[i] - expected_pay;
            record.agents[i].br_gap = best - realized_util;
          }
        }
        if (trace.replay) ++trace.replay->stages;
      }

      for (std::size_t i = 0; i < n; ++i)
        histories[i].append(std::move(projections[i]), realized[i] != 0);
    }

    prev_inferred = inferred;
    if (s <= dump_limit) trace.published.push_back(dash);
    trace.stages.push_back(std::move(record));
  }
  return trace;
}

Trace run_truthful_mechanism(const ExperimentConfig& cfg,
                             const std::vector<std::vector<double>>& reported) {
  validate_run(cfg);
  if (reported.size() != static_cast<std::size_t>(cfg.stages))
    throw std::invalid_argument("need one reported profile per stage");
  const std::size_t n = cfg.agents.size();
  const Rng root(cfg.seed);

  Trace trace;
  trace.config = cfg;
  trace.ledgers.assign(n, BalanceLedger{0.0, cfg.rebalance.rate, 0.0, {}});

  for (int s = 1; s <= cfg.stages; ++s) {
    const StageAlgorithm alg(cfg.algorithm, cfg.vmax, s, root);
    Rng stage_stream = root.substream(kStreamRealize, static_cast<std::uint64_t>(s));
    const std::vector<double>& vals = reported[static_cast<std::size_t>(s - 1)];
    if (vals.size() != n) throw std::invalid_argument("profile size mismatch");
    const std::vector<double> probs = alg.marginals(vals);
    const std::vector<int> realized = alg.realize(probs, stage_stream);

    StageRecord record;
    record.stage = s;
    record.agents.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const MonotoneRule proj = alg.project(i, vals, cfg.grid, cfg.tol.min_slope);
      auto& rec = record.agents[i];
      rec.value = vals[i];
      rec.inferred = vals[i];
      rec.alloc_prob = probs[i];
      rec.realized = realized[i];
      rec.truthful_payment = proj.truthful_payment(vals[i], 0.0);
      rec.payment = rec.truthful_payment;  // charged directly
      rec.expected_payment = rec.truthful_payment;
      rec.bid = vals[i];
      rec.balance = 0.0;
    }
    trace.stages.push_back(std::move(record));
  }
  return trace;
}

}  // namespace dashmech
