#include "dashmech/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dashmech/analysis.hpp"
#include "dashmech/trace_io.hpp"

namespace dashmech {

namespace {

bool all_static_follow(const ExperimentConfig& cfg) {
  return std::all_of(cfg.agents.begin(), cfg.agents.end(), [](const AgentSpec& a) {
    return a.values.kind == ValuePath::Kind::Static &&
           a.strategy.kind == AgentStrategy::Kind::FollowDashboard;
  });
}

struct Worst {
  double measured = 0.0;
  int stage = 0;
  std::size_t agent = 0;
};

template <typename F>
Worst worst_over(const Trace& trace, int from_stage, F&& per_agent_stage) {
  Worst w;
  for (const auto& s : trace.stages) {
    if (s.stage < from_stage) continue;
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      const double m = per_agent_stage(s.agents[i], i);
      if (m > w.measured) {
        w.measured = m;
        w.stage = s.stage;
        w.agent = i;
      }
    }
  }
  return w;
}

}  // namespace

std::vector<BoundCheck> run_checks(const Trace& trace) {
  const ExperimentConfig& cfg = trace.config;
  std::vector<BoundCheck> checks;
  const double vmax = cfg.vmax;
  const double t = static_cast<double>(trace.stages.size());

  auto add = [&](const std::string& name, const std::string& desc, const Worst& w,
                 double bound) {
    BoundCheck c;
    c.name = name;
    c.description = desc;
    c.measured = w.measured;
    c.bound = bound;
    c.pass = w.measured <= bound;
    c.stage = w.stage;
    c.agent = w.agent;
    checks.push_back(std::move(c));
  };

  const bool static_follow = all_static_follow(cfg);
  const bool lookback_policy = cfg.policy.kind == PolicyKind::LastStage ||
                               cfg.policy.kind == PolicyKind::KLookback ||
                               cfg.policy.kind == PolicyKind::InferredValuesAll;

  // Inference fixed point: with static values and follow-the-dashboard
  // agents, inferred values match true values from stage 2 on.
  if (static_follow && lookback_policy && !cfg.single_call.enabled &&
      cfg.rebalance.mode == RebalanceConfig::Mode::Off) {
    add("nash_inference", "max |inferred - value| from stage 2",
        worst_over(trace, 2,
                   [](const StageAgentRecord& a, std::size_t) {
                     return std::abs(a.inferred - a.value);
                   }),
        1e-6 * vmax);
    if (cfg.record_best_response) {
      add("nash_best_response", "max bid-grid utility improvement from stage 2",
          worst_over(trace, 2,
                     [](const StageAgentRecord& a, std::size_t) { return a.br_gap; }),
          1e-3 * vmax);
    }
  }

  if (cfg.rebalance.mode != RebalanceConfig::Mode::Off && !cfg.single_call.enabled) {
    const Worst w = worst_over(trace, 1, [](const StageAgentRecord& a, std::size_t) {
      return std::abs(a.balance);
    });
    if (cfg.format == PaymentFormat::AllPay && cfg.rebalance.rate == 1.0) {
      add("allpay_balance", "max |B| with full-rate all-pay rebalancing", w, vmax);
    } else if (cfg.format == PaymentFormat::WinnerPaysBid) {
      add("wpb_balance", "max |B| with winner-pays-bid rebalancing", w,
          vmax / cfg.rebalance.rate);
    }
  }

  if (cfg.single_call.enabled && cfg.rebalance.mode != RebalanceConfig::Mode::Off) {
    const Worst w = worst_over(trace, 1, [](const StageAgentRecord& a, std::size_t) {
      return std::abs(a.balance);
    });
    add("single_call_balance", "max |B| for the instrumented rebalancing dashboard", w,
        vmax / (cfg.single_call.rho * cfg.rebalance.rate));
  }

  // Natural rebalancing with static values and no explicit rebalancing.
  if (static_follow && cfg.rebalance.mode == RebalanceConfig::Mode::Off &&
      !cfg.single_call.enabled) {
    const bool natural =
        (cfg.format == PaymentFormat::AllPay && cfg.policy.kind == PolicyKind::LastStage) ||
        (cfg.format == PaymentFormat::WinnerPaysBid &&
         cfg.policy.kind == PolicyKind::LastWinningStage);
    if (natural) {
      Worst w;
      double bound = 0.0;
      for (std::size_t i = 0; i < cfg.agents.size(); ++i)
        bound = std::max(bound, cfg.agents[i].values.value);
      for (const auto& s : trace.stages)
        for (std::size_t i = 0; i < s.agents.size(); ++i) {
          const double m = std::abs(s.agents[i].balance);
          if (m > w.measured) w = {m, s.stage, i};
        }
      add("natural_balance", "max |B| without explicit rebalancing", w, bound);
    }
  }

  // Inconsistency/balance link: epsilon * t equals the final expected balance.
  if (!cfg.single_call.enabled) {
    Worst w;
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
      const Inconsistency inc = incentive_inconsistency(trace, i);
      const BalanceSeries bal = outstanding_balance(trace, i);
      const double gap = std::abs(inc.payment_gap * t - std::abs(bal.expected.back()));
      if (gap > w.measured) w = {gap, cfg.stages, i};
    }
    add("inconsistency_balance_link", "|epsilon * t - |B(t)|| accumulation error", w,
        1e-9 * vmax * t);
  }

  // Follow-the-dashboard regret for the all-pay last-stage dashboard.
  if (static_follow && cfg.format == PaymentFormat::AllPay &&
      cfg.policy.kind == PolicyKind::LastStage &&
      cfg.rebalance.mode == RebalanceConfig::Mode::Off && trace.replay &&
      trace.replay->stages > 0) {
    Worst w;
    double bound = 0.0;
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
      const RegretResult r = hindsight_regret(trace, i);
      const double v = cfg.agents[i].values.value;
      const double grid_err = vmax / static_cast<double>(cfg.bid_grid - 1);
      if (r.regret > w.measured) w = {r.regret, cfg.stages, i};
      bound = std::max(bound, v / t + grid_err);
    }
    add("follow_dashboard_regret", "hindsight regret of following the dashboard", w, bound);
  }

  return checks;
}

std::string render_report(const Trace& trace, const std::vector<BoundCheck>& checks) {
  std::ostringstream out;
  const ExperimentConfig& cfg = trace.config;
  out << "# Run report\n\n";
  out << "- format: " << to_string(cfg.format) << "\n";
  out << "- stages: " << cfg.stages << ", seed: " << cfg.seed << ", vmax: "
      << format_double(cfg.vmax) << "\n";
  out << "- agents: " << cfg.agents.size() << "\n\n";
  out << "## Final balances\n\n";
  for (std::size_t i = 0; i < trace.ledgers.size(); ++i)
    out << "- agent " << i << ": " << format_double(trace.ledgers[i].balance) << "\n";
  out << "\n## Bound checks\n\n";
  if (checks.empty()) {
    out << "No bound checks apply to this configuration.\n";
    return out.str();
  }
  out << "| check | measured | bound | stage | agent | result |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& c : checks) {
    out << "| " << c.name << " | " << format_double(c.measured) << " | "
        << format_double(c.bound) << " | " << c.stage << " | " << c.agent << " | "
        << (c.pass ? "PASS" : "FAIL") << " |\n";
  }
  out << "\n";
  for (const auto& c : checks)
    if (!c.pass)
      out << "VIOLATION: " << c.name << " measured " << format_double(c.measured)
          << " exceeds bound " << format_double(c.bound) << " at stage " << c.stage
          << " (agent " << c.agent << ", seed " << cfg.seed << ")\n";
  return out.str();
}

bool all_pass(const std::vector<BoundCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const BoundCheck& c) { return c.pass; });
}

}  // namespace dashmech
