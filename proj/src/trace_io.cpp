#include "dashmech/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace dashmech {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << "stage,agent,value,bid,inferred_value,alloc_prob,realized,payment,"
         "truthful_payment,residual,resolved,balance\n";
  for (const auto& s : trace.stages) {
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      const auto& a = s.agents[i];
      out << s.stage << ',' << i << ',' << format_double(a.value) << ','
          << format_double(a.bid) << ',' << format_double(a.inferred) << ','
          << format_double(a.alloc_prob) << ',' << a.realized << ','
          << format_double(a.payment) << ',' << format_double(a.truthful_payment) << ','
          << format_double(a.residual) << ',' << format_double(a.resolved) << ','
          << format_double(a.balance) << '\n';
    }
  }
}

void write_ledger_csv(const BalanceLedger& ledger, std::ostream& out) {
  out << "stage,residual,resolved,balance\n";
  double balance = ledger.initial_balance;
  for (const auto& e : ledger.entries) {
    balance += e.residual - e.resolved;
    out << e.stage << ',' << format_double(e.residual) << ',' << format_double(e.resolved)
        << ',' << format_double(balance) << '\n';
  }
}

namespace {

json rule_json(const MonotoneRule& rule) {
  json knots = json::array();
  for (std::size_t i = 0; i < rule.knot_count(); ++i)
    knots.push_back({rule.knot_values()[i], rule.knot_probs()[i]});
  return knots;
}

json agent_record_json(const StageAgentRecord& a) {
  return json{{"value", a.value},
              {"bid", a.bid},
              {"inferred_value", a.inferred},
              {"alloc_prob", a.alloc_prob},
              {"realized", a.realized},
              {"payment", a.payment},
              {"truthful_payment", a.truthful_payment},
              {"residual", a.residual},
              {"resolved", a.resolved},
              {"balance", a.balance},
              {"extrapolated", a.extrapolated}};
}

}  // namespace

std::string rule_to_json(const MonotoneRule& rule) {
  json j = {{"vmax", rule.vmax()}, {"knots", rule_json(rule)}};
  return j.dump();
}

MonotoneRule rule_from_json(const std::string& text, double min_slope, bool relaxed) {
  const json j = json::parse(text);
  const json& knots = j.is_array() ? j : j.at("knots");
  double vmax = j.is_object() && j.contains("vmax") ? j.at("vmax").get<double>() : 0.0;
  std::vector<double> values, probs;
  for (const auto& k : knots) {
    values.push_back(k.at(0).get<double>());
    probs.push_back(k.at(1).get<double>());
  }
  if (vmax == 0.0 && !values.empty()) vmax = values.back();
  return MonotoneRule::from_knots(std::move(values), std::move(probs), vmax, relaxed,
                                  min_slope);
}

std::string dashboard_to_json(const Dashboard& d) {
  json j = {{"format", to_string(d.format())},
            {"transfer", d.transfer()},
            {"stage", d.stage_index()},
            {"invertible", d.invertible()},
            {"fallback", d.fallback()},
            {"vmax", d.ealloc().vmax()},
            {"knots", rule_json(d.ealloc())}};
  if (d.splice()) {
    j["splice"] = {{"v_dagger", d.splice()->v_dagger},
                   {"low_slope", d.splice()->low_slope},
                   {"saturated", d.splice()->saturated}};
  }
  return j.dump();
}

void write_trace_json(const Trace& trace, std::ostream& out) {
  json j;
  j["config"] = json::parse(config_to_json(trace.config));
  j["stages"] = json::array();
  for (const auto& s : trace.stages) {
    json agents = json::array();
    for (const auto& a : s.agents) agents.push_back(agent_record_json(a));
    j["stages"].push_back({{"stage", s.stage}, {"agents", agents}});
  }
  j["final_balances"] = json::array();
  for (const auto& l : trace.ledgers) j["final_balances"].push_back(l.balance);
  out << j.dump(2) << '\n';
}

void write_metrics_csv(const Trace& trace, std::ostream& out) {
  out << "agent,final_balance,max_abs_balance,mean_payment,mean_truthful_payment,"
         "inconsistency\n";
  const std::size_t n = trace.config.agents.size();
  const double t = static_cast<double>(trace.stages.size());
  for (std::size_t i = 0; i < n; ++i) {
    double max_abs = 0.0, sum_pay = 0.0, sum_truth = 0.0, sum_exp_pay = 0.0;
    for (const auto& s : trace.stages) {
      const auto& a = s.agents[i];
      max_abs = std::max(max_abs, std::abs(a.balance));
      sum_pay += a.payment;
      sum_truth += a.truthful_payment;
      sum_exp_pay += trace.config.format == PaymentFormat::WinnerPaysBid
                         ? a.bid * a.alloc_prob
                         : a.bid;
    }
    out << i << ',' << format_double(trace.ledgers[i].balance) << ','
        << format_double(max_abs) << ',' << format_double(sum_pay / t) << ','
        << format_double(sum_truth / t) << ','
        << format_double(std::abs(sum_truth - sum_exp_pay) / t) << '\n';
  }
}

void write_run_outputs(const Trace& trace, const std::string& dir) {
  fs::create_directories(dir);
  auto write_atomic = [&](const std::string& name, auto&& writer) {
    const fs::path tmp = fs::path(dir) / (name + ".tmp");
    {
      std::ofstream out(tmp);
      writer(out);
    }
    fs::rename(tmp, fs::path(dir) / name);
  };
  write_atomic("trace.csv", [&](std::ostream& o) { write_trace_csv(trace, o); });
  write_atomic("trace.json", [&](std::ostream& o) { write_trace_json(trace, o); });
  write_atomic("metrics.csv", [&](std::ostream& o) { write_metrics_csv(trace, o); });
  for (std::size_t i = 0; i < trace.ledgers.size(); ++i) {
    write_atomic("ledger-" + std::to_string(i) + ".csv",
                 [&](std::ostream& o) { write_ledger_csv(trace.ledgers[i], o); });
  }
  if (!trace.published.empty()) {
    fs::create_directories(fs::path(dir) / "dashboards");
    for (std::size_t s = 0; s < trace.published.size(); ++s) {
      json j = json::array();
      for (const auto& d : trace.published[s]) j.push_back(json::parse(dashboard_to_json(d)));
      const fs::path tmp = fs::path(dir) / "dashboards" /
                           ("stage-" + std::to_string(s + 1) + ".json.tmp");
      {
        std::ofstream out(tmp);
        out << j.dump(2) << '\n';
      }
      fs::rename(tmp, fs::path(dir) / "dashboards" /
                          ("stage-" + std::to_string(s + 1) + ".json"));
    }
  }
}

}  // namespace dashmech
