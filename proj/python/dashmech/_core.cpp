// Python bindings for the core operations: monotone allocation rules, bid
// strategies and inversion, dashboards, rebalancing, isotonic fits,
// instrumented draws, and the experiment runner.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dashmech/analysis.hpp"
#include "dashmech/bid_rule.hpp"
#include "dashmech/config.hpp"
#include "dashmech/engine.hpp"
#include "dashmech/rebalancing.hpp"
#include "dashmech/report.hpp"
#include "dashmech/single_call.hpp"
#include "dashmech/sweep.hpp"
#include "dashmech/trace_io.hpp"

namespace py = pybind11;
using namespace dashmech;

namespace {

py::dict trace_summary(const Trace& trace) {
  py::dict out;
  const std::size_t n = trace.config.agents.size();
  py::list final_balance, max_abs_balance, inferred_last, inconsistency;
  for (std::size_t i = 0; i < n; ++i) {
    double max_abs = 0.0;
    for (const auto& s : trace.stages)
      max_abs = std::max(max_abs, std::abs(s.agents[i].balance));
    final_balance.append(trace.ledgers[i].balance);
    max_abs_balance.append(max_abs);
    inferred_last.append(trace.stages.back().agents[i].inferred);
    inconsistency.append(incentive_inconsistency(trace, i).payment_gap);
  }
  out["stages"] = trace.stages.size();
  out["final_balance"] = final_balance;
  out["max_abs_balance"] = max_abs_balance;
  out["last_inferred"] = inferred_last;
  out["inconsistency"] = inconsistency;
  py::list checks;
  for (const auto& c : run_checks(trace)) {
    py::dict d;
    d["name"] = c.name;
    d["measured"] = c.measured;
    d["bound"] = c.bound;
    d["pass"] = c.pass;
    checks.append(d);
  }
  out["checks"] = checks;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dashboard mechanisms for sequential marketplaces";

  py::enum_<PaymentFormat>(m, "PaymentFormat")
      .value("WINNER_PAYS_BID", PaymentFormat::WinnerPaysBid)
      .value("ALL_PAY", PaymentFormat::AllPay);

  py::class_<InferResult>(m, "InferResult")
      .def_readonly("value", &InferResult::value)
      .def_readonly("extrapolated", &InferResult::extrapolated)
      .def("__repr__", [](const InferResult& r) {
        std::ostringstream s;
        s << "InferResult(value=" << r.value << ", extrapolated=" << r.extrapolated << ")";
        return s.str();
      });

  py::class_<MonotoneRule>(m, "MonotoneRule")
      .def_static("from_knots", &MonotoneRule::from_knots, py::arg("values"),
                  py::arg("probs"), py::arg("vmax"), py::arg("relaxed") = false,
                  py::arg("min_slope") = kMinSlope)
      .def_static(
          "sample",
          [](const std::function<double(double)>& f, double vmax, std::size_t knots,
             bool relaxed) { return MonotoneRule::sample(f, vmax, knots, relaxed); },
          py::arg("f"), py::arg("vmax"), py::arg("knots") = kGridKnots,
          py::arg("relaxed") = false)
      .def_static("linear_ramp", &MonotoneRule::linear_ramp, py::arg("vmax"),
                  py::arg("knots") = kGridKnots, py::arg("min_slope") = kMinSlope)
      .def("__call__", &MonotoneRule::eval)
      .def("eval", &MonotoneRule::eval)
      .def("cumulative", &MonotoneRule::cumulative)
      .def("truthful_payment", &MonotoneRule::truthful_payment, py::arg("v"),
           py::arg("transfer") = 0.0)
      .def("scaled", &MonotoneRule::scaled)
      .def("clamped_support", &MonotoneRule::clamped_support)
      .def_property_readonly("vmax", &MonotoneRule::vmax)
      .def_property_readonly("strict", &MonotoneRule::strict)
      .def_property_readonly("knot_values", &MonotoneRule::knot_values)
      .def_property_readonly("knot_probs", &MonotoneRule::knot_probs)
      .def("to_json", [](const MonotoneRule& r) { return rule_to_json(r); })
      .def_static("from_json", [](const std::string& text) { return rule_from_json(text); });

  m.def("bid_strategy", &bid_strategy, py::arg("rule"), py::arg("v"), py::arg("format"),
        py::arg("transfer") = 0.0, py::arg("no_win_eps") = kNoWinEps);

  py::class_<BidRule>(m, "BidRule")
      .def_static(
          "derive",
          [](const MonotoneRule& rule, PaymentFormat fmt, double transfer) {
            return BidRule::derive(rule, fmt, transfer);
          },
          py::arg("rule"), py::arg("format"), py::arg("transfer") = 0.0)
      .def("strategy", &BidRule::strategy)
      .def("invert", &BidRule::invert)
      .def("infer_foc", &BidRule::infer_foc)
      .def("alloc_at_bid", &BidRule::alloc_at_bid)
      .def_property_readonly("min_bid", &BidRule::min_bid)
      .def_property_readonly("max_bid", &BidRule::max_bid);

  m.def(
      "foc_value",
      [](const std::function<double(double)>& balloc, double b, PaymentFormat fmt,
         double step) { return foc_value(balloc, b, fmt, step); },
      py::arg("bid_alloc"), py::arg("bid"), py::arg("format"), py::arg("step") = 1e-4);

  m.def(
      "linear_tail_slope",
      [](double V, double X, double P, double delta, double beta) {
        return linear_tail_slope(LinearTail{V, X, P, delta}, beta);
      },
      py::arg("V"), py::arg("X"), py::arg("P"), py::arg("delta"), py::arg("beta") = 0.0);

  py::class_<Dashboard>(m, "Dashboard")
      .def_static(
          "make",
          [](const MonotoneRule& rule, PaymentFormat fmt, double transfer) {
            return Dashboard::make(rule, fmt, transfer);
          },
          py::arg("rule"), py::arg("format"), py::arg("transfer") = 0.0)
      .def("bid", &Dashboard::bid)
      .def("infer", &Dashboard::infer)
      .def("alloc_at_bid", &Dashboard::alloc_at_bid)
      .def_property_readonly("invertible", &Dashboard::invertible)
      .def_property_readonly("transfer", &Dashboard::transfer)
      .def_property_readonly("format", &Dashboard::format)
      .def_property_readonly("ealloc", &Dashboard::ealloc)
      .def("to_json", [](const Dashboard& d) { return dashboard_to_json(d); });

  m.def(
      "reference_rebalancing",
      [](const MonotoneRule& ealloc, PaymentFormat fmt, double balance, double rate) {
        return reference_rebalancing(ealloc, fmt, balance, rate);
      },
      py::arg("ealloc"), py::arg("format"), py::arg("balance"), py::arg("rate"));
  m.def(
      "linear_bid_rule",
      [](double gamma, double meet_v, double meet_x, double vmax, std::size_t knots) {
        return linear_bid_rule(gamma, meet_v, meet_x, vmax, knots);
      },
      py::arg("gamma"), py::arg("meet_v"), py::arg("meet_x"), py::arg("vmax"),
      py::arg("knots") = kGridKnots);
  m.def(
      "ir_rebalancing",
      [](const MonotoneRule& ealloc, double balance, double rate) {
        auto [d, splice] = ir_rebalancing(ealloc, balance, rate);
        return py::make_tuple(d, splice.v_dagger, splice.saturated);
      },
      py::arg("ealloc"), py::arg("balance"), py::arg("rate"),
      "Returns (dashboard, v_dagger, saturated).");

  m.def("isotonic_levels", &isotonic_levels, py::arg("outcomes"));
  m.def(
      "isotonic_rule",
      [](std::vector<std::pair<double, double>> points, double vmax, std::size_t knots) {
        return isotonic_rule(std::move(points), vmax, knots);
      },
      py::arg("points"), py::arg("vmax"), py::arg("knots") = kGridKnots);
  m.def("instrumented_rule", &instrumented_rule, py::arg("valloc"), py::arg("rho"),
        py::arg("avg_alloc"));

  m.def(
      "instrument_draw",
      [](const std::function<std::vector<int>(std::vector<double>, std::uint64_t)>& box,
         const std::vector<double>& values, double rho, double vmax, std::uint64_t seed) {
        const Blackbox adapter = [&box](const std::vector<double>& vals, Rng& rng) {
          return box(vals, rng.next());
        };
        Rng stream(seed);
        const auto outs = instrument_draw(adapter, values, {rho, vmax, seed}, stream);
        py::list result;
        for (const auto& o : outs) {
          py::dict d;
          d["sampled_value"] = o.sampled_value;
          d["explored"] = o.explored;
          d["realized_alloc"] = o.realized_alloc;
          d["own_value_alloc"] = o.own_value_alloc;
          d["below_indicator"] = o.below_indicator;
          d["implicit_payment"] = o.implicit_payment;
          result.append(d);
        }
        return result;
      },
      py::arg("blackbox"), py::arg("values"), py::arg("rho"), py::arg("vmax"),
      py::arg("seed"),
      "One instrumented draw; the blackbox receives (values, seed) and returns "
      "one 0/1 allocation per agent.");

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = parse_config(config_json);
        return trace_summary(run_dashboard_mechanism(cfg));
      },
      py::arg("config_json"),
      "Runs one seeded experiment from a JSON config string; returns a summary dict.");

  m.def(
      "run_to_dir",
      [](const std::string& config_json, const std::string& out_dir) {
        ExperimentConfig cfg = parse_config(config_json);
        if (!out_dir.empty()) cfg.output.dir = out_dir;
        const Trace trace = run_dashboard_mechanism(cfg);
        write_run_outputs(trace, cfg.output.dir);
        const auto checks = run_checks(trace);
        return render_report(trace, checks);
      },
      py::arg("config_json"), py::arg("out_dir") = std::string(),
      "Runs one experiment and writes trace/metrics/report files; returns the report.");

  m.def(
      "run_sweep",
      [](const std::string& config_json, std::uint64_t seed_from, std::uint64_t seed_to) {
        const ExperimentConfig cfg = parse_config(config_json);
        const SweepResult result = run_sweep(cfg, seed_from, seed_to);
        py::list rows;
        for (const auto& row : result.rows) {
          py::dict d;
          d["seed"] = row.seed;
          d["final_balance"] = row.final_balance;
          d["max_abs_balance"] = row.max_abs_balance;
          d["checks_pass"] = row.checks_pass;
          rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["violations"] = result.violations;
        return out;
      },
      py::arg("config_json"), py::arg("seed_from"), py::arg("seed_to"));
}
