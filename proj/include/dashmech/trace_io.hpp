#pragma once

#include <iosfwd>
#include <string>

#include "dashmech/engine.hpp"

namespace dashmech {

// Shortest round-trip decimal rendering of a double (deterministic output).
std::string format_double(double x);

// One row per agent-stage with the fixed column set:
// stage,agent,value,bid,inferred_value,alloc_prob,realized,payment,
// truthful_payment,residual,resolved,balance
void write_trace_csv(const Trace& trace, std::ostream& out);

void write_trace_json(const Trace& trace, std::ostream& out);

// Per-agent summary metrics (one row per agent).
void write_metrics_csv(const Trace& trace, std::ostream& out);

// Ledger rows: stage, residual, resolved, balance.
void write_ledger_csv(const BalanceLedger& ledger, std::ostream& out);

std::string rule_to_json(const MonotoneRule& rule);
MonotoneRule rule_from_json(const std::string& text, double min_slope = kMinSlope,
                            bool relaxed = true);

std::string dashboard_to_json(const Dashboard& d);

// Writes trace.csv, trace.json, metrics.csv, and dashboards/stage-*.json
// under `dir`; files are written to a temp name and renamed into place.
void write_run_outputs(const Trace& trace, const std::string& dir);

}  // namespace dashmech
