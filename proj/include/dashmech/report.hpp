#pragma once

#include <string>
#include <vector>

#include "dashmech/engine.hpp"

namespace dashmech {

// One bound check that applies to a finished run.
struct BoundCheck {
  std::string name;
  std::string description;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  int stage = 0;         // stage where the worst case occurred
  std::size_t agent = 0;
};

// Derives every check applicable to the run's configuration: balance bounds
// for the rebalancing mode, inference fixed-point and best-response gaps for
// static runs, natural-rebalancing bounds, the inconsistency/balance link,
// and the follow-the-dashboard regret bound.
std::vector<BoundCheck> run_checks(const Trace& trace);

std::string render_report(const Trace& trace, const std::vector<BoundCheck>& checks);

bool all_pass(const std::vector<BoundCheck>& checks);

}  // namespace dashmech
