#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dashmech/engine.hpp"
#include "dashmech/report.hpp"

namespace dashmech {

struct SweepRow {
  std::uint64_t seed = 0;
  std::vector<double> final_balance;    // per agent
  std::vector<double> max_abs_balance;  // per agent
  bool checks_pass = true;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t violations = 0;  // runs with a failed bound check
};

// Runs the config once per seed in [seed_from, seed_to] on a worker pool.
// When `out_dir` is non-empty, each run writes its outputs under
// out_dir/seed-<n>/ and the caller is expected to write sweep.csv from rows.
SweepResult run_sweep(ExperimentConfig cfg, std::uint64_t seed_from, std::uint64_t seed_to,
                      const std::string& out_dir = "", unsigned threads = 0);

void write_sweep_csv(const SweepResult& result, std::ostream& out);

}  // namespace dashmech
