#include "dashmech/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

#include "dashmech/trace_io.hpp"

namespace dashmech {

SweepResult run_sweep(ExperimentConfig cfg, std::uint64_t seed_from, std::uint64_t seed_to,
                      const std::string& out_dir, unsigned threads) {
  if (seed_to < seed_from) throw std::invalid_argument("empty seed range");
  const std::size_t count = static_cast<std::size_t>(seed_to - seed_from + 1);
  SweepResult result;
  result.rows.resize(count);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= count) return;
      ExperimentConfig run_cfg = cfg;
      run_cfg.seed = seed_from + idx;
      run_cfg.seed_end = 0;
      const Trace trace = run_dashboard_mechanism(run_cfg);
      SweepRow row;
      row.seed = run_cfg.seed;
      const std::size_t n = run_cfg.agents.size();
      row.final_balance.resize(n);
      row.max_abs_balance.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) row.final_balance[i] = trace.ledgers[i].balance;
      for (const auto& s : trace.stages)
        for (std::size_t i = 0; i < n; ++i)
          row.max_abs_balance[i] =
              std::max(row.max_abs_balance[i], std::abs(s.agents[i].balance));
      row.checks_pass = all_pass(run_checks(trace));
      if (!out_dir.empty()) {
        const auto dir = std::filesystem::path(out_dir) /
                         ("seed-" + std::to_string(run_cfg.seed));
        write_run_outputs(trace, dir.string());
      }
      result.rows[idx] = std::move(row);
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& row : result.rows)
    if (!row.checks_pass) ++result.violations;
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "seed,agent,final_balance,max_abs_balance,checks_pass\n";
  for (const auto& row : result.rows) {
    for (std::size_t i = 0; i < row.final_balance.size(); ++i) {
      out << row.seed << ',' << i << ',' << format_double(row.final_balance[i]) << ','
          << format_double(row.max_abs_balance[i]) << ',' << (row.checks_pass ? 1 : 0)
          << '\n';
    }
  }
}

}  // namespace dashmech
