// Experiment runner: `dashmech run <config.json>` executes one seeded run and
// writes trace/metrics/report files; `dashmech sweep <config.json>` repeats it
// over a seed range and aggregates sweep.csv.
//
// Exit codes: 0 ok, 1 config error, 2 bound violation, 3 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dashmech/analysis.hpp"
#include "dashmech/config.hpp"
#include "dashmech/engine.hpp"
#include "dashmech/report.hpp"
#include "dashmech/sweep.hpp"
#include "dashmech/trace_io.hpp"

namespace fs = std::filesystem;
using namespace dashmech;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  int grid = 0;
  bool quiet = false;
  std::string seeds;  // "A..B"
};

ExperimentConfig load_config(const CliOptions& opt) {
  ExperimentConfig cfg = parse_config_file(opt.config_path);
  // Config file wins over flags, except seeds and the output directory.
  if (!opt.out_dir.empty()) cfg.output.dir = opt.out_dir;
  if (opt.grid > 2 && !cfg.grid_explicit) cfg.grid = static_cast<std::size_t>(opt.grid);
  if (opt.quiet && !cfg.quiet_explicit) cfg.output.quiet = true;
  if (!opt.seeds.empty()) {
    const auto dots = opt.seeds.find("..");
    if (dots == std::string::npos) {
      cfg.seed = std::stoull(opt.seeds);
      cfg.seed_end = 0;
    } else {
      cfg.seed = std::stoull(opt.seeds.substr(0, dots));
      cfg.seed_end = std::stoull(opt.seeds.substr(dots + 2));
      if (cfg.seed_end < cfg.seed)
        throw ConfigError("seed range end must be >= start", "--seeds");
    }
  }
  return cfg;
}

int do_run(const CliOptions& opt) {
  const ExperimentConfig cfg = load_config(opt);
  const Trace trace = run_dashboard_mechanism(cfg);
  write_run_outputs(trace, cfg.output.dir);
  const std::vector<BoundCheck> checks = run_checks(trace);
  const std::string report = render_report(trace, checks);
  {
    std::ofstream out(fs::path(cfg.output.dir) / "report.md");
    out << report;
  }
  if (!cfg.output.quiet) std::cout << report;
  if (!all_pass(checks)) {
    for (const auto& c : checks)
      if (!c.pass)
        std::cerr << "bound violation: " << c.name << " measured "
                  << format_double(c.measured) << " > bound " << format_double(c.bound)
                  << " at stage " << c.stage << " (seed " << cfg.seed << ")\n";
    return 2;
  }
  return 0;
}

int do_sweep(const CliOptions& opt) {
  ExperimentConfig cfg = load_config(opt);
  const std::uint64_t from = cfg.seed;
  const std::uint64_t to = cfg.seed_end > 0 ? cfg.seed_end : cfg.seed;
  const SweepResult result = run_sweep(cfg, from, to, cfg.output.dir);
  fs::create_directories(cfg.output.dir);
  {
    std::ofstream out(fs::path(cfg.output.dir) / "sweep.csv");
    write_sweep_csv(result, out);
  }
  if (!cfg.output.quiet) {
    std::cout << "sweep: " << result.rows.size() << " runs, " << result.violations
              << " with bound violations\n";
  }
  return result.violations == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential marketplace dashboard simulator"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", opt.config_path, "JSON experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out_dir, "output directory (overrides config)");
    cmd->add_option("--grid", opt.grid, "value grid knots (overrides config)");
    cmd->add_option("--seeds", opt.seeds, "seed or range A..B (overrides config)");
    cmd->add_flag("--quiet", opt.quiet, "suppress the report on stdout");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "execute one seeded run");
  add_common(run_cmd);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "execute a seed sweep");
  add_common(sweep_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(opt);
    if (sweep_cmd->parsed()) return do_sweep(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
