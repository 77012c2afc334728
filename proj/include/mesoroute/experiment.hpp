#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mesoroute/metrics.hpp"
#include "mesoroute/sim.hpp"

namespace mesoroute {

struct RunSpec {
  std::string name;  // output subdirectory, e.g. "coordinated-seed1"
  RunConfig config;
};

struct RunOutcome {
  RunSpec spec;
  bool ok = false;
  std::string error;
  MetricsReport metrics;
};

// Runs one configuration to completion and writes config.json, trace.jsonl
// (optional), series.csv, stations.csv and classes.csv into out_dir.
RunOutcome run_single(const Scenario& sc, const RunSpec& spec,
                      const std::filesystem::path& out_dir, bool write_trace = true);

// Runs every spec under out_root/<spec.name> with up to `jobs` threads.
// Outcomes keep spec order; a failed run records its error and the rest
// still execute.
std::vector<RunOutcome> run_matrix(const Scenario& sc, const std::vector<RunSpec>& specs,
                                   const std::filesystem::path& out_root, int jobs,
                                   bool write_traces = true);

// Cross-run summaries under out_root: runs.csv (one row per run),
// stations_long.csv and series_long.csv (tidy layouts for plotting).
void write_comparison(const std::filesystem::path& out_root,
                      const std::vector<RunOutcome>& outcomes);

}  // namespace mesoroute
