#pragma once

#include <memory>

#include "selfcal/config.hpp"

namespace selfcal {

struct RunResult {
  std::uint64_t seed = 0;
  double trans_error_cm = 0.0;    // |estimate - truth| translation, cm
  double rot_error_rad = 0.0;     // geodesic rotation angle
  int iterations = 0;
  double mean_contacts = 0.0;     // mean contact events per action
  double mean_events = 0.0;       // mean events per action, any flag
  bool terminated_by_criteria = false;
  bool failed = false;
  std::string failure;
  double mean_eval_millis = 0.0;
  std::string trace_path;
  std::string observations_path;
};

// Reusable read-only fixtures shared across seeds of the same configuration.
struct RunContext {
  std::shared_ptr<const SdfGrid> grid;
  EndEffectorCloud cloud;
  ExperimentConfig cfg;
};

RunContext make_context(const ExperimentConfig& cfg);

RunResult run_once(const RunContext& ctx, std::uint64_t seed);

// Replay a logged observation stream through the filter, bypassing the
// simulator; the truth pose comes from the log header so errors can still be
// reported.
RunResult run_replay(const RunContext& ctx, const std::string& observations_path);

struct SweepCell {
  std::map<std::string, Json> assignment;  // sweep path -> value
  std::vector<RunResult> runs;
};

struct SweepSummary {
  std::vector<SweepCell> cells;
};

SweepSummary run_sweep(const ExperimentConfig& base, const Json& base_json);

// summary.csv is fully deterministic; timing columns go to a separate file.
void write_summary_csv(const SweepSummary& s, const std::string& path);
void write_timing_csv(const SweepSummary& s, const std::string& path);
// Long-format (one row per cell and metric) for plotting.
void write_long_csv(const SweepSummary& s, const std::string& path);

}  // namespace selfcal
