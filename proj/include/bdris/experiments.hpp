#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bdris/benchmarks.hpp"
#include "bdris/scenario.hpp"
#include "bdris/wmmse.hpp"

namespace bdris {

enum class ExperimentKind {
  kConvergence,
  kSweepElements,
  kSweepPower,
  kDeployment,
};

/// "convergence", "sweep_m", "sweep_power", "deployment".
std::string_view experiment_tag(ExperimentKind kind);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kConvergence;
  ScenarioConfig base = default_scenario();
  /// Element counts (sweep_m, deployment) or BS powers in dBm (sweep_power).
  /// Ignored by the convergence experiment.
  std::vector<double> sweep_values;
  int n_trials = 50;
  std::vector<SchemeId> schemes;
  std::uint64_t master_seed = 1;
  SolverOptions solver;
  /// Worker threads; 0 uses std::thread::hardware_concurrency().
  int threads = 0;
  /// Fill the wall_ms column. Off by default so that output is reproducible
  /// byte for byte.
  bool record_timing = false;

  /// Throws ConfigError on an empty or non-increasing sweep, n_trials < 1,
  /// or an odd element count in a deployment sweep.
  void validate() const;
};

struct ResultRow {
  std::string scheme;
  double sweep_value = 0.0;
  int trial = 0;
  double rate = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
};

struct AggregateRow {
  std::string scheme;
  double sweep_value = 0.0;
  double mean_rate = 0.0;
  double stderr_rate = 0.0;
  int n = 0;
};

/// One AO iteration of one convergence trial.
struct TraceRow {
  std::string scheme;
  int trial = 0;
  int iteration = 0;
  double rate = 0.0;
  double wmmse_objective = 0.0;
  double unitarity_residual = 0.0;
  double max_power_ratio = 0.0;  // max_l used_l / P_l
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::kConvergence;
  std::vector<ResultRow> rows;  // canonical order: scheme, sweep value, trial
  std::vector<AggregateRow> aggregates;
  std::vector<TraceRow> trace;  // convergence experiment only
};

/// splitmix64-based pure function of its arguments. Stream tags separate
/// channel draws ("channels") from each scheme's own randomness (its CSV tag).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          double sweep_value, int trial);

ExperimentResult run_convergence(const ExperimentSpec& spec);
ExperimentResult run_sweep_elements(const ExperimentSpec& spec);
ExperimentResult run_sweep_power(const ExperimentSpec& spec);
ExperimentResult run_deployment(const ExperimentSpec& spec);
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Mean and standard error per (scheme, sweep value), in row order.
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

std::string rows_csv(const ExperimentResult& result);
std::string aggregate_csv(const ExperimentResult& result);
std::string trace_csv(const ExperimentResult& result);

/// Writes `path`, `<stem>_agg.csv` and, for convergence runs,
/// `<stem>_trace.csv` next to it. Throws Error with the path on I/O failure.
void write_result(const ExperimentResult& result,
                  const std::filesystem::path& path);

std::filesystem::path sibling_path(const std::filesystem::path& path,
                                   std::string_view suffix);

}  // namespace bdris
