#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "cvarlearn/analysis.hpp"
#include "cvarlearn/config.hpp"
#include "cvarlearn/learning.hpp"

namespace cvarlearn {

struct TrialResults {
  Algorithm algorithm;
  std::vector<RunTrace> traces;  // indexed by trial
};

/// Files written by run_experiment, relative to `directory`:
///   config.resolved.json, traces/<algorithm>_trial<NNN>.csv, aggregate.csv,
///   convergence.svg (only when x* is known), bound_report.csv
struct OutputBundle {
  std::filesystem::path directory;
  std::vector<TrialResults> results;
  std::vector<AggregateTrace> sq_error;
  std::vector<AggregateTrace> time_avg;
  std::vector<BoundReport> reports;

  bool all_bounds_pass() const;
};

struct ExperimentOptions {
  std::optional<std::filesystem::path> output;  // overrides config.output
  std::optional<std::size_t> workers;           // overrides config.workers
  std::ostream* progress = nullptr;
};

/// Trial seed k of an experiment: trial_seed(config.seed, k). Every algorithm
/// sees the same seed for trial k, so noise streams are matched across algorithms.
std::vector<TrialResults> run_trials(const ExperimentConfig& config, std::size_t workers,
                                     std::ostream* progress = nullptr);

/// VaR concentration at the reference action, running VaR-bias sums per
/// algorithm1 trial and agent, and the time-averaged error bound and rate
/// per algorithm. Rows that need a capability the game lacks are omitted.
std::vector<BoundReport> compute_bound_reports(const ExperimentConfig& config, const StochasticGame& game,
                                               std::span<const TrialResults> results);

OutputBundle run_experiment(const ExperimentConfig& config, const ExperimentOptions& options = {});

/// Re-reads a bundle's resolved config and traces, recomputes and rewrites bound_report.csv.
std::vector<BoundReport> report_bundle(const std::filesystem::path& directory);

std::filesystem::path trace_path(const std::filesystem::path& directory, Algorithm algorithm, std::size_t trial);

}  // namespace cvarlearn
