#pragma once

#include <string>
#include <vector>

#include "fedphd/config.hpp"
#include "fedphd/metrics.hpp"

namespace fedphd {

/// Everything one run produces: the protocol outputs, the transfer ledger,
/// the final-model quality proxy, and the wall clock.
struct ExperimentRecord {
  ExperimentConfig config;
  RunResult result;
  QualityReport quality;
  CommLedger ledger;
  double duration_seconds = 0.0;

  /// Mean homogeneity score over edges at the final cloud aggregation
  /// (pre-refresh), NaN when no cloud round happened.
  double final_mean_edge_mu() const;

  /// Mean per-round variance of roster sizes across edges.
  double mean_load_variance() const;
};

/// Builds the dataset and partition from the data seed, runs the protocol,
/// evaluates the final model, and (when out_dir is set) writes config echo,
/// per-round CSV, assignment CSV, ledger CSV, summary JSON, the final model,
/// and the pruning plan. Files are written atomically (temp + rename).
ExperimentRecord run_experiment(const ExperimentConfig& config);

/// Aggregate of one sweep group (identical configs up to seeds).
struct SweepGroup {
  std::string label;
  int runs = 0;
  double sw_mean = 0.0, sw_std = 0.0;
  double mu_mean = 0.0, mu_std = 0.0;
  double load_var_mean = 0.0, load_var_std = 0.0;
  double params_mean = 0.0;
  double cost_mean = 0.0, cost_std = 0.0;
};

struct SweepSummary {
  std::vector<SweepGroup> groups;
  std::vector<ExperimentRecord> records;
};

/// Runs every config and aggregates per group across seeds. All configs
/// must share the class cardinality.
SweepSummary run_sweep(const std::vector<ExperimentConfig>& configs);

/// Named sweep presets (desk-scale grids mirroring the tuned ranges):
/// a_grid, lambda_grid, rs_grid, sp_grid, selection.
std::vector<ExperimentConfig> sweep_preset(const std::string& name);
std::vector<std::string> sweep_preset_names();

/// Serializes a sweep summary; write_sweep_files also emits sweep.csv and
/// sweep.json under out_dir.
std::string sweep_to_csv(const SweepSummary& summary);
void write_sweep_files(const SweepSummary& summary, const std::string& out_dir);

/// Atomic file write (temp in the same directory, then rename).
void write_file_atomic(const std::string& path, const std::string& content);

std::string rounds_to_csv(const ExperimentRecord& record);
std::string assignments_to_csv(const ExperimentRecord& record);
std::string summary_to_json(const ExperimentRecord& record);

}  // namespace fedphd
