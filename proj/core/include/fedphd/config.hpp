#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedphd/hfl.hpp"

namespace fedphd {

enum class ExperimentMode {
  kFedPhd,
  kFedPhdOneShot,
  kFedAvgBaseline,
  kRandomSelection,
};

std::string mode_name(ExperimentMode mode);
ExperimentMode mode_from_name(const std::string& name);

/// Flat experiment configuration. Parsed from `key = value` lines; every
/// field has a default, and mode-specific constraints are applied by
/// validate() (the FedAvg baseline collapses the edge layer, one-shot mode
/// prunes at round 0).
struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::kFedPhd;

  // Population.
  int clients = 20;             // N
  int edges = 2;                // N_e
  int classes = 10;             // K
  int classes_per_client = 2;
  int n_per_class = 100;
  double cov_scale = 0.5;

  // Protocol hyperparameters.
  HyperParams hyper;

  // Diffusion schedule and denoiser.
  int schedule_steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int data_dim = 2;
  std::vector<int> hidden_widths = {64, 64, 64};
  int time_embed_dim = 16;

  // Distances for the communication-cost model.
  double d_e = 1.0;
  double d_c = 10.0;

  // Target distribution: uniform, or the dataset's global label counts.
  bool target_from_global_counts = false;

  // Evaluation.
  int eval_samples = 256;
  int eval_ddim_steps = 20;
  int eval_projections = 64;

  // Seeds and output.
  std::uint64_t seed_data = 1;
  std::uint64_t seed_proto = 1;
  std::string out_dir;
  bool strict_determinism = false;

  /// Applies mode constraints and checks every invariant; throws
  /// ConfigError naming the offending key.
  void validate();

  SelectionPolicy selection_policy() const;
  ProtocolConfig protocol_config() const;
};

/// Parses the documented flat `key = value` format. Unknown keys, type
/// errors, and invariant violations raise ConfigError naming the key. Lines
/// starting with '#' and blank lines are ignored.
ExperimentConfig parse_config(const std::string& text);

/// Canonical serialization; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& lhs, const ExperimentConfig& rhs);

}  // namespace fedphd
