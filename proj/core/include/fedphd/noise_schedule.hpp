#pragma once

#include <vector>

namespace fedphd {

/// Per-timestep beta/alpha/alpha-bar tables for the forward diffusion
/// process. Timesteps are 1-based (t in 1..T) to match the usual chain
/// indexing; alpha_bar(0) == 1 by convention so a reverse step can land on
/// clean data.
class NoiseSchedule {
 public:
  NoiseSchedule(std::vector<double> betas);

  int total_steps() const { return static_cast<int>(betas_.size()); }

  double beta(int t) const { return betas_[index(t)]; }
  double alpha(int t) const { return alphas_[index(t)]; }

  /// Cumulative product of alphas through t. alpha_bar(0) == 1.
  double alpha_bar(int t) const;

  /// Posterior variance of the reverse kernel conditioned on clean data:
  /// beta_tilde(t) = (1 - alpha_bar(t-1)) / (1 - alpha_bar(t)) * beta(t).
  double beta_tilde(int t) const;

 private:
  int index(int t) const;

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

/// Linear beta schedule from beta_start to beta_end over T steps.
/// Requires T >= 1 and 0 < beta_start <= beta_end < 1.
NoiseSchedule build_schedule(int total_steps, double beta_start,
                             double beta_end);

}  // namespace fedphd
