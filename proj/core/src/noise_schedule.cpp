#include "fedphd/noise_schedule.hpp"

#include <stdexcept>
#include <string>

namespace fedphd {

NoiseSchedule::NoiseSchedule(std::vector<double> betas)
    : betas_(std::move(betas)) {
  if (betas_.empty()) {
    throw std::invalid_argument("NoiseSchedule: needs at least one step");
  }
  alphas_.reserve(betas_.size());
  alpha_bars_.reserve(betas_.size());
  double running = 1.0;
  for (double beta : betas_) {
    if (!(beta > 0.0 && beta < 1.0)) {
      throw std::invalid_argument("NoiseSchedule: betas must lie in (0, 1)");
    }
    alphas_.push_back(1.0 - beta);
    running *= alphas_.back();
    alpha_bars_.push_back(running);
  }
}

int NoiseSchedule::index(int t) const {
  if (t < 1 || t > total_steps()) {
    throw std::invalid_argument("NoiseSchedule: timestep " + std::to_string(t) +
                                " outside 1.." + std::to_string(total_steps()));
  }
  return t - 1;
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  return alpha_bars_[index(t)];
}

double NoiseSchedule::beta_tilde(int t) const {
  const double b = beta(t);
  return (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)) * b;
}

NoiseSchedule build_schedule(int total_steps, double beta_start,
                             double beta_end) {
  if (total_steps < 1) {
    throw std::invalid_argument("build_schedule: T must be >= 1");
  }
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument(
        "build_schedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(total_steps);
  if (total_steps == 1) {
    betas[0] = beta_start;
  } else {
    const double step = (beta_end - beta_start) / (total_steps - 1);
    for (int i = 0; i < total_steps; ++i) {
      betas[i] = beta_start + step * i;
    }
  }
  return NoiseSchedule(std::move(betas));
}

}  // namespace fedphd
