#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "fedphd/denoiser.hpp"
#include "fedphd/noise_schedule.hpp"
#include "fedphd/pruning.hpp"
#include "fedphd/rng.hpp"

namespace fedphd {

/// Batch of data points, one per row. Labels are carried for the
/// federation statistics only; the diffusion loss never reads them.
struct SampleBatch {
  Eigen::MatrixXd points;   // (batch, data_dim)
  std::vector<int> labels;  // empty, or one label per row

  Eigen::Index size() const { return points.rows(); }
};

/// Noise predictor signature: (x_t, t) -> predicted noise. DenoiserModel is
/// the production implementation; tests may pass closures.
using PredictorFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)>;

PredictorFn predictor_of(const DenoiserModel& model);

/// x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) eps.
Eigen::VectorXd forward_noise(const Eigen::VectorXd& x0, int t,
                              const Eigen::VectorXd& eps,
                              const NoiseSchedule& sched);

/// Group regularizer configuration attached to the training loss.
struct SparseLossConfig {
  std::vector<PruningGroup> groups;
  GroupNormConfig cfg;
};

/// Mean over the batch of ||eps - predictor(x_t, t)||^2 with per-sample
/// t ~ Uniform{1..T} and eps ~ N(0, I). Draw order per sample: t first, then
/// the noise vector; samples are processed in row order, so a seeded
/// generator makes the result (and the prediction call sequence)
/// deterministic.
double noise_prediction_loss(const PredictorFn& predictor,
                             const SampleBatch& batch,
                             const NoiseSchedule& sched, Rng& rng);
double noise_prediction_loss(const DenoiserModel& model,
                             const SampleBatch& batch,
                             const NoiseSchedule& sched, Rng& rng);

/// Loss and its exact parameter gradient under the same sampling contract
/// (identical draws to noise_prediction_loss for equal generator state).
/// When sparse is present the group regularizer and its analytic gradient
/// are added.
struct LossAndGradient {
  double loss = 0.0;
  ParamSet gradient;
};
LossAndGradient loss_and_gradient(const DenoiserModel& model,
                                  const SampleBatch& batch,
                                  const NoiseSchedule& sched, Rng& rng,
                                  const SparseLossConfig* sparse = nullptr);
ParamSet loss_gradient(const DenoiserModel& model, const SampleBatch& batch,
                       const NoiseSchedule& sched, Rng& rng,
                       const SparseLossConfig* sparse = nullptr);

/// One stochastic reverse step:
/// x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_theta) / sqrt(alpha_t)
///           + sqrt(beta_tilde_t) * z.
/// The caller passes z = 0 at t = 1.
Eigen::VectorXd ddpm_sample_step(const PredictorFn& predictor,
                                 const Eigen::VectorXd& x_t, int t,
                                 const Eigen::VectorXd& z,
                                 const NoiseSchedule& sched);

/// One generalized reverse step from t to t_prev < t (t_prev may be 0,
/// landing on clean data):
/// x_prev = sqrt(abar_prev) * (x_t - sqrt(1-abar_t) eps) / sqrt(abar_t)
///          + sqrt(1 - abar_prev - sigma^2) eps + sigma z.
/// Deterministic when sigma == 0.
Eigen::VectorXd ddim_sample_step(const PredictorFn& predictor,
                                 const Eigen::VectorXd& x_t, int t, int t_prev,
                                 double sigma, const Eigen::VectorXd& z,
                                 const NoiseSchedule& sched);

/// Noise scale that makes the generalized step coincide with the stochastic
/// one: sigma_t = sqrt((1-abar_{t-1})/(1-abar_t)) * sqrt(1 - abar_t/abar_{t-1}),
/// equal to sqrt(beta_tilde_t). Defined as 0 at t = 1.
double ddpm_equivalent_sigma(int t, const NoiseSchedule& sched);

/// Generalization to an arbitrary target step t_prev < t.
double ddim_sigma(int t, int t_prev, const NoiseSchedule& sched);

struct SampleMode {
  enum class Kind { kDdpm, kDdim };
  enum class SigmaRule { kZero, kDdpmMatch };

  Kind kind = Kind::kDdim;
  int ddim_steps = 50;
  SigmaRule sigma_rule = SigmaRule::kZero;

  static SampleMode ddpm() { return {Kind::kDdpm, 0, SigmaRule::kDdpmMatch}; }
  static SampleMode ddim(int steps, SigmaRule rule = SigmaRule::kZero) {
    return {Kind::kDdim, steps, rule};
  }
};

/// Evenly spaced ascending timestep grid over 1..T including both ends.
std::vector<int> ddim_time_grid(int total_steps, int ddim_steps);

/// Draws n samples by iterating the chosen reverse step from x_T ~ N(0, I).
/// Per sample: x_T noise first, then any per-step z draws, high t to low.
SampleBatch generate(const DenoiserModel& model, int n, const SampleMode& mode,
                     const NoiseSchedule& sched, Rng& rng);

}  // namespace fedphd
