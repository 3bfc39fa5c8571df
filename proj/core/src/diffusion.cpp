#include "fedphd/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace fedphd {

PredictorFn predictor_of(const DenoiserModel& model) {
  return [&model](const Eigen::VectorXd& x, int t) {
    return model.predict(x, t);
  };
}

Eigen::VectorXd forward_noise(const Eigen::VectorXd& x0, int t,
                              const Eigen::VectorXd& eps,
                              const NoiseSchedule& sched) {
  if (eps.size() != x0.size()) {
    throw std::invalid_argument("forward_noise: noise width mismatch");
  }
  if (t < 1) {
    throw std::invalid_argument("forward_noise: timestep must be >= 1");
  }
  const double abar = sched.alpha_bar(t);
  return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * eps;
}

namespace {

struct SampleDraw {
  int t;
  Eigen::VectorXd eps;
};

SampleDraw draw_for_sample(Eigen::Index dim, const NoiseSchedule& sched,
                           Rng& rng) {
  SampleDraw draw;
  draw.t = 1 + static_cast<int>(rng.uniform_int(sched.total_steps()));
  draw.eps.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) draw.eps(i) = rng.normal();
  return draw;
}

}  // namespace

double noise_prediction_loss(const PredictorFn& predictor,
                             const SampleBatch& batch,
                             const NoiseSchedule& sched, Rng& rng) {
  if (batch.size() == 0) {
    throw std::invalid_argument("noise_prediction_loss: empty batch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const Eigen::VectorXd x0 = batch.points.row(i).transpose();
    const SampleDraw draw = draw_for_sample(x0.size(), sched, rng);
    const Eigen::VectorXd x_t = forward_noise(x0, draw.t, draw.eps, sched);
    total += (draw.eps - predictor(x_t, draw.t)).squaredNorm();
  }
  return total / static_cast<double>(batch.size());
}

double noise_prediction_loss(const DenoiserModel& model,
                             const SampleBatch& batch,
                             const NoiseSchedule& sched, Rng& rng) {
  return noise_prediction_loss(predictor_of(model), batch, sched, rng);
}

LossAndGradient loss_and_gradient(const DenoiserModel& model,
                                  const SampleBatch& batch,
                                  const NoiseSchedule& sched, Rng& rng,
                                  const SparseLossConfig* sparse) {
  if (batch.size() == 0) {
    throw std::invalid_argument("loss_and_gradient: empty batch");
  }
  LossAndGradient out;
  out.gradient = model.params().zeros_like();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const Eigen::VectorXd x0 = batch.points.row(i).transpose();
    const SampleDraw draw = draw_for_sample(x0.size(), sched, rng);
    const Eigen::VectorXd x_t = forward_noise(x0, draw.t, draw.eps, sched);
    const DenoiserModel::Tape tape = model.forward_tape(x_t, draw.t);
    const Eigen::VectorXd residual = tape.output - draw.eps;
    out.loss += residual.squaredNorm() * inv_batch;
    model.backprop(tape, 2.0 * inv_batch * residual, out.gradient);
  }
  if (sparse != nullptr) {
    out.loss += sparse_regularizer(model.params(), sparse->groups, sparse->cfg);
    out.gradient.add_scaled(
        sparse_regularizer_grad(model.params(), sparse->groups, sparse->cfg),
        1.0);
  }
  return out;
}

ParamSet loss_gradient(const DenoiserModel& model, const SampleBatch& batch,
                       const NoiseSchedule& sched, Rng& rng,
                       const SparseLossConfig* sparse) {
  return loss_and_gradient(model, batch, sched, rng, sparse).gradient;
}

Eigen::VectorXd ddpm_sample_step(const PredictorFn& predictor,
                                 const Eigen::VectorXd& x_t, int t,
                                 const Eigen::VectorXd& z,
                                 const NoiseSchedule& sched) {
  const double beta = sched.beta(t);
  const double alpha = sched.alpha(t);
  const double abar = sched.alpha_bar(t);
  const double sigma = std::sqrt(sched.beta_tilde(t));
  const Eigen::VectorXd eps = predictor(x_t, t);
  return (x_t - beta / std::sqrt(1.0 - abar) * eps) / std::sqrt(alpha) +
         sigma * z;
}

Eigen::VectorXd ddim_sample_step(const PredictorFn& predictor,
                                 const Eigen::VectorXd& x_t, int t, int t_prev,
                                 double sigma, const Eigen::VectorXd& z,
                                 const NoiseSchedule& sched) {
  if (t_prev >= t) {
    throw std::invalid_argument("ddim_sample_step: t_prev must be < t");
  }
  if (sigma < 0.0) {
    throw std::invalid_argument("ddim_sample_step: sigma must be >= 0");
  }
  const double abar_t = sched.alpha_bar(t);
  const double abar_prev = sched.alpha_bar(t_prev);
  const double radicand = 1.0 - abar_prev - sigma * sigma;
  if (radicand < -1e-15) {
    throw std::invalid_argument(
        "ddim_sample_step: sigma^2 exceeds 1 - alpha_bar(t_prev)");
  }
  const Eigen::VectorXd eps = predictor(x_t, t);
  const Eigen::VectorXd x0_pred =
      (x_t - std::sqrt(1.0 - abar_t) * eps) / std::sqrt(abar_t);
  return std::sqrt(abar_prev) * x0_pred +
         std::sqrt(std::max(radicand, 0.0)) * eps + sigma * z;
}

double ddim_sigma(int t, int t_prev, const NoiseSchedule& sched) {
  if (t_prev >= t) {
    throw std::invalid_argument("ddim_sigma: t_prev must be < t");
  }
  const double abar_t = sched.alpha_bar(t);
  const double abar_prev = sched.alpha_bar(t_prev);
  if (abar_t >= abar_prev) return 0.0;  // degenerate no-noise segment
  return std::sqrt((1.0 - abar_prev) / (1.0 - abar_t)) *
         std::sqrt(1.0 - abar_t / abar_prev);
}

double ddpm_equivalent_sigma(int t, const NoiseSchedule& sched) {
  if (t <= 1) return 0.0;
  return ddim_sigma(t, t - 1, sched);
}

std::vector<int> ddim_time_grid(int total_steps, int ddim_steps) {
  if (ddim_steps < 1) {
    throw std::invalid_argument("ddim_time_grid: need at least one step");
  }
  if (ddim_steps > total_steps) {
    throw std::invalid_argument("ddim_time_grid: more steps than schedule");
  }
  if (ddim_steps == 1) return {total_steps};
  std::vector<int> grid(ddim_steps);
  const double span = static_cast<double>(total_steps - 1) /
                      static_cast<double>(ddim_steps - 1);
  for (int k = 0; k < ddim_steps; ++k) {
    grid[k] = 1 + static_cast<int>(std::llround(span * k));
  }
  grid.front() = 1;
  grid.back() = total_steps;
  return grid;
}

SampleBatch generate(const DenoiserModel& model, int n, const SampleMode& mode,
                     const NoiseSchedule& sched, Rng& rng) {
  if (n < 1) {
    throw std::invalid_argument("generate: need at least one sample");
  }
  const int dim = model.data_dim();
  const PredictorFn predictor = predictor_of(model);
  SampleBatch batch;
  batch.points.resize(n, dim);

  std::vector<int> grid;
  if (mode.kind == SampleMode::Kind::kDdim) {
    grid = ddim_time_grid(sched.total_steps(), mode.ddim_steps);
  }

  Eigen::VectorXd x(dim);
  Eigen::VectorXd z(dim);
  auto fill_normal = [&rng](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  };

  for (int s = 0; s < n; ++s) {
    fill_normal(x);
    if (mode.kind == SampleMode::Kind::kDdpm) {
      for (int t = sched.total_steps(); t >= 1; --t) {
        if (t > 1) {
          fill_normal(z);
        } else {
          z.setZero();
        }
        x = ddpm_sample_step(predictor, x, t, z, sched);
      }
    } else {
      for (std::size_t k = grid.size(); k-- > 0;) {
        const int t = grid[k];
        const int t_prev = (k == 0) ? 0 : grid[k - 1];
        double sigma = 0.0;
        if (mode.sigma_rule == SampleMode::SigmaRule::kDdpmMatch) {
          sigma = ddim_sigma(t, t_prev, sched);
        }
        if (sigma > 0.0) {
          fill_normal(z);
        } else {
          z.setZero();
        }
        x = ddim_sample_step(predictor, x, t, t_prev, sigma, z, sched);
      }
    }
    batch.points.row(s) = x.transpose();
  }
  return batch;
}

}  // namespace fedphd
