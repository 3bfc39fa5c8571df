#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fedphd/params.hpp"
#include "fedphd/rng.hpp"

namespace fedphd {

/// Feed-forward noise predictor: the input is the noised point concatenated
/// with a sinusoidal embedding of the timestep, the output predicts the
/// injected noise. Hidden layers use x * sigmoid(x); the output layer is
/// affine.
struct DenoiserConfig {
  int data_dim = 2;
  std::vector<int> hidden_widths = {64, 64, 64};
  int time_embed_dim = 16;
};

/// Sinusoidal timestep embedding of even width `dim`.
Eigen::VectorXd time_embedding(int t, int dim);

double silu(double x);
double silu_derivative(double x);

class DenoiserModel {
 public:
  explicit DenoiserModel(DenoiserConfig cfg);

  /// Xavier-uniform weights, zero biases, drawn layer by layer.
  static DenoiserModel random_init(DenoiserConfig cfg, Rng& rng);

  const DenoiserConfig& config() const { return cfg_; }
  int data_dim() const { return cfg_.data_dim; }
  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }

  /// Replaces the parameters. Hidden widths may differ from the construction
  /// config (pruned models); the input and output widths may not.
  void set_params(ParamSet params);

  /// eps prediction for one point at timestep t. Pure in (params, x, t).
  Eigen::VectorXd predict(const Eigen::VectorXd& x, int t) const;

  /// Forward pass retaining pre-activations for reverse-mode
  /// differentiation.
  struct Tape {
    Eigen::VectorXd input;                        // x concat time embedding
    std::vector<Eigen::VectorXd> pre_activations; // z_l per layer
    std::vector<Eigen::VectorXd> activations;     // a_l inputs to each layer
    Eigen::VectorXd output;
  };
  Tape forward_tape(const Eigen::VectorXd& x, int t) const;

  /// Accumulates d(loss)/d(params) into grad given d(loss)/d(output).
  void backprop(const Tape& tape, const Eigen::VectorXd& output_grad,
                ParamSet& grad) const;

 private:
  DenoiserConfig cfg_;
  ParamSet params_;
};

}  // namespace fedphd
