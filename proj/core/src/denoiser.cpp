#include "fedphd/denoiser.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fedphd {

Eigen::VectorXd time_embedding(int t, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw std::invalid_argument("time_embedding: dim must be positive even");
  }
  const int half = dim / 2;
  Eigen::VectorXd emb(dim);
  for (int i = 0; i < half; ++i) {
    const double freq =
        std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
    const double phase = static_cast<double>(t) * freq;
    emb(2 * i) = std::sin(phase);
    emb(2 * i + 1) = std::cos(phase);
  }
  return emb;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_derivative(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

namespace {

std::vector<int> full_widths(const DenoiserConfig& cfg) {
  std::vector<int> widths;
  widths.push_back(cfg.data_dim + cfg.time_embed_dim);
  for (int h : cfg.hidden_widths) widths.push_back(h);
  widths.push_back(cfg.data_dim);
  return widths;
}

}  // namespace

DenoiserModel::DenoiserModel(DenoiserConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.data_dim < 1) {
    throw std::invalid_argument("DenoiserModel: data_dim must be positive");
  }
  for (int h : cfg_.hidden_widths) {
    if (h < 1) {
      throw std::invalid_argument("DenoiserModel: hidden widths must be >= 1");
    }
  }
  const std::vector<int> widths = full_widths(cfg_);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    Layer layer;
    layer.name = "fc" + std::to_string(i);
    layer.weight = Eigen::MatrixXd::Zero(widths[i + 1], widths[i]);
    layer.bias = Eigen::VectorXd::Zero(widths[i + 1]);
    params_.layers.push_back(std::move(layer));
  }
}

DenoiserModel DenoiserModel::random_init(DenoiserConfig cfg, Rng& rng) {
  DenoiserModel model(std::move(cfg));
  for (Layer& layer : model.params_.layers) {
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double fan_out = static_cast<double>(layer.weight.rows());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
      }
    }
    layer.bias.setZero();
  }
  return model;
}

void DenoiserModel::set_params(ParamSet params) {
  if (params.layers.empty() || !params.shapes_consistent()) {
    throw std::invalid_argument("DenoiserModel::set_params: bad shapes");
  }
  const Eigen::Index in = params.layers.front().weight.cols();
  const Eigen::Index out = params.layers.back().weight.rows();
  if (in != cfg_.data_dim + cfg_.time_embed_dim || out != cfg_.data_dim) {
    throw std::invalid_argument(
        "DenoiserModel::set_params: input/output widths are fixed by the "
        "task");
  }
  params_ = std::move(params);
}

Eigen::VectorXd DenoiserModel::predict(const Eigen::VectorXd& x, int t) const {
  return forward_tape(x, t).output;
}

DenoiserModel::Tape DenoiserModel::forward_tape(const Eigen::VectorXd& x,
                                                int t) const {
  if (x.size() != cfg_.data_dim) {
    throw std::invalid_argument("DenoiserModel: input width mismatch");
  }
  Tape tape;
  tape.input.resize(cfg_.data_dim + cfg_.time_embed_dim);
  tape.input.head(cfg_.data_dim) = x;
  tape.input.tail(cfg_.time_embed_dim) =
      time_embedding(t, cfg_.time_embed_dim);

  const std::size_t layer_count = params_.layers.size();
  tape.pre_activations.resize(layer_count);
  tape.activations.resize(layer_count);
  Eigen::VectorXd activation = tape.input;
  for (std::size_t l = 0; l < layer_count; ++l) {
    tape.activations[l] = activation;
    const Layer& layer = params_.layers[l];
    tape.pre_activations[l] = layer.weight * activation + layer.bias;
    if (l + 1 < layer_count) {
      activation = tape.pre_activations[l].unaryExpr([](double v) {
        return silu(v);
      });
    } else {
      activation = tape.pre_activations[l];
    }
  }
  tape.output = activation;
  return tape;
}

void DenoiserModel::backprop(const Tape& tape,
                             const Eigen::VectorXd& output_grad,
                             ParamSet& grad) const {
  if (!grad.same_shape(params_)) {
    throw std::invalid_argument("DenoiserModel::backprop: gradient shape");
  }
  Eigen::VectorXd delta = output_grad;
  for (std::size_t l = params_.layers.size(); l-- > 0;) {
    grad.layers[l].weight.noalias() +=
        delta * tape.activations[l].transpose();
    grad.layers[l].bias += delta;
    if (l > 0) {
      delta = (params_.layers[l].weight.transpose() * delta).eval();
      delta.array() *=
          tape.pre_activations[l - 1]
              .unaryExpr([](double v) { return silu_derivative(v); })
              .array();
    }
  }
}

}  // namespace fedphd
