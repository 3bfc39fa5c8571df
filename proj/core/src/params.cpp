#include "fedphd/params.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fedphd {

bool ParamSet::shapes_consistent() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    if (layer.bias.size() != layer.weight.rows()) return false;
    if (i + 1 < layers.size() &&
        layers[i + 1].weight.cols() != layer.weight.rows()) {
      return false;
    }
  }
  return true;
}

void ParamSet::add_scaled(const ParamSet& other, double scale) {
  if (!same_shape(other)) {
    throw std::invalid_argument("ParamSet::add_scaled: shape mismatch");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += scale * other.layers[i].weight;
    layers[i].bias += scale * other.layers[i].bias;
  }
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  out.set_zero();
  return out;
}

void ParamSet::set_zero() {
  for (Layer& layer : layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
}

bool ParamSet::same_shape(const ParamSet& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weight.rows() != other.layers[i].weight.rows() ||
        layers[i].weight.cols() != other.layers[i].weight.cols() ||
        layers[i].bias.size() != other.layers[i].bias.size()) {
      return false;
    }
  }
  return true;
}

double ParamSet::max_abs_diff(const ParamSet& other) const {
  if (!same_shape(other)) {
    throw std::invalid_argument("ParamSet::max_abs_diff: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const double w =
        (layers[i].weight - other.layers[i].weight).cwiseAbs().maxCoeff();
    worst = std::max(worst, w);
    if (layers[i].bias.size() > 0) {
      const double b =
          (layers[i].bias - other.layers[i].bias).cwiseAbs().maxCoeff();
      worst = std::max(worst, b);
    }
  }
  return worst;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(count_params(*this));
  for (const Layer& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        flat.push_back(layer.weight(r, c));
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      flat.push_back(layer.bias(i));
    }
  }
  return flat;
}

std::size_t count_params(const ParamSet& params) {
  std::size_t total = 0;
  for (const Layer& layer : params.layers) {
    total += static_cast<std::size_t>(layer.weight.size());
    total += static_cast<std::size_t>(layer.bias.size());
  }
  return total;
}

namespace {

std::string format_exact(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

void write_param_set(std::ostream& out, const ParamSet& params) {
  out << "fedphd-params 1\n";
  out << "layers " << params.layers.size() << "\n";
  for (const Layer& layer : params.layers) {
    out << "layer " << layer.name << " " << layer.weight.rows() << " "
        << layer.weight.cols() << "\n";
  }
  out << "values " << count_params(params) << "\n";
  for (double v : params.flatten()) {
    out << format_exact(v) << "\n";
  }
}

ParamSet read_param_set(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "fedphd-params" || version != 1) {
    throw std::runtime_error("read_param_set: unrecognized header");
  }
  std::string token;
  std::size_t layer_count = 0;
  in >> token >> layer_count;
  if (token != "layers") {
    throw std::runtime_error("read_param_set: expected layer count");
  }
  ParamSet params;
  params.layers.resize(layer_count);
  for (Layer& layer : params.layers) {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    in >> token >> layer.name >> rows >> cols;
    if (token != "layer" || rows < 0 || cols < 0) {
      throw std::runtime_error("read_param_set: malformed layer header");
    }
    layer.weight.resize(rows, cols);
    layer.bias.resize(rows);
  }
  std::size_t value_count = 0;
  in >> token >> value_count;
  if (token != "values" || value_count != count_params(params)) {
    throw std::runtime_error("read_param_set: value count mismatch");
  }
  for (Layer& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        in >> layer.weight(r, c);
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      in >> layer.bias(i);
    }
  }
  if (!in) {
    throw std::runtime_error("read_param_set: truncated value stream");
  }
  return params;
}

}  // namespace fedphd
