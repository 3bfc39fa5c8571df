#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fedphd {

/// One affine layer: y = weight * x + bias.
struct Layer {
  std::string name;
  Eigen::MatrixXd weight;  // rows = output width, cols = input width
  Eigen::VectorXd bias;    // size = output width
};

/// Ordered layered parameter container. The layer index of layers[i] is i.
/// All protocol-level model state (clients, edges, cloud) is carried in this
/// form; the denoiser wraps it with evaluation semantics.
struct ParamSet {
  std::vector<Layer> layers;

  bool empty() const { return layers.empty(); }
  std::size_t layer_count() const { return layers.size(); }

  /// Adjacent layers must be shape-compatible and bias sizes must match
  /// weight output widths.
  bool shapes_consistent() const;

  /// Elementwise in-place axpy: *this += scale * other. Shapes must match.
  void add_scaled(const ParamSet& other, double scale);

  /// Zero-valued copy with identical shapes.
  ParamSet zeros_like() const;

  void set_zero();

  bool same_shape(const ParamSet& other) const;

  /// Max absolute elementwise difference; throws on shape mismatch.
  double max_abs_diff(const ParamSet& other) const;

  /// Flat parameter vector in layer order (weight row-major, then bias).
  std::vector<double> flatten() const;
};

/// Total scalar parameter count.
std::size_t count_params(const ParamSet& params);

/// Serializes as a flat parameter array with an architecture header.
/// Round-trips bit-exactly through read_param_set.
void write_param_set(std::ostream& out, const ParamSet& params);
ParamSet read_param_set(std::istream& in);

}  // namespace fedphd
