#include "fedphd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fedphd {

namespace {

Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& points,
                               Eigen::Index target, Rng& rng) {
  std::vector<int> indices(points.rows());
  std::iota(indices.begin(), indices.end(), 0);
  rng.shuffle(indices);
  indices.resize(target);
  std::sort(indices.begin(), indices.end());
  Eigen::MatrixXd out(target, points.cols());
  for (Eigen::Index i = 0; i < target; ++i) {
    out.row(i) = points.row(indices[i]);
  }
  return out;
}

double wasserstein_1d(std::vector<double>& a, std::vector<double>& b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

}  // namespace

double sliced_wasserstein(const SampleBatch& a, const SampleBatch& b,
                          int n_proj, Rng& rng) {
  if (a.size() == 0 || b.size() == 0) {
    throw std::invalid_argument("sliced_wasserstein: empty sample set");
  }
  if (a.points.cols() != b.points.cols()) {
    throw std::invalid_argument("sliced_wasserstein: dimension mismatch");
  }
  if (n_proj < 1) {
    throw std::invalid_argument("sliced_wasserstein: need >= 1 projection");
  }
  const Eigen::Index n = std::min(a.size(), b.size());
  Eigen::MatrixXd pa =
      a.size() == n ? a.points : subsample_rows(a.points, n, rng);
  Eigen::MatrixXd pb =
      b.size() == n ? b.points : subsample_rows(b.points, n, rng);

  const Eigen::Index dim = pa.cols();
  Eigen::VectorXd direction(dim);
  std::vector<double> proj_a(n);
  std::vector<double> proj_b(n);
  double total = 0.0;
  for (int p = 0; p < n_proj; ++p) {
    double norm = 0.0;
    do {
      for (Eigen::Index d = 0; d < dim; ++d) direction(d) = rng.normal();
      norm = direction.norm();
    } while (norm == 0.0);
    direction /= norm;
    for (Eigen::Index i = 0; i < n; ++i) {
      proj_a[i] = pa.row(i).dot(direction);
      proj_b[i] = pb.row(i).dot(direction);
    }
    total += wasserstein_1d(proj_a, proj_b);
  }
  return total / n_proj;
}

QualityReport quality_report(const SampleBatch& generated,
                             const SampleBatch& held_out, int n_proj,
                             Rng& rng) {
  QualityReport report;
  report.sliced_wasserstein =
      sliced_wasserstein(generated, held_out, n_proj, rng);
  report.n_projections = n_proj;
  report.n_samples =
      static_cast<int>(std::min(generated.size(), held_out.size()));
  return report;
}

}  // namespace fedphd
