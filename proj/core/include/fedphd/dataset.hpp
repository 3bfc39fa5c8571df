#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fedphd/diffusion.hpp"
#include "fedphd/rng.hpp"

namespace fedphd {

/// Synthetic labeled dataset: class-conditional Gaussians around per-class
/// means. Stands in for the image benchmarks at desk scale.
struct ToyDataset {
  Eigen::MatrixXd points;             // (n, data_dim)
  std::vector<int> labels;            // size n, values in [0, K)
  Eigen::MatrixXd class_means;        // (K, data_dim)
  double cov_scale = 1.0;

  int class_count() const { return static_cast<int>(class_means.rows()); }
  Eigen::Index size() const { return points.rows(); }

  /// Per-class sample counts.
  std::vector<long long> label_counts() const;

  SampleBatch batch_of(const std::vector<int>& indices) const;
};

/// Non-IID shard assignment: which classes each client holds, and which
/// sample indices.
struct PartitionSpec {
  int client_count = 0;
  int classes_per_client = 0;
  std::vector<std::vector<int>> assigned_classes;  // per client
  std::vector<std::vector<int>> shards;            // per client, sample indices
};

/// K class means evenly spaced on a circle of the given radius (2-D only).
Eigen::MatrixXd circle_means(int class_count, double radius);

/// Class-conditional Gaussian samples, n_per_class per class, deterministic
/// given the generator. Class means default to a circle of radius 4 when
/// `means` has zero rows.
ToyDataset make_toy_dataset(int class_count, int n_per_class,
                            const Eigen::MatrixXd& means, double cov_scale,
                            Rng& rng);

/// Splits the dataset so each client holds classes_per_client classes and an
/// equal shard of every class it holds. Requires the shard arithmetic to
/// come out even: N * classes_per_client must be divisible by K, and each
/// class's samples must divide evenly across the clients holding it.
PartitionSpec partition_non_iid(const ToyDataset& dataset, int client_count,
                                int classes_per_client, Rng& rng);

}  // namespace fedphd
