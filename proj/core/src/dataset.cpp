#include "fedphd/dataset.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedphd/pruning.hpp"

namespace fedphd {

std::vector<long long> ToyDataset::label_counts() const {
  std::vector<long long> counts(class_count(), 0);
  for (int label : labels) counts[label] += 1;
  return counts;
}

SampleBatch ToyDataset::batch_of(const std::vector<int>& indices) const {
  SampleBatch batch;
  batch.points.resize(indices.size(), points.cols());
  batch.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    batch.points.row(static_cast<Eigen::Index>(i)) = points.row(indices[i]);
    batch.labels.push_back(labels[indices[i]]);
  }
  return batch;
}

Eigen::MatrixXd circle_means(int class_count, double radius) {
  Eigen::MatrixXd means(class_count, 2);
  for (int k = 0; k < class_count; ++k) {
    const double angle = 2.0 * M_PI * k / class_count;
    means(k, 0) = radius * std::cos(angle);
    means(k, 1) = radius * std::sin(angle);
  }
  return means;
}

ToyDataset make_toy_dataset(int class_count, int n_per_class,
                            const Eigen::MatrixXd& means, double cov_scale,
                            Rng& rng) {
  if (class_count < 2) {
    throw std::invalid_argument("make_toy_dataset: need at least two classes");
  }
  if (n_per_class < 1) {
    throw std::invalid_argument("make_toy_dataset: n_per_class must be >= 1");
  }
  ToyDataset dataset;
  dataset.class_means =
      means.rows() == 0 ? circle_means(class_count, 4.0) : means;
  if (dataset.class_means.rows() != class_count) {
    throw std::invalid_argument("make_toy_dataset: means row count != K");
  }
  dataset.cov_scale = cov_scale;
  const Eigen::Index dim = dataset.class_means.cols();
  const Eigen::Index total =
      static_cast<Eigen::Index>(class_count) * n_per_class;
  dataset.points.resize(total, dim);
  dataset.labels.resize(total);
  Eigen::Index row = 0;
  for (int k = 0; k < class_count; ++k) {
    for (int i = 0; i < n_per_class; ++i, ++row) {
      for (Eigen::Index d = 0; d < dim; ++d) {
        dataset.points(row, d) =
            dataset.class_means(k, d) + cov_scale * rng.normal();
      }
      dataset.labels[row] = k;
    }
  }
  return dataset;
}

PartitionSpec partition_non_iid(const ToyDataset& dataset, int client_count,
                                int classes_per_client, Rng& rng) {
  const int class_count = dataset.class_count();
  if (client_count < 1 || classes_per_client < 1 ||
      classes_per_client > class_count) {
    throw ConfigError("partition_non_iid: invalid client/class arithmetic");
  }
  const long long slots =
      static_cast<long long>(client_count) * classes_per_client;
  if (slots % class_count != 0) {
    throw ConfigError(
        "partition_non_iid: N * classes_per_client must be divisible by K");
  }
  const long long holders_per_class = slots / class_count;

  // Deal class ids round-robin over a shuffled deck so every class is held
  // by exactly holders_per_class clients and no client repeats a class.
  std::vector<int> deck;
  deck.reserve(slots);
  for (long long copy = 0; copy < holders_per_class; ++copy) {
    std::vector<int> classes(class_count);
    std::iota(classes.begin(), classes.end(), 0);
    rng.shuffle(classes);
    deck.insert(deck.end(), classes.begin(), classes.end());
  }

  PartitionSpec spec;
  spec.client_count = client_count;
  spec.classes_per_client = classes_per_client;
  spec.assigned_classes.assign(client_count, {});
  spec.shards.assign(client_count, {});

  // Round-robin deal; retry a bounded number of shuffles if a duplicate
  // class lands on one client (possible for small decks).
  for (int attempt = 0; attempt < 64; ++attempt) {
    bool ok = true;
    std::vector<std::vector<int>> assigned(client_count);
    for (long long s = 0; s < slots && ok; ++s) {
      const int client = static_cast<int>(s % client_count);
      const int cls = deck[s];
      for (int held : assigned[client]) {
        if (held == cls) {
          ok = false;
          break;
        }
      }
      if (ok) assigned[client].push_back(cls);
    }
    if (ok) {
      spec.assigned_classes = std::move(assigned);
      break;
    }
    rng.shuffle(deck);
    if (attempt == 63) {
      throw ConfigError(
          "partition_non_iid: could not deal distinct classes per client");
    }
  }

  // Split each class's sample indices evenly across its holders.
  std::vector<std::vector<int>> by_class(class_count);
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    by_class[dataset.labels[i]].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> holders(class_count);
  for (int client = 0; client < client_count; ++client) {
    for (int cls : spec.assigned_classes[client]) {
      holders[cls].push_back(client);
    }
  }
  for (int cls = 0; cls < class_count; ++cls) {
    const std::size_t holder_count = holders[cls].size();
    if (holder_count == 0) continue;
    if (by_class[cls].size() % holder_count != 0) {
      throw ConfigError("partition_non_iid: class " + std::to_string(cls) +
                        " samples do not divide evenly across holders");
    }
    rng.shuffle(by_class[cls]);
    const std::size_t per_holder = by_class[cls].size() / holder_count;
    std::size_t at = 0;
    for (int client : holders[cls]) {
      for (std::size_t j = 0; j < per_holder; ++j, ++at) {
        spec.shards[client].push_back(by_class[cls][at]);
      }
    }
  }
  for (std::vector<int>& shard : spec.shards) {
    std::sort(shard.begin(), shard.end());
  }
  return spec;
}

}  // namespace fedphd
