#include "fedphd/federation_stats.hpp"

#include <cmath>
#include <stdexcept>

namespace fedphd {

LabelDistribution distribution_from_counts(
    const std::vector<long long>& counts) {
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) {
      throw std::invalid_argument(
          "distribution_from_counts: counts must be nonnegative");
    }
    total += c;
  }
  if (total == 0) {
    throw std::invalid_argument("distribution_from_counts: all counts zero");
  }
  LabelDistribution dist(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    dist(static_cast<Eigen::Index>(i)) =
        static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return dist;
}

double sh_score(const LabelDistribution& dist,
                const TargetDistribution& target) {
  if (dist.size() != target.probs.size()) {
    throw std::invalid_argument("sh_score: class cardinality mismatch");
  }
  return 2.0 - (dist - target.probs).norm();
}

EdgeAccumulator update_accumulator(
    const EdgeAccumulator& acc,
    const std::vector<DistributionContribution>& contributions) {
  if (contributions.empty()) return acc;
  Eigen::VectorXd pooled =
      acc.count > 0 ? (acc.dist * static_cast<double>(acc.count)).eval()
                    : Eigen::VectorXd::Zero(acc.dist.size()).eval();
  long long total = acc.count;
  for (const DistributionContribution& c : contributions) {
    if (c.count <= 0) {
      throw std::invalid_argument(
          "update_accumulator: contribution counts must be positive");
    }
    if (c.dist.size() != acc.dist.size()) {
      throw std::invalid_argument(
          "update_accumulator: class cardinality mismatch");
    }
    pooled += c.dist * static_cast<double>(c.count);
    total += c.count;
  }
  EdgeAccumulator out;
  out.dist = pooled / static_cast<double>(total);
  out.count = total;
  return out;
}

EdgeAccumulator refresh_accumulator(int cardinality) {
  if (cardinality < 1) {
    throw std::invalid_argument("refresh_accumulator: cardinality must be >= 1");
  }
  EdgeAccumulator acc;
  acc.dist = Eigen::VectorXd::Zero(cardinality);
  acc.count = 0;
  return acc;
}

TargetDistribution build_target(
    const std::optional<std::vector<long long>>& global_counts,
    int cardinality) {
  if (cardinality < 1) {
    throw std::invalid_argument("build_target: cardinality must be >= 1");
  }
  TargetDistribution target;
  if (!global_counts.has_value()) {
    target.probs = Eigen::VectorXd::Constant(cardinality, 1.0 / cardinality);
    return target;
  }
  if (static_cast<int>(global_counts->size()) != cardinality) {
    throw std::invalid_argument("build_target: counts length != cardinality");
  }
  target.probs = distribution_from_counts(*global_counts);
  return target;
}

}  // namespace fedphd
