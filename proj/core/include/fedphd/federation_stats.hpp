#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace fedphd {

/// Probability vector over the label classes. Entries are nonnegative and
/// sum to one (within 1e-9), except for the designated neutral state used by
/// an empty accumulator, which is all-zero.
using LabelDistribution = Eigen::VectorXd;

/// Target distribution the homogeneity score compares against (uniform
/// unless a global label distribution is configured).
struct TargetDistribution {
  LabelDistribution probs;
};

/// An edge server's running pool of client label distributions.
/// count == 0 marks the neutral state (all-zero distribution).
struct EdgeAccumulator {
  LabelDistribution dist;
  long long count = 0;
};

/// One client's contribution: its label distribution and sample count.
struct DistributionContribution {
  LabelDistribution dist;
  long long count = 0;
};

/// Normalizes nonnegative label counts to probabilities.
LabelDistribution distribution_from_counts(const std::vector<long long>& counts);

/// Statistical homogeneity score: 2 - ||q - q_u||_2. Equals 2 iff q == q_u;
/// bounded below by 2 - sqrt(2) for valid distributions. Also defined for
/// the neutral all-zero state (used only before the first contribution).
double sh_score(const LabelDistribution& dist, const TargetDistribution& target);

/// Count-pooled accumulator update:
/// q'(y) = (q(y) * n + sum_i q_i(y) * n_i) / (n + sum_i n_i), n' = n + sum n_i.
/// An empty contribution list returns the accumulator unchanged.
EdgeAccumulator update_accumulator(
    const EdgeAccumulator& acc,
    const std::vector<DistributionContribution>& contributions);

/// Neutral accumulator of the given class cardinality.
EdgeAccumulator refresh_accumulator(int cardinality);

/// Uniform target when no global counts are given, otherwise the normalized
/// counts.
TargetDistribution build_target(
    const std::optional<std::vector<long long>>& global_counts,
    int cardinality);

}  // namespace fedphd
