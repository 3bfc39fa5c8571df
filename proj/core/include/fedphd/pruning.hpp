#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedphd/params.hpp"
#include "fedphd/rng.hpp"

namespace fedphd {

/// Which slice of a layer a pruning-group member couples to.
enum class SliceAxis {
  kOutputRows,  // rows of the weight matrix
  kBias,        // bias entries
  kInputCols,   // columns of the weight matrix
};

struct GroupMember {
  int layer = 0;
  SliceAxis axis = SliceAxis::kOutputRows;
};

/// Coupled cross-layer channel slices: removing channel k removes slice k
/// from every member simultaneously. All members expose exactly
/// channel_count prunable slices along their axis.
struct PruningGroup {
  std::string id;
  std::vector<GroupMember> members;
  int channel_count = 0;

  /// Distinct member layer indices, ascending.
  std::vector<int> layer_indices() const;
};

/// Channels chosen for removal, per group.
struct PruningPlan {
  std::map<std::string, std::set<int>> removals;
  double ratio = 0.0;

  bool empty() const;
  std::size_t removal_count() const;
};

struct GroupNormConfig {
  double lambda0 = 0.0;  // base regularization factor
  double q_floor = 0.5;  // lower clamp for the layer-distance score
};

struct RankedChannel {
  std::string group_id;
  int channel = 0;
  double norm = 0.0;
};

/// Raised when groups reference layers or channels the parameter set does
/// not have.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Standard dependency groups for a feed-forward ParamSet: hidden group g_i
/// couples layer i output rows, layer i bias, and layer i+1 input columns.
/// Input and output dimensions are never group members.
std::vector<PruningGroup> make_hidden_groups(const ParamSet& params);

/// Arithmetic mean of the layer indices 0..L-1 (or of the given indices).
double mean_layer_index(const ParamSet& params);
double mean_layer_index(const std::vector<int>& indices);

/// Mean absolute distance of the group's member layer indices from l_med.
double group_distance_score(const PruningGroup& group, double l_med);

/// lambda_g = lambda0 / max(Q, q_floor).
double group_lambda(const GroupNormConfig& cfg, double q);

/// Concatenated member slice of one channel (weight row, bias entry, weight
/// column in member order).
Eigen::VectorXd channel_slice(const ParamSet& params, const PruningGroup& group,
                              int channel);

/// Group regularizer: sum over groups g and channels k of
/// lambda_g * ||channel slice||_2^2, with lambda_g from the layer-distance
/// score of g.
double sparse_regularizer(const ParamSet& params,
                          const std::vector<PruningGroup>& groups,
                          const GroupNormConfig& cfg);

/// Analytic gradient of sparse_regularizer: 2 * lambda_g * theta on grouped
/// slices, zero elsewhere.
ParamSet sparse_regularizer_grad(const ParamSet& params,
                                 const std::vector<PruningGroup>& groups,
                                 const GroupNormConfig& cfg);

/// All (group, channel) pairs sorted by ascending concatenated-slice L2
/// norm; ties broken by (group id, channel index).
std::vector<RankedChannel> rank_channels_by_group_norm(
    const ParamSet& params, const std::vector<PruningGroup>& groups);

/// Removes the floor(s_p * total channels) lowest-normed channels globally,
/// skipping removals that would leave a group with no channels.
PruningPlan build_pruning_plan(const std::vector<RankedChannel>& ranking,
                               const std::vector<PruningGroup>& groups,
                               double ratio);

/// Same channel budget as build_pruning_plan, chosen uniformly at random
/// subject to the per-group floor. Deterministic given the generator state.
PruningPlan random_pruning_plan(const std::vector<PruningGroup>& groups,
                                double ratio, Rng& rng);

/// Applies a plan: deletes every member slice of each removed channel and
/// renumbers the surviving channels. The result is shape-compatible.
struct PrunedModel {
  ParamSet params;
  std::vector<PruningGroup> groups;
};
PrunedModel apply_pruning(const ParamSet& params,
                          const std::vector<PruningGroup>& groups,
                          const PruningPlan& plan);

/// Text form of a plan: one "group_id: i1 i2 ..." line per group, sorted.
std::string plan_to_text(const PruningPlan& plan);

}  // namespace fedphd
