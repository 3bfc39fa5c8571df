#include "fedphd/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fedphd {

namespace {

const Layer& member_layer(const ParamSet& params, const GroupMember& member,
                          const std::string& group_id) {
  if (member.layer < 0 ||
      member.layer >= static_cast<int>(params.layers.size())) {
    throw ConfigError("pruning group " + group_id + " references layer " +
                      std::to_string(member.layer) + " absent from the model");
  }
  return params.layers[member.layer];
}

int member_slice_count(const ParamSet& params, const GroupMember& member,
                       const std::string& group_id) {
  const Layer& layer = member_layer(params, member, group_id);
  switch (member.axis) {
    case SliceAxis::kOutputRows:
      return static_cast<int>(layer.weight.rows());
    case SliceAxis::kBias:
      return static_cast<int>(layer.bias.size());
    case SliceAxis::kInputCols:
      return static_cast<int>(layer.weight.cols());
  }
  return 0;
}

void check_group(const ParamSet& params, const PruningGroup& group) {
  if (group.channel_count <= 0) {
    throw ConfigError("pruning group " + group.id +
                      " must expose at least one channel");
  }
  for (const GroupMember& member : group.members) {
    if (member_slice_count(params, member, group.id) != group.channel_count) {
      throw ConfigError("pruning group " + group.id +
                        " member slice count does not match channel count");
    }
  }
}

}  // namespace

std::vector<int> PruningGroup::layer_indices() const {
  std::set<int> unique;
  for (const GroupMember& member : members) unique.insert(member.layer);
  return {unique.begin(), unique.end()};
}

bool PruningPlan::empty() const { return removal_count() == 0; }

std::size_t PruningPlan::removal_count() const {
  std::size_t total = 0;
  for (const auto& [id, channels] : removals) total += channels.size();
  return total;
}

std::vector<PruningGroup> make_hidden_groups(const ParamSet& params) {
  std::vector<PruningGroup> groups;
  if (params.layers.size() < 2) return groups;
  for (int i = 0; i + 1 < static_cast<int>(params.layers.size()); ++i) {
    PruningGroup group;
    group.id = "g" + std::to_string(i);
    group.channel_count = static_cast<int>(params.layers[i].weight.rows());
    group.members = {{i, SliceAxis::kOutputRows},
                     {i, SliceAxis::kBias},
                     {i + 1, SliceAxis::kInputCols}};
    groups.push_back(std::move(group));
  }
  return groups;
}

double mean_layer_index(const ParamSet& params) {
  if (params.layers.empty()) {
    throw std::invalid_argument("mean_layer_index: empty model");
  }
  std::vector<int> indices(params.layers.size());
  std::iota(indices.begin(), indices.end(), 0);
  return mean_layer_index(indices);
}

double mean_layer_index(const std::vector<int>& indices) {
  if (indices.empty()) {
    throw std::invalid_argument("mean_layer_index: no layer indices");
  }
  double sum = 0.0;
  for (int i : indices) sum += i;
  return sum / static_cast<double>(indices.size());
}

double group_distance_score(const PruningGroup& group, double l_med) {
  const std::vector<int> layers = group.layer_indices();
  if (layers.empty()) {
    throw std::invalid_argument("group_distance_score: group has no members");
  }
  double sum = 0.0;
  for (int l : layers) sum += std::abs(static_cast<double>(l) - l_med);
  return sum / static_cast<double>(layers.size());
}

double group_lambda(const GroupNormConfig& cfg, double q) {
  return cfg.lambda0 / std::max(q, cfg.q_floor);
}

Eigen::VectorXd channel_slice(const ParamSet& params, const PruningGroup& group,
                              int channel) {
  if (channel < 0 || channel >= group.channel_count) {
    throw ConfigError("channel_slice: channel out of range for group " +
                      group.id);
  }
  Eigen::Index total = 0;
  for (const GroupMember& member : group.members) {
    const Layer& layer = member_layer(params, member, group.id);
    total += (member.axis == SliceAxis::kOutputRows) ? layer.weight.cols()
             : (member.axis == SliceAxis::kBias)     ? 1
                                                     : layer.weight.rows();
  }
  Eigen::VectorXd slice(total);
  Eigen::Index at = 0;
  for (const GroupMember& member : group.members) {
    const Layer& layer = member_layer(params, member, group.id);
    switch (member.axis) {
      case SliceAxis::kOutputRows:
        slice.segment(at, layer.weight.cols()) =
            layer.weight.row(channel).transpose();
        at += layer.weight.cols();
        break;
      case SliceAxis::kBias:
        slice(at++) = layer.bias(channel);
        break;
      case SliceAxis::kInputCols:
        slice.segment(at, layer.weight.rows()) = layer.weight.col(channel);
        at += layer.weight.rows();
        break;
    }
  }
  return slice;
}

namespace {

double lambda_for_group(const ParamSet& params, const PruningGroup& group,
                        const GroupNormConfig& cfg) {
  const double l_med = mean_layer_index(params);
  return group_lambda(cfg, group_distance_score(group, l_med));
}

}  // namespace

double sparse_regularizer(const ParamSet& params,
                          const std::vector<PruningGroup>& groups,
                          const GroupNormConfig& cfg) {
  double omega = 0.0;
  for (const PruningGroup& group : groups) {
    check_group(params, group);
    const double lambda = lambda_for_group(params, group, cfg);
    for (int k = 0; k < group.channel_count; ++k) {
      omega += lambda * channel_slice(params, group, k).squaredNorm();
    }
  }
  return omega;
}

ParamSet sparse_regularizer_grad(const ParamSet& params,
                                 const std::vector<PruningGroup>& groups,
                                 const GroupNormConfig& cfg) {
  ParamSet grad = params.zeros_like();
  for (const PruningGroup& group : groups) {
    check_group(params, group);
    const double two_lambda = 2.0 * lambda_for_group(params, group, cfg);
    for (const GroupMember& member : group.members) {
      const Layer& src = params.layers[member.layer];
      Layer& dst = grad.layers[member.layer];
      switch (member.axis) {
        case SliceAxis::kOutputRows:
          dst.weight += two_lambda * src.weight;
          break;
        case SliceAxis::kBias:
          dst.bias += two_lambda * src.bias;
          break;
        case SliceAxis::kInputCols:
          dst.weight += two_lambda * src.weight;
          break;
      }
    }
  }
  return grad;
}

std::vector<RankedChannel> rank_channels_by_group_norm(
    const ParamSet& params, const std::vector<PruningGroup>& groups) {
  std::vector<RankedChannel> ranking;
  for (const PruningGroup& group : groups) {
    check_group(params, group);
    for (int k = 0; k < group.channel_count; ++k) {
      ranking.push_back(
          {group.id, k, channel_slice(params, group, k).norm()});
    }
  }
  std::sort(ranking.begin(), ranking.end(),
            [](const RankedChannel& a, const RankedChannel& b) {
              if (a.norm != b.norm) return a.norm < b.norm;
              if (a.group_id != b.group_id) return a.group_id < b.group_id;
              return a.channel < b.channel;
            });
  return ranking;
}

namespace {

std::size_t channel_budget(const std::vector<PruningGroup>& groups,
                           double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("pruning ratio must lie in [0, 1)");
  }
  std::size_t total = 0;
  for (const PruningGroup& group : groups) total += group.channel_count;
  return static_cast<std::size_t>(ratio * static_cast<double>(total));
}

PruningPlan plan_from_order(const std::vector<RankedChannel>& order,
                            const std::vector<PruningGroup>& groups,
                            double ratio) {
  const std::size_t budget = channel_budget(groups, ratio);
  std::map<std::string, int> remaining;
  for (const PruningGroup& group : groups) {
    remaining[group.id] = group.channel_count;
  }
  PruningPlan plan;
  plan.ratio = ratio;
  for (const RankedChannel& entry : order) {
    if (plan.removal_count() >= budget) break;
    auto it = remaining.find(entry.group_id);
    if (it == remaining.end()) {
      throw ConfigError("pruning plan references unknown group " +
                        entry.group_id);
    }
    if (it->second <= 1) continue;  // per-group floor of one channel
    plan.removals[entry.group_id].insert(entry.channel);
    --it->second;
  }
  return plan;
}

}  // namespace

PruningPlan build_pruning_plan(const std::vector<RankedChannel>& ranking,
                               const std::vector<PruningGroup>& groups,
                               double ratio) {
  return plan_from_order(ranking, groups, ratio);
}

PruningPlan random_pruning_plan(const std::vector<PruningGroup>& groups,
                                double ratio, Rng& rng) {
  std::vector<RankedChannel> order;
  for (const PruningGroup& group : groups) {
    for (int k = 0; k < group.channel_count; ++k) {
      order.push_back({group.id, k, 0.0});
    }
  }
  rng.shuffle(order);
  return plan_from_order(order, groups, ratio);
}

PrunedModel apply_pruning(const ParamSet& params,
                          const std::vector<PruningGroup>& groups,
                          const PruningPlan& plan) {
  for (const PruningGroup& group : groups) check_group(params, group);

  // Validate the plan against the groups before touching anything.
  for (const auto& [id, channels] : plan.removals) {
    const auto group_it =
        std::find_if(groups.begin(), groups.end(),
                     [&](const PruningGroup& g) { return g.id == id; });
    if (group_it == groups.end()) {
      throw ConfigError("apply_pruning: plan references unknown group " + id);
    }
    if (static_cast<int>(channels.size()) >= group_it->channel_count) {
      throw ConfigError("apply_pruning: plan would empty group " + id);
    }
    for (int k : channels) {
      if (k < 0 || k >= group_it->channel_count) {
        throw ConfigError("apply_pruning: channel index out of range in " + id);
      }
    }
  }

  // Per-layer row/column keep masks, seeded as keep-everything.
  const std::size_t layer_count = params.layers.size();
  std::vector<std::vector<bool>> keep_rows(layer_count);
  std::vector<std::vector<bool>> keep_cols(layer_count);
  for (std::size_t i = 0; i < layer_count; ++i) {
    keep_rows[i].assign(params.layers[i].weight.rows(), true);
    keep_cols[i].assign(params.layers[i].weight.cols(), true);
  }
  for (const PruningGroup& group : groups) {
    const auto it = plan.removals.find(group.id);
    if (it == plan.removals.end()) continue;
    for (const GroupMember& member : group.members) {
      for (int k : it->second) {
        switch (member.axis) {
          case SliceAxis::kOutputRows:
          case SliceAxis::kBias:
            keep_rows[member.layer][k] = false;
            break;
          case SliceAxis::kInputCols:
            keep_cols[member.layer][k] = false;
            break;
        }
      }
    }
  }

  PrunedModel out;
  out.params.layers.reserve(layer_count);
  for (std::size_t i = 0; i < layer_count; ++i) {
    const Layer& src = params.layers[i];
    std::vector<int> rows;
    std::vector<int> cols;
    for (int r = 0; r < src.weight.rows(); ++r) {
      if (keep_rows[i][r]) rows.push_back(r);
    }
    for (int c = 0; c < src.weight.cols(); ++c) {
      if (keep_cols[i][c]) cols.push_back(c);
    }
    Layer pruned;
    pruned.name = src.name;
    pruned.weight.resize(rows.size(), cols.size());
    pruned.bias.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        pruned.weight(r, c) = src.weight(rows[r], cols[c]);
      }
      pruned.bias(r) = src.bias(rows[r]);
    }
    out.params.layers.push_back(std::move(pruned));
  }
  if (!out.params.shapes_consistent()) {
    throw ConfigError("apply_pruning: plan produced incompatible shapes");
  }

  out.groups = groups;
  for (PruningGroup& group : out.groups) {
    const auto it = plan.removals.find(group.id);
    if (it == plan.removals.end()) continue;
    group.channel_count -= static_cast<int>(it->second.size());
  }
  return out;
}

std::string plan_to_text(const PruningPlan& plan) {
  std::ostringstream out;
  out << "ratio " << plan.ratio << "\n";
  for (const auto& [id, channels] : plan.removals) {
    out << id << ":";
    for (int k : channels) out << " " << k;
    out << "\n";
  }
  return out.str();
}

}  // namespace fedphd
