#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fedphd/pruning.hpp"

using namespace fedphd;

namespace {

/// Feed-forward ParamSet with the given widths, filled from the generator.
ParamSet make_net(const std::vector<int>& widths, Rng& rng) {
  ParamSet params;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    Layer layer;
    layer.name = "fc" + std::to_string(i);
    layer.weight.resize(widths[i + 1], widths[i]);
    layer.bias.resize(widths[i + 1]);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = rng.normal();
      }
      layer.bias(r) = rng.normal();
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

Eigen::VectorXd forward_shape_probe(const ParamSet& params,
                                    const Eigen::VectorXd& input) {
  Eigen::VectorXd activation = input;
  for (const Layer& layer : params.layers) {
    activation = (layer.weight * activation + layer.bias).eval();
  }
  return activation;
}

std::size_t recount_oracle(const ParamSet& params) {
  std::size_t total = 0;
  for (const Layer& layer : params.layers) {
    total += static_cast<std::size_t>(layer.weight.rows() *
                                      layer.weight.cols());
    total += static_cast<std::size_t>(layer.bias.size());
  }
  return total;
}

}  // namespace

TEST_CASE("mean layer index") {
  Rng rng(1);
  CHECK(mean_layer_index(make_net({2, 3, 3, 3, 3, 2}, rng)) == 2.0);  // 5 layers
  CHECK(mean_layer_index(make_net({4, 2}, rng)) == 0.0);              // 1 layer
  CHECK(mean_layer_index(std::vector<int>{0, 1, 3}) ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(mean_layer_index(ParamSet{}), std::invalid_argument);
}

TEST_CASE("group distance score") {
  PruningGroup group;
  group.channel_count = 1;
  group.members = {{2, SliceAxis::kOutputRows}, {8, SliceAxis::kInputCols}};
  CHECK(group_distance_score(group, 5.0) == 3.0);

  group.members = {{0, SliceAxis::kOutputRows}, {10, SliceAxis::kInputCols}};
  CHECK(group_distance_score(group, 5.0) == 5.0);

  group.members = {{4, SliceAxis::kOutputRows}, {4, SliceAxis::kBias}};
  CHECK(group_distance_score(group, 4.0) == 0.0);
}

TEST_CASE("group lambda with floor clamp") {
  CHECK(group_lambda({0.01, 0.5}, 2.0) == doctest::Approx(0.005));
  CHECK(group_lambda({0.0, 0.5}, 7.3) == 0.0);
  CHECK(group_lambda({0.01, 0.5}, 0.0) == doctest::Approx(0.02));
}

TEST_CASE("sparse regularizer direct evaluations") {
  // Single layer holding one channel whose concatenated slice is (3, 4).
  ParamSet params;
  Layer layer;
  layer.name = "fc0";
  layer.weight.resize(1, 1);
  layer.weight << 3.0;
  layer.bias.resize(1);
  layer.bias << 4.0;
  params.layers.push_back(layer);

  PruningGroup group;
  group.id = "g0";
  group.channel_count = 1;
  group.members = {{0, SliceAxis::kOutputRows}, {0, SliceAxis::kBias}};

  // Q clamps to 0.5, so lambda_g = lambda0 / 0.5; lambda0 = 0.25 gives 0.5.
  const GroupNormConfig cfg{0.25, 0.5};
  CHECK(sparse_regularizer(params, {group}, cfg) ==
        doctest::Approx(12.5).epsilon(1e-12));

  ParamSet zeros = params.zeros_like();
  CHECK(sparse_regularizer(zeros, {group}, cfg) == 0.0);

  ParamSet doubled = params;
  doubled.add_scaled(params, 1.0);
  CHECK(sparse_regularizer(doubled, {group}, cfg) ==
        doctest::Approx(4.0 * 12.5).epsilon(1e-12));
}

TEST_CASE("regularizer gradient matches finite differences") {
  Rng rng(11);
  ParamSet params = make_net({3, 6, 6, 2}, rng);
  const std::vector<PruningGroup> groups = make_hidden_groups(params);
  const GroupNormConfig cfg{0.05, 0.5};

  const ParamSet grad = sparse_regularizer_grad(params, groups, cfg);
  const double h = 1e-6;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    for (Eigen::Index r = 0; r < params.layers[l].weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < params.layers[l].weight.cols(); ++c) {
        const double original = params.layers[l].weight(r, c);
        params.layers[l].weight(r, c) = original + h;
        const double up = sparse_regularizer(params, groups, cfg);
        params.layers[l].weight(r, c) = original - h;
        const double down = sparse_regularizer(params, groups, cfg);
        params.layers[l].weight(r, c) = original;
        const double fd = (up - down) / (2.0 * h);
        const double got = grad.layers[l].weight(r, c);
        CHECK(std::abs(fd - got) <=
              1e-6 * std::max({1.0, std::abs(fd), std::abs(got)}));
      }
    }
  }

  // Parameters outside every group receive exactly zero.
  CHECK(grad.layers.back().bias.cwiseAbs().maxCoeff() == 0.0);

  const ParamSet zero_grad =
      sparse_regularizer_grad(params.zeros_like(), groups, cfg);
  for (const Layer& layer : zero_grad.layers) {
    CHECK(layer.weight.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("regularizer value decreases along its own gradient flow") {
  Rng rng(13);
  ParamSet params = make_net({2, 8, 8, 2}, rng);
  const std::vector<PruningGroup> groups = make_hidden_groups(params);
  const GroupNormConfig cfg{0.1, 0.5};
  double previous = sparse_regularizer(params, groups, cfg);
  for (int step = 0; step < 50; ++step) {
    params.add_scaled(sparse_regularizer_grad(params, groups, cfg), -0.05);
    const double current = sparse_regularizer(params, groups, cfg);
    CHECK(current <= previous);
    previous = current;
  }
}

TEST_CASE("channel ranking is ascending with deterministic tie-break") {
  ParamSet params;
  Layer l0;
  l0.name = "fc0";
  l0.weight.resize(3, 1);
  l0.weight << 0.1, 5.0, 0.2;
  l0.bias = Eigen::VectorXd::Zero(3);
  Layer l1;
  l1.name = "fc1";
  l1.weight = Eigen::MatrixXd::Zero(1, 3);
  l1.bias = Eigen::VectorXd::Zero(1);
  params.layers = {l0, l1};

  const std::vector<PruningGroup> groups = make_hidden_groups(params);
  const std::vector<RankedChannel> ranking =
      rank_channels_by_group_norm(params, groups);
  REQUIRE(ranking.size() == 3);
  CHECK(ranking[0].channel == 0);
  CHECK(ranking[1].channel == 2);
  CHECK(ranking[2].channel == 1);

  // All-equal norms fall back to (group id, channel) order.
  params.layers[0].weight << 1.0, 1.0, 1.0;
  const std::vector<RankedChannel> tied =
      rank_channels_by_group_norm(params, groups);
  CHECK(tied[0].channel == 0);
  CHECK(tied[1].channel == 1);
  CHECK(tied[2].channel == 2);

  // Declaration order of the groups does not matter.
  Rng rng(3);
  ParamSet net = make_net({2, 4, 4, 2}, rng);
  std::vector<PruningGroup> forward_groups = make_hidden_groups(net);
  std::vector<PruningGroup> reversed(forward_groups.rbegin(),
                                     forward_groups.rend());
  const auto rank_a = rank_channels_by_group_norm(net, forward_groups);
  const auto rank_b = rank_channels_by_group_norm(net, reversed);
  REQUIRE(rank_a.size() == rank_b.size());
  for (std::size_t i = 0; i < rank_a.size(); ++i) {
    CHECK(rank_a[i].group_id == rank_b[i].group_id);
    CHECK(rank_a[i].channel == rank_b[i].channel);
  }
}

TEST_CASE("pruning plan takes the lowest norms under the global budget") {
  Rng rng(5);
  ParamSet params = make_net({2, 32, 32, 2}, rng);
  const std::vector<PruningGroup> groups = make_hidden_groups(params);
  const auto ranking = rank_channels_by_group_norm(params, groups);

  const PruningPlan quarter = build_pruning_plan(ranking, groups, 0.25);
  CHECK(quarter.removal_count() == 16);  // floor(0.25 * 64)

  const PruningPlan empty = build_pruning_plan(ranking, groups, 0.0);
  CHECK(empty.empty());
}

TEST_CASE("per-group floor shifts the deficit to the next ranked channels") {
  // Group A holds the two globally lowest norms but may lose only one.
  ParamSet params;
  Layer l0;
  l0.name = "fc0";
  l0.weight.resize(2, 1);
  l0.weight << 0.01, 0.02;
  l0.bias = Eigen::VectorXd::Zero(2);
  Layer l1;
  l1.name = "fc1";
  l1.weight = Eigen::MatrixXd::Zero(4, 2);
  l1.bias.resize(4);
  l1.bias << 1.0, 2.0, 3.0, 4.0;  // g1 channel norms 1..4
  Layer l2;
  l2.name = "fc2";
  l2.weight = Eigen::MatrixXd::Zero(1, 4);
  l2.bias = Eigen::VectorXd::Zero(1);
  params.layers = {l0, l1, l2};

  const std::vector<PruningGroup> groups = make_hidden_groups(params);
  const auto ranking = rank_channels_by_group_norm(params, groups);
  const PruningPlan plan = build_pruning_plan(ranking, groups, 0.5);

  CHECK(plan.removal_count() == 3);  // floor(0.5 * 6)
  REQUIRE(plan.removals.count("g0") == 1);
  CHECK(plan.removals.at("g0").size() == 1);  // floor of one channel
  CHECK(plan.removals.at("g0").count(0) == 1);
  CHECK(plan.removals.at("g1").size() == 2);  // deficit shifted here
}

TEST_CASE("random plan hits the same budget deterministically") {
  Rng rng(9);
  ParamSet params = make_net({2, 16, 16, 2}, rng);
  const std::vector<PruningGroup> groups = make_hidden_groups(params);

  Rng plan_rng_a(123);
  Rng plan_rng_b(123);
  const PruningPlan a = random_pruning_plan(groups, 0.3, plan_rng_a);
  const PruningPlan b = random_pruning_plan(groups, 0.3, plan_rng_b);
  CHECK(a.removal_count() == static_cast<std::size_t>(0.3 * 32));
  CHECK(plan_to_text(a) == plan_to_text(b));

  Rng plan_rng_c(7);
  CHECK(random_pruning_plan(groups, 0.0, plan_rng_c).empty());
}

TEST_CASE("apply_pruning halves a 2-16-16-2 network to 2-8-8-2") {
  Rng rng(15);
  ParamSet params = make_net({2, 16, 16, 2}, rng);
  const std::vector<PruningGroup> groups = make_hidden_groups(params);

  PruningPlan plan;
  plan.ratio = 0.5;
  for (int k = 0; k < 8; ++k) {
    plan.removals["g0"].insert(k);
    plan.removals["g1"].insert(k);
  }
  const PrunedModel pruned = apply_pruning(params, groups, plan);

  REQUIRE(pruned.params.layers.size() == 3);
  CHECK(pruned.params.layers[0].weight.rows() == 8);
  CHECK(pruned.params.layers[0].weight.cols() == 2);
  CHECK(pruned.params.layers[1].weight.rows() == 8);
  CHECK(pruned.params.layers[1].weight.cols() == 8);
  CHECK(pruned.params.layers[2].weight.rows() == 2);
  CHECK(pruned.params.layers[2].weight.cols() == 8);
  CHECK(pruned.groups[0].channel_count == 8);
  CHECK(pruned.groups[1].channel_count == 8);

  const Eigen::VectorXd probe =
      forward_shape_probe(pruned.params, Eigen::VectorXd::Ones(2));
  CHECK(probe.size() == 2);
  CHECK(count_params(pruned.params) == recount_oracle(pruned.params));
}

TEST_CASE("empty plan leaves parameters bit-identical") {
  Rng rng(19);
  ParamSet params = make_net({2, 8, 2}, rng);
  const std::vector<PruningGroup> groups = make_hidden_groups(params);
  const PrunedModel same = apply_pruning(params, groups, PruningPlan{});
  CHECK(params.max_abs_diff(same.params) == 0.0);
  CHECK(count_params(same.params) == count_params(params));
}

TEST_CASE("plan and group mismatches raise configuration errors") {
  Rng rng(21);
  ParamSet params = make_net({2, 4, 2}, rng);
  const std::vector<PruningGroup> groups = make_hidden_groups(params);

  PruningPlan unknown;
  unknown.removals["nope"].insert(0);
  CHECK_THROWS_AS(apply_pruning(params, groups, unknown), ConfigError);

  PruningPlan empties;
  empties.removals["g0"] = {0, 1, 2, 3};
  CHECK_THROWS_AS(apply_pruning(params, groups, empties), ConfigError);

  PruningPlan out_of_range;
  out_of_range.removals["g0"] = {9};
  CHECK_THROWS_AS(apply_pruning(params, groups, out_of_range), ConfigError);
}

TEST_CASE("count_params hand count") {
  Rng rng(23);
  CHECK(count_params(make_net({2, 4, 2}, rng)) == 22);
  CHECK(count_params(ParamSet{}) == 0);
}

TEST_CASE("random plans keep every pruned network runnable") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<int> widths;
    widths.push_back(1 + static_cast<int>(rng.uniform_int(4)));
    const int hidden_layers = 1 + static_cast<int>(rng.uniform_int(3));
    for (int h = 0; h < hidden_layers; ++h) {
      widths.push_back(2 + static_cast<int>(rng.uniform_int(12)));
    }
    widths.push_back(1 + static_cast<int>(rng.uniform_int(4)));

    ParamSet params = make_net(widths, rng);
    const std::vector<PruningGroup> groups = make_hidden_groups(params);
    const double ratio = 0.85 * rng.uniform();
    const PruningPlan plan = random_pruning_plan(groups, ratio, rng);
    const PrunedModel pruned = apply_pruning(params, groups, plan);

    Eigen::VectorXd input(widths.front());
    for (Eigen::Index i = 0; i < input.size(); ++i) input(i) = rng.normal();
    const Eigen::VectorXd out = forward_shape_probe(pruned.params, input);
    CHECK(out.size() == widths.back());
    CHECK(count_params(pruned.params) == recount_oracle(pruned.params));
    if (!plan.empty()) {
      CHECK(count_params(pruned.params) < count_params(params));
    }
  }
}

TEST_CASE("reduction fraction tracks the ratio on uniform channel costs") {
  Rng rng(37);
  ParamSet params = make_net({18, 100, 2}, rng);
  const std::vector<PruningGroup> groups = make_hidden_groups(params);
  const auto ranking = rank_channels_by_group_norm(params, groups);
  const double ratio = 0.44;
  const PruningPlan plan = build_pruning_plan(ranking, groups, ratio);
  const PrunedModel pruned = apply_pruning(params, groups, plan);

  const double removed_fraction =
      1.0 - static_cast<double>(count_params(pruned.params)) /
                static_cast<double>(count_params(params));
  // Prunable fraction is (18+1+2)*100 / 2102; one channel of granularity.
  const double prunable_fraction = 2100.0 / 2102.0;
  CHECK(std::abs(removed_fraction - ratio * prunable_fraction) <=
        1.0 / 100.0 + 1e-9);
}

TEST_CASE("plan serialization lists groups and sorted channels") {
  PruningPlan plan;
  plan.ratio = 0.25;
  plan.removals["g1"] = {3, 1};
  plan.removals["g0"] = {2};
  const std::string text = plan_to_text(plan);
  CHECK(text == "ratio 0.25\ng0: 2\ng1: 1 3\n");
}
