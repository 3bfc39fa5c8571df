#include "fedphd/hfl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fedphd {

void HyperParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (a < 0.0) fail("hyper: a must be >= 0");
  if (r_e < 1) fail("hyper: r_e must be >= 1");
  if (r_g < 1) fail("hyper: r_g must be >= 1");
  if (r_e > r_g) fail("hyper: r_e must be <= r_g");
  if (rounds < 1) fail("hyper: rounds must be >= 1");
  if (sparse_rounds < 0) fail("hyper: sparse_rounds must be >= 0");
  if (sparse_rounds > 0 && sparse_rounds % r_g != 0) {
    fail("hyper: r_g must divide sparse_rounds so pruning lands on a cloud round");
  }
  if (local_epochs < 0) fail("hyper: local_epochs must be >= 0");
  if (!(eta > 0.0)) fail("hyper: eta must be positive");
  if (!(s_p >= 0.0 && s_p < 1.0)) fail("hyper: s_p must lie in [0, 1)");
  if (lambda0 < 0.0) fail("hyper: lambda0 must be >= 0");
  if (!(kappa > 0.0 && kappa <= 1.0)) fail("hyper: kappa must lie in (0, 1]");
  if (batch_size < 1) fail("hyper: batch_size must be >= 1");
  if (os_mode && sparse_rounds != 0) {
    fail("hyper: one-shot mode prunes at round 0 and uses no sparse rounds");
  }
}

namespace {

Eigen::VectorXd normalized_relu_scores(const std::vector<double>& raw) {
  Eigen::VectorXd weights(raw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    weights(static_cast<Eigen::Index>(i)) = std::max(raw[i], 0.0);
    total += weights(static_cast<Eigen::Index>(i));
  }
  if (total <= 0.0) {
    weights.setConstant(1.0 / static_cast<double>(raw.size()));
  } else {
    weights /= total;
  }
  return weights;
}

Eigen::VectorXd count_mu_weights(const std::vector<CountScore>& scores,
                                 double a, double b) {
  if (scores.empty()) {
    throw std::invalid_argument("weighting needs at least one participant");
  }
  std::vector<double> raw(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    raw[i] = scores[i].count + a * scores[i].mu + b;
  }
  return normalized_relu_scores(raw);
}

int sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cumulative += probs(i);
    if (u < cumulative) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

}  // namespace

Eigen::VectorXd edge_weight(const std::vector<CountScore>& scores, double a,
                            double b) {
  return count_mu_weights(scores, a, b);
}

Eigen::VectorXd client_weight(const std::vector<CountScore>& scores, double a,
                              double b) {
  return count_mu_weights(scores, a, b);
}

ParamSet aggregate(const std::vector<const ParamSet*>& models,
                   const Eigen::VectorXd& weights) {
  if (models.empty() || weights.size() != static_cast<Eigen::Index>(models.size())) {
    throw std::invalid_argument("aggregate: model/weight arity mismatch");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("aggregate: weights must sum to one");
  }
  ParamSet result = models.front()->zeros_like();
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (!models[i]->same_shape(result)) {
      throw std::invalid_argument("aggregate: architecture mismatch");
    }
    result.add_scaled(*models[i], weights(static_cast<Eigen::Index>(i)));
  }
  return result;
}

Eigen::VectorXd selection_probabilities(const ClientState& client,
                                        const std::vector<EdgeState>& edges,
                                        const TargetDistribution& target,
                                        double a, double b) {
  if (edges.empty()) {
    throw std::invalid_argument("selection needs at least one edge server");
  }
  std::vector<double> raw(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const EdgeAccumulator hypothetical = update_accumulator(
        edges[e].acc, {{client.dist, client.sample_count}});
    const double mu = sh_score(hypothetical.dist, target);
    raw[e] = a * mu - static_cast<double>(hypothetical.count) + b;
  }
  return normalized_relu_scores(raw);
}

int select_edge_server(const ClientState& client,
                       const std::vector<EdgeState>& edges,
                       const TargetDistribution& target, double a, double b,
                       Rng& rng) {
  return sample_categorical(
      selection_probabilities(client, edges, target, a, b), rng);
}

std::vector<int> fallback_ranking(const ClientState& client,
                                  const std::vector<EdgeState>& edges,
                                  const TargetDistribution& target, double a,
                                  double b) {
  const Eigen::VectorXd probs =
      selection_probabilities(client, edges, target, a, b);
  std::vector<int> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&probs](int lhs, int rhs) {
    if (probs(lhs) != probs(rhs)) return probs(lhs) > probs(rhs);
    return lhs < rhs;
  });
  return order;
}

LocalTrainResult local_train(const SampleBatch& data, const ParamSet& start,
                             const DenoiserConfig& dcfg,
                             const NoiseSchedule& sched,
                             const HyperParams& hyper,
                             const SparseLossConfig* sparse, Rng& rng) {
  if (data.size() == 0) {
    throw ConfigError("local_train: client has an empty partition");
  }
  LocalTrainResult result;
  result.params = start;
  if (hyper.local_epochs == 0) return result;

  DenoiserModel model(dcfg);
  model.set_params(std::move(result.params));

  const int n = static_cast<int>(data.size());
  std::vector<int> order(n);
  double loss_sum = 0.0;
  for (int epoch = 0; epoch < hyper.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (int at = 0; at < n; at += hyper.batch_size) {
      const int take = std::min(hyper.batch_size, n - at);
      SampleBatch batch;
      batch.points.resize(take, data.points.cols());
      for (int i = 0; i < take; ++i) {
        batch.points.row(i) = data.points.row(order[at + i]);
      }
      const LossAndGradient step =
          loss_and_gradient(model, batch, sched, rng, sparse);
      model.params().add_scaled(step.gradient, -hyper.eta);
      loss_sum += step.loss;
      ++result.batches;
    }
  }
  result.params = std::move(model.params());
  result.mean_loss = result.batches > 0 ? loss_sum / result.batches : 0.0;
  return result;
}

namespace {

std::string client_tag(int id) { return "client:" + std::to_string(id); }
std::string edge_tag(int id) { return "edge:" + std::to_string(id); }

struct LedgerWriter {
  CommLedger* ledger = nullptr;
  double round_cost = 0.0;
  std::uint64_t round_bytes = 0;

  void log(int round, const char* event, std::string src, std::string dst,
           std::uint64_t bytes, double cost) {
    round_cost += cost;
    round_bytes += bytes;
    if (ledger != nullptr) {
      ledger->record({round, event, std::move(src), std::move(dst), bytes, cost});
    }
  }

  void new_round() {
    round_cost = 0.0;
    round_bytes = 0;
  }
};

}  // namespace

RunResult run(const ToyDataset& dataset, const PartitionSpec& partition,
              const TargetDistribution& target, const ProtocolConfig& config,
              CommLedger* ledger) {
  config.hyper.validate();
  if (config.edge_count < 1) {
    throw ConfigError("run: need at least one edge server");
  }
  if (partition.client_count < 1) {
    throw ConfigError("run: need at least one client");
  }
  const HyperParams& hyper = config.hyper;
  const int client_count = partition.client_count;
  const int edge_count = config.edge_count;
  const int cardinality = dataset.class_count();
  const int participants_per_round = static_cast<int>(
      std::floor(hyper.kappa * static_cast<double>(client_count)));
  if (participants_per_round < 1) {
    throw ConfigError("run: participation ratio selects no clients");
  }

  const NoiseSchedule sched =
      build_schedule(config.schedule_steps, config.beta_start, config.beta_end);

  // Global model and its dependency groups.
  CloudState cloud;
  {
    Rng init_rng(derive_seed(config.proto_seed, kSeedModelInit));
    cloud.params =
        DenoiserModel::random_init(config.denoiser, init_rng).params();
  }
  cloud.groups = make_hidden_groups(cloud.params);

  RunResult result;
  if (hyper.os_mode && hyper.s_p > 0.0) {
    Rng os_rng(derive_seed(config.proto_seed, kSeedOneShotPrune));
    result.plan = random_pruning_plan(cloud.groups, hyper.s_p, os_rng);
    PrunedModel pruned = apply_pruning(cloud.params, cloud.groups, result.plan);
    cloud.params = std::move(pruned.params);
    cloud.groups = std::move(pruned.groups);
    cloud.pruned = true;
  }

  // Client and edge state.
  std::vector<ClientState> clients(client_count);
  for (int n = 0; n < client_count; ++n) {
    ClientState& client = clients[n];
    client.id = n;
    client.shard = partition.shards[n];
    client.data = dataset.batch_of(client.shard);
    std::vector<long long> counts(cardinality, 0);
    for (int label : client.data.labels) counts[label] += 1;
    client.dist = distribution_from_counts(counts);
    client.sample_count = static_cast<long long>(client.shard.size());
    client.mu = sh_score(client.dist, target);
    client.params = cloud.params;
  }
  std::vector<EdgeState> edges(edge_count);
  for (int e = 0; e < edge_count; ++e) {
    edges[e].id = e;
    edges[e].acc = refresh_accumulator(cardinality);
    edges[e].params = cloud.params;
    edges[e].d_e = config.d_e;
    edges[e].d_c = config.d_c;
  }

  const std::uint64_t q_bytes = distribution_volume(cardinality);
  LedgerWriter log{ledger};

  SparseLossConfig sparse;
  sparse.cfg = GroupNormConfig{hyper.lambda0, 0.5};

  result.rounds.reserve(hyper.rounds);
  result.assignments.reserve(hyper.rounds);

  for (int r = 1; r <= hyper.rounds; ++r) {
    log.new_round();
    Rng select_rng(derive_seed(config.proto_seed, kSeedSelection,
                               static_cast<std::uint64_t>(r)));

    // Participation sample.
    std::vector<int> participants(client_count);
    std::iota(participants.begin(), participants.end(), 0);
    if (participants_per_round < client_count) {
      select_rng.shuffle(participants);
      participants.resize(participants_per_round);
      std::sort(participants.begin(), participants.end());
    }

    // Accumulated distributions go out to the participating clients so they
    // can pick an edge server.
    for (const EdgeState& edge : edges) {
      for (int n : participants) {
        log.log(r, "q_edge_to_client", edge_tag(edge.id), client_tag(n),
                q_bytes, comm_cost_client_edge(edge.d_e, q_bytes));
      }
    }

    // Edge selection.
    for (EdgeState& edge : edges) edge.roster.clear();
    std::vector<std::pair<int, int>> round_assignment;
    round_assignment.reserve(participants.size());
    for (int n : participants) {
      int choice = 0;
      if (edge_count == 1) {
        choice = 0;
      } else if (config.selection == SelectionPolicy::kUniformRandom) {
        choice = static_cast<int>(select_rng.uniform_int(edge_count));
      } else {
        choice = select_edge_server(clients[n], edges, target, hyper.a,
                                    hyper.b, select_rng);
      }
      clients[n].assigned_edge = choice;
      edges[choice].roster.push_back(n);
      round_assignment.emplace_back(n, choice);
    }

    // Local training; updated models and distribution contributions are
    // buffered at the assigned edge.
    const bool sparse_active =
        !hyper.os_mode && hyper.sparse_rounds > 0 && r < hyper.sparse_rounds &&
        !cloud.pruned;
    if (sparse_active) sparse.groups = cloud.groups;
    double loss_sum = 0.0;
    int loss_terms = 0;
    for (int n : participants) {
      ClientState& client = clients[n];
      Rng train_rng(train_seed(config.proto_seed, r, n));
      LocalTrainResult local = local_train(
          client.data, client.params, config.denoiser, sched, hyper,
          sparse_active ? &sparse : nullptr, train_rng);
      client.params = std::move(local.params);
      if (local.batches > 0) {
        loss_sum += local.mean_loss;
        ++loss_terms;
      }
      EdgeState& edge = edges[client.assigned_edge];
      const std::uint64_t volume = model_volume(client.params);
      log.log(r, "model_client_to_edge", client_tag(n), edge_tag(edge.id),
              volume, comm_cost_client_edge(edge.d_e, volume));
      edge.pending_models[n] = client.params;
      edge.pending_count_mu[n] = {client.sample_count, client.mu};
      edge.pending_dists.push_back({client.dist, client.sample_count});
    }

    const bool edge_round = (r % hyper.r_e) == 0;
    const bool cloud_round = (r % hyper.r_g) == 0;

    if (edge_round) {
      for (EdgeState& edge : edges) {
        if (!edge.pending_dists.empty()) {
          edge.acc = update_accumulator(edge.acc, edge.pending_dists);
          edge.pending_dists.clear();
        }
        if (edge.pending_models.empty()) continue;
        std::vector<const ParamSet*> models;
        std::vector<CountScore> scores;
        std::vector<int> ids;
        for (const auto& [id, params] : edge.pending_models) {
          models.push_back(&params);
          const auto& [count, mu] = edge.pending_count_mu.at(id);
          scores.push_back({static_cast<double>(count), mu});
          ids.push_back(id);
        }
        const Eigen::VectorXd weights =
            client_weight(scores, hyper.a, hyper.b);
        edge.params = aggregate(models, weights);
        const std::uint64_t volume = model_volume(edge.params);
        for (int id : ids) {
          log.log(r, "model_edge_to_client", edge_tag(edge.id), client_tag(id),
                  volume, comm_cost_client_edge(edge.d_e, volume));
          clients[id].params = edge.params;
        }
        edge.pending_models.clear();
        edge.pending_count_mu.clear();
      }
    }

    if (cloud_round) {
      // Late distribution contributions (r_e not dividing r_g) are pooled
      // before the cloud reads the accumulators, so the interval statistics
      // are complete.
      for (EdgeState& edge : edges) {
        if (!edge.pending_dists.empty()) {
          edge.acc = update_accumulator(edge.acc, edge.pending_dists);
          edge.pending_dists.clear();
        }
      }

      CloudAggregationSnapshot snapshot;
      snapshot.round = r;
      snapshot.edge_mu.assign(edge_count,
                              std::numeric_limits<double>::quiet_NaN());
      snapshot.edge_weights.assign(edge_count, 0.0);
      snapshot.edge_counts.assign(edge_count, 0);
      snapshot.edge_dists.assign(edge_count, {});

      std::vector<const ParamSet*> models;
      std::vector<CountScore> scores;
      std::vector<int> contributing;
      for (EdgeState& edge : edges) {
        const std::uint64_t volume = model_volume(edge.params);
        log.log(r, "q_edge_to_cloud", edge_tag(edge.id), "cloud", q_bytes,
                comm_cost_edge_cloud(edge.d_c, q_bytes));
        log.log(r, "model_edge_to_cloud", edge_tag(edge.id), "cloud", volume,
                comm_cost_edge_cloud(edge.d_c, volume));
        snapshot.edge_counts[edge.id] = edge.acc.count;
        if (edge.acc.count > 0) {
          snapshot.edge_mu[edge.id] = sh_score(edge.acc.dist, target);
          models.push_back(&edge.params);
          scores.push_back({static_cast<double>(edge.acc.count),
                            snapshot.edge_mu[edge.id]});
          contributing.push_back(edge.id);
        }
      }
      if (!models.empty()) {
        const Eigen::VectorXd weights = edge_weight(scores, hyper.a, hyper.b);
        for (std::size_t i = 0; i < contributing.size(); ++i) {
          snapshot.edge_weights[contributing[i]] =
              weights(static_cast<Eigen::Index>(i));
        }
        cloud.params = aggregate(models, weights);
      }
      result.cloud_rounds.push_back(snapshot);

      if (!cloud.pruned && !hyper.os_mode && hyper.sparse_rounds > 0 &&
          r == hyper.sparse_rounds && hyper.s_p > 0.0) {
        const std::vector<RankedChannel> ranking =
            rank_channels_by_group_norm(cloud.params, cloud.groups);
        result.plan = build_pruning_plan(ranking, cloud.groups, hyper.s_p);
        PrunedModel pruned =
            apply_pruning(cloud.params, cloud.groups, result.plan);
        cloud.params = std::move(pruned.params);
        cloud.groups = std::move(pruned.groups);
        cloud.pruned = true;
      }

      // Broadcast the (possibly pruned) global model to every client through
      // its edge, and refresh the accumulators for the next interval.
      const std::uint64_t volume = model_volume(cloud.params);
      for (EdgeState& edge : edges) {
        log.log(r, "model_cloud_to_edge", "cloud", edge_tag(edge.id), volume,
                comm_cost_edge_cloud(edge.d_c, volume));
        edge.params = cloud.params;
      }
      for (ClientState& client : clients) {
        const int via = client.assigned_edge >= 0
                            ? client.assigned_edge
                            : client.id % edge_count;
        log.log(r, "model_edge_to_client_bcast", edge_tag(via),
                client_tag(client.id), volume,
                comm_cost_client_edge(edges[via].d_e, volume));
        client.params = cloud.params;
      }
    }

    // Round metrics (accumulators read before any refresh).
    RoundMetrics metrics;
    metrics.round = r;
    metrics.participants = static_cast<int>(participants.size());
    metrics.mean_loss = loss_terms > 0 ? loss_sum / loss_terms : 0.0;
    metrics.edge_aggregated = edge_round;
    metrics.cloud_aggregated = cloud_round;
    {
      double mu_sum = 0.0;
      int mu_terms = 0;
      for (const EdgeState& edge : edges) {
        if (edge.acc.count > 0) {
          mu_sum += sh_score(edge.acc.dist, target);
          ++mu_terms;
        }
      }
      metrics.mean_edge_mu = mu_terms > 0 ? mu_sum / mu_terms : 0.0;
      double mean_load = 0.0;
      for (const EdgeState& edge : edges) {
        mean_load += static_cast<double>(edge.roster.size());
      }
      mean_load /= edge_count;
      double variance = 0.0;
      for (const EdgeState& edge : edges) {
        const double delta =
            static_cast<double>(edge.roster.size()) - mean_load;
        variance += delta * delta;
      }
      metrics.load_variance = variance / edge_count;
    }
    metrics.comm_cost = log.round_cost;
    metrics.comm_bytes = log.round_bytes;
    metrics.param_count = count_params(cloud.params);
    result.rounds.push_back(metrics);
    result.assignments.push_back(std::move(round_assignment));

    if (cloud_round) {
      for (EdgeState& edge : edges) {
        edge.acc = refresh_accumulator(cardinality);
        edge.pending_dists.clear();
        edge.pending_models.clear();
        edge.pending_count_mu.clear();
      }
    }
  }

  result.final_params = cloud.params;
  result.final_groups = cloud.groups;
  result.pruned = cloud.pruned;
  return result;
}

}  // namespace fedphd
