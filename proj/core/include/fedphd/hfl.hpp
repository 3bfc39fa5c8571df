#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "fedphd/comm.hpp"
#include "fedphd/dataset.hpp"
#include "fedphd/denoiser.hpp"
#include "fedphd/diffusion.hpp"
#include "fedphd/federation_stats.hpp"
#include "fedphd/noise_schedule.hpp"
#include "fedphd/params.hpp"
#include "fedphd/pruning.hpp"
#include "fedphd/rng.hpp"

namespace fedphd {

struct HyperParams {
  double a = 15000.0;   // SH weight in the ReLU scores
  double b = 0.0;       // offset in the ReLU scores
  int r_e = 1;          // edge aggregation period
  int r_g = 5;          // cloud aggregation period
  int rounds = 50;      // R
  int sparse_rounds = 0;  // R_s; rounds r < R_s train with the regularizer
  int local_epochs = 1;   // E
  double eta = 0.01;
  double s_p = 0.0;       // pruning ratio
  double lambda0 = 0.0;
  double kappa = 1.0;     // participation ratio
  bool os_mode = false;   // prune randomly before round 1
  int batch_size = 20;

  /// Throws ConfigError on violated invariants (r_e <= r_g; r_g | R_s when
  /// R_s > 0; ranges).
  void validate() const;
};

enum class SelectionPolicy { kHomogeneityAware, kUniformRandom };

struct ClientState {
  int id = 0;
  std::vector<int> shard;    // dataset sample indices
  SampleBatch data;          // materialized shard
  LabelDistribution dist;    // label distribution of the shard
  long long sample_count = 0;
  double mu = 0.0;           // homogeneity score of dist vs target
  ParamSet params;
  int assigned_edge = -1;    // edge chosen this round (-1 before any)
};

struct EdgeState {
  int id = 0;
  EdgeAccumulator acc;
  ParamSet params;
  double d_e = 1.0;  // hop distance to clients
  double d_c = 10.0; // hop distance to cloud
  std::vector<int> roster;  // clients assigned this round

  // Contributions buffered since the last accumulator update / aggregation.
  std::map<int, ParamSet> pending_models;
  std::map<int, std::pair<long long, double>> pending_count_mu;
  std::vector<DistributionContribution> pending_dists;
};

struct CloudState {
  ParamSet params;
  int round = 0;
  std::vector<PruningGroup> groups;
  bool pruned = false;
};

struct CountScore {
  double count = 0.0;  // n
  double mu = 0.0;     // homogeneity score
};

/// Weight for each edge server: rho_e = ReLU(n_e + a*mu_e + b) normalized.
/// Falls back to the uniform vector when every score is zero.
Eigen::VectorXd edge_weight(const std::vector<CountScore>& scores, double a,
                            double b);

/// Same functional form at client level.
Eigen::VectorXd client_weight(const std::vector<CountScore>& scores, double a,
                              double b);

/// Elementwise weighted sum of identically shaped models; weights must be a
/// probability vector.
ParamSet aggregate(const std::vector<const ParamSet*>& models,
                   const Eigen::VectorXd& weights);

/// Edge selection distribution for one client:
/// P_n(e) proportional to ReLU(a * mu'_e - n'_e + b) where (mu'_e, n'_e) are
/// the edge's score and count after hypothetically pooling the client's
/// contribution (not committed). Uniform when every score is zero.
Eigen::VectorXd selection_probabilities(const ClientState& client,
                                        const std::vector<EdgeState>& edges,
                                        const TargetDistribution& target,
                                        double a, double b);

/// Samples an edge id from selection_probabilities with one uniform draw.
int select_edge_server(const ClientState& client,
                       const std::vector<EdgeState>& edges,
                       const TargetDistribution& target, double a, double b,
                       Rng& rng);

/// Edge ids ordered by descending selection probability, ties by id. The
/// k-th entry is the k-th fallback candidate.
std::vector<int> fallback_ranking(const ClientState& client,
                                  const std::vector<EdgeState>& edges,
                                  const TargetDistribution& target, double a,
                                  double b);

/// Local epochs of mini-batch descent starting from `start`. Batch order is
/// reshuffled per epoch from the generator; each batch takes one gradient
/// step of the (optionally regularized) noise-prediction loss.
struct LocalTrainResult {
  ParamSet params;
  double mean_loss = 0.0;  // mean of batch losses over the whole call
  int batches = 0;
};
LocalTrainResult local_train(const SampleBatch& data, const ParamSet& start,
                             const DenoiserConfig& dcfg,
                             const NoiseSchedule& sched,
                             const HyperParams& hyper,
                             const SparseLossConfig* sparse, Rng& rng);

/// Named seed streams so independent components (and test oracles) can
/// reproduce exactly the draws the scheduler uses.
inline constexpr std::uint64_t kSeedModelInit = 101;
inline constexpr std::uint64_t kSeedSelection = 202;
inline constexpr std::uint64_t kSeedTraining = 303;
inline constexpr std::uint64_t kSeedOneShotPrune = 404;
inline constexpr std::uint64_t kSeedEvaluation = 505;

inline std::uint64_t train_seed(std::uint64_t proto_seed, int round,
                                int client) {
  return derive_seed(proto_seed, kSeedTraining, static_cast<std::uint64_t>(round),
                     static_cast<std::uint64_t>(client));
}

struct ProtocolConfig {
  HyperParams hyper;
  DenoiserConfig denoiser;
  SelectionPolicy selection = SelectionPolicy::kHomogeneityAware;
  int edge_count = 2;
  int schedule_steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double d_e = 1.0;
  double d_c = 10.0;
  std::uint64_t proto_seed = 1;
};

struct RoundMetrics {
  int round = 0;
  int participants = 0;
  double mean_loss = 0.0;
  bool edge_aggregated = false;
  bool cloud_aggregated = false;
  double mean_edge_mu = 0.0;   // mean score over non-neutral accumulators
  double load_variance = 0.0;  // variance of roster sizes across edges
  double comm_cost = 0.0;
  std::uint64_t comm_bytes = 0;
  std::uint64_t param_count = 0;  // global model size after the round
};

/// Per-edge statistics captured at each cloud aggregation, before the
/// accumulator refresh.
struct CloudAggregationSnapshot {
  int round = 0;
  std::vector<double> edge_mu;        // NaN for edges with no contributions
  std::vector<double> edge_weights;   // 0 for edges with no contributions
  std::vector<long long> edge_counts; // pooled interval sample counts
  std::vector<std::vector<double>> edge_dists;  // accumulated distributions
};

struct RunResult {
  ParamSet final_params;
  std::vector<PruningGroup> final_groups;
  bool pruned = false;
  PruningPlan plan;
  std::vector<RoundMetrics> rounds;
  std::vector<CloudAggregationSnapshot> cloud_rounds;
  // Per round, the (client, edge) assignment pairs in client order.
  std::vector<std::vector<std::pair<int, int>>> assignments;
};

/// Full round scheduler: per-round edge selection, local training, edge
/// aggregation every r_e rounds, cloud aggregation every r_g rounds with the
/// accumulator refresh, sparse-training rounds, and the single pruning event
/// (round R_s, or before round 1 in one-shot mode). Every transfer is logged
/// to the ledger when one is supplied.
RunResult run(const ToyDataset& dataset, const PartitionSpec& partition,
              const TargetDistribution& target, const ProtocolConfig& config,
              CommLedger* ledger = nullptr);

}  // namespace fedphd
