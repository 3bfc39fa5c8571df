#include <benchmark/benchmark.h>

#include "fedphd/experiment.hpp"
#include "fedphd/hfl.hpp"

using namespace fedphd;

namespace {

static void BM_BuildSchedule(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_schedule(1000, 1e-4, 0.02));
  }
}
BENCHMARK(BM_BuildSchedule);

static void BM_LossGradient(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Rng init(1);
  DenoiserModel model = DenoiserModel::random_init({2, {64, 64, 64}, 16}, init);
  const NoiseSchedule sched = build_schedule(100, 1e-4, 0.02);
  SampleBatch data;
  data.points = Eigen::MatrixXd::Random(batch, 2);
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradient(model, data, sched, rng));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_LossGradient)->Arg(16)->Arg(64)->Arg(256);

static void BM_Aggregate(benchmark::State& state) {
  const int models = static_cast<int>(state.range(0));
  Rng init(3);
  std::vector<ParamSet> params;
  std::vector<const ParamSet*> views;
  for (int m = 0; m < models; ++m) {
    Rng seed(derive_seed(3, m));
    params.push_back(
        DenoiserModel::random_init({2, {64, 64, 64}, 16}, seed).params());
  }
  for (const ParamSet& p : params) views.push_back(&p);
  const Eigen::VectorXd weights =
      Eigen::VectorXd::Constant(models, 1.0 / models);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate(views, weights));
  }
}
BENCHMARK(BM_Aggregate)->Arg(2)->Arg(20);

static void BM_SlicedWasserstein(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng data_rng(5);
  SampleBatch a;
  SampleBatch b;
  a.points.resize(n, 2);
  b.points.resize(n, 2);
  for (Eigen::Index i = 0; i < a.points.size(); ++i) {
    a.points.data()[i] = data_rng.normal();
    b.points.data()[i] = data_rng.normal() + 0.5;
  }
  Rng rng(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sliced_wasserstein(a, b, 64, rng));
  }
}
BENCHMARK(BM_SlicedWasserstein)->Arg(256)->Arg(1024);

static void BM_SelectionProbabilities(benchmark::State& state) {
  Rng rng(7);
  ClientState client;
  client.dist = Eigen::VectorXd::Constant(10, 0.1);
  client.sample_count = 100;
  const TargetDistribution target = build_target(std::nullopt, 10);
  std::vector<EdgeState> edges(static_cast<std::size_t>(state.range(0)));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    edges[e].id = static_cast<int>(e);
    edges[e].acc.dist = Eigen::VectorXd::Constant(10, 0.1);
    edges[e].acc.count = 500 + 100 * static_cast<long long>(e);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        selection_probabilities(client, edges, target, 15000.0, 0.0));
  }
}
BENCHMARK(BM_SelectionProbabilities)->Arg(2)->Arg(8);

static void BM_ProtocolRound(benchmark::State& state) {
  Rng data_rng(11);
  const ToyDataset dataset =
      make_toy_dataset(10, 100, Eigen::MatrixXd(0, 0), 0.5, data_rng);
  Rng part_rng(12);
  const PartitionSpec partition = partition_non_iid(dataset, 20, 2, part_rng);
  const TargetDistribution target = build_target(std::nullopt, 10);
  ProtocolConfig pc;
  pc.denoiser = DenoiserConfig{2, {32, 32}, 16};
  pc.schedule_steps = 50;
  pc.hyper.rounds = 1;
  pc.hyper.r_e = 1;
  pc.hyper.r_g = 1;
  pc.hyper.batch_size = 25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(dataset, partition, target, pc));
  }
}
BENCHMARK(BM_ProtocolRound);

}  // namespace

BENCHMARK_MAIN();
