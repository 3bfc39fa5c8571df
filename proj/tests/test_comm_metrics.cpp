#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <sstream>

#include "fedphd/comm.hpp"
#include "fedphd/metrics.hpp"
#include "fedphd/pruning.hpp"

using namespace fedphd;

TEST_CASE("communication cost formulas") {
  CHECK(comm_cost_client_edge(2.0, 10.0) == doctest::Approx(0.04).epsilon(1e-15));
  CHECK(comm_cost_client_edge(3.0, 0.0) == 0.0);
  CHECK(comm_cost_client_edge(1.5, 20.0) ==
        doctest::Approx(2.0 * comm_cost_client_edge(1.5, 10.0)).epsilon(1e-15));

  CHECK(comm_cost_edge_cloud(10.0, 10.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(comm_cost_edge_cloud(10.0, 0.0) == 0.0);

  // With d_c = 10 * d_e and equal volume, the edge-cloud link costs 100x.
  const double d_e = 1.7;
  const double volume = 123.0;
  CHECK(comm_cost_edge_cloud(10.0 * d_e, volume) ==
        doctest::Approx(100.0 * comm_cost_client_edge(d_e, volume))
            .epsilon(1e-12));

  CHECK_THROWS_AS(comm_cost_client_edge(-1.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(comm_cost_edge_cloud(1.0, -5.0), std::invalid_argument);
}

TEST_CASE("model volume runs at four bytes per parameter") {
  ParamSet params;
  Layer l0;
  l0.name = "fc0";
  l0.weight = Eigen::MatrixXd::Zero(4, 2);
  l0.bias = Eigen::VectorXd::Zero(4);
  Layer l1;
  l1.name = "fc1";
  l1.weight = Eigen::MatrixXd::Zero(2, 4);
  l1.bias = Eigen::VectorXd::Zero(2);
  params.layers = {l0, l1};
  CHECK(count_params(params) == 22);
  CHECK(model_volume(params) == 88);
  CHECK(model_volume(ParamSet{}) == 0);
  CHECK(distribution_volume(10) == 80);
}

TEST_CASE("pruned volume tracks one minus ratio times prunable fraction") {
  Rng rng(7);
  ParamSet params;
  Layer l0;
  l0.name = "fc0";
  l0.weight = Eigen::MatrixXd::Random(64, 18);
  l0.bias = Eigen::VectorXd::Random(64);
  Layer l1;
  l1.name = "fc1";
  l1.weight = Eigen::MatrixXd::Random(2, 64);
  l1.bias = Eigen::VectorXd::Random(2);
  params.layers = {l0, l1};

  const auto groups = make_hidden_groups(params);
  const double ratio = 0.44;
  const auto ranking = rank_channels_by_group_norm(params, groups);
  const PrunedModel pruned =
      apply_pruning(params, groups, build_pruning_plan(ranking, groups, ratio));

  const double dense_volume = static_cast<double>(model_volume(params));
  const double pruned_volume =
      static_cast<double>(model_volume(pruned.params));
  const double prunable_fraction =
      (21.0 * 64.0) / static_cast<double>(count_params(params));
  const double removed_channels = std::floor(ratio * 64.0);
  const double expected =
      1.0 - (removed_channels / 64.0) * prunable_fraction;
  CHECK(pruned_volume / dense_volume ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ledger CSV schema and totals") {
  CommLedger ledger;
  ledger.record({1, "model_client_to_edge", "client:0", "edge:1", 100, 0.2});
  ledger.record({1, "model_edge_to_cloud", "edge:1", "cloud", 100, 20.0});
  ledger.record({2, "q_edge_to_client", "edge:0", "client:3", 80, 0.16});

  CHECK(ledger.total_bytes() == 280);
  CHECK(ledger.total_cost() == doctest::Approx(20.36).epsilon(1e-12));
  CHECK(ledger.client_edge_cost() == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(ledger.edge_cloud_cost() == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(ledger.client_edge_bytes() == 180);
  CHECK(ledger.client_edge_bytes(1) == 100);
  CHECK(ledger.client_edge_bytes(2) == 80);

  std::ostringstream out;
  ledger.write_csv(out);
  const std::string csv = out.str();
  CHECK(csv.rfind("round,event,src,dst,bytes,cost\n", 0) == 0);
  CHECK(csv.find("1,model_client_to_edge,client:0,edge:1,100,") !=
        std::string::npos);
}

TEST_CASE("sliced wasserstein basic identities") {
  SampleBatch a;
  a.points = Eigen::MatrixXd::Random(40, 2);
  Rng rng(3);
  CHECK(sliced_wasserstein(a, a, 16, rng) == 0.0);

  // 1-D point masses at 0 and 5.
  SampleBatch zeros;
  zeros.points = Eigen::MatrixXd::Zero(10, 1);
  SampleBatch fives;
  fives.points = Eigen::MatrixXd::Constant(10, 1, 5.0);
  Rng rng2(4);
  CHECK(sliced_wasserstein(zeros, fives, 8, rng2) ==
        doctest::Approx(5.0).epsilon(1e-12));

  SampleBatch mismatched;
  mismatched.points = Eigen::MatrixXd::Zero(10, 3);
  Rng rng3(5);
  CHECK_THROWS_AS(sliced_wasserstein(a, mismatched, 4, rng3),
                  std::invalid_argument);
}

TEST_CASE("translated set distance equals the mean projected shift") {
  Rng data_rng(13);
  SampleBatch a;
  a.points.resize(64, 2);
  for (Eigen::Index i = 0; i < a.points.size(); ++i) {
    a.points.data()[i] = data_rng.normal();
  }
  const Eigen::Vector2d shift(1.25, -0.5);
  SampleBatch b;
  b.points = a.points.rowwise() + shift.transpose();

  const std::uint64_t seed = 99;
  const int n_proj = 32;
  Rng rng(seed);
  const double sw = sliced_wasserstein(a, b, n_proj, rng);

  // Oracle: same direction stream, mean |<shift, dir>| over projections.
  Rng replay(seed);
  double expected = 0.0;
  for (int p = 0; p < n_proj; ++p) {
    Eigen::Vector2d direction;
    double norm = 0.0;
    do {
      direction << replay.normal(), replay.normal();
      norm = direction.norm();
    } while (norm == 0.0);
    direction /= norm;
    expected += std::abs(shift.dot(direction));
  }
  expected /= n_proj;
  CHECK(sw == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sliced wasserstein is symmetric and nonnegative") {
  Rng data_rng(23);
  SampleBatch a;
  SampleBatch b;
  a.points.resize(30, 3);
  b.points.resize(30, 3);
  for (Eigen::Index i = 0; i < a.points.size(); ++i) {
    a.points.data()[i] = data_rng.normal();
    b.points.data()[i] = 0.5 * data_rng.normal() + 1.0;
  }
  Rng rng_ab(7);
  Rng rng_ba(7);
  const double ab = sliced_wasserstein(a, b, 24, rng_ab);
  const double ba = sliced_wasserstein(b, a, 24, rng_ba);
  CHECK(ab >= 0.0);
  CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
}

TEST_CASE("unequal sizes subsample the larger set deterministically") {
  Rng data_rng(31);
  SampleBatch small;
  small.points.resize(20, 2);
  SampleBatch large;
  large.points.resize(50, 2);
  for (Eigen::Index i = 0; i < small.points.size(); ++i) {
    small.points.data()[i] = data_rng.normal();
  }
  for (Eigen::Index i = 0; i < large.points.size(); ++i) {
    large.points.data()[i] = data_rng.normal();
  }
  Rng rng_a(11);
  Rng rng_b(11);
  const double first = sliced_wasserstein(small, large, 12, rng_a);
  const double second = sliced_wasserstein(small, large, 12, rng_b);
  CHECK(first == second);
  const QualityReport report = quality_report(small, large, 12, rng_a);
  CHECK(report.n_samples == 20);
  CHECK(report.n_projections == 12);
}
