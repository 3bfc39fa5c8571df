#include "fedphd/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fedphd {

namespace {

std::string format_real(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

double ExperimentRecord::final_mean_edge_mu() const {
  if (result.cloud_rounds.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const CloudAggregationSnapshot& last = result.cloud_rounds.back();
  double sum = 0.0;
  int terms = 0;
  for (double mu : last.edge_mu) {
    if (!std::isnan(mu)) {
      sum += mu;
      ++terms;
    }
  }
  return terms > 0 ? sum / terms : std::numeric_limits<double>::quiet_NaN();
}

double ExperimentRecord::mean_load_variance() const {
  if (result.rounds.empty()) return 0.0;
  double sum = 0.0;
  for (const RoundMetrics& row : result.rounds) sum += row.load_variance;
  return sum / static_cast<double>(result.rounds.size());
}

namespace {

ToyDataset build_dataset(const ExperimentConfig& config, std::uint64_t tag) {
  Rng rng(derive_seed(config.seed_data, tag));
  return make_toy_dataset(config.classes, config.n_per_class,
                          Eigen::MatrixXd(0, 0), config.cov_scale, rng);
}

}  // namespace

ExperimentRecord run_experiment(const ExperimentConfig& raw_config) {
  const auto started = std::chrono::steady_clock::now();

  ExperimentRecord record;
  record.config = raw_config;
  record.config.validate();
  const ExperimentConfig& config = record.config;

  const ToyDataset dataset = build_dataset(config, 1);
  Rng part_rng(derive_seed(config.seed_data, 2));
  const PartitionSpec partition = partition_non_iid(
      dataset, config.clients, config.classes_per_client, part_rng);
  const TargetDistribution target = build_target(
      config.target_from_global_counts
          ? std::optional<std::vector<long long>>(dataset.label_counts())
          : std::nullopt,
      config.classes);

  record.result = run(dataset, partition, target, config.protocol_config(),
                      &record.ledger);

  // Generative-quality proxy against held-out draws from the same mixture.
  {
    DenoiserModel model(DenoiserConfig{config.data_dim, config.hidden_widths,
                                       config.time_embed_dim});
    model.set_params(record.result.final_params);
    const NoiseSchedule sched = build_schedule(
        config.schedule_steps, config.beta_start, config.beta_end);
    Rng eval_rng(derive_seed(config.seed_proto, kSeedEvaluation));
    const SampleBatch generated =
        generate(model, config.eval_samples,
                 SampleMode::ddim(config.eval_ddim_steps), sched, eval_rng);

    ExperimentConfig held_out_cfg = config;
    held_out_cfg.n_per_class = std::max(
        1, (config.eval_samples + config.classes - 1) / config.classes);
    const ToyDataset held_out = build_dataset(held_out_cfg, 3);
    SampleBatch held_out_batch;
    held_out_batch.points = held_out.points;
    held_out_batch.labels = held_out.labels;
    record.quality = quality_report(generated, held_out_batch,
                                    config.eval_projections, eval_rng);
  }

  record.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();

  if (!config.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    write_file_atomic((dir / "config.txt").string(),
                      serialize_config(config));
    write_file_atomic((dir / "rounds.csv").string(), rounds_to_csv(record));
    write_file_atomic((dir / "assignments.csv").string(),
                      assignments_to_csv(record));
    {
      std::ostringstream ledger_csv;
      record.ledger.write_csv(ledger_csv);
      write_file_atomic((dir / "ledger.csv").string(), ledger_csv.str());
    }
    write_file_atomic((dir / "summary.json").string(),
                      summary_to_json(record));
    {
      std::ostringstream model_txt;
      write_param_set(model_txt, record.result.final_params);
      write_file_atomic((dir / "model.txt").string(), model_txt.str());
    }
    if (record.result.pruned) {
      write_file_atomic((dir / "plan.txt").string(),
                        plan_to_text(record.result.plan));
    }
  }
  return record;
}

std::string rounds_to_csv(const ExperimentRecord& record) {
  std::ostringstream out;
  out << "round,participants,mean_loss,edge_agg,cloud_agg,mean_edge_mu,"
         "load_variance,comm_cost,comm_bytes,param_count\n";
  for (const RoundMetrics& row : record.result.rounds) {
    out << row.round << "," << row.participants << ","
        << format_real(row.mean_loss) << "," << (row.edge_aggregated ? 1 : 0)
        << "," << (row.cloud_aggregated ? 1 : 0) << ","
        << format_real(row.mean_edge_mu) << ","
        << format_real(row.load_variance) << "," << format_real(row.comm_cost)
        << "," << row.comm_bytes << "," << row.param_count << "\n";
  }
  return out.str();
}

std::string assignments_to_csv(const ExperimentRecord& record) {
  std::ostringstream out;
  out << "round,client,edge\n";
  for (std::size_t r = 0; r < record.result.assignments.size(); ++r) {
    for (const auto& [client, edge] : record.result.assignments[r]) {
      out << (r + 1) << "," << client << "," << edge << "\n";
    }
  }
  return out.str();
}

std::string summary_to_json(const ExperimentRecord& record) {
  nlohmann::json summary;
  summary["schema_version"] = "fedphd-summary-1";
  summary["mode"] = mode_name(record.config.mode);
  summary["config"] = serialize_config(record.config);
  summary["duration_seconds"] = record.duration_seconds;

  summary["final"]["sliced_wasserstein"] = record.quality.sliced_wasserstein;
  summary["final"]["n_projections"] = record.quality.n_projections;
  summary["final"]["n_samples"] = record.quality.n_samples;
  summary["final"]["param_count"] = count_params(record.result.final_params);
  summary["final"]["pruned"] = record.result.pruned;
  summary["final"]["mean_edge_mu"] = record.final_mean_edge_mu();

  summary["comm"]["total_cost"] = record.ledger.total_cost();
  summary["comm"]["total_bytes"] = record.ledger.total_bytes();
  summary["comm"]["client_edge_cost"] = record.ledger.client_edge_cost();
  summary["comm"]["edge_cloud_cost"] = record.ledger.edge_cloud_cost();

  nlohmann::json sh_rounds = nlohmann::json::array();
  for (const CloudAggregationSnapshot& snap : record.result.cloud_rounds) {
    nlohmann::json entry;
    entry["round"] = snap.round;
    nlohmann::json mus = nlohmann::json::array();
    for (double mu : snap.edge_mu) {
      if (std::isnan(mu)) {
        mus.push_back(nullptr);
      } else {
        mus.push_back(mu);
      }
    }
    entry["edge_mu"] = mus;
    entry["edge_weights"] = snap.edge_weights;
    entry["edge_counts"] = snap.edge_counts;
    sh_rounds.push_back(entry);
  }
  summary["sh"]["cloud_rounds"] = sh_rounds;
  summary["load"]["mean_round_variance"] = record.mean_load_variance();
  return summary.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " + temp.string());
    }
    out << content;
    out.flush();
    if (!out) {
      throw std::runtime_error("write failed: " + temp.string());
    }
  }
  fs::rename(temp, target);
}

namespace {

std::string group_label(const ExperimentConfig& config) {
  ExperimentConfig keyed = config;
  keyed.seed_proto = 0;
  keyed.seed_data = 0;
  keyed.out_dir.clear();
  return serialize_config(keyed);
}

struct Welford {
  int n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double std() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0; }
};

}  // namespace

SweepSummary run_sweep(const std::vector<ExperimentConfig>& configs) {
  if (configs.empty()) {
    throw ConfigError("run_sweep: needs at least one config");
  }
  for (const ExperimentConfig& config : configs) {
    if (config.classes != configs.front().classes) {
      throw ConfigError(
          "run_sweep: class cardinality differs across sweep configs");
    }
  }
  SweepSummary summary;
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (const ExperimentConfig& config : configs) {
    summary.records.push_back(run_experiment(config));
    by_label[group_label(config)].push_back(summary.records.size() - 1);
  }
  for (const auto& [label, indices] : by_label) {
    SweepGroup group;
    group.label = label;
    group.runs = static_cast<int>(indices.size());
    Welford sw, mu, load, params, cost;
    for (std::size_t i : indices) {
      const ExperimentRecord& record = summary.records[i];
      sw.add(record.quality.sliced_wasserstein);
      const double final_mu = record.final_mean_edge_mu();
      if (!std::isnan(final_mu)) mu.add(final_mu);
      load.add(record.mean_load_variance());
      params.add(static_cast<double>(count_params(record.result.final_params)));
      cost.add(record.ledger.total_cost());
    }
    group.sw_mean = sw.mean;
    group.sw_std = sw.std();
    group.mu_mean = mu.mean;
    group.mu_std = mu.std();
    group.load_var_mean = load.mean;
    group.load_var_std = load.std();
    group.params_mean = params.mean;
    group.cost_mean = cost.mean;
    group.cost_std = cost.std();
    summary.groups.push_back(std::move(group));
  }
  return summary;
}

std::string sweep_to_csv(const SweepSummary& summary) {
  std::ostringstream out;
  out << "group,runs,sw_mean,sw_std,mu_mean,mu_std,load_var_mean,load_var_std,"
         "params_mean,cost_mean,cost_std\n";
  for (std::size_t g = 0; g < summary.groups.size(); ++g) {
    const SweepGroup& group = summary.groups[g];
    out << g << "," << group.runs << "," << format_real(group.sw_mean) << ","
        << format_real(group.sw_std) << "," << format_real(group.mu_mean)
        << "," << format_real(group.mu_std) << ","
        << format_real(group.load_var_mean) << ","
        << format_real(group.load_var_std) << ","
        << format_real(group.params_mean) << "," << format_real(group.cost_mean)
        << "," << format_real(group.cost_std) << "\n";
  }
  return out.str();
}

void write_sweep_files(const SweepSummary& summary,
                       const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_file_atomic((dir / "sweep.csv").string(), sweep_to_csv(summary));

  nlohmann::json json;
  json["schema_version"] = "fedphd-sweep-1";
  nlohmann::json groups = nlohmann::json::array();
  for (const SweepGroup& group : summary.groups) {
    nlohmann::json entry;
    entry["config"] = group.label;
    entry["runs"] = group.runs;
    entry["sw"] = {{"mean", group.sw_mean}, {"std", group.sw_std}};
    entry["mu"] = {{"mean", group.mu_mean}, {"std", group.mu_std}};
    entry["load_variance"] = {{"mean", group.load_var_mean},
                              {"std", group.load_var_std}};
    entry["params"] = {{"mean", group.params_mean}};
    entry["cost"] = {{"mean", group.cost_mean}, {"std", group.cost_std}};
    groups.push_back(entry);
  }
  json["groups"] = groups;
  write_file_atomic((dir / "sweep.json").string(), json.dump(2) + "\n");
}

namespace {

ExperimentConfig sweep_base() {
  ExperimentConfig config;
  config.clients = 20;
  config.edges = 2;
  config.classes = 10;
  config.classes_per_client = 2;
  config.n_per_class = 100;
  config.hyper.rounds = 10;
  config.hyper.r_e = 1;
  config.hyper.r_g = 5;
  config.hyper.local_epochs = 1;
  config.hyper.eta = 0.02;
  config.hidden_widths = {32, 32};
  config.schedule_steps = 50;
  config.eval_samples = 200;
  config.eval_ddim_steps = 10;
  return config;
}

}  // namespace

std::vector<std::string> sweep_preset_names() {
  return {"a_grid", "lambda_grid", "rs_grid", "sp_grid", "selection"};
}

std::vector<ExperimentConfig> sweep_preset(const std::string& name) {
  std::vector<ExperimentConfig> configs;
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  if (name == "a_grid") {
    for (double a : {0.0, 5000.0, 15000.0, 50000.0}) {
      for (std::uint64_t seed : seeds) {
        ExperimentConfig config = sweep_base();
        config.hyper.a = a;
        config.seed_proto = seed;
        configs.push_back(config);
      }
    }
  } else if (name == "lambda_grid") {
    for (double lambda0 : {1e-2, 1e-3, 1e-4, 1e-5}) {
      for (std::uint64_t seed : seeds) {
        ExperimentConfig config = sweep_base();
        config.hyper.lambda0 = lambda0;
        config.hyper.sparse_rounds = 5;
        config.hyper.s_p = 0.44;
        config.seed_proto = seed;
        configs.push_back(config);
      }
    }
  } else if (name == "rs_grid") {
    for (int rs : {10, 20, 30}) {
      for (std::uint64_t seed : seeds) {
        ExperimentConfig config = sweep_base();
        config.hyper.sparse_rounds = rs;
        config.hyper.rounds = rs + 10;
        config.hyper.s_p = 0.44;
        config.hyper.lambda0 = 1e-3;
        config.seed_proto = seed;
        configs.push_back(config);
      }
    }
  } else if (name == "sp_grid") {
    for (double sp : {0.0, 0.25, 0.44}) {
      for (std::uint64_t seed : seeds) {
        ExperimentConfig config = sweep_base();
        config.hyper.s_p = sp;
        config.hyper.sparse_rounds = sp > 0.0 ? 5 : 0;
        config.hyper.lambda0 = sp > 0.0 ? 1e-3 : 0.0;
        config.seed_proto = seed;
        configs.push_back(config);
      }
    }
  } else if (name == "selection") {
    for (ExperimentMode mode :
         {ExperimentMode::kFedPhd, ExperimentMode::kRandomSelection}) {
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ExperimentConfig config = sweep_base();
        config.mode = mode;
        config.hyper.local_epochs = 0;  // selection dynamics only
        config.hyper.rounds = 20;
        config.seed_proto = seed;
        configs.push_back(config);
      }
    }
  } else {
    throw ConfigError("unknown sweep preset '" + name + "'");
  }
  return configs;
}

}  // namespace fedphd
